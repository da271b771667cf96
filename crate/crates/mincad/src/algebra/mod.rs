//! Exact arithmetic and sign determination for the closed expression class
//! used by the corpus CADs: rationals, quadratic radicals a + b√c, the
//! expression language over them, semi-algebraic predicates, and univariate
//! real root isolation by Sturm sequences.

mod extval;
mod expr;
mod poly;
mod pred;

pub use expr::{eval, closure_eval, normalize_expr, ClosureCtx, EvalError, Expr};
pub use extval::{sqrt_rat, ExtVal};
pub use poly::{isolate_roots, Bracket, IsolatedRoot, PolyError, RootValue, UniPoly};
pub use pred::{contains, contains_ext, Atom, PredError, Rel, SaPredicate};

use num::BigInt;
use num::BigRational;

/// Exact rational scalar: arbitrary-precision, always reduced, positive
/// denominator (maintained by `num`).
pub type Rat = BigRational;
pub type Int = BigInt;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

/// Largest square divisor extraction by trial division: returns `(k, m)` with
/// `n = k²·m` and `m` free of square prime factors below the bound. Primes
/// above the bound are left alone except for a final exact-square test.
pub(crate) fn extract_square(n: &Int) -> (Int, Int) {
    use num::{One, Zero};
    debug_assert!(n > &Int::zero());
    let mut m = n.clone();
    let mut k = Int::one();
    let mut p = Int::from(2u32);
    let bound = Int::from(10_000u32);
    while p <= bound {
        let sq = &p * &p;
        if &sq > &m {
            break;
        }
        while (&m % &sq).is_zero() {
            m /= &sq;
            k *= &p;
        }
        p += if p == Int::from(2u32) { Int::one() } else { Int::from(2u32) };
    }
    // whatever remains might still be a perfect square of large primes
    let s = m.sqrt();
    if &s * &s == m {
        k *= &s;
        m = Int::one();
    }
    (k, m)
}

/// Exact test: is the positive integer a perfect square?
pub(crate) fn is_square(n: &Int) -> Option<Int> {
    use num::Zero;
    if n < &Int::zero() {
        return None;
    }
    let s = n.sqrt();
    if &s * &s == *n {
        Some(s)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    #[test]
    fn square_extraction() {
        let (k, m) = extract_square(&Int::from(8));
        assert_eq!((k, m), (Int::from(2), Int::from(2)));
        let (k, m) = extract_square(&Int::from(12));
        assert_eq!((k, m), (Int::from(2), Int::from(3)));
        let (k, m) = extract_square(&Int::from(49));
        assert_eq!((k, m), (Int::from(7), Int::one()));
        // 10007 is prime and above the trial bound, but 10007² is caught by
        // the exact-square test
        let big = Int::from(10_007) * Int::from(10_007);
        let (k, m) = extract_square(&big);
        assert_eq!((k, m), (Int::from(10_007), Int::one()));
    }

    #[test]
    fn perfect_square_test() {
        assert_eq!(is_square(&Int::from(25)), Some(Int::from(5)));
        assert_eq!(is_square(&Int::from(26)), None);
    }
}

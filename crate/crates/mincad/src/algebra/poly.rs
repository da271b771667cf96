//! Dense univariate polynomials over ℚ with Sturm-sequence root isolation.
//!
//! Isolation is exact: Sturm counts drive the bisection, so every real root
//! in the bracket is found and the isolating intervals are certified
//! disjoint. Roots of degree ≤ 2 factors (and biquadratics with rational
//! resolvent roots) are recovered exactly as rationals or quadratic radicals.

use super::{ExtVal, Rat};
use num::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("the zero polynomial has no isolated roots")]
    ZeroPolynomial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    /// coefficient of x^i at index i; trailing zeros trimmed
    coeffs: Vec<Rat>,
}

/// Root bracket; `None` endpoints are infinite.
#[derive(Clone, Debug, Default)]
pub struct Bracket {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RootValue {
    Exact(ExtVal),
    /// Only an isolating interval is known (degree ≥ 3 irreducible part).
    Bracketed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsolatedRoot {
    pub lo: Rat,
    pub hi: Rat,
    pub value: RootValue,
}

impl UniPoly {
    pub fn new(coeffs: Vec<Rat>) -> Self {
        let mut p = UniPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> Self {
        UniPoly::new(vec![c])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        UniPoly::new(coeffs.iter().map(|&c| Rat::from_integer(c.into())).collect())
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn leading(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_ext(&self, x: &ExtVal) -> ExtVal {
        let mut acc = ExtVal::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&ExtVal::Rat(c.clone()));
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rat::from_integer(i.into()))
            .collect();
        UniPoly::new(coeffs)
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        UniPoly::new(coeffs)
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        UniPoly::new(coeffs)
    }

    pub fn scale(&self, k: &Rat) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn divrem(&self, divisor: &UniPoly) -> (UniPoly, UniPoly) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.degree().unwrap();
        let lead = divisor.leading();
        let mut rem = self.clone();
        let mut quot = vec![Rat::zero(); self.coeffs.len().saturating_sub(dd)];
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let f = rem.leading() / &lead;
            let shift = rd - dd;
            quot[shift] = f.clone();
            let mut sub = vec![Rat::zero(); shift];
            sub.extend(divisor.coeffs.iter().map(|c| c * &f));
            rem = rem.sub(&UniPoly::new(sub));
        }
        (UniPoly::new(quot), rem)
    }

    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let lead = a.leading();
            a.scale(&(Rat::one() / lead))
        }
    }

    /// Square-free part `p / gcd(p, p')`.
    pub fn squarefree(&self) -> UniPoly {
        let d = self.derivative();
        if d.is_zero() {
            return self.clone();
        }
        let g = self.gcd(&d);
        if g.degree() == Some(0) {
            self.clone()
        } else {
            self.divrem(&g).0
        }
    }

    /// Cauchy root bound: all real roots lie in (−B, B).
    pub fn root_bound(&self) -> Rat {
        let lead = self.leading();
        let mut m = Rat::zero();
        for c in &self.coeffs[..self.coeffs.len().saturating_sub(1)] {
            let q = (c / &lead).abs();
            if q > m {
                m = q;
            }
        }
        m + Rat::one()
    }

    /// Standard Sturm chain p, p', −rem, …
    pub fn sturm_chain(&self) -> Vec<UniPoly> {
        let mut chain = vec![self.clone()];
        let d = self.derivative();
        if d.is_zero() {
            return chain;
        }
        chain.push(d);
        loop {
            let n = chain.len();
            let (_, r) = chain[n - 2].divrem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.neg());
        }
        chain
    }

    /// Number of distinct real roots in the open interval, endpoints assumed
    /// non-roots of the (square-free) polynomial.
    pub fn count_roots_between(chain: &[UniPoly], lo: &Rat, hi: &Rat) -> usize {
        let va = sign_variations(chain.iter().map(|p| rsign(&p.eval(lo))));
        let vb = sign_variations(chain.iter().map(|p| rsign(&p.eval(hi))));
        va.saturating_sub(vb)
    }

    pub fn count_roots_real_line(chain: &[UniPoly]) -> usize {
        let va = sign_variations(chain.iter().map(sign_at_neg_inf));
        let vb = sign_variations(chain.iter().map(sign_at_pos_inf));
        va.saturating_sub(vb)
    }
}

fn rsign(r: &Rat) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn sign_at_pos_inf(p: &UniPoly) -> i32 {
    rsign(&p.leading())
}

fn sign_at_neg_inf(p: &UniPoly) -> i32 {
    match p.degree() {
        None => 0,
        Some(d) => {
            let s = rsign(&p.leading());
            if d % 2 == 0 {
                s
            } else {
                -s
            }
        }
    }
}

fn sign_variations<I: Iterator<Item = i32>>(signs: I) -> usize {
    let mut count = 0;
    let mut last = 0;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Exact roots of a quadratic (or linear) polynomial, sorted increasingly.
fn quadratic_roots(p: &UniPoly) -> Vec<ExtVal> {
    match p.degree() {
        Some(1) => vec![ExtVal::Rat(-p.coeff(0) / p.coeff(1))],
        Some(2) => {
            let (a, b, c) = (p.coeff(2), p.coeff(1), p.coeff(0));
            let disc = &b * &b - Rat::from_integer(4.into()) * &a * &c;
            if disc.is_negative() {
                return vec![];
            }
            let sqrt_d = super::sqrt_rat(&disc);
            let two_a = ExtVal::Rat(Rat::from_integer(2.into()) * &a);
            let nb = ExtVal::Rat(-b);
            let r1 = nb.sub(&sqrt_d).div(&two_a);
            let r2 = nb.add(&sqrt_d).div(&two_a);
            if disc.is_zero() {
                vec![r1]
            } else if r1.cmp_exact(&r2) == Some(std::cmp::Ordering::Less) {
                vec![r1, r2]
            } else {
                vec![r2, r1]
            }
        }
        _ => panic!("quadratic_roots on degree > 2"),
    }
}

/// Exact real roots of a biquadratic a·x⁴ + b·x² + c via the resolvent
/// quadratic; exact only when the positive resolvent roots are rational.
fn biquadratic_roots(p: &UniPoly) -> Option<Vec<ExtVal>> {
    let resolvent = UniPoly::new(vec![p.coeff(0), p.coeff(2), p.coeff(4)]);
    let mut out = vec![];
    for w in quadratic_roots(&resolvent) {
        match w.sign() {
            0 => out.push(ExtVal::zero()),
            s if s < 0 => continue,
            _ => {
                let root = w.sqrt();
                if root.is_indeterminate() {
                    return None; // resolvent root irrational: degree-4 value
                }
                out.push(root.neg());
                out.push(root);
            }
        }
    }
    out.sort_by(|a, b| a.cmp_exact(b).unwrap());
    Some(out)
}

/// Ordered isolation of all real roots of `poly` inside `bracket`.
pub fn isolate_roots(poly: &UniPoly, bracket: &Bracket) -> Result<Vec<IsolatedRoot>, PolyError> {
    if poly.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    if poly.degree() == Some(0) {
        return Ok(vec![]);
    }
    let sf = poly.squarefree();

    // fast exact paths
    let exact = match sf.degree() {
        Some(1) | Some(2) => Some(quadratic_roots(&sf)),
        Some(4) if sf.coeff(1).is_zero() && sf.coeff(3).is_zero() => biquadratic_roots(&sf),
        _ => None,
    };
    if let Some(roots) = exact {
        let out = roots
            .into_iter()
            .filter(|r| in_bracket(r, bracket))
            .map(|r| {
                let (lo, hi) = r.interval(16);
                IsolatedRoot { lo, hi, value: RootValue::Exact(r) }
            })
            .collect();
        return Ok(out);
    }

    // general path: Sturm bisection
    let chain = sf.sturm_chain();
    let bound = sf.root_bound();
    let mut lo = bracket.lo.clone().unwrap_or_else(|| -&bound);
    let mut hi = bracket.hi.clone().unwrap_or_else(|| bound.clone());
    if lo >= hi {
        return Ok(vec![]);
    }
    // nudge endpoints off roots so open-interval counting is exact
    let step = Rat::new(1.into(), 1_048_576.into());
    while sf.eval(&lo).is_zero() || sf.eval(&hi).is_zero() {
        lo -= &step;
        hi += &step;
    }
    let mut out = vec![];
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        let n = UniPoly::count_roots_between(&chain, &a, &b);
        match n {
            0 => {}
            1 => {
                // tighten the interval, recovering rational roots hit head-on
                let (mut a, mut b) = (a, b);
                let mut exact_hit = None;
                for _ in 0..64 {
                    let mid = (&a + &b) / Rat::from_integer(2.into());
                    if sf.eval(&mid).is_zero() {
                        exact_hit = Some(mid);
                        break;
                    }
                    if UniPoly::count_roots_between(&chain, &a, &mid) == 1 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                match exact_hit {
                    Some(r) => out.push(IsolatedRoot {
                        lo: r.clone(),
                        hi: r.clone(),
                        value: RootValue::Exact(ExtVal::Rat(r)),
                    }),
                    None => out.push(IsolatedRoot { lo: a, hi: b, value: RootValue::Bracketed }),
                }
            }
            _ => {
                let mid = (&a + &b) / Rat::from_integer(2.into());
                if sf.eval(&mid).is_zero() {
                    out.push(IsolatedRoot {
                        lo: mid.clone(),
                        hi: mid.clone(),
                        value: RootValue::Exact(ExtVal::Rat(mid.clone())),
                    });
                    // shrink a punctured neighbourhood of mid until it holds
                    // no other root, then recurse on both sides of it
                    let mut eps = Rat::new(1.into(), 4.into()) * (&b - &a);
                    loop {
                        let (l, r) = (&mid - &eps, &mid + &eps);
                        if !sf.eval(&l).is_zero()
                            && !sf.eval(&r).is_zero()
                            && UniPoly::count_roots_between(&chain, &l, &r) == 1
                        {
                            stack.push((a, l));
                            stack.push((r, b));
                            break;
                        }
                        eps /= Rat::from_integer(2.into());
                    }
                } else {
                    stack.push((a, mid.clone()));
                    stack.push((mid, b));
                }
            }
        }
    }
    out.sort_by(|x, y| x.lo.cmp(&y.lo));
    Ok(out)
}

fn in_bracket(v: &ExtVal, bracket: &Bracket) -> bool {
    if let Some(lo) = &bracket.lo {
        if v.cmp_exact(&ExtVal::Rat(lo.clone())) != Some(std::cmp::Ordering::Greater) {
            return false;
        }
    }
    if let Some(hi) = &bracket.hi {
        if v.cmp_exact(&ExtVal::Rat(hi.clone())) != Some(std::cmp::Ordering::Less) {
            return false;
        }
    }
    true
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{}", c),
                1 => format!("{}*y", c),
                _ => format!("{}*y^{}", c, i),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{rat, rat_int};
    use super::*;

    #[test]
    fn sturm_counts_match_isolation() {
        // (x² − 2)(x − 1)x has roots −√2, 0, 1, √2
        let p = UniPoly::from_i64(&[0, 2, -2, -1, 1]);
        let chain = p.squarefree().sturm_chain();
        assert_eq!(UniPoly::count_roots_real_line(&chain), 4);
        let roots = isolate_roots(&p, &Bracket::default()).unwrap();
        assert_eq!(roots.len(), 4);
    }

    #[test]
    fn exact_quadratic_roots() {
        // x² − 2 → ±√2
        let p = UniPoly::from_i64(&[-2, 0, 1]);
        let roots = isolate_roots(&p, &Bracket::default()).unwrap();
        assert_eq!(roots.len(), 2);
        let sqrt2 = ExtVal::radical(rat(0, 1), rat(1, 1), rat_int(2));
        assert_eq!(roots[1].value, RootValue::Exact(sqrt2.clone()));
        assert_eq!(roots[0].value, RootValue::Exact(sqrt2.neg()));
    }

    #[test]
    fn no_real_roots() {
        let p = UniPoly::from_i64(&[1, 0, 1]); // x² + 1
        assert!(isolate_roots(&p, &Bracket::default()).unwrap().is_empty());
    }

    #[test]
    fn trousers_fiber_biquadratic() {
        // 4z⁴ − 3z² − 1 = (z² − 1)(4z² + 1): roots ±1
        let p = UniPoly::new(vec![rat(-1, 1), rat(0, 1), rat(-3, 1), rat(0, 1), rat(4, 1)]);
        let roots = isolate_roots(&p, &Bracket::default()).unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[0].value, RootValue::Exact(ExtVal::from_int(-1)));
        assert_eq!(roots[1].value, RootValue::Exact(ExtVal::from_int(1)));
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert_eq!(isolate_roots(&UniPoly::zero(), &Bracket::default()), Err(PolyError::ZeroPolynomial));
    }

    #[test]
    fn bracket_filters_roots() {
        let p = UniPoly::from_i64(&[-2, 0, 1]);
        let b = Bracket { lo: Some(rat(0, 1)), hi: None };
        let roots = isolate_roots(&p, &b).unwrap();
        assert_eq!(roots.len(), 1);
    }

    #[test]
    fn multiple_roots_counted_once() {
        // (x − 1)² x
        let p = UniPoly::from_i64(&[0, 1, -2, 1]);
        let roots = isolate_roots(&p, &Bracket::default()).unwrap();
        assert_eq!(roots.len(), 2);
    }
}

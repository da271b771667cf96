//! Exact fibers: substitute a base point into a predicate and solve the
//! resulting univariate conditions. Every atom must reduce to a polynomial
//! condition in the fiber variable; a single depth-1 radical coefficient is
//! eliminated by squaring with explicit sign side-conditions.

use super::{normalize_1d, Endpoint, Piece, SaSet1D};
use crate::algebra::{
    contains, eval, isolate_roots, Bracket, Expr, ExtVal, Int, Rat, Rel, RootValue, SaPredicate,
    UniPoly,
};
use num::Zero;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("atom does not reduce to a univariate polynomial condition: {0}")]
    NonPolynomialFiber(String),
    #[error("root of `{0}` has no exact representation in the value class")]
    ExactnessUnavailable(String),
    #[error("piecewise guard references the fiber variable")]
    GuardOnFiberVariable,
    #[error("expression references axis {axis} beyond the fiber variable {fiber}")]
    Arity { axis: usize, fiber: usize },
}

/// `p(y) + q(y)·√c` with rational polynomials and one optional integer
/// radicand.
#[derive(Clone, Debug)]
struct RadPoly {
    p: UniPoly,
    q: UniPoly,
    c: Option<Int>,
}

impl RadPoly {
    fn rational(p: UniPoly) -> RadPoly {
        RadPoly { p, q: UniPoly::zero(), c: None }
    }

    fn constant(v: &ExtVal) -> Option<RadPoly> {
        match v {
            ExtVal::Rat(r) => Some(RadPoly::rational(UniPoly::constant(r.clone()))),
            ExtVal::Rad { a, b, c } => Some(RadPoly {
                p: UniPoly::constant(a.clone()),
                q: UniPoly::constant(b.clone()),
                c: Some(c.clone()),
            }),
            ExtVal::Indeterminate => None,
        }
    }

    fn unify(c1: &Option<Int>, c2: &Option<Int>) -> Result<Option<Int>, FiberError> {
        match (c1, c2) {
            (None, c) | (c, None) => Ok(c.clone()),
            (Some(a), Some(b)) if a == b => Ok(Some(a.clone())),
            _ => Err(FiberError::NonPolynomialFiber("two incompatible radicands".into())),
        }
    }

    fn add(&self, other: &RadPoly) -> Result<RadPoly, FiberError> {
        let c = Self::unify(&self.c, &other.c)?;
        Ok(RadPoly { p: self.p.add(&other.p), q: self.q.add(&other.q), c })
    }

    fn neg(&self) -> RadPoly {
        RadPoly { p: self.p.neg(), q: self.q.neg(), c: self.c.clone() }
    }

    fn mul(&self, other: &RadPoly) -> Result<RadPoly, FiberError> {
        let c = Self::unify(&self.c, &other.c)?;
        let cross = match &c {
            Some(radicand) => {
                self.q.mul(&other.q).scale(&Rat::from_integer(radicand.clone()))
            }
            None => UniPoly::zero(),
        };
        Ok(RadPoly {
            p: self.p.mul(&other.p).add(&cross),
            q: self.p.mul(&other.q).add(&self.q.mul(&other.p)),
            c,
        })
    }

    fn div(&self, other: &RadPoly) -> Result<RadPoly, FiberError> {
        // divisor must be a nonzero constant
        let dp = other.p.degree().unwrap_or(0);
        let dq = other.q.degree().unwrap_or(0);
        if dp > 0 || dq > 0 {
            return Err(FiberError::NonPolynomialFiber("division by a non-constant".into()));
        }
        let a = other.p.coeff(0);
        let b = other.q.coeff(0);
        if b.is_zero() {
            if a.is_zero() {
                return Err(FiberError::NonPolynomialFiber("division by zero".into()));
            }
            let inv = Rat::new(Int::from(1), Int::from(1)) / a;
            return Ok(RadPoly { p: self.p.scale(&inv), q: self.q.scale(&inv), c: self.c.clone() });
        }
        let c = Self::unify(&self.c, &other.c)?;
        let radicand = c.clone().expect("radical divisor fixes the radicand");
        // 1/(a + b√c) = (a − b√c)/(a² − b²c)
        let denom = &a * &a - &b * &b * Rat::from_integer(radicand);
        if denom.is_zero() {
            return Err(FiberError::NonPolynomialFiber("division by zero".into()));
        }
        let conj = RadPoly {
            p: UniPoly::constant(a / &denom),
            q: UniPoly::constant(-b / &denom),
            c,
        };
        self.mul(&conj)
    }
}

/// Boolean combination of polynomial sign conditions on the fiber variable.
#[derive(Clone, Debug)]
enum PolyFormula {
    Const(bool),
    Atom(UniPoly, Rel),
    And(Box<PolyFormula>, Box<PolyFormula>),
    Or(Box<PolyFormula>, Box<PolyFormula>),
}

impl PolyFormula {
    fn and(self, other: PolyFormula) -> PolyFormula {
        PolyFormula::And(Box::new(self), Box::new(other))
    }

    fn or(self, other: PolyFormula) -> PolyFormula {
        PolyFormula::Or(Box::new(self), Box::new(other))
    }

    fn not(self) -> PolyFormula {
        match self {
            PolyFormula::Const(b) => PolyFormula::Const(!b),
            PolyFormula::Atom(p, rel) => PolyFormula::Atom(p, rel.negate()),
            PolyFormula::And(a, b) => a.not().or(b.not()),
            PolyFormula::Or(a, b) => a.not().and(b.not()),
        }
    }

    fn polys<'a>(&'a self, out: &mut Vec<&'a UniPoly>) {
        match self {
            PolyFormula::Const(_) => {}
            PolyFormula::Atom(p, _) => out.push(p),
            PolyFormula::And(a, b) | PolyFormula::Or(a, b) => {
                a.polys(out);
                b.polys(out);
            }
        }
    }

    fn eval_at(&self, v: &ExtVal) -> bool {
        match self {
            PolyFormula::Const(b) => *b,
            PolyFormula::Atom(p, rel) => {
                let value = p.eval_ext(v);
                rel.holds(value.sign())
            }
            PolyFormula::And(a, b) => a.eval_at(v) && b.eval_at(v),
            PolyFormula::Or(a, b) => a.eval_at(v) || b.eval_at(v),
        }
    }
}

fn atom_le(p: UniPoly) -> PolyFormula {
    PolyFormula::Atom(p, Rel::Le)
}

fn atom_lt(p: UniPoly) -> PolyFormula {
    PolyFormula::Atom(p, Rel::Lt)
}

fn atom_gt(p: UniPoly) -> PolyFormula {
    PolyFormula::Atom(p, Rel::Gt)
}

fn atom_eq(p: UniPoly) -> PolyFormula {
    PolyFormula::Atom(p, Rel::Eq)
}

/// Squaring elimination for `p + q·√c REL 0`: fixed transformation table
/// with explicit sign side-conditions (no spurious roots).
fn radical_atom_formula(p: &UniPoly, q: &UniPoly, c: &Int, rel: Rel) -> PolyFormula {
    let disc = p.mul(p).sub(&q.mul(q).scale(&Rat::from_integer(c.clone())));
    let eq = atom_eq(disc.clone()).and(atom_le(p.mul(q)));
    let lt = atom_lt(p.clone())
        .and(atom_le(q.clone()))
        .or(atom_le(p.clone()).and(atom_lt(q.clone())))
        .or(atom_gt(p.clone()).and(atom_lt(q.clone())).and(atom_lt(disc.clone())))
        .or(atom_lt(p.clone()).and(atom_gt(q.clone())).and(atom_gt(disc)));
    match rel {
        Rel::Eq => eq,
        Rel::Ne => eq.not(),
        Rel::Lt => lt,
        Rel::Ge => lt.not(),
        Rel::Le => {
            let gt = radical_atom_formula(p, q, c, Rel::Gt);
            gt.not()
        }
        Rel::Gt => {
            let (np, nq) = (p.neg(), q.neg());
            radical_atom_formula(&np, &nq, c, Rel::Lt)
        }
    }
}

/// Converts a specialized expression (base coordinates substituted) into a
/// `RadPoly` in the fiber variable.
fn to_radpoly(expr: &Expr, base: &[Rat], fiber_axis: usize) -> Result<RadPoly, FiberError> {
    match expr {
        Expr::Const(r) => Ok(RadPoly::rational(UniPoly::constant(r.clone()))),
        Expr::Var(i) if *i == fiber_axis => {
            Ok(RadPoly::rational(UniPoly::new(vec![Rat::zero(), Rat::from_integer(1.into())])))
        }
        Expr::Var(i) if *i < fiber_axis => {
            Ok(RadPoly::rational(UniPoly::constant(base[*i - 1].clone())))
        }
        Expr::Var(i) => Err(FiberError::Arity { axis: *i, fiber: fiber_axis }),
        Expr::Add(a, b) => to_radpoly(a, base, fiber_axis)?.add(&to_radpoly(b, base, fiber_axis)?),
        Expr::Sub(a, b) => {
            to_radpoly(a, base, fiber_axis)?.add(&to_radpoly(b, base, fiber_axis)?.neg())
        }
        Expr::Mul(a, b) => to_radpoly(a, base, fiber_axis)?.mul(&to_radpoly(b, base, fiber_axis)?),
        Expr::Div(a, b) => to_radpoly(a, base, fiber_axis)?.div(&to_radpoly(b, base, fiber_axis)?),
        Expr::Sqrt(inner) => {
            // only radicals of base-constant expressions stay in the class
            if inner.max_axis() >= fiber_axis {
                return Err(FiberError::NonPolynomialFiber(
                    "square root of the fiber variable".into(),
                ));
            }
            let v = eval(expr, base)
                .map_err(|e| FiberError::NonPolynomialFiber(e.to_string()))?;
            RadPoly::constant(&v).ok_or_else(|| {
                FiberError::NonPolynomialFiber("radical constant outside the class".into())
            })
        }
        Expr::Sign(inner) => {
            if inner.max_axis() >= fiber_axis {
                return Err(FiberError::NonPolynomialFiber(
                    "sign of the fiber variable".into(),
                ));
            }
            let v = eval(expr, base)
                .map_err(|e| FiberError::NonPolynomialFiber(e.to_string()))?;
            RadPoly::constant(&v).ok_or_else(|| {
                FiberError::NonPolynomialFiber("sign value outside the class".into())
            })
        }
        Expr::Piecewise { branches, default } => {
            for (guard, body) in branches {
                if guard.max_axis() >= fiber_axis {
                    return Err(FiberError::GuardOnFiberVariable);
                }
                match contains(guard, base) {
                    Ok(true) => return to_radpoly(body, base, fiber_axis),
                    Ok(false) => continue,
                    Err(e) => return Err(FiberError::NonPolynomialFiber(e.to_string())),
                }
            }
            to_radpoly(default, base, fiber_axis)
        }
        Expr::PosInf | Expr::NegInf => {
            Err(FiberError::NonPolynomialFiber("infinite endpoint in an atom".into()))
        }
    }
}

fn pred_formula(
    pred: &SaPredicate,
    base: &[Rat],
    fiber_axis: usize,
) -> Result<PolyFormula, FiberError> {
    match pred {
        SaPredicate::True => Ok(PolyFormula::Const(true)),
        SaPredicate::False => Ok(PolyFormula::Const(false)),
        SaPredicate::Atom(a) => {
            let lhs = to_radpoly(&a.lhs, base, fiber_axis)?;
            let rhs = to_radpoly(&a.rhs, base, fiber_axis)?;
            let diff = lhs.add(&rhs.neg())?;
            match (&diff.c, diff.q.is_zero()) {
                (None, _) | (_, true) => Ok(PolyFormula::Atom(diff.p, a.rel)),
                (Some(c), false) => Ok(radical_atom_formula(&diff.p, &diff.q, c, a.rel)),
            }
        }
        SaPredicate::And(a, b) => {
            Ok(pred_formula(a, base, fiber_axis)?.and(pred_formula(b, base, fiber_axis)?))
        }
        SaPredicate::Or(a, b) => {
            Ok(pred_formula(a, base, fiber_axis)?.or(pred_formula(b, base, fiber_axis)?))
        }
        SaPredicate::Not(p) => Ok(pred_formula(p, base, fiber_axis)?.not()),
    }
}

/// The fiber `{y | (x, y) ∈ S}` as an exact 1-D set.
pub fn fiber(pred: &SaPredicate, x: &[Rat]) -> Result<SaSet1D, FiberError> {
    let fiber_axis = x.len() + 1;
    if pred.max_axis() > fiber_axis {
        return Err(FiberError::Arity { axis: pred.max_axis(), fiber: fiber_axis });
    }
    let formula = pred_formula(pred, x, fiber_axis)?;

    // candidate boundary points: the roots of every polynomial appearing
    let mut polys = vec![];
    formula.polys(&mut polys);
    let mut candidates: Vec<ExtVal> = vec![];
    for p in polys {
        if p.degree().map_or(true, |d| d == 0) {
            continue;
        }
        let roots = isolate_roots(p, &Bracket::default())
            .map_err(|e| FiberError::NonPolynomialFiber(e.to_string()))?;
        for root in roots {
            match root.value {
                RootValue::Exact(v) => {
                    if !candidates.iter().any(|c| c.cmp_exact(&v) == Some(Ordering::Equal)) {
                        candidates.push(v);
                    }
                }
                RootValue::Bracketed => {
                    return Err(FiberError::ExactnessUnavailable(p.to_string()))
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.cmp_exact(b).expect("exact roots comparable"));

    // evaluate on the elementary decomposition induced by the candidates
    let mut pieces: Vec<Piece> = vec![];
    let cuts: Vec<Endpoint> = std::iter::once(Endpoint::NegInf)
        .chain(candidates.iter().cloned().map(Endpoint::Val))
        .chain(std::iter::once(Endpoint::PosInf))
        .collect();
    for w in cuts.windows(2) {
        let sample = super::sector_witness(&w[0], &w[1]);
        if formula.eval_at(&sample) {
            pieces.push(Piece {
                lo: w[0].clone(),
                lo_closed: false,
                hi: w[1].clone(),
                hi_closed: false,
            });
        }
    }
    for v in &candidates {
        if formula.eval_at(v) {
            pieces.push(Piece::point(v.clone()));
        }
    }
    normalize_1d(pieces).map_err(|e| FiberError::NonPolynomialFiber(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, rat_int};

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn unit_disk() -> SaPredicate {
        SaPredicate::atom(x(1).mul(x(1)).add(x(2).mul(x(2))), Rel::Le, Expr::int(1))
    }

    #[test]
    fn disk_fibers() {
        let f = fiber(&unit_disk(), &[rat(3, 5)]).unwrap();
        assert_eq!(f.to_string(), "[-4/5,4/5]");
        let f = fiber(&unit_disk(), &[rat_int(2)]).unwrap();
        assert!(f.is_empty());
        // irrational endpoints stay exact
        let f = fiber(&unit_disk(), &[rat(1, 2)]).unwrap();
        assert_eq!(f.pieces.len(), 1);
        let hi = ExtVal::radical(rat(0, 1), rat(1, 2), rat_int(3));
        assert!(f.contains_value(&hi));
        assert_eq!(f.boundary(), vec![hi.neg(), hi]);
    }

    #[test]
    fn pointless_ball_fiber_is_half_open() {
        // x² + y² + z² ≤ 1 ∧ z < 1 above the origin
        let ball = SaPredicate::atom(
            x(1).mul(x(1)).add(x(2).mul(x(2))).add(x(3).mul(x(3))),
            Rel::Le,
            Expr::int(1),
        )
        .and(SaPredicate::atom(x(3), Rel::Lt, Expr::int(1)));
        let f = fiber(&ball, &[rat_int(0), rat_int(0)]).unwrap();
        assert_eq!(f.to_string(), "[-1,1)");
    }

    #[test]
    fn quartic_fiber_with_biquadratic_roots() {
        // 4z⁴ − 4z²x − y² = 0 above (3/4, 1): roots ±1
        let quartic = Expr::int(4)
            .mul(x(3).mul(x(3)).mul(x(3).mul(x(3))))
            .sub(Expr::int(4).mul(x(3).mul(x(3))).mul(x(1)))
            .sub(x(2).mul(x(2)));
        let pred = SaPredicate::atom(quartic, Rel::Eq, Expr::int(0));
        let f = fiber(&pred, &[rat(3, 4), rat_int(1)]).unwrap();
        assert_eq!(f.to_string(), "{-1} u {1}");
    }

    #[test]
    fn piecewise_guards_resolve_on_the_base() {
        // z = f(x, y) with the trousers section function
        let guard = SaPredicate::atom(x(1), Rel::Gt, Expr::int(0))
            .and(SaPredicate::atom(x(2), Rel::Gt, Expr::int(0)));
        let f_expr = Expr::Piecewise {
            branches: vec![(guard, x(1).neg().div(Expr::int(2)))],
            default: Box::new(Expr::int(0)),
        };
        let pred = SaPredicate::atom(x(3), Rel::Eq, f_expr);
        assert_eq!(fiber(&pred, &[rat_int(1), rat_int(1)]).unwrap().to_string(), "{-1/2}");
        assert_eq!(fiber(&pred, &[rat_int(1), rat_int(0)]).unwrap().to_string(), "{0}");
    }

    #[test]
    fn radical_atom_squaring_table_is_exact() {
        // compare the squared formula against direct sign evaluation of
        // a + b√c + y·0 for a grid of constants, and (y + a) + b√c pointwise
        let c = Int::from(2);
        for a in -4i64..=4 {
            for b in -4i64..=4 {
                if b == 0 {
                    continue;
                }
                let value = ExtVal::radical(rat(a, 1), rat(b, 1), rat_int(2));
                let sign = value.sign();
                for rel in [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne, Rel::Ge, Rel::Gt] {
                    let formula = radical_atom_formula(
                        &UniPoly::constant(rat(a, 1)),
                        &UniPoly::constant(rat(b, 1)),
                        &c,
                        rel,
                    );
                    // the formula is constant in y; evaluate anywhere
                    assert_eq!(
                        formula.eval_at(&ExtVal::from_int(0)),
                        rel.holds(sign),
                        "a={} b={} rel={:?}",
                        a,
                        b,
                        rel
                    );
                }
            }
        }
        // non-constant p: y − 2√2 < 0 on y ∈ {2, 3} (2√2 ≈ 2.83)
        let p = UniPoly::new(vec![Rat::zero(), Rat::from_integer(1.into())]);
        let q = UniPoly::constant(rat(-2, 1));
        let f = radical_atom_formula(&p, &q, &c, Rel::Lt);
        assert!(f.eval_at(&ExtVal::from_int(2)));
        assert!(!f.eval_at(&ExtVal::from_int(3)));
    }

    #[test]
    fn radical_coefficient_atom() {
        // y ≥ √2 gives the fiber [√2, ∞)
        let pred = SaPredicate::atom(x(1), Rel::Ge, Expr::int(2).sqrt());
        let f = fiber(&pred, &[]).unwrap();
        assert_eq!(f.pieces.len(), 1);
        let sqrt2 = ExtVal::radical(rat(0, 1), rat(1, 1), rat_int(2));
        assert!(f.contains_value(&sqrt2));
        assert!(!f.contains_value(&ExtVal::Rat(rat(7, 5))));
        assert_eq!(f.boundary(), vec![sqrt2]);
    }

    #[test]
    fn division_by_fiber_variable_rejected() {
        let pred = SaPredicate::atom(Expr::int(1).div(x(1)), Rel::Gt, Expr::int(0));
        assert!(matches!(fiber(&pred, &[]), Err(FiberError::NonPolynomialFiber(_))));
    }
}

//! The closed expression language over ℚ: rational constants, variables,
//! field operations, square roots, the sign function and guarded piecewise
//! definitions. Evaluation is exact, into [`ExtVal`].

use super::pred::{contains, SaPredicate};
use super::{ExtVal, Rat};
use num::Zero;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Rat),
    /// 1-based axis number.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Sign(Box<Expr>),
    /// Branch guards are tried in order; the default covers the rest.
    Piecewise { branches: Vec<(SaPredicate, Expr)>, default: Box<Expr> },
    PosInf,
    NegInf,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("expression references axis {axis} but the point has {got} coordinates")]
    ArityMismatch { axis: usize, got: usize },
    #[error("domain error at subterm `{term}` on point {point}: {reason}")]
    Domain { term: String, point: String, reason: String },
    #[error("piecewise guard `{guard}` undecidable at point {point}")]
    UndecidableGuard { guard: String, point: String },
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Rat::from_integer(n.into()))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::Const(Rat::new(n.into(), d.into()))
    }

    pub fn var(axis: usize) -> Expr {
        Expr::Var(axis)
    }

    pub fn add(self, other: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(other))
    }

    pub fn sub(self, other: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(other))
    }

    pub fn mul(self, other: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(other))
    }

    pub fn div(self, other: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(other))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn neg(self) -> Expr {
        Expr::int(0).sub(self)
    }

    /// Highest axis referenced, guards included; 0 for constants.
    pub fn max_axis(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::PosInf | Expr::NegInf => 0,
            Expr::Var(i) => *i,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_axis().max(b.max_axis())
            }
            Expr::Sqrt(e) | Expr::Sign(e) => e.max_axis(),
            Expr::Piecewise { branches, default } => branches
                .iter()
                .map(|(p, e)| p.max_axis().max(e.max_axis()))
                .chain(std::iter::once(default.max_axis()))
                .max()
                .unwrap_or(0),
        }
    }

    /// Depth of nested square roots.
    pub fn sqrt_depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::PosInf | Expr::NegInf => 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.sqrt_depth().max(b.sqrt_depth())
            }
            Expr::Sqrt(e) => 1 + e.sqrt_depth(),
            Expr::Sign(e) => e.sqrt_depth(),
            Expr::Piecewise { branches, default } => branches
                .iter()
                .map(|(_, e)| e.sqrt_depth())
                .chain(std::iter::once(default.sqrt_depth()))
                .max()
                .unwrap_or(0),
        }
    }

    /// Exact value of an `ExtVal` as an expression (radicals become
    /// `a + b*sqrt(c)` terms).
    pub fn from_extval(v: &ExtVal) -> Option<Expr> {
        match v {
            ExtVal::Rat(r) => Some(Expr::Const(r.clone())),
            ExtVal::Rad { a, b, c } => {
                let root = Expr::Const(Rat::from_integer(c.clone())).sqrt();
                let term = Expr::Const(b.clone()).mul(root);
                if a.is_zero() {
                    Some(term)
                } else {
                    Some(Expr::Const(a.clone()).add(term))
                }
            }
            ExtVal::Indeterminate => None,
        }
    }
}

fn point_str(point: &[Rat]) -> String {
    let coords: Vec<String> = point.iter().map(|c| c.to_string()).collect();
    format!("({})", coords.join(", "))
}

/// Exact evaluation at a rational point. Division by zero and failed radical
/// collapses yield `Indeterminate`; a negative radicand is a domain error.
pub fn eval(expr: &Expr, point: &[Rat]) -> Result<ExtVal, EvalError> {
    match expr {
        Expr::Const(r) => Ok(ExtVal::Rat(r.clone())),
        Expr::Var(i) => point
            .get(*i - 1)
            .map(|r| ExtVal::Rat(r.clone()))
            .ok_or(EvalError::ArityMismatch { axis: *i, got: point.len() }),
        Expr::Add(a, b) => Ok(eval(a, point)?.add(&eval(b, point)?)),
        Expr::Sub(a, b) => Ok(eval(a, point)?.sub(&eval(b, point)?)),
        Expr::Mul(a, b) => Ok(eval(a, point)?.mul(&eval(b, point)?)),
        Expr::Div(a, b) => Ok(eval(a, point)?.div(&eval(b, point)?)),
        Expr::Sqrt(e) => {
            let v = eval(e, point)?;
            match &v {
                ExtVal::Rat(r) if r < &Rat::zero() => Err(EvalError::Domain {
                    term: expr.to_string(),
                    point: point_str(point),
                    reason: format!("negative radicand {}", r),
                }),
                _ => Ok(v.sqrt()),
            }
        }
        Expr::Sign(e) => {
            let v = eval(e, point)?;
            if v.is_indeterminate() {
                Ok(ExtVal::Indeterminate)
            } else {
                Ok(ExtVal::from_int(v.sign() as i64))
            }
        }
        Expr::Piecewise { branches, default } => {
            for (guard, body) in branches {
                match contains(guard, point) {
                    Ok(true) => return eval(body, point),
                    Ok(false) => continue,
                    Err(_) => {
                        return Err(EvalError::UndecidableGuard {
                            guard: guard.to_string(),
                            point: point_str(point),
                        })
                    }
                }
            }
            eval(default, point)
        }
        Expr::PosInf | Expr::NegInf => Err(EvalError::Domain {
            term: expr.to_string(),
            point: point_str(point),
            reason: "infinite endpoint used as a value".into(),
        }),
    }
}

/// Context for closure evaluation: guards and sign terms are frozen at an
/// interior point of a cell, arithmetic happens at the boundary point.
#[derive(Clone, Copy)]
pub struct ClosureCtx<'a> {
    pub interior: &'a [Rat],
    pub boundary: &'a [Rat],
}

/// Limit of the restriction of `expr` to the cell containing `interior`,
/// taken at `boundary` in its closure: every `sign(…)` and every piecewise
/// guard is resolved at the interior sample (where the restriction lives),
/// then the selected branch is evaluated exactly at the boundary point.
pub fn closure_eval(expr: &Expr, ctx: ClosureCtx<'_>) -> Result<ExtVal, EvalError> {
    match expr {
        Expr::Const(r) => Ok(ExtVal::Rat(r.clone())),
        Expr::Var(i) => ctx
            .boundary
            .get(*i - 1)
            .map(|r| ExtVal::Rat(r.clone()))
            .ok_or(EvalError::ArityMismatch { axis: *i, got: ctx.boundary.len() }),
        Expr::Add(a, b) => Ok(closure_eval(a, ctx)?.add(&closure_eval(b, ctx)?)),
        Expr::Sub(a, b) => Ok(closure_eval(a, ctx)?.sub(&closure_eval(b, ctx)?)),
        Expr::Mul(a, b) => Ok(closure_eval(a, ctx)?.mul(&closure_eval(b, ctx)?)),
        Expr::Div(a, b) => Ok(closure_eval(a, ctx)?.div(&closure_eval(b, ctx)?)),
        Expr::Sqrt(e) => {
            let v = closure_eval(e, ctx)?;
            match &v {
                ExtVal::Rat(r) if r < &Rat::zero() => Err(EvalError::Domain {
                    term: expr.to_string(),
                    point: point_str(ctx.boundary),
                    reason: format!("negative radicand {} at closure point", r),
                }),
                _ => Ok(v.sqrt()),
            }
        }
        Expr::Sign(e) => {
            // the restriction has constant sign on the cell
            let v = eval(e, ctx.interior)?;
            if v.is_indeterminate() {
                Ok(ExtVal::Indeterminate)
            } else {
                Ok(ExtVal::from_int(v.sign() as i64))
            }
        }
        Expr::Piecewise { branches, default } => {
            for (guard, body) in branches {
                match contains(guard, ctx.interior) {
                    Ok(true) => return closure_eval(body, ctx),
                    Ok(false) => continue,
                    Err(_) => {
                        return Err(EvalError::UndecidableGuard {
                            guard: guard.to_string(),
                            point: point_str(ctx.interior),
                        })
                    }
                }
            }
            closure_eval(default, ctx)
        }
        Expr::PosInf | Expr::NegInf => Err(EvalError::Domain {
            term: expr.to_string(),
            point: point_str(ctx.boundary),
            reason: "infinite endpoint used as a value".into(),
        }),
    }
}

/// Structural normal form: constants folded, `sqrt`/`sign` of constants
/// collapsed where exact, and piecewise definitions whose branches all
/// normalize to the same expression replaced by that expression. Used for
/// fingerprinting and for recognizing that glued pieces are one expression.
pub fn normalize_expr(expr: &Expr) -> Expr {
    match expr {
        Expr::Const(_) | Expr::Var(_) | Expr::PosInf | Expr::NegInf => expr.clone(),
        Expr::Add(a, b) => fold2(normalize_expr(a), normalize_expr(b), |x, y| x + y, Expr::Add),
        Expr::Sub(a, b) => fold2(normalize_expr(a), normalize_expr(b), |x, y| x - y, Expr::Sub),
        Expr::Mul(a, b) => fold2(normalize_expr(a), normalize_expr(b), |x, y| x * y, Expr::Mul),
        Expr::Div(a, b) => {
            let (a, b) = (normalize_expr(a), normalize_expr(b));
            if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
                if !y.is_zero() {
                    return Expr::Const(x / y);
                }
            }
            Expr::Div(Box::new(a), Box::new(b))
        }
        Expr::Sqrt(e) => {
            let e = normalize_expr(e);
            if let Expr::Const(r) = &e {
                if r >= &Rat::zero() {
                    if let ExtVal::Rat(v) = super::sqrt_rat(r) {
                        return Expr::Const(v);
                    }
                }
            }
            Expr::Sqrt(Box::new(e))
        }
        Expr::Sign(e) => {
            let e = normalize_expr(e);
            if let Expr::Const(r) = &e {
                let s = if r.is_zero() {
                    0
                } else if r > &Rat::zero() {
                    1
                } else {
                    -1
                };
                return Expr::int(s);
            }
            Expr::Sign(Box::new(e))
        }
        Expr::Piecewise { branches, default } => {
            let branches: Vec<(SaPredicate, Expr)> = branches
                .iter()
                .map(|(g, e)| (g.normalize_atoms(), normalize_expr(e)))
                .collect();
            let default = normalize_expr(default);
            if branches.iter().all(|(_, e)| *e == default) {
                return default;
            }
            Expr::Piecewise { branches, default: Box::new(default) }
        }
    }
}

fn fold2(
    a: Expr,
    b: Expr,
    f: impl Fn(&Rat, &Rat) -> Rat,
    ctor: impl Fn(Box<Expr>, Box<Expr>) -> Expr,
) -> Expr {
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(f(x, y));
    }
    ctor(Box::new(a), Box::new(b))
}

// precedence levels for printing: 0 sum, 1 product/unary-minus, 2 atom
fn prec(e: &Expr) -> u8 {
    match e {
        // unary minus (zero-left subtraction) prints as a factor
        Expr::Sub(a, _) if matches!(a.as_ref(), Expr::Const(r) if r.is_zero()) => 1,
        Expr::Add(..) | Expr::Sub(..) => 0,
        Expr::Mul(..) | Expr::Div(..) => 1,
        Expr::Const(r) if r < &Rat::zero() => 1,
        _ => 2,
    }
}

fn fmt_child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(r) => write!(f, "{}", r),
            Expr::Var(i) => write!(f, "x{}", i),
            Expr::Add(a, b) => {
                fmt_child(a, 0, f)?;
                write!(f, " + ")?;
                fmt_child(b, 1, f)
            }
            Expr::Sub(a, b) => {
                // leading zero prints as unary minus
                if matches!(a.as_ref(), Expr::Const(r) if r.is_zero()) {
                    write!(f, "-")?;
                    return fmt_child(b, 2, f);
                }
                fmt_child(a, 0, f)?;
                write!(f, " - ")?;
                fmt_child(b, 1, f)
            }
            Expr::Mul(a, b) => {
                fmt_child(a, 1, f)?;
                write!(f, "*")?;
                fmt_child(b, 2, f)
            }
            Expr::Div(a, b) => {
                fmt_child(a, 1, f)?;
                write!(f, "/")?;
                fmt_child(b, 2, f)
            }
            Expr::Sqrt(e) => write!(f, "sqrt({})", e),
            Expr::Sign(e) => write!(f, "sign({})", e),
            Expr::Piecewise { branches, default } => {
                write!(f, "piecewise{{")?;
                for (g, e) in branches {
                    write!(f, "{} -> {}; ", g, e)?;
                }
                write!(f, "else -> {}}}", default)
            }
            Expr::PosInf => write!(f, "+inf"),
            Expr::NegInf => write!(f, "-inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{rat, rat_int, Rel};
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    /// √(1 − x1²)
    fn upper_semicircle() -> Expr {
        Expr::int(1).sub(x(1).mul(x(1))).sqrt()
    }

    #[test]
    fn eval_semicircle() {
        assert_eq!(eval(&upper_semicircle(), &[rat_int(0)]), Ok(ExtVal::from_int(1)));
        // √(3/4) = (1/2)√3
        assert_eq!(
            eval(&upper_semicircle(), &[rat(1, 2)]),
            Ok(ExtVal::radical(rat(0, 1), rat(1, 2), rat_int(3)))
        );
        // Pythagorean collapse
        assert_eq!(eval(&upper_semicircle(), &[rat(3, 5)]), Ok(ExtVal::Rat(rat(4, 5))));
    }

    /// g(x, y) = −sign(y)·√((x + √(x² + y²)) / 2)
    fn analytic_section() -> Expr {
        let norm = x(1).mul(x(1)).add(x(2).mul(x(2))).sqrt();
        let inner = x(1).add(norm).div(Expr::int(2)).sqrt();
        Expr::Sign(Box::new(x(2))).neg().mul(inner)
    }

    #[test]
    fn eval_analytic_section_collapses_on_pythagorean_points() {
        // at (3/4, 1): x²+y² = 25/16, inner radicand (3/4 + 5/4)/2 = 1
        assert_eq!(eval(&analytic_section(), &[rat(3, 4), rat_int(1)]), Ok(ExtVal::from_int(-1)));
        // at a generic point the inner root stays irrational
        assert_eq!(
            eval(&analytic_section(), &[rat_int(1), rat_int(1)]),
            Ok(ExtVal::Indeterminate)
        );
        // on the negative axis the radicand collapses to 0
        assert_eq!(eval(&analytic_section(), &[rat_int(-2), rat_int(0)]), Ok(ExtVal::from_int(0)));
    }

    #[test]
    fn division_by_zero_yields_indeterminate() {
        let e = Expr::int(1).div(x(1));
        assert_eq!(eval(&e, &[rat_int(0)]), Ok(ExtVal::Indeterminate));
    }

    #[test]
    fn arity_mismatch_detected() {
        assert_eq!(eval(&x(2), &[rat_int(0)]), Err(EvalError::ArityMismatch { axis: 2, got: 1 }));
    }

    #[test]
    fn negative_radicand_is_domain_error() {
        let e = Expr::int(-1).sqrt();
        assert!(matches!(eval(&e, &[]), Err(EvalError::Domain { .. })));
    }

    fn trousers_f() -> Expr {
        // piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
        let guard = SaPredicate::atom(x(1), Rel::Gt, Expr::int(0))
            .and(SaPredicate::atom(x(2), Rel::Gt, Expr::int(0)));
        Expr::Piecewise {
            branches: vec![(guard, x(1).neg().div(Expr::int(2)))],
            default: Box::new(Expr::int(0)),
        }
    }

    #[test]
    fn piecewise_guards_are_lazy() {
        let f = trousers_f();
        assert_eq!(eval(&f, &[rat_int(1), rat_int(1)]), Ok(ExtVal::Rat(rat(-1, 2))));
        assert_eq!(eval(&f, &[rat_int(1), rat_int(0)]), Ok(ExtVal::from_int(0)));
        // a division by zero in an unselected branch is never evaluated
        let guarded = Expr::Piecewise {
            branches: vec![(
                SaPredicate::atom(x(1), Rel::Ne, Expr::int(0)),
                Expr::int(1).div(x(1)),
            )],
            default: Box::new(Expr::int(7)),
        };
        assert_eq!(eval(&guarded, &[rat_int(0)]), Ok(ExtVal::from_int(7)));
    }

    #[test]
    fn closure_eval_freezes_branch_at_interior() {
        let f = trousers_f();
        // restriction to the open cell {y > 0} near x = 1, evaluated at the
        // boundary point (1, 0): the selected branch gives −1/2, while plain
        // evaluation at the boundary gives 0
        let interior = [rat_int(1), rat(1, 64)];
        let boundary = [rat_int(1), rat_int(0)];
        let ctx = ClosureCtx { interior: &interior, boundary: &boundary };
        assert_eq!(closure_eval(&f, ctx), Ok(ExtVal::Rat(rat(-1, 2))));
        assert_eq!(eval(&f, &boundary), Ok(ExtVal::from_int(0)));
    }

    #[test]
    fn closure_eval_freezes_sign() {
        let g = analytic_section();
        // restriction to {y > 0} at boundary (1, 0): sign frozen to +1,
        // radicand collapses to √((1+1)/2) = 1, so the limit is −1
        let interior = [rat_int(1), rat(1, 8)];
        let boundary = [rat_int(1), rat_int(0)];
        let ctx = ClosureCtx { interior: &interior, boundary: &boundary };
        assert_eq!(closure_eval(&g, ctx), Ok(ExtVal::from_int(-1)));
        // direct evaluation at the boundary sees sign(0) = 0
        assert_eq!(eval(&g, &boundary), Ok(ExtVal::from_int(0)));
    }

    #[test]
    fn normalization_collapses_uniform_piecewise() {
        let guard = SaPredicate::atom(x(1), Rel::Lt, Expr::int(0));
        let pw = Expr::Piecewise {
            branches: vec![(guard, x(1).mul(Expr::int(1)))],
            default: Box::new(x(1).mul(Expr::int(1))),
        };
        assert_eq!(normalize_expr(&pw), x(1).mul(Expr::int(1)));
        assert_eq!(normalize_expr(&Expr::int(3).add(Expr::rat(1, 2))), Expr::rat(7, 2));
        assert_eq!(normalize_expr(&Expr::rat(9, 16).sqrt()), Expr::rat(3, 4));
    }

    #[test]
    fn display_round_trips_precedence() {
        let e = x(1).add(x(2)).mul(x(1).sub(x(2)));
        assert_eq!(e.to_string(), "(x1 + x2)*(x1 - x2)");
        let f = x(1).neg().div(Expr::int(2));
        assert_eq!(f.to_string(), "-x1/2");
    }
}

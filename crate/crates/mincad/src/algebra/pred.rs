//! Boolean combinations of sign conditions on expressions: the membership
//! language for semi-algebraic sets.

use super::expr::{eval, normalize_expr, Expr};
use super::ExtVal;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Rel {
    pub fn holds(self, sign: i32) -> bool {
        match self {
            Rel::Lt => sign < 0,
            Rel::Le => sign <= 0,
            Rel::Eq => sign == 0,
            Rel::Ne => sign != 0,
            Rel::Ge => sign >= 0,
            Rel::Gt => sign > 0,
        }
    }

    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub lhs: Expr,
    pub rel: Rel,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SaPredicate {
    True,
    False,
    Atom(Atom),
    And(Box<SaPredicate>, Box<SaPredicate>),
    Or(Box<SaPredicate>, Box<SaPredicate>),
    Not(Box<SaPredicate>),
}

#[derive(Debug, Error, PartialEq)]
pub enum PredError {
    #[error("atom `{atom}` undecidable at point {point}: {reason}")]
    UndecidableAtom { atom: String, point: String, reason: String },
}

impl SaPredicate {
    pub fn atom(lhs: Expr, rel: Rel, rhs: Expr) -> SaPredicate {
        SaPredicate::Atom(Atom { lhs, rel, rhs })
    }

    pub fn and(self, other: SaPredicate) -> SaPredicate {
        SaPredicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: SaPredicate) -> SaPredicate {
        SaPredicate::Or(Box::new(self), Box::new(other))
    }

    pub fn complement(&self) -> SaPredicate {
        SaPredicate::Not(Box::new(self.clone())).nnf()
    }

    /// Negation normal form: `Not` pushed onto atoms (where it flips the
    /// relation) and constants.
    pub fn nnf(&self) -> SaPredicate {
        match self {
            SaPredicate::True | SaPredicate::False | SaPredicate::Atom(_) => self.clone(),
            SaPredicate::And(a, b) => a.nnf().and(b.nnf()),
            SaPredicate::Or(a, b) => a.nnf().or(b.nnf()),
            SaPredicate::Not(inner) => match inner.as_ref() {
                SaPredicate::True => SaPredicate::False,
                SaPredicate::False => SaPredicate::True,
                SaPredicate::Atom(a) => SaPredicate::atom(a.lhs.clone(), a.rel.negate(), a.rhs.clone()),
                SaPredicate::Not(p) => p.nnf(),
                SaPredicate::And(a, b) => {
                    SaPredicate::Not(a.clone()).nnf().or(SaPredicate::Not(b.clone()).nnf())
                }
                SaPredicate::Or(a, b) => {
                    SaPredicate::Not(a.clone()).nnf().and(SaPredicate::Not(b.clone()).nnf())
                }
            },
        }
    }

    pub fn max_axis(&self) -> usize {
        match self {
            SaPredicate::True | SaPredicate::False => 0,
            SaPredicate::Atom(a) => a.lhs.max_axis().max(a.rhs.max_axis()),
            SaPredicate::And(a, b) | SaPredicate::Or(a, b) => a.max_axis().max(b.max_axis()),
            SaPredicate::Not(p) => p.max_axis(),
        }
    }

    /// Normalizes the expressions inside atoms (used by fingerprinting).
    pub fn normalize_atoms(&self) -> SaPredicate {
        match self {
            SaPredicate::True | SaPredicate::False => self.clone(),
            SaPredicate::Atom(a) => SaPredicate::atom(
                normalize_expr(&a.lhs),
                a.rel,
                normalize_expr(&a.rhs),
            ),
            SaPredicate::And(a, b) => a.normalize_atoms().and(b.normalize_atoms()),
            SaPredicate::Or(a, b) => a.normalize_atoms().or(b.normalize_atoms()),
            SaPredicate::Not(p) => SaPredicate::Not(Box::new(p.normalize_atoms())),
        }
    }
}

/// Exact truth value of the formula at a rational point.
pub fn contains(pred: &SaPredicate, point: &[super::Rat]) -> Result<bool, PredError> {
    match pred {
        SaPredicate::True => Ok(true),
        SaPredicate::False => Ok(false),
        SaPredicate::Atom(a) => {
            let fail = |reason: String| PredError::UndecidableAtom {
                atom: pred.to_string(),
                point: format!(
                    "({})",
                    point.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
                ),
                reason,
            };
            let l = eval(&a.lhs, point).map_err(|e| fail(e.to_string()))?;
            let r = eval(&a.rhs, point).map_err(|e| fail(e.to_string()))?;
            let d = l.sub(&r);
            if d.is_indeterminate() {
                return Err(fail("difference left the exact value class".into()));
            }
            Ok(a.rel.holds(d.sign()))
        }
        SaPredicate::And(a, b) => Ok(contains(a, point)? && contains(b, point)?),
        SaPredicate::Or(a, b) => Ok(contains(a, point)? || contains(b, point)?),
        SaPredicate::Not(p) => Ok(!contains(p, point)?),
    }
}

/// Membership with `ExtVal` in the last coordinate (exact points on
/// sections); earlier coordinates stay rational.
pub fn contains_ext(
    pred: &SaPredicate,
    base: &[super::Rat],
    last: &ExtVal,
) -> Result<bool, PredError> {
    match pred {
        SaPredicate::True => Ok(true),
        SaPredicate::False => Ok(false),
        SaPredicate::Atom(a) => {
            let fail = |reason: String| PredError::UndecidableAtom {
                atom: pred.to_string(),
                point: format!("(…, {})", last),
                reason,
            };
            let l = eval_ext_last(&a.lhs, base, last).map_err(fail)?;
            let r = eval_ext_last(&a.rhs, base, last).map_err(fail)?;
            let d = l.sub(&r);
            if d.is_indeterminate() {
                return Err(fail("difference left the exact value class".into()));
            }
            Ok(a.rel.holds(d.sign()))
        }
        SaPredicate::And(a, b) => Ok(contains_ext(a, base, last)? && contains_ext(b, base, last)?),
        SaPredicate::Or(a, b) => Ok(contains_ext(a, base, last)? || contains_ext(b, base, last)?),
        SaPredicate::Not(p) => Ok(!contains_ext(p, base, last)?),
    }
}

fn eval_ext_last(expr: &Expr, base: &[super::Rat], last: &ExtVal) -> Result<ExtVal, String> {
    let n = base.len() + 1;
    match expr {
        Expr::Const(r) => Ok(ExtVal::Rat(r.clone())),
        Expr::Var(i) if *i == n => Ok(last.clone()),
        Expr::Var(i) if *i < n => Ok(ExtVal::Rat(base[*i - 1].clone())),
        Expr::Var(i) => Err(format!("axis {} out of range", i)),
        Expr::Add(a, b) => Ok(eval_ext_last(a, base, last)?.add(&eval_ext_last(b, base, last)?)),
        Expr::Sub(a, b) => Ok(eval_ext_last(a, base, last)?.sub(&eval_ext_last(b, base, last)?)),
        Expr::Mul(a, b) => Ok(eval_ext_last(a, base, last)?.mul(&eval_ext_last(b, base, last)?)),
        Expr::Div(a, b) => Ok(eval_ext_last(a, base, last)?.div(&eval_ext_last(b, base, last)?)),
        Expr::Sqrt(e) => Ok(eval_ext_last(e, base, last)?.sqrt()),
        Expr::Sign(e) => {
            let v = eval_ext_last(e, base, last)?;
            if v.is_indeterminate() {
                Ok(ExtVal::Indeterminate)
            } else {
                Ok(ExtVal::from_int(v.sign() as i64))
            }
        }
        Expr::Piecewise { branches, default } => {
            for (guard, body) in branches {
                // guards may reference the last axis too; decide exactly
                match contains_ext(guard, base, last) {
                    Ok(true) => return eval_ext_last(body, base, last),
                    Ok(false) => continue,
                    Err(e) => return Err(e.to_string()),
                }
            }
            eval_ext_last(default, base, last)
        }
        Expr::PosInf | Expr::NegInf => Err("infinite endpoint used as a value".into()),
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        };
        write!(f, "{}", s)
    }
}

// printing precedence: or 0, and 1, unit 2
fn pprec(p: &SaPredicate) -> u8 {
    match p {
        SaPredicate::Or(..) => 0,
        SaPredicate::And(..) => 1,
        _ => 2,
    }
}

fn fmt_pred_child(p: &SaPredicate, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if pprec(p) < min {
        write!(f, "({})", p)
    } else {
        write!(f, "{}", p)
    }
}

impl fmt::Display for SaPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SaPredicate::True => write!(f, "true"),
            SaPredicate::False => write!(f, "false"),
            SaPredicate::Atom(a) => write!(f, "{} {} {}", a.lhs, a.rel, a.rhs),
            SaPredicate::And(a, b) => {
                fmt_pred_child(a, 1, f)?;
                write!(f, " & ")?;
                fmt_pred_child(b, 2, f)
            }
            SaPredicate::Or(a, b) => {
                fmt_pred_child(a, 0, f)?;
                write!(f, " | ")?;
                fmt_pred_child(b, 1, f)
            }
            SaPredicate::Not(p) => write!(f, "!({})", p),
        }
    }
}

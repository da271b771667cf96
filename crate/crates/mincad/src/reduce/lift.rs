//! Geometric liftability of a tree reduction: the sections above the merged
//! triple must glue into single functions of the CAD's class.
//!
//! The C⁰ check is exact: for every merged section triple, the side pieces
//! are closure-evaluated at witnesses on the removed cell (piecewise guards
//! and sign terms frozen at interior offset points) and compared with the
//! middle piece value. Matches prove nothing beyond plan resolution but
//! mismatches are certificates, carried as reproducible witnesses.

use crate::algebra::{closure_eval, eval, normalize_expr, ClosureCtx, ExtVal, Rat};
use crate::cad::{ConcreteCad, Family, Index, RegClass, SamplePlan};
use num::{One, Signed};
use serde::Serialize;
use std::cmp::Ordering;

#[derive(Clone, Debug, PartialEq)]
pub enum Liftability {
    Lifts,
    Fails(FailWitness),
    Unknown(String),
}

impl Liftability {
    pub fn is_lifts(&self) -> bool {
        matches!(self, Liftability::Lifts)
    }

    pub fn summary(&self) -> String {
        match self {
            Liftability::Lifts => "lifts".into(),
            Liftability::Fails(_) => "fails".into(),
            Liftability::Unknown(r) => format!("unknown: {}", r),
        }
    }
}

/// Which neighbouring sector's piece disagreed with the section piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Below,
    Above,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gap {
    Exact(ExtVal),
    Interval(Rat, Rat),
}

/// Reproducible mismatch: re-evaluating the two pieces at the witness point
/// reproduces the gap.
#[derive(Clone, Debug, PartialEq)]
pub struct FailWitness {
    /// Point on the removed cell (or a cell above it) where gluing fails.
    pub base: Vec<Rat>,
    /// Level of the section functions that refuse to glue.
    pub level: usize,
    pub side: Side,
    /// Closure value of the sector-side piece at the witness.
    pub piece_value: ExtVal,
    /// Value of the section piece at the witness.
    pub section_value: ExtVal,
    pub gap: Gap,
}

/// Offsets a witness on the removed section into the neighbouring sector
/// along axis k by ±2^−m, re-deriving the higher coordinates so the point
/// stays in the same continuation cell; returns the interior point.
fn offset_point(
    cad: &ConcreteCad,
    side_prefix: &Index,
    continuation: &[usize],
    witness: &[Rat],
    delta: &Rat,
    dir: i32,
) -> Option<Vec<Rat>> {
    let k = side_prefix.level();
    let mut pt: Vec<Rat> = witness[..k - 1].to_vec();
    let moved =
        if dir < 0 { &witness[k - 1] - delta } else { &witness[k - 1] + delta };
    // the moved coordinate must stay strictly inside the sector
    let (lo, hi) = cad.sector_bounds_at(side_prefix, &pt).ok()?;
    let mv = ExtVal::Rat(moved.clone());
    if let Some(lo) = lo {
        if lo.is_indeterminate() || lo.cmp_exact(&mv) != Some(Ordering::Less) {
            return None;
        }
    }
    if let Some(hi) = hi {
        if hi.is_indeterminate() || mv.cmp_exact(&hi) != Some(Ordering::Less) {
            return None;
        }
    }
    pt.push(moved);
    // follow the continuation for levels k+1.. over the perturbed prefix
    let mut cell = side_prefix.clone();
    for (t, &j) in continuation.iter().enumerate() {
        cell = cell.child(j);
        let coord_level = k + t + 1;
        if j % 2 == 0 {
            match cad.section_value_at(&cell, &pt) {
                Ok(ExtVal::Rat(v)) => pt.push(v),
                _ => return None,
            }
        } else {
            let (lo, hi) = cad.sector_bounds_at(&cell, &pt).ok()?;
            if lo.as_ref().map_or(false, |v| v.is_indeterminate())
                || hi.as_ref().map_or(false, |v| v.is_indeterminate())
            {
                return None;
            }
            // keep the witness coordinate when it still fits
            let keep = &witness[coord_level - 1];
            let kv = ExtVal::Rat(keep.clone());
            let fits = lo.as_ref().map_or(true, |l| l.cmp_exact(&kv) == Some(Ordering::Less))
                && hi.as_ref().map_or(true, |h| kv.cmp_exact(h) == Some(Ordering::Less));
            if fits {
                pt.push(keep.clone());
            } else {
                let choices =
                    crate::cad::plan_nice_between(lo.as_ref(), hi.as_ref(), 1);
                pt.push(choices.into_iter().next()?);
            }
        }
    }
    Some(pt)
}

/// Closure value of a side piece at a witness, stabilized over three
/// consecutive dyadic offsets; `Err` is the reason it stays unknown.
fn piece_limit(
    cad: &ConcreteCad,
    plan: &SamplePlan,
    side_prefix: &Index,
    continuation: &[usize],
    expr: &crate::algebra::Expr,
    witness: &[Rat],
    dir: i32,
) -> Result<ExtVal, String> {
    let mut values: Vec<ExtVal> = vec![];
    let mut m = 1u32;
    while m <= plan.config.m_max && values.len() < 3 {
        let delta = Rat::new(num::BigInt::one(), num::BigInt::one() << m as usize);
        debug_assert!(delta.is_positive());
        if let Some(interior) = offset_point(cad, side_prefix, continuation, witness, &delta, dir) {
            let ctx = ClosureCtx { interior: &interior, boundary: witness };
            match closure_eval(expr, ctx) {
                Ok(v) if !v.is_indeterminate() => values.push(v),
                Ok(_) => return Err("closure value left the exact class".into()),
                Err(e) => return Err(format!("closure evaluation failed: {}", e)),
            }
        }
        m += 1;
    }
    if values.len() < 3 {
        return Err("no stable interior offsets before m_max".into());
    }
    if values[0] != values[1] || values[1] != values[2] {
        return Err("piece value unstable across offsets (guard boundary nearby)".into());
    }
    Ok(values[0].clone())
}

fn gap_between(a: &ExtVal, b: &ExtVal) -> Gap {
    let d = a.sub(b);
    if !d.is_indeterminate() {
        let abs = if d.sign() < 0 { d.neg() } else { d };
        Gap::Exact(abs)
    } else {
        let (alo, ahi) = a.interval(64);
        let (blo, bhi) = b.interval(64);
        Gap::Interval(&alo - &bhi, &ahi - &blo)
    }
}

/// One-sided divided differences of the piece along axis k at the witness,
/// orders 1..=d_max, from exact samples at dyadic offsets. Entries may be
/// radical; comparison happens on enclosing intervals.
fn divided_differences(
    cad: &ConcreteCad,
    _plan: &SamplePlan,
    side_prefix: &Index,
    continuation: &[usize],
    expr: &crate::algebra::Expr,
    witness: &[Rat],
    dir: i32,
    base_value: &ExtVal,
    d_max: u32,
) -> Result<Vec<ExtVal>, String> {
    // nodes t_0 = 0, t_i = dir·2^{−i−2}; values exact
    let mut ts: Vec<Rat> = vec![Rat::from_integer(0.into())];
    let mut vs: Vec<ExtVal> = vec![base_value.clone()];
    for i in 0..=d_max {
        let m = (i + 3) as usize;
        let delta = Rat::new(num::BigInt::one(), num::BigInt::one() << m);
        let interior = offset_point(cad, side_prefix, continuation, witness, &delta, dir)
            .ok_or_else(|| "offset left the sector".to_string())?;
        let v = eval(expr, &interior).map_err(|e| e.to_string())?;
        if v.is_indeterminate() {
            return Err("sample value outside the exact class".into());
        }
        let t = if dir < 0 { -delta } else { delta };
        ts.push(t);
        vs.push(v);
    }
    // divided-difference table, one diagonal per order
    let mut out = vec![];
    let mut layer = vs;
    for order in 1..=d_max as usize {
        let mut next = vec![];
        for i in 0..layer.len() - 1 {
            let num = layer[i + 1].sub(&layer[i]);
            let den = ExtVal::Rat(&ts[i + order] - &ts[i]);
            let dd = num.div(&den);
            if dd.is_indeterminate() {
                return Err("divided difference outside the exact class".into());
            }
            next.push(dd);
        }
        out.push(next[0].clone());
        layer = next;
    }
    Ok(out)
}

/// Intervals at growing precision until separation beyond tau or overlap
/// within tau; `true` means separated (a mismatch certificate at tolerance).
fn separated_beyond(a: &ExtVal, b: &ExtVal, tau_log2: u32) -> bool {
    let tau = Rat::new(num::BigInt::one(), num::BigInt::one() << tau_log2 as usize);
    let mut bits = 64u32;
    while bits <= 256 {
        let (alo, ahi) = a.interval(bits);
        let (blo, bhi) = b.interval(bits);
        if &alo - &bhi > tau || &blo - &ahi > tau {
            return true;
        }
        if (&ahi - &blo).abs() <= tau && (&bhi - &alo).abs() <= tau {
            return false;
        }
        bits *= 2;
    }
    false
}

/// The geometric gluing verdict for merging the even cell `pivot` with its
/// neighbours. Assumes the combinatorial shape condition already holds; the
/// caller establishes it from the tree.
pub fn geometric_gluing(
    cad: &ConcreteCad,
    fam: &Family,
    pivot: &Index,
    plan: &SamplePlan,
) -> Liftability {
    let _ = fam;
    let k = pivot.level();
    let n = cad.dim;
    if k == n {
        // a top-level merge forms a sector bounded by the outer sections;
        // there is nothing above to glue
        return Liftability::Lifts;
    }
    let mut left_prefix = pivot.clone();
    left_prefix.0[k - 1] -= 1;
    let mut right_prefix = pivot.clone();
    right_prefix.0[k - 1] += 1;

    let mut unknown: Option<String> = None;
    let mut constraints_seen = false;

    // continuations: all cells in the subtree over the pivot, level by level
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(continuation) = stack.pop() {
        let level = k + continuation.len();
        if level >= n {
            continue;
        }
        let mid_index = Index([pivot.0.clone(), continuation.clone()].concat());
        let mid_node = match cad.node(&mid_index) {
            Some(nd) => nd,
            None => return Liftability::Unknown(format!("missing cell {}", mid_index)),
        };
        for j in 1..=mid_node.children.len() {
            let mut c = continuation.clone();
            c.push(j);
            stack.push(c);
        }
        if mid_node.sections.is_empty() {
            continue;
        }
        constraints_seen = true;
        let left_node = cad.node(&Index([left_prefix.0.clone(), continuation.clone()].concat()));
        let right_node = cad.node(&Index([right_prefix.0.clone(), continuation.clone()].concat()));
        let (left_node, right_node) = match (left_node, right_node) {
            (Some(l), Some(r))
                if l.u() == mid_node.u() && r.u() == mid_node.u() =>
            {
                (l, r)
            }
            _ => return Liftability::Unknown("shape mismatch across the merge".into()),
        };

        let witnesses = plan.samples(&mid_index);
        if witnesses.is_empty() {
            return Liftability::Unknown(format!(
                "no decidable boundary witness on cell {}",
                mid_index
            ));
        }

        for (pos, mid_expr) in mid_node.sections.iter().enumerate() {
            for w in witnesses {
                let mid_value = match eval(mid_expr, w) {
                    Ok(v) if !v.is_indeterminate() => v,
                    _ => {
                        unknown.get_or_insert(format!(
                            "section value undecidable at witness on {}",
                            mid_index
                        ));
                        continue;
                    }
                };
                for (side, side_prefix, node) in [
                    (Side::Below, &left_prefix, left_node),
                    (Side::Above, &right_prefix, right_node),
                ] {
                    let dir = if side == Side::Below { -1 } else { 1 };
                    let side_expr = &node.sections[pos];
                    match piece_limit(cad, plan, side_prefix, &continuation, side_expr, w, dir) {
                        Ok(v) => {
                            match v.cmp_exact(&mid_value) {
                                Some(Ordering::Equal) => {}
                                Some(_) => {
                                    return Liftability::Fails(FailWitness {
                                        base: w.clone(),
                                        level: level + 1,
                                        side,
                                        piece_value: v.clone(),
                                        section_value: mid_value.clone(),
                                        gap: gap_between(&v, &mid_value),
                                    });
                                }
                                None => {
                                    unknown.get_or_insert(
                                        "closure comparison left the exact class".into(),
                                    );
                                    continue;
                                }
                            }
                            // exact C⁰ match; for finite r ≥ 1 compare
                            // one-sided divided differences at tolerance
                            if let RegClass::Finite(r) = cad.class {
                                if r >= 1 && side == Side::Above {
                                    let d = r.min(plan.config.d_max);
                                    let ddl = divided_differences(
                                        cad, plan, &left_prefix, &continuation,
                                        &left_node.sections[pos], w, -1, &mid_value, d,
                                    );
                                    let ddr = divided_differences(
                                        cad, plan, &right_prefix, &continuation,
                                        &right_node.sections[pos], w, 1, &mid_value, d,
                                    );
                                    match (ddl, ddr) {
                                        (Ok(l), Ok(rv)) => {
                                            for (dl, dr) in l.iter().zip(&rv) {
                                                if separated_beyond(dl, dr, plan.config.tau_log2) {
                                                    return Liftability::Fails(FailWitness {
                                                        base: w.clone(),
                                                        level: level + 1,
                                                        side: Side::Above,
                                                        piece_value: dl.clone(),
                                                        section_value: dr.clone(),
                                                        gap: gap_between(dl, dr),
                                                    });
                                                }
                                            }
                                        }
                                        _ => {
                                            unknown.get_or_insert(
                                                "divided differences unavailable".into(),
                                            );
                                        }
                                    }
                                }
                            }
                        }
                        Err(reason) => {
                            unknown.get_or_insert(reason);
                        }
                    }
                }
            }
        }

        // for class ∞/ω an exact C⁰ match is not evidence of smooth gluing;
        // demand syntactic identity of the pieces
        if matches!(cad.class, RegClass::Infinity | RegClass::Omega) {
            for (pos, mid_expr) in mid_node.sections.iter().enumerate() {
                let m = normalize_expr(mid_expr);
                let l = normalize_expr(&left_node.sections[pos]);
                let r = normalize_expr(&right_node.sections[pos]);
                if l != m || r != m {
                    unknown.get_or_insert(
                        "glued pieces are not syntactically identical (class ∞/ω)".into(),
                    );
                }
            }
        }
    }

    if let Some(reason) = unknown {
        return Liftability::Unknown(reason);
    }
    if !constraints_seen {
        // nothing above the merge needed gluing
        return Liftability::Lifts;
    }
    match cad.class {
        RegClass::Finite(0) => Liftability::Lifts,
        RegClass::Finite(_) => Liftability::Unknown(
            "only tolerance-based evidence for smooth gluing".into(),
        ),
        // syntactic identity of the pieces was verified above
        RegClass::Infinity | RegClass::Omega => Liftability::Lifts,
    }
}

//! Sample plans: exact rational witnesses inside every cell of a CAD.
//!
//! All geometric checks in this crate are sample-based semi-decisions; a
//! plan fixes which points they run at. Interior samples are chosen from a
//! deterministic candidate list (midpoints and small rationals, then grid
//! mutations), preferring points where every section expression of the cell
//! evaluates inside the exact value class — the grid carries Pythagorean
//! fractions so that square roots collapse to rationals where possible.

use super::{CadError, ConcreteCad, Index};
use crate::algebra::{eval, ExtVal, Rat};
use num::{One, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct PlanConfig {
    /// Interior samples per cell (audit multiplicity).
    pub audit: usize,
    /// Near-boundary offsets run through 2^−m for m ≤ m_max.
    pub m_max: u32,
    /// Sample points per base cell entering fingerprints.
    pub fp_points: usize,
    /// Seed for fingerprint sample selection.
    pub seed: u64,
    /// Tolerance 2^−tau_log2 for divided-difference evidence.
    pub tau_log2: u32,
    /// Highest divided-difference order probed for finite r ≥ 1.
    pub d_max: u32,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig { audit: 3, m_max: 20, fp_points: 5, seed: 0, tau_log2: 40, d_max: 3 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no rational witness found for cell {0} at plan resolution")]
    NoRationalWitness(Index),
}

/// Realized per-cell interior samples for one CAD.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub config: PlanConfig,
    samples: BTreeMap<Index, Vec<Vec<Rat>>>,
}

impl SamplePlan {
    pub fn build(cad: &ConcreteCad, config: &PlanConfig) -> SamplePlan {
        let mut plan = SamplePlan { config: config.clone(), samples: BTreeMap::new() };
        let mut base: Vec<(Index, Vec<Vec<Rat>>)> = vec![(Index::root(), vec![vec![]])];
        for level in 1..=cad.dim {
            let mut next: Vec<(Index, Vec<Vec<Rat>>)> = vec![];
            for (base_index, base_samples) in &base {
                let child_count = 2 * cad.u_at(base_index).unwrap_or(0) + 1;
                for j in 1..=child_count {
                    let index = base_index.child(j);
                    let points = sample_cell(cad, &index, base_samples, config);
                    next.push((index, points));
                }
            }
            for (index, points) in &next {
                plan.samples.insert(index.clone(), points.clone());
            }
            if level < cad.dim {
                base = next;
            }
        }
        plan
    }

    pub fn samples(&self, index: &Index) -> &[Vec<Rat>] {
        self.samples.get(index).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Dyadic offset schedule 2^−m, m = 1..=m_max.
    pub fn offsets(&self) -> impl Iterator<Item = Rat> + '_ {
        (1..=self.config.m_max).map(|m| Rat::new(Int::one(), Int::one() << m as usize))
    }
}

use crate::algebra::Int;

/// First interior sample of a cell.
pub fn cell_sample(
    cad: &ConcreteCad,
    index: &Index,
    plan: &SamplePlan,
) -> Result<Vec<Rat>, PlanError> {
    let _ = cad;
    plan.samples(index)
        .first()
        .cloned()
        .ok_or_else(|| PlanError::NoRationalWitness(index.clone()))
}

/// Candidate pool shared by sampling and fingerprinting (in deterministic
/// order): grid of small rationals and Pythagorean fractions.
pub(crate) fn grid_values() -> Vec<Rat> {
    let pairs: &[(i64, i64)] = &[
        (0, 1),
        (1, 1),
        (-1, 1),
        (1, 2),
        (-1, 2),
        (3, 5),
        (-3, 5),
        (4, 5),
        (-4, 5),
        (3, 4),
        (-3, 4),
        (2, 1),
        (-2, 1),
        (1, 4),
        (-1, 4),
        (5, 13),
        (-5, 13),
        (12, 13),
        (-12, 13),
        (5, 4),
        (-5, 4),
        (3, 1),
        (-3, 1),
        (1, 3),
        (-1, 3),
        (2, 3),
        (-2, 3),
        (4, 3),
        (-4, 3),
        (8, 17),
        (15, 17),
        (5, 9),
        (4, 1),
        (-4, 1),
        (1, 8),
        (-1, 8),
        (5, 1),
        (-5, 1),
        (7, 25),
        (24, 25),
        (8, 1),
        (-8, 1),
    ];
    pairs.iter().map(|&(n, d)| Rat::new(n.into(), d.into())).collect()
}

/// True when every section expression of the cylinder over this cell
/// evaluates to a determinate value at the point (leaves trivially qualify).
fn decidable_above(cad: &ConcreteCad, index: &Index, point: &[Rat]) -> bool {
    if index.level() >= cad.dim {
        return true;
    }
    let node = match cad.node(index) {
        Some(n) => n,
        None => return false,
    };
    node.sections.iter().all(|e| matches!(eval(e, point), Ok(v) if !v.is_indeterminate()))
}

fn push_candidate(
    cad: &ConcreteCad,
    index: &Index,
    point: Vec<Rat>,
    preferred: &mut Vec<Vec<Rat>>,
    fallback: &mut Vec<Vec<Rat>>,
) {
    if preferred.contains(&point) || fallback.contains(&point) {
        return;
    }
    if decidable_above(cad, index, &point) {
        preferred.push(point);
    } else {
        fallback.push(point);
    }
}

fn sample_cell(
    cad: &ConcreteCad,
    index: &Index,
    base_samples: &[Vec<Rat>],
    config: &PlanConfig,
) -> Vec<Vec<Rat>> {
    let mut preferred: Vec<Vec<Rat>> = vec![];
    let mut fallback: Vec<Vec<Rat>> = vec![];
    let j = index.last();

    // straightforward extensions of the base samples, round-robin so that
    // the base spread survives into higher levels
    if j % 2 == 0 {
        for b in base_samples {
            if let Ok(ExtVal::Rat(v)) = cad.section_value_at(index, b) {
                let mut p = b.clone();
                p.push(v);
                push_candidate(cad, index, p, &mut preferred, &mut fallback);
            }
        }
    } else {
        let per_base: Vec<Vec<Rat>> = base_samples
            .iter()
            .map(|b| match cad.sector_bounds_at(index, b) {
                Ok((lo, hi)) => nice_between(lo.as_ref(), hi.as_ref(), config.audit),
                Err(_) => vec![],
            })
            .collect();
        let deepest = per_base.iter().map(|v| v.len()).max().unwrap_or(0);
        for round in 0..deepest {
            for (b, ys) in base_samples.iter().zip(&per_base) {
                if let Some(y) = ys.get(round) {
                    let mut p = b.clone();
                    p.push(y.clone());
                    push_candidate(cad, index, p, &mut preferred, &mut fallback);
                }
            }
        }
    }

    // grid mutations of the base samples, used when straightforward
    // extensions are missing or indeterminate (collapse-friendly witnesses)
    if preferred.len() < config.audit {
        let base_index = index.parent();
        let mut mutated_bases: Vec<Vec<Rat>> = vec![];
        for b in base_samples {
            for pos in (0..b.len()).rev() {
                for g in grid_values() {
                    if b[pos] == g {
                        continue;
                    }
                    let mut nb = b.clone();
                    nb[pos] = g;
                    if cad.cell_contains_point(&base_index, &nb) && !mutated_bases.contains(&nb) {
                        mutated_bases.push(nb);
                    }
                }
            }
        }
        for b in &mutated_bases {
            if preferred.len() >= config.audit {
                break;
            }
            if j % 2 == 0 {
                if let Ok(ExtVal::Rat(v)) = cad.section_value_at(index, b) {
                    let mut p = b.clone();
                    p.push(v);
                    push_candidate(cad, index, p, &mut preferred, &mut fallback);
                }
            } else if let Ok((lo, hi)) = cad.sector_bounds_at(index, b) {
                for y in nice_between(lo.as_ref(), hi.as_ref(), 2) {
                    let mut p = b.clone();
                    p.push(y);
                    push_candidate(cad, index, p, &mut preferred, &mut fallback);
                }
            }
        }
    }

    preferred.truncate(config.audit);
    if preferred.len() < config.audit {
        let missing = config.audit - preferred.len();
        preferred.extend(fallback.into_iter().take(missing));
    }
    preferred
}

/// Ordered list of rationals strictly between the bounds (either side may be
/// infinite); the first entry is the anchor used as the default witness.
pub(crate) fn nice_between(
    lo: Option<&ExtVal>,
    hi: Option<&ExtVal>,
    want: usize,
) -> Vec<Rat> {
    if let (Some(l), Some(h)) = (lo, hi) {
        if l.is_indeterminate()
            || h.is_indeterminate()
            || l.cmp_exact(h) != Some(Ordering::Less)
        {
            return vec![];
        }
    }
    if lo.map_or(false, |l| l.is_indeterminate()) || hi.map_or(false, |h| h.is_indeterminate()) {
        return vec![];
    }
    let inside = |q: &Rat| -> bool {
        let qv = ExtVal::Rat(q.clone());
        lo.map_or(true, |l| l.cmp_exact(&qv) == Some(Ordering::Less))
            && hi.map_or(true, |h| qv.cmp_exact(h) == Some(Ordering::Less))
    };
    let anchor = match (lo, hi) {
        (None, None) => Rat::zero(),
        (Some(l), None) => l.floor_rat() + Rat::one(),
        (None, Some(h)) => h.ceil_rat() - Rat::one(),
        (Some(l), Some(h)) => rat_between(l, h),
    };
    let mut out = vec![];
    let mut push = |q: Rat| {
        if inside(&q) && !out.contains(&q) {
            out.push(q);
        }
    };
    push(anchor.clone());
    for (n, d) in [(0i64, 1i64), (1, 1), (-1, 1), (2, 1), (-2, 1), (1, 2), (-1, 2), (4, 1), (-4, 1), (3, 1), (-3, 1)] {
        push(Rat::new(n.into(), d.into()));
    }
    if let (Some(l), Some(h)) = (lo, hi) {
        let a = ExtVal::Rat(anchor.clone());
        if inside(&anchor) {
            push(rat_between(l, &a));
            push(rat_between(&a, h));
        }
    }
    out.truncate(want.max(1) * 3);
    out
}

/// Some rational strictly between two exactly comparable values.
pub(crate) fn rat_between(lo: &ExtVal, hi: &ExtVal) -> Rat {
    debug_assert_eq!(lo.cmp_exact(hi), Some(Ordering::Less));
    if let (ExtVal::Rat(a), ExtVal::Rat(b)) = (lo, hi) {
        if a < &Rat::zero() && b > &Rat::zero() {
            return Rat::zero();
        }
        return (a + b) / Rat::from_integer(2.into());
    }
    let mut bits = 8;
    loop {
        let (_, lhi) = lo.interval(bits);
        let (rlo, _) = hi.interval(bits);
        if lhi < rlo {
            // prefer zero / integers in the separating gap
            let zero = Rat::zero();
            if lhi < zero && zero < rlo {
                return zero;
            }
            let c = lhi.ceil();
            if lhi < c && c < rlo {
                return c;
            }
            return (lhi + rlo) / Rat::from_integer(2.into());
        }
        bits *= 2;
    }
}

/// Where a cell's samples came out indeterminate everywhere, geometric
/// verdicts degrade; expose the reason for reports.
pub(crate) fn describe_point(point: &[Rat]) -> String {
    format!("({})", point.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "))
}

impl From<CadError> for PlanError {
    fn from(_: CadError) -> Self {
        PlanError::NoRationalWitness(Index::root())
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_cads::disk_coarse;
    use super::*;
    use crate::algebra::{rat, rat_int};

    #[test]
    fn line_cells_get_spread_samples() {
        let cad = disk_coarse();
        let plan = SamplePlan::build(&cad, &PlanConfig::default());
        // middle sector (−1, 1): anchor 0 plus the half points
        assert_eq!(plan.samples(&Index(vec![3]))[0], vec![rat_int(0)]);
        assert_eq!(plan.samples(&Index(vec![3])).len(), 3);
        // circle point cell {−1} is a section: its only sample is the point
        assert_eq!(plan.samples(&Index(vec![2])), &[vec![rat_int(-1)]]);
    }

    #[test]
    fn section_samples_use_collapse_grid() {
        let cad = disk_coarse();
        let plan = SamplePlan::build(&cad, &PlanConfig::default());
        // the upper semicircle section: √(1−x²) must be rational at every
        // sample, which forces Pythagorean x values beyond the midpoint
        let samples = plan.samples(&Index(vec![3, 4]));
        assert!(!samples.is_empty());
        for s in samples {
            let v = cad.section_value_at(&Index(vec![3, 4]), &s[..1]).unwrap();
            assert!(matches!(v, ExtVal::Rat(_)));
            assert_eq!(&s[1], v.as_rat().unwrap());
        }
        assert!(samples.len() >= 2, "expected collapse-grid witnesses, got {:?}", samples);
    }

    #[test]
    fn sector_samples_lie_inside() {
        let cad = disk_coarse();
        let plan = SamplePlan::build(&cad, &PlanConfig::default());
        for idx in cad.leaf_indices() {
            for s in plan.samples(&idx) {
                assert!(cad.cell_contains_point(&idx, s), "sample {:?} not in {}", s, idx);
            }
        }
    }

    #[test]
    fn unbounded_sector_anchors() {
        assert_eq!(
            nice_between(None, None, 3)[..3],
            [rat_int(0), rat_int(1), rat_int(-1)]
        );
        let zero = ExtVal::zero();
        let got = nice_between(Some(&zero), None, 3);
        assert_eq!(got[0], rat_int(1));
        assert!(got.contains(&rat_int(2)));
        let anchored = nice_between(Some(&ExtVal::from_int(-10)), None, 3);
        assert_eq!(anchored[0], rat_int(-9));
        assert!(anchored.contains(&rat_int(0)) && anchored.contains(&rat_int(1)));
    }

    #[test]
    fn bounded_sector_prefers_zero_then_halves() {
        let a = ExtVal::from_int(-1);
        let b = ExtVal::from_int(1);
        let got = nice_between(Some(&a), Some(&b), 3);
        assert_eq!(got[0], rat_int(0));
        assert!(got.contains(&rat(1, 2)) && got.contains(&rat(-1, 2)));
    }

    #[test]
    fn rational_between_radicals() {
        let sqrt2 = ExtVal::radical(rat(0, 1), rat(1, 1), rat_int(2));
        let sqrt3 = ExtVal::radical(rat(0, 1), rat(1, 1), rat_int(3));
        let q = rat_between(&sqrt2, &sqrt3);
        assert_eq!(
            ExtVal::Rat(q.clone()).cmp_exact(&sqrt2),
            Some(Ordering::Greater)
        );
        assert_eq!(ExtVal::Rat(q).cmp_exact(&sqrt3), Some(Ordering::Less));
    }
}

//! Dimension-one machinery: normalized semi-algebraic subsets of ℝ, their
//! boundaries, the exact minimum CAD of a 1-D family, fibers of predicates
//! over base points, and behaviours (the depth-1 tree of the fiber family's
//! minimum CAD). The minimum CAD of the line has sections exactly at the
//! union of the boundaries, independent of the regularity class.

mod fiber;

pub use fiber::{fiber, FiberError};

use crate::algebra::ExtVal;
use crate::cad::{CadNode, ConcreteCad, Family, Index, PlanConfig, RegClass, SamplePlan};
use crate::exec;
use crate::tree::{CadTree, Label, TreeNode};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum Endpoint {
    NegInf,
    Val(ExtVal),
    PosInf,
}

impl Endpoint {
    fn cmp_endpoints(&self, other: &Endpoint) -> Option<Ordering> {
        use Endpoint::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (_, NegInf) | (PosInf, _) => Some(Ordering::Greater),
            (Val(a), Val(b)) => a.cmp_exact(b),
        }
    }
}

/// One maximal connected piece: an interval with open/closed finite ends, a
/// single point being the degenerate closed case.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub lo: Endpoint,
    pub lo_closed: bool,
    pub hi: Endpoint,
    pub hi_closed: bool,
}

impl Piece {
    pub fn point(v: ExtVal) -> Piece {
        Piece { lo: Endpoint::Val(v.clone()), lo_closed: true, hi: Endpoint::Val(v), hi_closed: true }
    }

    pub fn full_line() -> Piece {
        Piece { lo: Endpoint::NegInf, lo_closed: false, hi: Endpoint::PosInf, hi_closed: false }
    }

    pub fn is_point(&self) -> bool {
        matches!((&self.lo, &self.hi), (Endpoint::Val(a), Endpoint::Val(b)) if a == b)
    }
}

/// Normalized finite union of disjoint, non-adjacent pieces, sorted.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SaSet1D {
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Error, PartialEq)]
pub enum Set1DError {
    #[error("endpoints are not exactly comparable")]
    IncomparableEndpoints,
    #[error("piece has empty interior and open ends")]
    EmptyPiece,
}

/// Sorts, merges overlapping and compatibly adjacent pieces, absorbs
/// endpoint points; idempotent.
pub fn normalize_1d(raw: Vec<Piece>) -> Result<SaSet1D, Set1DError> {
    let mut pieces = vec![];
    for p in raw {
        match p.lo.cmp_endpoints(&p.hi) {
            None => return Err(Set1DError::IncomparableEndpoints),
            Some(Ordering::Greater) => return Err(Set1DError::EmptyPiece),
            Some(Ordering::Equal) => {
                if !(p.lo_closed && p.hi_closed) {
                    return Err(Set1DError::EmptyPiece);
                }
                pieces.push(p);
            }
            Some(Ordering::Less) => pieces.push(p),
        }
    }
    for w in pieces.windows(2) {
        if w[0].lo.cmp_endpoints(&w[1].lo).is_none() {
            return Err(Set1DError::IncomparableEndpoints);
        }
    }
    pieces.sort_by(|a, b| {
        a.lo.cmp_endpoints(&b.lo)
            .unwrap_or(Ordering::Equal)
            .then_with(|| b.lo_closed.cmp(&a.lo_closed))
    });

    let mut out: Vec<Piece> = vec![];
    for p in pieces {
        match out.last_mut() {
            None => out.push(p),
            Some(last) => {
                let gap = last.hi.cmp_endpoints(&p.lo).ok_or(Set1DError::IncomparableEndpoints)?;
                let mergeable = match gap {
                    Ordering::Greater => true,
                    Ordering::Equal => last.hi_closed || p.lo_closed,
                    Ordering::Less => false,
                };
                if mergeable {
                    let keep = last.hi.cmp_endpoints(&p.hi).ok_or(Set1DError::IncomparableEndpoints)?;
                    match keep {
                        Ordering::Less => {
                            last.hi = p.hi;
                            last.hi_closed = p.hi_closed;
                        }
                        Ordering::Equal => last.hi_closed |= p.hi_closed,
                        Ordering::Greater => {}
                    }
                } else {
                    out.push(p);
                }
            }
        }
    }
    Ok(SaSet1D { pieces: out })
}

impl SaSet1D {
    pub fn empty() -> SaSet1D {
        SaSet1D { pieces: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Topological boundary of the union in ℝ: exactly the finite endpoints
    /// of the normalized pieces.
    pub fn boundary(&self) -> Vec<ExtVal> {
        let mut out: Vec<ExtVal> = vec![];
        for p in &self.pieces {
            for e in [&p.lo, &p.hi] {
                if let Endpoint::Val(v) = e {
                    if !out.iter().any(|x| x.cmp_exact(v) == Some(Ordering::Equal)) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out.sort_by(|a, b| a.cmp_exact(b).expect("boundary values comparable"));
        out
    }

    pub fn contains_value(&self, v: &ExtVal) -> bool {
        for p in &self.pieces {
            let lo_ok = match p.lo.cmp_endpoints(&Endpoint::Val(v.clone())) {
                Some(Ordering::Less) => true,
                Some(Ordering::Equal) => p.lo_closed,
                _ => false,
            };
            let hi_ok = match Endpoint::Val(v.clone()).cmp_endpoints(&p.hi) {
                Some(Ordering::Less) => true,
                Some(Ordering::Equal) => p.hi_closed,
                _ => false,
            };
            if lo_ok && hi_ok {
                return true;
            }
        }
        false
    }

    /// Complement, again a normalized 1-D set.
    pub fn complement(&self) -> SaSet1D {
        let mut pieces = vec![];
        let mut lo = Endpoint::NegInf;
        let mut lo_closed = false;
        for p in &self.pieces {
            if lo.cmp_endpoints(&p.lo) == Some(Ordering::Less) {
                pieces.push(Piece {
                    lo: lo.clone(),
                    lo_closed,
                    hi: p.lo.clone(),
                    hi_closed: !p.lo_closed,
                });
            }
            lo = p.hi.clone();
            lo_closed = !p.hi_closed;
        }
        if lo.cmp_endpoints(&Endpoint::PosInf) == Some(Ordering::Less) {
            pieces.push(Piece { lo, lo_closed, hi: Endpoint::PosInf, hi_closed: false });
        }
        normalize_1d(pieces).expect("complement of a normalized set normalizes")
    }
}

impl fmt::Display for SaSet1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "empty");
        }
        let fmt_ep = |e: &Endpoint| match e {
            Endpoint::NegInf => "-inf".to_string(),
            Endpoint::PosInf => "+inf".to_string(),
            Endpoint::Val(v) => crate::algebra::Expr::from_extval(v)
                .map(|e| e.to_string())
                .unwrap_or_else(|| "?".into()),
        };
        let parts: Vec<String> = self
            .pieces
            .iter()
            .map(|p| {
                if p.is_point() {
                    format!("{{{}}}", fmt_ep(&p.lo))
                } else {
                    format!(
                        "{}{},{}{}",
                        if p.lo_closed { "[" } else { "(" },
                        fmt_ep(&p.lo),
                        fmt_ep(&p.hi),
                        if p.hi_closed { "]" } else { ")" }
                    )
                }
            })
            .collect();
        write!(f, "{}", parts.join(" u "))
    }
}

/// Parses the textual form `[-2,0) u {1}`, `(0,+inf)`, `empty`.
pub fn parse_1d(text: &str) -> Result<SaSet1D, String> {
    let text = text.trim();
    if text == "empty" {
        return Ok(SaSet1D::empty());
    }
    let mut pieces = vec![];
    for part in text.split(" u ") {
        let part = part.trim();
        if let Some(inner) = part.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            let v = crate::cad::parse_extval(inner.trim()).map_err(|e| e.to_string())?;
            pieces.push(Piece::point(v));
            continue;
        }
        let lo_closed = part.starts_with('[');
        let hi_closed = part.ends_with(']');
        if !(part.starts_with('[') || part.starts_with('(')) || !(part.ends_with(']') || part.ends_with(')')) {
            return Err(format!("bad piece `{}`", part));
        }
        let inner = &part[1..part.len() - 1];
        let (lo_text, hi_text) =
            inner.split_once(',').ok_or_else(|| format!("piece `{}` needs a comma", part))?;
        let parse_ep = |t: &str| -> Result<Endpoint, String> {
            let t = t.trim();
            match t {
                "-inf" => Ok(Endpoint::NegInf),
                "+inf" | "inf" => Ok(Endpoint::PosInf),
                _ => Ok(Endpoint::Val(crate::cad::parse_extval(t).map_err(|e| e.to_string())?)),
            }
        };
        pieces.push(Piece {
            lo: parse_ep(lo_text)?,
            lo_closed,
            hi: parse_ep(hi_text)?,
            hi_closed,
        });
    }
    normalize_1d(pieces).map_err(|e| e.to_string())
}

/// The behaviour of a family above a point: the depth-1 CAD tree of the
/// minimum CAD adapted to the fibers, in flat label-list form.
pub type Behaviour = Vec<Label>;

/// The minimum CAD of ℝ adapted to a family of 1-D sets: sections exactly at
/// the union of boundaries, plus the labelled tree.
pub fn minimum_cad_1d(fams: &[SaSet1D]) -> (ConcreteCad, CadTree) {
    let mut sections: Vec<ExtVal> = vec![];
    for s in fams {
        for b in s.boundary() {
            if !sections.iter().any(|x| x.cmp_exact(&b) == Some(Ordering::Equal)) {
                sections.push(b);
            }
        }
    }
    sections.sort_by(|a, b| a.cmp_exact(b).expect("boundaries comparable"));

    let cad = ConcreteCad {
        dim: 1,
        class: RegClass::Finite(0),
        level1: sections.clone(),
        top: vec![CadNode::leaf(); 2 * sections.len() + 1],
    };

    let mut leaves = vec![];
    for j in 1..=2 * sections.len() + 1 {
        let label: Label = if j % 2 == 0 {
            let v = &sections[j / 2 - 1];
            fams.iter().map(|s| s.contains_value(v)).collect()
        } else {
            let m = (j - 1) / 2;
            let lo = if m == 0 { None } else { Some(&sections[m - 1]) };
            let hi = sections.get(m);
            let lo_ep = lo.map(|v| Endpoint::Val(v.clone())).unwrap_or(Endpoint::NegInf);
            let hi_ep = hi.map(|v| Endpoint::Val(v.clone())).unwrap_or(Endpoint::PosInf);
            let sample = sector_witness(&lo_ep, &hi_ep);
            fams.iter().map(|s| s.contains_value(&sample)).collect()
        };
        leaves.push(TreeNode::leaf(label));
    }
    let tree = CadTree { depth: 1, width: fams.len(), root: TreeNode::internal(leaves) };
    (cad, tree)
}

pub(crate) fn sector_witness(lo: &Endpoint, hi: &Endpoint) -> ExtVal {
    let q = match (lo, hi) {
        (Endpoint::NegInf, Endpoint::PosInf) => crate::algebra::rat_int(0),
        (Endpoint::Val(a), Endpoint::PosInf) => a.floor_rat() + crate::algebra::rat_int(1),
        (Endpoint::NegInf, Endpoint::Val(b)) => b.ceil_rat() - crate::algebra::rat_int(1),
        (Endpoint::Val(a), Endpoint::Val(b)) => crate::cad::plan_rat_between(a, b),
        _ => unreachable!("empty sector"),
    };
    ExtVal::Rat(q)
}

/// Flat behaviour of the family above a base point.
pub fn behaviour(fam: &Family, x: &[crate::algebra::Rat]) -> Result<Behaviour, FiberError> {
    let mut fibers = vec![];
    for (_, pred) in &fam.sets {
        fibers.push(fiber(pred, x)?);
    }
    let (_, tree) = minimum_cad_1d(&fibers);
    Ok(tree.leaves().into_iter().map(|(_, l)| l).collect())
}

#[derive(Debug, Error)]
pub enum BehaviourError {
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error("base cell {0} has no rational sample")]
    NoSample(Index),
}

/// Behaviour classes over the cells of a base CAD of ℝ^{n−1}, plus the
/// cells whose samples disagree (such a base cannot be the projection of an
/// adapted CAD).
pub struct BehaviourPartition {
    pub classes: BTreeMap<Behaviour, Vec<Index>>,
    pub violations: Vec<Index>,
}

pub fn behaviour_partition(
    fam: &Family,
    base: &ConcreteCad,
    config: &PlanConfig,
) -> Result<BehaviourPartition, BehaviourError> {
    let plan = SamplePlan::build(base, config);
    let cells = base.leaf_indices();
    let per_cell: Vec<Result<Option<Behaviour>, BehaviourError>> =
        exec::map_slice(&cells, |index| {
            let samples = plan.samples(index);
            if samples.is_empty() {
                return Err(BehaviourError::NoSample(index.clone()));
            }
            let mut agreed: Option<Behaviour> = None;
            for s in samples {
                let b = behaviour(fam, s)?;
                match &agreed {
                    None => agreed = Some(b),
                    Some(prev) if *prev != b => return Ok(None),
                    _ => {}
                }
            }
            Ok(agreed)
        });

    let mut classes: BTreeMap<Behaviour, Vec<Index>> = BTreeMap::new();
    let mut violations = vec![];
    for (index, result) in cells.into_iter().zip(per_cell) {
        match result? {
            Some(b) => classes.entry(b).or_default().push(index),
            None => violations.push(index),
        }
    }
    Ok(BehaviourPartition { classes, violations })
}

/// Prints a behaviour as a tuple list, e.g. `((0,1),(1,1))`.
pub fn behaviour_text(b: &Behaviour) -> String {
    let tuples: Vec<String> = b
        .iter()
        .map(|label| {
            let bits: Vec<String> =
                label.iter().map(|&x| if x { "1".into() } else { "0".to_string() }).collect();
            format!("({})", bits.join(","))
        })
        .collect();
    format!("({})", tuples.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, rat_int, Expr, Rel, SaPredicate};

    fn pt(v: i64) -> ExtVal {
        ExtVal::from_int(v)
    }

    fn interval(lo: i64, lo_c: bool, hi: i64, hi_c: bool) -> Piece {
        Piece {
            lo: Endpoint::Val(pt(lo)),
            lo_closed: lo_c,
            hi: Endpoint::Val(pt(hi)),
            hi_closed: hi_c,
        }
    }

    #[test]
    fn normalization_examples() {
        let s = normalize_1d(vec![interval(-2, true, 0, false), Piece::point(pt(1))]).unwrap();
        assert_eq!(s.pieces.len(), 2);
        assert_eq!(s.to_string(), "[-2,0) u {1}");

        let s = normalize_1d(vec![interval(0, false, 1, true), interval(1, true, 2, false)]).unwrap();
        assert_eq!(s.to_string(), "(0,2)");

        // {√2} absorbed into (1, √2)
        let sqrt2 = ExtVal::radical(rat(0, 1), rat(1, 1), rat_int(2));
        let s = normalize_1d(vec![
            Piece::point(sqrt2.clone()),
            Piece {
                lo: Endpoint::Val(pt(1)),
                lo_closed: false,
                hi: Endpoint::Val(sqrt2),
                hi_closed: false,
            },
        ])
        .unwrap();
        assert_eq!(s.pieces.len(), 1);
        assert!(s.pieces[0].hi_closed);

        let again = normalize_1d(s.pieces.clone()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn boundary_examples() {
        let s = normalize_1d(vec![interval(-2, true, 0, false), Piece::point(pt(1))]).unwrap();
        assert_eq!(s.boundary(), vec![pt(-2), pt(0), pt(1)]);
        let line = normalize_1d(vec![Piece::full_line()]).unwrap();
        assert!(line.boundary().is_empty());
        let ray = normalize_1d(vec![Piece {
            lo: Endpoint::Val(pt(0)),
            lo_closed: false,
            hi: Endpoint::PosInf,
            hi_closed: false,
        }])
        .unwrap();
        assert_eq!(ray.boundary(), vec![pt(0)]);
    }

    #[test]
    fn complement_shares_the_boundary() {
        let s = normalize_1d(vec![interval(-2, true, 0, false), Piece::point(pt(1))]).unwrap();
        let c = s.complement();
        assert_eq!(c.boundary(), s.boundary());
        assert!(!c.contains_value(&pt(-2)));
        assert!(c.contains_value(&pt(0)));
        assert!(!c.contains_value(&pt(1)));
    }

    #[test]
    fn minimum_cad_matches_the_worked_family() {
        let s1 = normalize_1d(vec![interval(-2, true, 0, false), Piece::point(pt(1))]).unwrap();
        let s2 = normalize_1d(vec![Piece {
            lo: Endpoint::Val(pt(0)),
            lo_closed: true,
            hi: Endpoint::PosInf,
            hi_closed: false,
        }])
        .unwrap();
        let (cad, tree) = minimum_cad_1d(&[s1, s2]);
        assert_eq!(cad.level1, vec![pt(-2), pt(0), pt(1)]);
        let labels: Vec<Label> = tree.leaves().into_iter().map(|(_, l)| l).collect();
        let expected: Vec<Label> = vec![
            vec![false, false],
            vec![true, false],
            vec![true, false],
            vec![false, true],
            vec![false, true],
            vec![true, true],
            vec![false, true],
        ];
        assert_eq!(labels, expected);
    }

    #[test]
    fn empty_family_gives_the_trivial_cell() {
        let (cad, tree) = minimum_cad_1d(&[SaSet1D::empty()]);
        assert_eq!(cad.leaf_count(), 1);
        assert_eq!(tree.leaves()[0].1, vec![false]);
    }

    #[test]
    fn half_open_family() {
        let s = normalize_1d(vec![interval(-1, true, 1, false)]).unwrap();
        let (cad, tree) = minimum_cad_1d(&[s]);
        assert_eq!(cad.level1, vec![pt(-1), pt(1)]);
        let labels: Vec<Label> = tree.leaves().into_iter().map(|(_, l)| l).collect();
        assert_eq!(
            labels,
            vec![vec![false], vec![true], vec![true], vec![false], vec![false]]
        );
    }

    #[test]
    fn parse_print_round_trip() {
        for text in ["[-2,0) u {1}", "(0,2)", "empty", "(-inf,+inf)", "(-inf,0]", "{-1/2}"] {
            let s = parse_1d(text).unwrap();
            assert_eq!(s.to_string(), text);
        }
    }

    fn halfplane_minus_origin() -> Family {
        let pred = SaPredicate::atom(Expr::var(2), Rel::Ge, Expr::int(0)).and(
            SaPredicate::Not(Box::new(
                SaPredicate::atom(Expr::var(1), Rel::Eq, Expr::int(0))
                    .and(SaPredicate::atom(Expr::var(2), Rel::Eq, Expr::int(0))),
            )),
        );
        Family::single("S", pred)
    }

    #[test]
    fn behaviours_of_the_punctured_halfplane() {
        let fam = halfplane_minus_origin();
        assert_eq!(
            behaviour(&fam, &[rat_int(1)]).unwrap(),
            vec![vec![false], vec![true], vec![true]]
        );
        assert_eq!(
            behaviour(&fam, &[rat_int(0)]).unwrap(),
            vec![vec![false], vec![false], vec![true]]
        );
    }

    #[test]
    fn behaviour_partition_over_three_cells() {
        let fam = halfplane_minus_origin();
        let base = ConcreteCad {
            dim: 1,
            class: RegClass::Finite(0),
            level1: vec![pt(0)],
            top: vec![CadNode::leaf(); 3],
        };
        let part = behaviour_partition(&fam, &base, &PlanConfig::default()).unwrap();
        assert!(part.violations.is_empty());
        assert_eq!(part.classes.len(), 2);
        let away: Behaviour = vec![vec![false], vec![true], vec![true]];
        let origin: Behaviour = vec![vec![false], vec![false], vec![true]];
        assert_eq!(part.classes[&away], vec![Index(vec![1]), Index(vec![3])]);
        assert_eq!(part.classes[&origin], vec![Index(vec![2])]);
    }

    #[test]
    fn constancy_violation_on_the_trivial_base() {
        let fam = halfplane_minus_origin();
        let base = ConcreteCad::trivial_line();
        let part = behaviour_partition(&fam, &base, &PlanConfig::default()).unwrap();
        assert_eq!(part.violations, vec![Index(vec![1])]);
    }
}

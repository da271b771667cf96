//! Tree extraction: per-leaf-cell membership bits for a family, with audit
//! agreement across every sample of a cell.

use super::{ConcreteCad, Family, Index, SamplePlan};
use crate::algebra::{contains, contains_ext, ExtVal, PredError};
use crate::tree::{CadTree, Label, TreeNode};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("cell {cell} has samples disagreeing on set {set}: not adapted")]
    AdaptednessViolation { cell: Index, set: String },
    #[error("cell {cell} has no decidable sample")]
    NoDecidableSample { cell: Index },
    #[error("membership undecidable on cell {cell}: {source}")]
    Undecidable {
        cell: Index,
        #[source]
        source: PredError,
    },
    #[error("family references axis {axis} beyond dimension {dim}")]
    ArityMismatch { axis: usize, dim: usize },
}

/// Membership bits of one leaf cell, audited across all its samples.
fn leaf_label(
    cad: &ConcreteCad,
    fam: &Family,
    plan: &SamplePlan,
    index: &Index,
) -> Result<Label, BuildError> {
    // witness points: rational samples for sectors; for sections the base
    // samples paired with the exact section value (possibly irrational)
    let mut labels: Vec<Label> = vec![];
    if index.is_even() {
        let base = index.parent();
        let base_samples: Vec<Vec<crate::algebra::Rat>> =
            if base.level() == 0 { vec![vec![]] } else { plan.samples(&base).to_vec() };
        for b in &base_samples {
            let value = match cad.section_value_at(index, b) {
                Ok(v) if !v.is_indeterminate() => v,
                _ => continue,
            };
            let mut bits = Vec::with_capacity(fam.width());
            let mut ok = true;
            for (name, pred) in &fam.sets {
                let res = match &value {
                    ExtVal::Rat(r) => {
                        let mut p = b.clone();
                        p.push(r.clone());
                        contains(pred, &p)
                    }
                    v => contains_ext(pred, b, v),
                };
                match res {
                    Ok(bit) => bits.push(bit),
                    Err(e) => {
                        // try another sample before giving up
                        let _ = (name, e);
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                labels.push(bits);
            }
        }
    } else {
        for s in plan.samples(index) {
            let mut bits = Vec::with_capacity(fam.width());
            let mut ok = true;
            for (_, pred) in &fam.sets {
                match contains(pred, s) {
                    Ok(bit) => bits.push(bit),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                labels.push(bits);
            }
        }
    }

    let first = labels.first().ok_or_else(|| BuildError::NoDecidableSample { cell: index.clone() })?;
    for other in &labels[1..] {
        if other != first {
            let set = (0..fam.width())
                .find(|&i| other[i] != first[i])
                .map(|i| fam.sets[i].0.clone())
                .unwrap_or_default();
            return Err(BuildError::AdaptednessViolation { cell: index.clone(), set });
        }
    }
    Ok(first.clone())
}

/// The CAD tree of `(cad, fam)`: skeleton mirrors the u-counts, leaf bit i
/// records membership of the cell in the i-th set.
pub fn build_tree(cad: &ConcreteCad, fam: &Family, plan: &SamplePlan) -> Result<CadTree, BuildError> {
    if fam.max_axis() > cad.dim {
        return Err(BuildError::ArityMismatch { axis: fam.max_axis(), dim: cad.dim });
    }

    fn walk(
        cad: &ConcreteCad,
        fam: &Family,
        plan: &SamplePlan,
        index: &Index,
        level: usize,
    ) -> Result<TreeNode, BuildError> {
        if level == cad.dim {
            return Ok(TreeNode::leaf(leaf_label(cad, fam, plan, index)?));
        }
        let count = 2 * cad.u_at(index).unwrap_or(0) + 1;
        let mut children = Vec::with_capacity(count);
        for j in 1..=count {
            children.push(walk(cad, fam, plan, &index.child(j), level + 1)?);
        }
        Ok(TreeNode::internal(children))
    }

    let root = walk(cad, fam, plan, &Index::root(), 0)?;
    Ok(CadTree { depth: cad.dim, width: fam.width(), root })
}

#[cfg(test)]
mod tests {
    use super::super::test_cads::{disk_coarse, unit_disk_family};
    use super::super::PlanConfig;
    use super::*;
    use crate::tree::validate_tree;

    #[test]
    fn disk_membership_tree() {
        let cad = disk_coarse();
        let fam = unit_disk_family();
        let plan = SamplePlan::build(&cad, &PlanConfig::default());
        let tree = build_tree(&cad, &fam, &plan).unwrap();
        assert_eq!(tree.leaf_count(), 13);
        assert!(validate_tree(&tree).is_clean());
        let ones: Vec<Index> = tree
            .leaves()
            .into_iter()
            .filter(|(_, l)| l[0])
            .map(|(i, _)| i)
            .collect();
        let expected: Vec<Index> = [
            vec![2usize, 2],
            vec![3, 2],
            vec![3, 3],
            vec![3, 4],
            vec![4, 2],
        ]
        .iter()
        .map(|v| Index(v.clone()))
        .collect();
        assert_eq!(ones, expected);
    }

    #[test]
    fn complement_flips_every_bit() {
        let cad = disk_coarse();
        let fam = unit_disk_family();
        let plan = SamplePlan::build(&cad, &PlanConfig::default());
        let both = Family::new(
            fam.sets
                .iter()
                .cloned()
                .chain(fam.complemented().sets.iter().cloned())
                .collect(),
        );
        let tree = build_tree(&cad, &both, &plan).unwrap();
        for (_, label) in tree.leaves() {
            assert_eq!(label[0], !label[1]);
        }
    }

    #[test]
    fn audit_catches_non_adapted_family() {
        // the half-plane x ≥ 0 is not a union of cells of the disk CAD:
        // its middle sector straddles the boundary
        let cad = disk_coarse();
        let plan = SamplePlan::build(&cad, &PlanConfig::default());
        let fam = Family::single(
            "halfplane",
            crate::algebra::SaPredicate::atom(
                crate::algebra::Expr::var(1),
                crate::algebra::Rel::Ge,
                crate::algebra::Expr::int(0),
            ),
        );
        let err = build_tree(&cad, &fam, &plan).unwrap_err();
        assert!(matches!(err, BuildError::AdaptednessViolation { .. }), "got {err:?}");
    }
}

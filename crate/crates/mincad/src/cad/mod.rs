//! Concrete geometric CAD model: level-by-level section data, cell indexing,
//! sampling, adaptedness checking, tree extraction, projection and cylinder
//! construction, and the CADSPEC document format.

mod build;
mod format;
mod plan;
mod structure;

pub use build::{build_tree, BuildError};
pub use format::{
    parse_document, parse_expr, parse_extval, parse_pred, print_cad, print_document, CadDocument,
    ParseError,
};
pub use plan::{cell_sample, PlanConfig, PlanError, SamplePlan};
pub use structure::{check_cad_structure, StructureIssue, StructureReport};
pub(crate) use plan::nice_between as plan_nice_between;
pub(crate) use plan::rat_between as plan_rat_between;

use crate::algebra::{eval, EvalError, Expr, ExtVal, Rat, SaPredicate};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Cell name: tuple of positive integers, one entry per level. Even last
/// entry = section, odd = sector.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index(pub Vec<usize>);

impl Index {
    pub fn root() -> Index {
        Index(vec![])
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("root index has no last entry")
    }

    pub fn is_even(&self) -> bool {
        self.level() > 0 && self.last() % 2 == 0
    }

    /// First k entries (identity when the tuple is shorter).
    pub fn prefix(&self, k: usize) -> Index {
        if self.0.len() <= k {
            self.clone()
        } else {
            Index(self.0[..k].to_vec())
        }
    }

    pub fn parent(&self) -> Index {
        self.prefix(self.level().saturating_sub(1))
    }

    pub fn child(&self, j: usize) -> Index {
        let mut v = self.0.clone();
        v.push(j);
        Index(v)
    }

    pub fn parse(text: &str) -> Option<Index> {
        let entries: Option<Vec<usize>> =
            text.split('.').map(|p| p.trim().parse::<usize>().ok().filter(|&e| e >= 1)).collect();
        entries.map(Index)
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Regularity class metadata: C^r with r finite, C^∞, or C^ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegClass {
    Finite(u32),
    Infinity,
    Omega,
}

impl fmt::Display for RegClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegClass::Finite(r) => write!(f, "{}", r),
            RegClass::Infinity => write!(f, "inf"),
            RegClass::Omega => write!(f, "omega"),
        }
    }
}

/// Per-cell data at levels 1..n−1: the ordered section expressions over the
/// cell and the child cells of the cylinder above it. Nodes at level n are
/// leaves with no data.
#[derive(Clone, Debug, PartialEq)]
pub struct CadNode {
    pub sections: Vec<Expr>,
    pub children: Vec<CadNode>,
}

impl CadNode {
    pub fn leaf() -> CadNode {
        CadNode { sections: vec![], children: vec![] }
    }

    /// Cylinder node over the given sections.
    pub fn over(sections: Vec<Expr>, children: Vec<CadNode>) -> CadNode {
        assert_eq!(children.len(), 2 * sections.len() + 1);
        CadNode { sections, children }
    }

    pub fn u(&self) -> usize {
        self.sections.len()
    }
}

/// Level-by-level geometric CAD of ℝⁿ: exact section values on the first
/// level, section expressions above.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcreteCad {
    pub dim: usize,
    pub class: RegClass,
    pub level1: Vec<ExtVal>,
    pub top: Vec<CadNode>,
}

#[derive(Debug, Error)]
pub enum CadError {
    #[error("level {0} out of range 1..={1}")]
    BadLevel(usize, usize),
    #[error("index {0} does not name a cell")]
    BadIndex(Index),
    #[error("index {0} is not a sector at a refinable level")]
    NotASector(Index),
    #[error("section value out of range at sample {sample}: {detail}")]
    SectionOutOfRange { sample: String, detail: String },
    #[error("expression error: {0}")]
    Eval(#[from] EvalError),
}

impl ConcreteCad {
    /// The one-cell CAD of ℝ.
    pub fn trivial_line() -> ConcreteCad {
        ConcreteCad {
            dim: 1,
            class: RegClass::Finite(0),
            level1: vec![],
            top: vec![CadNode::leaf()],
        }
    }

    pub fn node(&self, index: &Index) -> Option<&CadNode> {
        let mut entries = index.0.iter();
        let first = entries.next()?;
        let mut node = self.top.get(first - 1)?;
        for &j in entries {
            node = node.children.get(j - 1)?;
        }
        Some(node)
    }

    pub(crate) fn node_at_mut(&mut self, index: &Index) -> Option<&mut CadNode> {
        let mut entries = index.0.iter();
        let first = entries.next()?;
        let mut node = self.top.get_mut(first - 1)?;
        for &j in entries {
            node = node.children.get_mut(j - 1)?;
        }
        Some(node)
    }

    pub fn is_valid_index(&self, index: &Index) -> bool {
        index.level() <= self.dim && (index.level() == 0 || self.node(index).is_some())
    }

    /// Section count of the cylinder over a cell (level < dim); the root
    /// counts the level-1 sections.
    pub fn u_at(&self, index: &Index) -> Option<usize> {
        if index.level() == 0 {
            return Some(self.level1.len());
        }
        if index.level() >= self.dim {
            return None;
        }
        self.node(index).map(|n| n.u())
    }

    /// All cell indices at a level, in lexicographic order.
    pub fn cells_at_level(&self, level: usize) -> Vec<Index> {
        assert!(level >= 1 && level <= self.dim);
        let mut frontier: Vec<Index> = (1..=self.top.len()).map(|i| Index(vec![i])).collect();
        for _ in 1..level {
            let mut next = vec![];
            for idx in frontier {
                let node = self.node(&idx).unwrap();
                for j in 1..=node.children.len() {
                    next.push(idx.child(j));
                }
            }
            frontier = next;
        }
        frontier
    }

    pub fn leaf_indices(&self) -> Vec<Index> {
        self.cells_at_level(self.dim)
    }

    pub fn leaf_count(&self) -> usize {
        fn count(node: &CadNode, depth: usize) -> usize {
            if depth == 0 {
                1
            } else {
                node.children.iter().map(|c| count(c, depth - 1)).sum()
            }
        }
        self.top.iter().map(|n| count(n, self.dim - 1)).sum()
    }

    /// Exact value of the section cell `index` over `base_point` (the first
    /// `level−1` coordinates).
    pub fn section_value_at(&self, index: &Index, base_point: &[Rat]) -> Result<ExtVal, CadError> {
        let k = index.level();
        let j = index.last();
        if j % 2 != 0 {
            return Err(CadError::BadIndex(index.clone()));
        }
        if k == 1 {
            return self
                .level1
                .get(j / 2 - 1)
                .cloned()
                .ok_or_else(|| CadError::BadIndex(index.clone()));
        }
        let parent = self.node(&index.parent()).ok_or_else(|| CadError::BadIndex(index.clone()))?;
        let expr =
            parent.sections.get(j / 2 - 1).ok_or_else(|| CadError::BadIndex(index.clone()))?;
        Ok(eval(expr, base_point)?)
    }

    /// The expression (or exact value lifted to an expression) of a section
    /// cell.
    pub fn section_expr(&self, index: &Index) -> Option<Expr> {
        let k = index.level();
        let j = index.last();
        if j % 2 != 0 {
            return None;
        }
        if k == 1 {
            return Expr::from_extval(self.level1.get(j / 2 - 1)?);
        }
        self.node(&index.parent())?.sections.get(j / 2 - 1).cloned()
    }

    /// Bounding section values of a sector cell at `base_point`; `None`
    /// means the corresponding side is infinite.
    pub fn sector_bounds_at(
        &self,
        index: &Index,
        base_point: &[Rat],
    ) -> Result<(Option<ExtVal>, Option<ExtVal>), CadError> {
        let k = index.level();
        let j = index.last();
        if j % 2 == 0 {
            return Err(CadError::BadIndex(index.clone()));
        }
        let m = (j - 1) / 2; // number of sections below this sector
        let values: Vec<ExtVal> = if k == 1 {
            self.level1.clone()
        } else {
            let parent =
                self.node(&index.parent()).ok_or_else(|| CadError::BadIndex(index.clone()))?;
            let mut vals = Vec::with_capacity(parent.sections.len());
            for e in &parent.sections {
                vals.push(eval(e, base_point)?);
            }
            vals
        };
        let lo = if m == 0 { None } else { values.get(m - 1).cloned() };
        let hi = values.get(m).cloned();
        Ok((lo, hi))
    }

    /// Exact membership of a rational point in cell `index`: every level's
    /// coordinate must sit correctly relative to the bounding sections.
    pub fn cell_contains_point(&self, index: &Index, point: &[Rat]) -> bool {
        if point.len() < index.level() {
            return false;
        }
        for k in 1..=index.level() {
            let sub = index.prefix(k);
            let coord = ExtVal::Rat(point[k - 1].clone());
            if sub.is_even() {
                match self.section_value_at(&sub, &point[..k - 1]) {
                    Ok(v) => {
                        if v.is_indeterminate() || v.cmp_exact(&coord) != Some(Ordering::Equal) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            } else {
                match self.sector_bounds_at(&sub, &point[..k - 1]) {
                    Ok((lo, hi)) => {
                        if let Some(lo) = lo {
                            if lo.is_indeterminate() || lo.cmp_exact(&coord) != Some(Ordering::Less)
                            {
                                return false;
                            }
                        }
                        if let Some(hi) = hi {
                            if hi.is_indeterminate()
                                || hi.cmp_exact(&coord) != Some(Ordering::Greater)
                            {
                                return false;
                            }
                        }
                    }
                    Err(_) => return false,
                }
            }
        }
        true
    }

    /// Truncation to the first k levels.
    pub fn project(&self, k: usize) -> Result<ConcreteCad, CadError> {
        if k < 1 || k > self.dim {
            return Err(CadError::BadLevel(k, self.dim));
        }
        fn truncate(node: &CadNode, levels_left: usize) -> CadNode {
            if levels_left == 0 {
                CadNode::leaf()
            } else {
                CadNode {
                    sections: node.sections.clone(),
                    children: node.children.iter().map(|c| truncate(c, levels_left - 1)).collect(),
                }
            }
        }
        Ok(ConcreteCad {
            dim: k,
            class: self.class,
            level1: self.level1.clone(),
            top: self.top.iter().map(|n| truncate(n, k - 1)).collect(),
        })
    }

    /// The cylinder D × ℝ: one new full-line sector above every leaf.
    pub fn cylinder_product(&self) -> ConcreteCad {
        fn extend(node: &CadNode, depth: usize) -> CadNode {
            if depth == 0 {
                CadNode { sections: vec![], children: vec![CadNode::leaf()] }
            } else {
                CadNode {
                    sections: node.sections.clone(),
                    children: node.children.iter().map(|c| extend(c, depth - 1)).collect(),
                }
            }
        }
        ConcreteCad {
            dim: self.dim + 1,
            class: self.class,
            level1: self.level1.clone(),
            top: self.top.iter().map(|n| extend(n, self.dim - 1)).collect(),
        }
    }

    /// Splits the sector `index` (level k) with a new section and restricts
    /// every cylinder above it. The expression must lie strictly between the
    /// sector's bounding sections at every plan sample of the base cell.
    pub fn refine_with_section(
        &self,
        index: &Index,
        expr: &Expr,
        plan: &SamplePlan,
    ) -> Result<ConcreteCad, CadError> {
        let k = index.level();
        if k == 0 || k > self.dim || index.is_even() || !self.is_valid_index(index) {
            return Err(CadError::NotASector(index.clone()));
        }
        let base_index = index.prefix(k - 1);
        let base_samples: Vec<Vec<Rat>> =
            if k == 1 { vec![vec![]] } else { plan.samples(&base_index).to_vec() };
        for b in &base_samples {
            let v = eval(expr, b)?;
            let fmt_sample =
                || format!("({})", b.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "));
            if v.is_indeterminate() {
                return Err(CadError::SectionOutOfRange {
                    sample: fmt_sample(),
                    detail: "new section value indeterminate".into(),
                });
            }
            let (lo, hi) = self.sector_bounds_at(index, b)?;
            let ok_lo = lo.map_or(true, |l| l.cmp_exact(&v) == Some(Ordering::Less));
            let ok_hi = hi.map_or(true, |h| v.cmp_exact(&h) == Some(Ordering::Less));
            if !ok_lo || !ok_hi {
                return Err(CadError::SectionOutOfRange {
                    sample: fmt_sample(),
                    detail: format!("value {} not strictly inside the sector", v),
                });
            }
        }

        let mut out = self.clone();
        let j = index.last();
        let m = (j - 1) / 2; // insertion position among sections
        if k == 1 {
            let v = eval(expr, &[])?;
            out.level1.insert(m, v);
            let sector = out.top[j - 1].clone();
            out.top.splice(j - 1..j, [sector.clone(), sector.clone(), sector]);
        } else {
            let parent =
                out.node_at_mut(&index.parent()).ok_or_else(|| CadError::BadIndex(index.clone()))?;
            parent.sections.insert(m, expr.clone());
            let sector = parent.children[j - 1].clone();
            parent.children.splice(j - 1..j, [sector.clone(), sector.clone(), sector]);
        }
        Ok(out)
    }
}

/// Ordered finite family of semi-algebraic sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub sets: Vec<(String, SaPredicate)>,
}

impl Family {
    pub fn new(sets: Vec<(String, SaPredicate)>) -> Family {
        assert!(!sets.is_empty());
        Family { sets }
    }

    pub fn single(name: &str, pred: SaPredicate) -> Family {
        Family { sets: vec![(name.to_string(), pred)] }
    }

    pub fn width(&self) -> usize {
        self.sets.len()
    }

    pub fn max_axis(&self) -> usize {
        self.sets.iter().map(|(_, p)| p.max_axis()).max().unwrap_or(0)
    }

    /// The complement family, generated rather than stored.
    pub fn complemented(&self) -> Family {
        Family {
            sets: self.sets.iter().map(|(n, p)| (format!("{}_c", n), p.complement())).collect(),
        }
    }
}

#[cfg(test)]
pub(crate) mod test_cads {
    use super::*;

    /// The 13-cell decomposition of the plane adapted to the closed unit
    /// disk: level-1 sections {−1, 1}, semicircle sections over the middle
    /// sector, zero sections over the two circle points.
    pub fn disk_coarse() -> ConcreteCad {
        let semicircle = Expr::int(1).sub(Expr::var(1).mul(Expr::var(1))).sqrt();
        let zero = Expr::int(0);
        ConcreteCad {
            dim: 2,
            class: RegClass::Finite(0),
            level1: vec![ExtVal::from_int(-1), ExtVal::from_int(1)],
            top: vec![
                CadNode::over(vec![], vec![CadNode::leaf()]),
                CadNode::over(vec![zero.clone()], vec![CadNode::leaf(); 3]),
                CadNode::over(
                    vec![semicircle.clone().neg(), semicircle],
                    vec![CadNode::leaf(); 5],
                ),
                CadNode::over(vec![zero], vec![CadNode::leaf(); 3]),
                CadNode::over(vec![], vec![CadNode::leaf()]),
            ],
        }
    }

    pub fn unit_disk_family() -> Family {
        let x = Expr::var(1);
        let y = Expr::var(2);
        Family::single(
            "disk",
            SaPredicate::atom(
                x.clone().mul(x).add(y.clone().mul(y)),
                crate::algebra::Rel::Le,
                Expr::int(1),
            ),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::test_cads::disk_coarse;
    use super::*;
    use crate::algebra::{rat, rat_int};

    #[test]
    fn leaf_counting() {
        let cad = disk_coarse();
        assert_eq!(cad.leaf_count(), 13);
        assert_eq!(cad.leaf_indices().len(), 13);
        assert_eq!(cad.cells_at_level(1).len(), 5);
    }

    #[test]
    fn section_values_and_bounds() {
        let cad = disk_coarse();
        let v = cad.section_value_at(&Index(vec![3, 4]), &[rat(3, 5)]).unwrap();
        assert_eq!(v, ExtVal::Rat(rat(4, 5)));
        let (lo, hi) = cad.sector_bounds_at(&Index(vec![3, 3]), &[rat_int(0)]).unwrap();
        assert_eq!(lo, Some(ExtVal::from_int(-1)));
        assert_eq!(hi, Some(ExtVal::from_int(1)));
        let (lo, hi) = cad.sector_bounds_at(&Index(vec![1]), &[]).unwrap();
        assert_eq!(lo, None);
        assert_eq!(hi, Some(ExtVal::from_int(-1)));
    }

    #[test]
    fn cell_membership() {
        let cad = disk_coarse();
        assert!(cad.cell_contains_point(&Index(vec![3, 3]), &[rat_int(0), rat_int(0)]));
        assert!(!cad.cell_contains_point(&Index(vec![3, 3]), &[rat_int(0), rat_int(2)]));
        let on_circle = [rat(3, 5), rat(4, 5)];
        assert!(cad.cell_contains_point(&Index(vec![3, 4]), &on_circle));
    }

    #[test]
    fn projection_truncates() {
        let cad = disk_coarse();
        let p = cad.project(1).unwrap();
        assert_eq!(p.dim, 1);
        assert_eq!(p.leaf_count(), 5);
        assert_eq!(cad.project(2).unwrap(), cad);
        assert!(matches!(cad.project(3), Err(CadError::BadLevel(3, 2))));
    }

    #[test]
    fn cylinder_product_keeps_leaves() {
        let cad = disk_coarse();
        let prod = cad.cylinder_product();
        assert_eq!(prod.dim, 3);
        assert_eq!(prod.leaf_count(), cad.leaf_count());
        let plane = ConcreteCad::trivial_line().cylinder_product();
        assert_eq!(plane.dim, 2);
        assert_eq!(plane.leaf_count(), 1);
    }
}

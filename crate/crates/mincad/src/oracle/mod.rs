//! Brute-force ground truth at tiny scale: enumerate coarsening partitions
//! of a CAD's leaf cells, filter the ones that are again adapted CADs, build
//! the exact refinement poset below the CAD, and cross-validate the
//! reduction engine against it.
//!
//! Two enumeration routes exist: exhaustive Bell-number enumeration of all
//! set partitions (small leaf counts only), and a structured enumeration
//! that walks per-level section-removal choices directly. Both accept the
//! same coarsenings; the exhaustive route is the reference.

use crate::cad::{build_tree, ConcreteCad, Family, Index, PlanConfig, SamplePlan};
use crate::exec;
use crate::reduce::{
    canonical_fingerprint, geometric_gluing, Liftability, ReductionDag,
};
use crate::tree::{psi, Label};
use num::BigUint;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{leaves} leaf cells is too large for exhaustive enumeration (limit {limit})")]
    TooLarge { leaves: usize, limit: usize },
    #[error("tree construction failed: {0}")]
    Build(String),
    #[error("materialization failed: {0}")]
    Materialize(String),
}

/// K-th Bell number via the Bell triangle.
pub fn bell(k: usize) -> BigUint {
    assert!(k >= 1);
    let mut row = vec![BigUint::from(1u32)];
    for _ in 1..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().unwrap().clone());
        for v in &row {
            let last = next.last().unwrap().clone();
            next.push(last + v);
        }
        row = next;
    }
    row.last().unwrap().clone()
}

/// A partition of the leaf-cell index set: block id per leaf position, in
/// leaf order. Block ids are restricted-growth (first occurrence order).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coarsening {
    pub block_of: Vec<usize>,
}

impl Coarsening {
    pub fn discrete(n: usize) -> Coarsening {
        Coarsening { block_of: (0..n).collect() }
    }

    pub fn is_discrete(&self) -> bool {
        self.block_of.iter().enumerate().all(|(i, &b)| i == b)
    }

    pub fn block_count(&self) -> usize {
        self.block_of.iter().max().map_or(0, |m| m + 1)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]; self.block_count()];
        for (i, &b) in self.block_of.iter().enumerate() {
            out[b].push(i);
        }
        out
    }

    /// True when `self` is coarser than or equal to `other`: every block of
    /// `other` is contained in a block of `self`.
    pub fn coarser_eq(&self, other: &Coarsening) -> bool {
        debug_assert_eq!(self.block_of.len(), other.block_of.len());
        let mut image: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, &b) in other.block_of.iter().enumerate() {
            match image.get(&b) {
                None => {
                    image.insert(b, self.block_of[i]);
                }
                Some(&s) if s == self.block_of[i] => {}
                Some(_) => return false,
            }
        }
        true
    }

    fn canonicalize(mut self) -> Coarsening {
        let mut rename: BTreeMap<usize, usize> = BTreeMap::new();
        for b in &mut self.block_of {
            let next = rename.len();
            let id = *rename.entry(*b).or_insert(next);
            *b = id;
        }
        self
    }
}

/// All set partitions of `n` leaves except the discrete one, as
/// restricted-growth strings in lexicographic order.
pub struct CoarseningStream {
    n: usize,
    state: Option<Vec<usize>>,
    cap: Option<usize>,
    produced: usize,
}

impl Iterator for CoarseningStream {
    type Item = Coarsening;

    fn next(&mut self) -> Option<Coarsening> {
        loop {
            if let Some(cap) = self.cap {
                if self.produced >= cap {
                    return None;
                }
            }
            let current = self.state.as_ref()?.clone();
            // advance to the next restricted-growth string
            let mut next = current.clone();
            let mut i = self.n;
            loop {
                if i == 1 {
                    self.state = None;
                    break;
                }
                i -= 1;
                let max_before = next[..i].iter().copied().max().unwrap_or(0);
                if next[i] <= max_before {
                    next[i] += 1;
                    for v in next[i + 1..].iter_mut() {
                        *v = 0;
                    }
                    self.state = Some(next);
                    break;
                }
            }
            let candidate = Coarsening { block_of: current };
            if candidate.is_discrete() {
                continue;
            }
            self.produced += 1;
            return Some(candidate);
        }
    }
}

/// Streams the B_K − 1 coarsenings of the leaf set. Exhaustive enumeration
/// is guarded by a hard leaf-count limit unless a cap is supplied.
pub fn enumerate_coarsenings(
    cad: &ConcreteCad,
    cap: Option<usize>,
) -> Result<CoarseningStream, OracleError> {
    let leaves = cad.leaf_count();
    const LIMIT: usize = 12;
    if leaves > LIMIT && cap.is_none() {
        return Err(OracleError::TooLarge { leaves, limit: LIMIT });
    }
    Ok(CoarseningStream { n: leaves, state: Some(vec![0; leaves]), cap, produced: 0 })
}

/// Verdict for one coarsening candidate. `inconclusive` marks rejection
/// that rests only on an unknown gluing verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseningAudit {
    pub accepted: bool,
    pub inconclusive: bool,
    pub reason: String,
}

impl CoarseningAudit {
    fn reject(reason: impl Into<String>) -> CoarseningAudit {
        CoarseningAudit { accepted: false, inconclusive: false, reason: reason.into() }
    }

    fn accept() -> CoarseningAudit {
        CoarseningAudit { accepted: true, inconclusive: false, reason: String::new() }
    }
}

/// Shared evaluation context: leaf order, leaf labels, and memoized gluing
/// verdicts for every even cell.
pub struct OracleContext<'a> {
    cad: &'a ConcreteCad,
    leaves: Vec<Index>,
    labels: Vec<Label>,
    gluing: BTreeMap<Index, Liftability>,
}

impl<'a> OracleContext<'a> {
    pub fn new(
        cad: &'a ConcreteCad,
        fam: &'a Family,
        plan: &'a SamplePlan,
    ) -> Result<OracleContext<'a>, OracleError> {
        let tree = build_tree(cad, fam, plan).map_err(|e| OracleError::Build(e.to_string()))?;
        let leaves: Vec<Index> = cad.leaf_indices();
        let labels: Vec<Label> = tree.leaves().into_iter().map(|(_, l)| l).collect();
        // memoize gluing verdicts for every even cell of every level
        let mut evens = vec![];
        for level in 1..=cad.dim {
            for idx in cad.cells_at_level(level) {
                if idx.is_even() {
                    evens.push(idx);
                }
            }
        }
        let verdicts = exec::map_slice(&evens, |idx| geometric_gluing(cad, fam, idx, plan));
        let gluing = evens.into_iter().zip(verdicts).collect();
        Ok(OracleContext { cad, leaves, labels, gluing })
    }

    /// Positions of the leaves, for callers assembling coarsenings.
    pub fn leaf_indices(&self) -> &[Index] {
        &self.leaves
    }

    /// Structural + geometric audit of one coarsening.
    pub fn audit(&self, c: &Coarsening) -> CoarseningAudit {
        debug_assert_eq!(c.block_of.len(), self.leaves.len());

        // (a) label homogeneity
        let blocks = c.blocks();
        for block in &blocks {
            let first = &self.labels[block[0]];
            if block.iter().any(|&i| &self.labels[i] != first) {
                return CoarseningAudit::reject("block mixes membership labels");
            }
        }

        // (b) cylindricity: the k-prefix sets of blocks must be equal or
        // disjoint at every level, giving a partition of level-k cells
        let n = self.cad.dim;
        let mut level_classes: Vec<Vec<BTreeSet<Index>>> = vec![];
        for k in 1..=n {
            let mut prefix_sets: Vec<BTreeSet<Index>> = vec![];
            for block in &blocks {
                let set: BTreeSet<Index> =
                    block.iter().map(|&i| self.leaves[i].prefix(k)).collect();
                prefix_sets.push(set);
            }
            let mut classes: Vec<BTreeSet<Index>> = vec![];
            for set in prefix_sets {
                let mut placed = false;
                for existing in &classes {
                    if existing == &set {
                        placed = true;
                        break;
                    }
                    if existing.intersection(&set).next().is_some() {
                        return CoarseningAudit::reject(format!(
                            "blocks do not project to blocks at level {}",
                            k
                        ));
                    }
                }
                if !placed {
                    classes.push(set);
                }
            }
            level_classes.push(classes);
        }

        // (c) shape: each level-k class sits over exactly one level-(k−1)
        // class, with identical positions over every base cell, forming a
        // single section or a consecutive sector-to-sector run
        let mut removed_cells: Vec<Index> = vec![];
        for k in 1..=n {
            let base_classes: Vec<BTreeSet<Index>> = if k == 1 {
                vec![std::iter::once(Index::root()).collect()]
            } else {
                level_classes[k - 2].clone()
            };
            for class in &level_classes[k - 1] {
                let bases: BTreeSet<Index> = class.iter().map(|i| i.parent()).collect();
                let base_class = base_classes.iter().find(|b| **b == bases);
                if base_class.is_none() {
                    return CoarseningAudit::reject(format!(
                        "class at level {} does not sit over a single base class",
                        k
                    ));
                }
                // uniform child count over the base class
                let u0 = self.cad.u_at(bases.iter().next().unwrap());
                if bases.iter().any(|b| self.cad.u_at(b) != u0) {
                    return CoarseningAudit::reject(format!(
                        "merged base cells at level {} have different section counts",
                        k - 1
                    ));
                }
                // identical position sets over every base cell
                let mut per_base: BTreeMap<Index, BTreeSet<usize>> = BTreeMap::new();
                for idx in class {
                    per_base.entry(idx.parent()).or_default().insert(idx.last());
                }
                let positions = per_base.values().next().unwrap().clone();
                if per_base.values().any(|p| *p != positions) {
                    return CoarseningAudit::reject(format!(
                        "positions differ across the base at level {}",
                        k
                    ));
                }
                if bases != per_base.keys().cloned().collect::<BTreeSet<Index>>() {
                    return CoarseningAudit::reject(format!(
                        "class at level {} misses base cells",
                        k
                    ));
                }
                // single even position, or a consecutive odd run
                let lo = *positions.iter().next().unwrap();
                let hi = *positions.iter().last().unwrap();
                let consecutive = positions.len() == hi - lo + 1;
                let single_section = positions.len() == 1 && lo % 2 == 0;
                let odd_run = consecutive && lo % 2 == 1 && hi % 2 == 1 && positions.len() > 1;
                let single_sector = positions.len() == 1 && lo % 2 == 1;
                if !(single_section || single_sector || odd_run) {
                    return CoarseningAudit::reject(format!(
                        "positions {:?} are not a section or sector run at level {}",
                        positions, k
                    ));
                }
                if odd_run {
                    for base in &bases {
                        for p in (lo + 1..hi).step_by(2) {
                            removed_cells.push(base.child(p));
                        }
                    }
                }
            }
        }

        // (d) gluing of every removed section, with memoized verdicts
        let mut inconclusive = false;
        for cell in removed_cells {
            match self.gluing.get(&cell) {
                Some(Liftability::Lifts) => {}
                Some(Liftability::Fails(w)) => {
                    return CoarseningAudit::reject(format!(
                        "sections fail to glue across {} (witness at level {})",
                        cell, w.level
                    ));
                }
                Some(Liftability::Unknown(reason)) => {
                    inconclusive = true;
                    let _ = reason;
                }
                None => {
                    return CoarseningAudit::reject(format!("cell {} is not a section", cell))
                }
            }
        }
        if inconclusive {
            return CoarseningAudit {
                accepted: false,
                inconclusive: true,
                reason: "gluing evidence unknown".into(),
            };
        }
        CoarseningAudit::accept()
    }

    /// Removed section cells of an accepted coarsening, in index order.
    fn removed_sections(&self, c: &Coarsening) -> BTreeSet<Index> {
        let blocks = c.blocks();
        let mut removed = BTreeSet::new();
        for block in &blocks {
            // positions merged within one base: interior even entries at
            // every level
            let mut by_level: BTreeMap<Index, BTreeSet<usize>> = BTreeMap::new();
            for &i in block {
                let leaf = &self.leaves[i];
                for k in 1..=leaf.level() {
                    by_level
                        .entry(leaf.prefix(k).parent())
                        .or_default()
                        .insert(leaf.prefix(k).last());
                }
            }
            for (base, positions) in by_level {
                let lo = *positions.iter().next().unwrap();
                let hi = *positions.iter().last().unwrap();
                if positions.len() > 1 {
                    for p in (lo + 1..hi).step_by(2) {
                        removed.insert(base.child(p));
                    }
                }
            }
        }
        removed
    }

    /// Materializes an accepted coarsening as a concrete CAD by applying the
    /// removed sections one at a time (deepest level last), renumbering the
    /// pending removals through ψ after every merge.
    pub fn materialize(&self, c: &Coarsening) -> Result<ConcreteCad, OracleError> {
        let mut pending: Vec<Index> = self.removed_sections(c).into_iter().collect();
        // stable order: by level, then lexicographic
        pending.sort_by_key(|i| (i.level(), i.0.clone()));
        let mut current = self.cad.clone();
        while !pending.is_empty() {
            let pivot = pending.remove(0);
            current = crate::reduce::apply_surgery_unchecked(&current, &pivot)
                .map_err(|e| OracleError::Materialize(e.to_string()))?;
            let mut renamed = BTreeSet::new();
            for r in pending {
                if r.prefix(pivot.level()) == pivot {
                    // the removal above the merged section is covered by its
                    // mate above the left sector
                    continue;
                }
                renamed.insert(psi(&pivot, &r));
            }
            pending = renamed.into_iter().collect();
            pending.sort_by_key(|i| (i.level(), i.0.clone()));
        }
        Ok(current)
    }
}

/// One element of the finite poset below a CAD.
pub struct PosetElement {
    pub coarsening: Coarsening,
    pub cad: ConcreteCad,
    pub fingerprint: String,
}

/// The exact refinement poset of adapted CAD coarsenings below a CAD
/// (including the CAD itself as the discrete partition).
pub struct PosetBelow {
    pub elements: Vec<PosetElement>,
    pub inconclusive: Vec<Coarsening>,
    pub mode: EnumerationMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationMode {
    Exhaustive,
    Structured,
}

impl PosetBelow {
    /// element a coarser-or-equal element b.
    pub fn coarser_eq(&self, a: usize, b: usize) -> bool {
        self.elements[a].coarsening.coarser_eq(&self.elements[b].coarsening)
    }

    pub fn fingerprints(&self) -> BTreeSet<String> {
        self.elements.iter().map(|e| e.fingerprint.clone()).collect()
    }

    /// Minimum elements (coarser than nothing else... i.e. having no
    /// strictly coarser element in the poset).
    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.elements.len())
            .filter(|&i| {
                !(0..self.elements.len()).any(|j| {
                    j != i
                        && self.coarser_eq(j, i)
                        && self.elements[j].coarsening != self.elements[i].coarsening
                })
            })
            .collect()
    }

    pub fn to_dot(&self, comment: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "// {}", comment);
        let _ = writeln!(out, "digraph poset {{");
        for (i, e) in self.elements.iter().enumerate() {
            let _ = writeln!(
                out,
                "  p{} [shape=box, label=\"{} blocks\\n{}\"];",
                i,
                e.coarsening.block_count(),
                &e.fingerprint[..8]
            );
        }
        // cover relations only (transitive reduction of the order)
        let n = self.elements.len();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.coarser_eq(a, b) && !self.coarser_eq(b, a) {
                    let covered = (0..n).any(|m| {
                        m != a
                            && m != b
                            && self.coarser_eq(a, m)
                            && !self.coarser_eq(m, a)
                            && self.coarser_eq(m, b)
                            && !self.coarser_eq(b, m)
                    });
                    if !covered {
                        let _ = writeln!(out, "  p{} -> p{};", b, a);
                    }
                }
            }
        }
        let _ = writeln!(out, "}}");
        out
    }
}

/// Structured enumeration: walk per-class section-removal subsets level by
/// level, pruning on uniformity; equivalent to filtering the exhaustive
/// stream but tractable for larger CADs.
fn structured_candidates(ctx: &OracleContext<'_>) -> Vec<Coarsening> {
    #[derive(Clone)]
    struct State {
        // classes of cell indices at the current level
        classes: Vec<Vec<Index>>,
    }

    let cad = ctx.cad;
    let n = cad.dim;
    let mut states = vec![State { classes: vec![vec![Index::root()]] }];
    for _level in 1..=n {
        let mut next_states = vec![];
        'state: for state in states {
            // per class: uniform u, then all subsets of section positions
            let mut per_class_options: Vec<Vec<Vec<Vec<Index>>>> = vec![];
            for class in &state.classes {
                let u0 = match cad.u_at(&class[0]) {
                    Some(u) => u,
                    None => continue 'state,
                };
                if class.iter().any(|c| cad.u_at(c) != Some(u0)) {
                    continue 'state;
                }
                let mut options = vec![];
                for mask in 0..(1u32 << u0) {
                    // removal subset: section position 2j removed iff bit j
                    let mut child_classes: Vec<Vec<Index>> = vec![];
                    let mut run: Vec<usize> = vec![1];
                    for j in 1..=u0 {
                        if mask & (1 << (j - 1)) != 0 {
                            run.push(2 * j);
                            run.push(2 * j + 1);
                        } else {
                            // close the run below this kept section
                            child_classes.push(
                                run.iter()
                                    .flat_map(|&p| class.iter().map(move |b| b.child(p)))
                                    .collect(),
                            );
                            child_classes
                                .push(class.iter().map(|b| b.child(2 * j)).collect());
                            run = vec![2 * j + 1];
                        }
                    }
                    child_classes.push(
                        run.iter()
                            .flat_map(|&p| class.iter().map(move |b| b.child(p)))
                            .collect(),
                    );
                    options.push(child_classes);
                }
                per_class_options.push(options);
            }
            // cartesian product over classes
            let mut combos: Vec<Vec<Vec<Index>>> = vec![vec![]];
            for options in per_class_options {
                let mut grown = vec![];
                for combo in combos {
                    for option in &options {
                        let mut c = combo.clone();
                        c.extend(option.clone());
                        grown.push(c);
                    }
                }
                combos = grown;
            }
            for classes in combos {
                next_states.push(State { classes });
            }
        }
        states = next_states;
    }

    // convert leaf classes to coarsenings
    let position_of: BTreeMap<&Index, usize> =
        ctx.leaves.iter().enumerate().map(|(i, idx)| (idx, i)).collect();
    let mut out = vec![];
    for state in states {
        let mut block_of = vec![0usize; ctx.leaves.len()];
        for (b, class) in state.classes.iter().enumerate() {
            for idx in class {
                block_of[position_of[idx]] = b;
            }
        }
        out.push(Coarsening { block_of }.canonicalize());
    }
    out.sort();
    out.dedup();
    out
}

/// The exact poset of adapted coarsenings below `cad`: exhaustive Bell
/// enumeration for small leaf counts, structured enumeration otherwise.
pub fn poset_below(
    cad: &ConcreteCad,
    fam: &Family,
    config: &PlanConfig,
) -> Result<PosetBelow, OracleError> {
    let plan = SamplePlan::build(cad, config);
    let ctx = OracleContext::new(cad, fam, &plan)?;
    let leaves = cad.leaf_count();
    let mode =
        if leaves <= 9 { EnumerationMode::Exhaustive } else { EnumerationMode::Structured };
    poset_below_with(cad, fam, config, mode, &ctx)
}

pub fn poset_below_with(
    cad: &ConcreteCad,
    fam: &Family,
    config: &PlanConfig,
    mode: EnumerationMode,
    ctx: &OracleContext<'_>,
) -> Result<PosetBelow, OracleError> {
    let _ = fam;
    let candidates: Vec<Coarsening> = match mode {
        EnumerationMode::Exhaustive => enumerate_coarsenings(cad, None)?.collect(),
        EnumerationMode::Structured => structured_candidates(ctx)
            .into_iter()
            .filter(|c| !c.is_discrete())
            .collect(),
    };
    let audits = exec::map_slice(&candidates, |c| ctx.audit(c));

    let mut elements = vec![PosetElement {
        coarsening: Coarsening::discrete(cad.leaf_count()),
        cad: cad.clone(),
        fingerprint: canonical_fingerprint(cad, config),
    }];
    let mut inconclusive = vec![];
    for (c, audit) in candidates.into_iter().zip(audits) {
        if audit.accepted {
            let materialized = ctx.materialize(&c)?;
            let fingerprint = canonical_fingerprint(&materialized, config);
            elements.push(PosetElement { coarsening: c, cad: materialized, fingerprint });
        } else if audit.inconclusive {
            inconclusive.push(c);
        }
    }
    Ok(PosetBelow { elements, inconclusive, mode })
}

/// Agreement report between the reduction DAG and the oracle poset.
#[derive(Clone, Debug, Default)]
pub struct CrossValidation {
    pub node_mismatches: Vec<String>,
    pub edge_mismatches: Vec<String>,
    pub order_mismatches: Vec<String>,
    pub inconclusive: usize,
}

impl CrossValidation {
    pub fn agrees(&self) -> bool {
        self.node_mismatches.is_empty()
            && self.edge_mismatches.is_empty()
            && self.order_mismatches.is_empty()
    }
}

impl std::fmt::Display for CrossValidation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.agrees() {
            writeln!(f, "cross-validation: full agreement")?;
        } else {
            for m in
                self.node_mismatches.iter().chain(&self.edge_mismatches).chain(&self.order_mismatches)
            {
                writeln!(f, "cross-validation mismatch: {}", m)?;
            }
        }
        if self.inconclusive > 0 {
            writeln!(f, "cross-validation: {} candidates inconclusive (excluded)", self.inconclusive)?;
        }
        Ok(())
    }
}

/// Checks (i) node sets coincide by fingerprint, (ii) DAG edges equal the
/// transitive reduction of the poset order, (iii) DAG reachability equals
/// the poset order.
pub fn cross_validate(dag: &ReductionDag, poset: &PosetBelow) -> CrossValidation {
    let mut report = CrossValidation { inconclusive: poset.inconclusive.len(), ..Default::default() };

    let dag_fps: BTreeSet<String> = dag.nodes.iter().map(|n| n.fingerprint.clone()).collect();
    let poset_fps = poset.fingerprints();
    for fp in dag_fps.difference(&poset_fps) {
        report.node_mismatches.push(format!("DAG node {} missing from the oracle poset", &fp[..12]));
    }
    for fp in poset_fps.difference(&dag_fps) {
        report.node_mismatches.push(format!("oracle element {} unreachable in the DAG", &fp[..12]));
    }
    if !report.node_mismatches.is_empty() {
        return report;
    }

    // order pairs as (finer fp, coarser fp)
    let n = poset.elements.len();
    let mut order: BTreeSet<(String, String)> = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && poset.coarser_eq(a, b) && !poset.coarser_eq(b, a) {
                order.insert((
                    poset.elements[b].fingerprint.clone(),
                    poset.elements[a].fingerprint.clone(),
                ));
            }
        }
    }
    let reach = dag.reachability();
    let mut dag_order: BTreeSet<(String, String)> = BTreeSet::new();
    for u in 0..dag.nodes.len() {
        for v in 0..dag.nodes.len() {
            if reach[u][v] {
                dag_order
                    .insert((dag.nodes[u].fingerprint.clone(), dag.nodes[v].fingerprint.clone()));
            }
        }
    }
    for pair in dag_order.symmetric_difference(&order) {
        report.order_mismatches.push(format!(
            "order pair ({}, {}) present on one side only",
            &pair.0[..12],
            &pair.1[..12]
        ));
    }

    // transitive reduction of the poset order vs the DAG edge set
    let mut tr: BTreeSet<(String, String)> = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || !poset.coarser_eq(a, b) || poset.coarser_eq(b, a) {
                continue;
            }
            // a strictly coarser than b: edge b→a unless some m sits between
            let between = (0..n).any(|m| {
                m != a
                    && m != b
                    && poset.coarser_eq(a, m)
                    && !poset.coarser_eq(m, a)
                    && poset.coarser_eq(m, b)
                    && !poset.coarser_eq(b, m)
            });
            if !between {
                tr.insert((
                    poset.elements[b].fingerprint.clone(),
                    poset.elements[a].fingerprint.clone(),
                ));
            }
        }
    }
    let dag_edges: BTreeSet<(String, String)> = dag
        .edges
        .iter()
        .map(|e| (dag.nodes[e.from].fingerprint.clone(), dag.nodes[e.to].fingerprint.clone()))
        .collect();
    for pair in dag_edges.symmetric_difference(&tr) {
        report.edge_mismatches.push(format!(
            "edge ({}, {}) present on one side only",
            &pair.0[..12],
            &pair.1[..12]
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::test_cads::{disk_coarse, unit_disk_family};
    use crate::cad::{parse_document, CadDocument};
    use crate::reduce::{reduction_dag, DagLimits};

    #[test]
    fn bell_numbers() {
        assert_eq!(bell(1), BigUint::from(1u32));
        assert_eq!(bell(3), BigUint::from(5u32));
        assert_eq!(bell(9) - 1u32, BigUint::from(21_146u32));
        assert_eq!(bell(15) - 1u32, BigUint::from(1_382_958_544u64));
    }

    #[test]
    fn enumeration_counts_match_bell() {
        // a 3-cell CAD of the line
        let doc = parse_document("cad A dim=1 class=0\nlevel1: 0\n").unwrap();
        let cad = doc.cad("A").unwrap();
        let all: Vec<Coarsening> = enumerate_coarsenings(cad, None).unwrap().collect();
        assert_eq!(all.len(), 4); // B_3 − 1
        for k in 2..=7usize {
            let doc = parse_document(&format!(
                "cad A dim=1 class=0\nlevel1: {}\n",
                (0..k / 2 + 1).map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
            ))
            .unwrap();
            let cad = doc.cad("A").unwrap();
            let n = cad.leaf_count();
            let count = enumerate_coarsenings(cad, None).unwrap().count();
            let expected = bell(n) - 1u32;
            assert_eq!(BigUint::from(count), expected, "leaves {}", n);
        }
    }

    #[test]
    fn single_cell_has_no_coarsenings() {
        let cad = ConcreteCad::trivial_line();
        assert_eq!(enumerate_coarsenings(&cad, None).unwrap().count(), 0);
    }

    #[test]
    fn oversized_enumeration_guarded() {
        let cad = disk_coarse();
        assert!(matches!(enumerate_coarsenings(&cad, None), Err(OracleError::TooLarge { .. })));
        // a cap lifts the guard
        let few: Vec<Coarsening> = enumerate_coarsenings(&cad, Some(10)).unwrap().collect();
        assert_eq!(few.len(), 10);
    }

    #[test]
    fn disk_poset_is_the_two_element_chain() {
        let config = PlanConfig::default();
        let coarse = disk_coarse();
        let fam = unit_disk_family();
        let plan = SamplePlan::build(&coarse, &config);
        let fine = coarse
            .refine_with_section(&Index(vec![3]), &crate::algebra::Expr::int(0), &plan)
            .unwrap();
        let poset = poset_below(&fine, &fam, &config).unwrap();
        assert_eq!(poset.mode, EnumerationMode::Structured);
        assert_eq!(poset.elements.len(), 2);
        let fps = poset.fingerprints();
        assert!(fps.contains(&canonical_fingerprint(&fine, &config)));
        assert!(fps.contains(&canonical_fingerprint(&coarse, &config)));
        assert_eq!(poset.minimal_elements().len(), 1);

        let dag = reduction_dag(&fine, &fam, &config, DagLimits::default()).unwrap();
        let report = cross_validate(&dag, &poset);
        assert!(report.agrees(), "{}", report);
    }

    #[test]
    fn trousers_poset_is_a_singleton() {
        let doc = parse_document(crate::reduce::tests::TROUSERS_DOC).unwrap();
        let fam = Family::single("T", doc.set("T").unwrap().clone());
        let config = PlanConfig::default();
        let cad = doc.cad("C").unwrap();
        let poset = poset_below(cad, &fam, &config).unwrap();
        assert_eq!(poset.mode, EnumerationMode::Exhaustive);
        // every one of the 21146 candidate coarsenings is rejected, and the
        // rejections are conclusive
        assert_eq!(poset.elements.len(), 1);
        assert!(poset.inconclusive.is_empty());

        let dag = reduction_dag(cad, &fam, &config, DagLimits::default()).unwrap();
        let report = cross_validate(&dag, &poset);
        assert!(report.agrees(), "{}", report);
    }

    #[test]
    fn trousers_refinement_poset_matches_the_dag() {
        let doc = parse_document(crate::reduce::tests::TROUSERS_DOC).unwrap();
        let fam = Family::single("T", doc.set("T").unwrap().clone());
        let config = PlanConfig::default();
        let cbar = doc.cad("Cbar").unwrap();
        let poset = poset_below(cbar, &fam, &config).unwrap();
        assert_eq!(poset.elements.len(), 5);
        let dag = reduction_dag(cbar, &fam, &config, DagLimits::default()).unwrap();
        let report = cross_validate(&dag, &poset);
        assert!(report.agrees(), "{}", report);
        // mutilating the DAG is detected
        let mut broken = dag.clone();
        broken.edges.pop();
        let report = cross_validate(&broken, &poset);
        assert!(!report.agrees());
    }

    #[test]
    fn pruned_and_exhaustive_agree_on_small_instances() {
        // instances small enough to run the exhaustive route
        let trousers = parse_document(crate::reduce::tests::TROUSERS_DOC).unwrap();
        let line = parse_document(
            "cad L dim=1 class=0\nlevel1: -1, 0, 1\n\nset S: x1 >= -1 & x1 < 1\n",
        )
        .unwrap();
        let cases: Vec<(&CadDocument, &str, Family)> = vec![
            (&trousers, "C", Family::single("T", trousers.set("T").unwrap().clone())),
            (&line, "L", Family::single("S", line.set("S").unwrap().clone())),
        ];
        let config = PlanConfig::default();
        for (doc, name, fam) in cases {
            let cad = doc.cad(name).unwrap();
            let plan = SamplePlan::build(cad, &config);
            let ctx = OracleContext::new(cad, fam.sets.first().map(|_| &fam).unwrap(), &plan)
                .unwrap();
            let exhaustive =
                poset_below_with(cad, &fam, &config, EnumerationMode::Exhaustive, &ctx).unwrap();
            let structured =
                poset_below_with(cad, &fam, &config, EnumerationMode::Structured, &ctx).unwrap();
            let a: Vec<&Coarsening> = exhaustive.elements.iter().map(|e| &e.coarsening).collect();
            let b: Vec<&Coarsening> = structured.elements.iter().map(|e| &e.coarsening).collect();
            assert_eq!(a.len(), b.len(), "cad {}", name);
            for c in &a {
                assert!(b.contains(c), "cad {}: {:?} missing from structured", name, c);
            }
        }
    }

    #[test]
    fn label_mixing_is_rejected() {
        let doc = parse_document(crate::reduce::tests::TROUSERS_DOC).unwrap();
        let fam = Family::single("T", doc.set("T").unwrap().clone());
        let config = PlanConfig::default();
        let cad = doc.cad("C").unwrap();
        let plan = SamplePlan::build(cad, &config);
        let ctx = OracleContext::new(cad, &fam, &plan).unwrap();
        // merge the first two leaves (a sector and a section with different
        // membership)
        let mut block_of: Vec<usize> = (0..9).collect();
        block_of[1] = 0;
        let audit = ctx.audit(&Coarsening { block_of }.canonicalize());
        assert!(!audit.accepted);
        assert!(audit.reason.contains("labels"));
    }
}

//! Lifting tree reductions to geometric CAD reductions, reduction to a
//! minimal CAD, the reachable reduction DAG with its normal forms, and
//! confluence evidence for minimum existence.

mod lift;

pub use lift::{geometric_gluing, FailWitness, Gap, Liftability, Side};

use crate::algebra::{normalize_expr, Expr, Rel, SaPredicate};
use crate::cad::{
    build_tree, BuildError, CadError, CadNode, ConcreteCad, Family, Index, PlanConfig, SamplePlan,
};
use crate::exec;
use crate::tree::{tree_reductions, TreeReduction};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("pivot {0} is not a tree reduction of this CAD")]
    NotReducible(Index),
    #[error("pivot {pivot} does not lift: {verdict}")]
    NotLiftable { pivot: Index, verdict: String },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Cad(#[from] CadError),
    #[error("exploration exceeded caps ({nodes} nodes / {edges} edges)")]
    LimitExceeded { nodes: usize, edges: usize, partial: Box<ReductionDag> },
    #[error("operation requires a complete DAG")]
    IncompleteDag,
}

/// Public liftability check: the pivot must be a tree reduction of
/// `(cad, fam)`, then the geometric gluing verdict decides.
pub fn liftable(
    cad: &ConcreteCad,
    fam: &Family,
    pivot: &Index,
    plan: &SamplePlan,
) -> Result<Liftability, ReduceError> {
    let tree = build_tree(cad, fam, plan)?;
    if !tree_reductions(&tree).iter().any(|r| &r.pivot == pivot) {
        return Err(ReduceError::NotReducible(pivot.clone()));
    }
    Ok(geometric_gluing(cad, fam, pivot, plan))
}

// ------------------------------------------------------------- surgery

/// Glues three section expressions into one over the merged base; pieces
/// that normalize identically collapse, otherwise the pieces are guarded by
/// position relative to the removed section.
fn glue_exprs(left: &Expr, mid: &Expr, right: &Expr, axis: usize, removed: &Expr) -> Expr {
    let l = normalize_expr(left);
    let m = normalize_expr(mid);
    let r = normalize_expr(right);
    if l == m && m == r {
        return l;
    }
    let below = SaPredicate::atom(Expr::Var(axis), Rel::Lt, removed.clone());
    let on = SaPredicate::atom(Expr::Var(axis), Rel::Eq, removed.clone());
    Expr::Piecewise { branches: vec![(below, l), (on, m)], default: Box::new(r) }
}

fn glue_nodes(
    left: &CadNode,
    mid: &CadNode,
    right: &CadNode,
    axis: usize,
    removed: &Expr,
) -> CadNode {
    debug_assert_eq!(left.u(), mid.u());
    debug_assert_eq!(right.u(), mid.u());
    let sections = left
        .sections
        .iter()
        .zip(&mid.sections)
        .zip(&right.sections)
        .map(|((l, m), r)| glue_exprs(l, m, r, axis, removed))
        .collect();
    let children = left
        .children
        .iter()
        .zip(&mid.children)
        .zip(&right.children)
        .map(|((l, m), r)| glue_nodes(l, m, r, axis, removed))
        .collect();
    CadNode { sections, children }
}

/// The merge surgery, assuming the pivot is a verified liftable reduction.
fn apply_surgery(cad: &ConcreteCad, pivot: &Index) -> Result<ConcreteCad, ReduceError> {
    let k = pivot.level();
    let a = pivot.last();
    debug_assert!(a % 2 == 0);
    let removed =
        cad.section_expr(pivot).ok_or_else(|| ReduceError::NotReducible(pivot.clone()))?;
    let mut out = cad.clone();
    if k == 1 {
        out.level1.remove(a / 2 - 1);
        let glued = glue_nodes(&cad.top[a - 2], &cad.top[a - 1], &cad.top[a], 1, &removed);
        out.top.splice(a - 2..=a, [glued]);
    } else {
        let parent_index = pivot.parent();
        let parent = out
            .node_at_mut(&parent_index)
            .ok_or_else(|| ReduceError::NotReducible(pivot.clone()))?;
        parent.sections.remove(a / 2 - 1);
        let glued = glue_nodes(
            &parent.children[a - 2],
            &parent.children[a - 1],
            &parent.children[a],
            k,
            &removed,
        );
        parent.children.splice(a - 2..=a, [glued]);
    }
    Ok(out)
}

/// Surgery without liftability verification, for callers that established
/// the merge by other means (the oracle's structured materialization).
pub(crate) fn apply_surgery_unchecked(
    cad: &ConcreteCad,
    pivot: &Index,
) -> Result<ConcreteCad, ReduceError> {
    apply_surgery(cad, pivot)
}

/// Merged CAD for a liftable pivot: the sector–section–sector triple at the
/// pivot's level becomes one sector, and every section triple above glues
/// into a single (possibly piecewise) expression.
pub fn apply_reduction(
    cad: &ConcreteCad,
    fam: &Family,
    pivot: &Index,
    plan: &SamplePlan,
) -> Result<ConcreteCad, ReduceError> {
    match liftable(cad, fam, pivot, plan)? {
        Liftability::Lifts => apply_surgery(cad, pivot),
        other => Err(ReduceError::NotLiftable { pivot: pivot.clone(), verdict: other.summary() }),
    }
}

// ------------------------------------------------------------- minimal

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub pivot: String,
    pub verdict: String,
    pub applied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessRecord {
    pub base: Vec<String>,
    pub level: usize,
    pub side: Side,
    pub piece_value: String,
    pub section_value: String,
    pub gap: String,
}

impl WitnessRecord {
    fn from_witness(w: &FailWitness) -> WitnessRecord {
        WitnessRecord {
            base: w.base.iter().map(|r| r.to_string()).collect(),
            level: w.level,
            side: w.side,
            piece_value: w.piece_value.to_string(),
            section_value: w.section_value.to_string(),
            gap: match &w.gap {
                Gap::Exact(v) => v.to_string(),
                Gap::Interval(lo, hi) => format!("[{}, {}]", lo, hi),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimalOutcome {
    pub cad: ConcreteCad,
    pub trace: Vec<TraceEntry>,
    /// Pivots of the final CAD whose verdict stayed unknown: the result is
    /// minimal modulo these.
    pub unknown_pivots: Vec<Index>,
}

impl MinimalOutcome {
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.trace {
            let _ = writeln!(out, "{}", serde_json::to_string(e).expect("trace serializes"));
        }
        out
    }
}

/// Greedy reduction to a fixpoint: apply the first liftable reduction until
/// none lifts. Unknown verdicts never merge and never block; they are
/// recorded as caveats.
pub fn minimal(
    cad: &ConcreteCad,
    fam: &Family,
    config: &PlanConfig,
) -> Result<MinimalOutcome, ReduceError> {
    let mut current = cad.clone();
    let mut trace = vec![];
    loop {
        let plan = SamplePlan::build(&current, config);
        let tree = build_tree(&current, fam, &plan)?;
        let reductions = tree_reductions(&tree);
        let mut applied: Option<Index> = None;
        let mut unknown_pivots = vec![];
        for TreeReduction { pivot } in &reductions {
            let verdict = geometric_gluing(&current, fam, pivot, &plan);
            let witness = match &verdict {
                Liftability::Fails(w) => Some(WitnessRecord::from_witness(w)),
                _ => None,
            };
            let lifts = verdict.is_lifts();
            if let Liftability::Unknown(_) = verdict {
                unknown_pivots.push(pivot.clone());
            }
            trace.push(TraceEntry {
                pivot: pivot.to_string(),
                verdict: verdict.summary(),
                applied: lifts,
                witness,
            });
            if lifts {
                applied = Some(pivot.clone());
                break;
            }
        }
        match applied {
            Some(pivot) => current = apply_surgery(&current, &pivot)?,
            None => return Ok(MinimalOutcome { cad: current, trace, unknown_pivots }),
        }
    }
}

// ------------------------------------------------------------ fingerprint

/// Canonical serialization: normalized sections plus exact values at seeded
/// fingerprint samples from the collapse-friendly pool.
pub fn canonical_serialization(cad: &ConcreteCad, config: &PlanConfig) -> String {
    let mut normalized = cad.clone();
    fn norm_node(node: &mut CadNode) {
        for e in &mut node.sections {
            *e = normalize_expr(e);
        }
        for c in &mut node.children {
            norm_node(c);
        }
    }
    for n in &mut normalized.top {
        norm_node(n);
    }
    let mut out = String::new();
    crate::cad::print_cad("fingerprint", &normalized, &mut out);

    let plan = SamplePlan::build(&normalized, config);
    for level in 1..normalized.dim {
        for index in normalized.cells_at_level(level) {
            let node = normalized.node(&index).unwrap();
            if node.sections.is_empty() {
                continue;
            }
            let pool = plan.samples(&index);
            if pool.is_empty() {
                let _ = writeln!(out, "fp {}: no-witness", index);
                continue;
            }
            let mut rng = exec::SplitMix64::new(config.seed ^ fnv(&index.to_string()));
            let mut chosen: Vec<usize> = (0..config.fp_points.min(pool.len())).collect();
            while chosen.len() < config.fp_points {
                chosen.push(rng.below(pool.len() as u64) as usize);
            }
            for pi in chosen {
                let point = &pool[pi];
                let coords: Vec<String> = point.iter().map(|r| r.to_string()).collect();
                let mut values = vec![];
                for e in &node.sections {
                    match crate::algebra::eval(e, point) {
                        Ok(v) if !v.is_indeterminate() => values.push(v.to_string()),
                        _ => values.push("?".into()),
                    }
                }
                let _ =
                    writeln!(out, "fp {} @({}) = [{}]", index, coords.join(","), values.join("; "));
            }
        }
    }
    out
}

fn fnv(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Hex digest of the canonical serialization: equal CADs give equal
/// fingerprints, distinct fingerprints imply distinct CADs.
pub fn canonical_fingerprint(cad: &ConcreteCad, config: &PlanConfig) -> String {
    let ser = canonical_serialization(cad, config);
    let mut hasher = Sha256::new();
    hasher.update(ser.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{:02x}", b);
    }
    out
}

// ------------------------------------------------------------------ DAG

#[derive(Clone, Debug)]
pub struct DagNode {
    pub fingerprint: String,
    pub serialization: String,
    pub cad: ConcreteCad,
    pub leaf_count: usize,
    pub unknown_pivots: Vec<Index>,
    pub normal_form: bool,
}

#[derive(Clone, Debug)]
pub struct DagEdge {
    pub from: usize,
    pub pivot: Index,
    pub to: usize,
}

/// Breadth-first closure of a CAD under all liftable reductions,
/// deduplicated by canonical fingerprint.
#[derive(Clone, Debug)]
pub struct ReductionDag {
    pub nodes: Vec<DagNode>,
    pub edges: Vec<DagEdge>,
    pub root: usize,
    pub complete: bool,
    /// Fingerprints whose serializations collided (hash equal, content
    /// different); empty in practice.
    pub collisions: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct DagLimits {
    pub max_nodes: usize,
    pub max_edges: usize,
}

impl Default for DagLimits {
    fn default() -> Self {
        DagLimits { max_nodes: 100_000, max_edges: 1_000_000 }
    }
}

pub fn reduction_dag(
    cad: &ConcreteCad,
    fam: &Family,
    config: &PlanConfig,
    limits: DagLimits,
) -> Result<ReductionDag, ReduceError> {
    struct Expansion {
        unknown: Vec<Index>,
        lifted: Vec<(Index, ConcreteCad)>,
        error: Option<String>,
    }

    let expand = |c: &ConcreteCad| -> Expansion {
        let plan = SamplePlan::build(c, config);
        let tree = match build_tree(c, fam, &plan) {
            Ok(t) => t,
            Err(e) => {
                return Expansion { unknown: vec![], lifted: vec![], error: Some(e.to_string()) }
            }
        };
        let mut unknown = vec![];
        let mut lifted = vec![];
        for TreeReduction { pivot } in tree_reductions(&tree) {
            match geometric_gluing(c, fam, &pivot, &plan) {
                Liftability::Lifts => match apply_surgery(c, &pivot) {
                    Ok(next) => lifted.push((pivot, next)),
                    Err(e) => return Expansion { unknown, lifted, error: Some(e.to_string()) },
                },
                Liftability::Unknown(_) => unknown.push(pivot),
                Liftability::Fails(_) => {}
            }
        }
        Expansion { unknown, lifted, error: None }
    };

    let mut dag =
        ReductionDag { nodes: vec![], edges: vec![], root: 0, complete: true, collisions: vec![] };
    let mut index_of: BTreeMap<String, usize> = BTreeMap::new();
    let root_ser = canonical_serialization(cad, config);
    let root_fp = canonical_fingerprint(cad, config);
    dag.nodes.push(DagNode {
        fingerprint: root_fp.clone(),
        serialization: root_ser,
        cad: cad.clone(),
        leaf_count: cad.leaf_count(),
        unknown_pivots: vec![],
        normal_form: false,
    });
    index_of.insert(root_fp, 0);

    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let cads: Vec<ConcreteCad> = frontier.iter().map(|&i| dag.nodes[i].cad.clone()).collect();
        let expansions = exec::map_slice(&cads, &expand);
        let mut next_frontier = vec![];
        for (&node_id, exp) in frontier.iter().zip(expansions) {
            if let Some(e) = exp.error {
                return Err(ReduceError::NotLiftable {
                    pivot: Index::root(),
                    verdict: format!("exploration failed at node {}: {}", node_id, e),
                });
            }
            dag.nodes[node_id].unknown_pivots = exp.unknown;
            dag.nodes[node_id].normal_form = exp.lifted.is_empty();
            for (pivot, next_cad) in exp.lifted {
                let fp = canonical_fingerprint(&next_cad, config);
                let to = match index_of.get(&fp) {
                    Some(&i) => {
                        let ser = canonical_serialization(&next_cad, config);
                        if dag.nodes[i].serialization != ser {
                            dag.collisions.push(fp.clone());
                        }
                        i
                    }
                    None => {
                        if dag.nodes.len() >= limits.max_nodes {
                            dag.complete = false;
                            return Err(ReduceError::LimitExceeded {
                                nodes: dag.nodes.len(),
                                edges: dag.edges.len(),
                                partial: Box::new(dag),
                            });
                        }
                        let ser = canonical_serialization(&next_cad, config);
                        let leaf_count = next_cad.leaf_count();
                        dag.nodes.push(DagNode {
                            fingerprint: fp.clone(),
                            serialization: ser,
                            cad: next_cad,
                            leaf_count,
                            unknown_pivots: vec![],
                            normal_form: false,
                        });
                        let id = dag.nodes.len() - 1;
                        index_of.insert(fp, id);
                        next_frontier.push(id);
                        id
                    }
                };
                if dag.edges.len() >= limits.max_edges {
                    dag.complete = false;
                    return Err(ReduceError::LimitExceeded {
                        nodes: dag.nodes.len(),
                        edges: dag.edges.len(),
                        partial: Box::new(dag),
                    });
                }
                dag.edges.push(DagEdge { from: node_id, pivot, to });
            }
        }
        frontier = next_frontier;
    }
    Ok(dag)
}

impl ReductionDag {
    pub fn normal_forms(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].normal_form).collect()
    }

    /// Strict reachability (successor matrix) from the edge list.
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut adj = vec![vec![]; n];
        for e in &self.edges {
            adj[e.from].push(e.to);
        }
        let mut reach = vec![vec![false; n]; n];
        for start in 0..n {
            let mut stack = adj[start].clone();
            while let Some(v) = stack.pop() {
                if !reach[start][v] {
                    reach[start][v] = true;
                    stack.extend(adj[v].iter().copied());
                }
            }
        }
        reach
    }

    pub fn to_dot(&self, comment: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "// {}", comment);
        let _ = writeln!(out, "digraph reductions {{");
        let _ = writeln!(out, "  rankdir=TB;");
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = if n.normal_form { "doubleoctagon" } else { "box" };
            let _ = writeln!(
                out,
                "  n{} [shape={}, label=\"{} cells\\n{}\"];",
                i,
                shape,
                n.leaf_count,
                &n.fingerprint[..8]
            );
        }
        for e in &self.edges {
            let _ = writeln!(out, "  n{} -> n{} [label=\"Φ_{}\"];", e.from, e.to, e.pivot);
        }
        let _ = writeln!(out, "}}");
        out
    }
}

// ------------------------------------------------------------ confluence

#[derive(Clone, Debug, PartialEq)]
pub enum ConfluenceVerdict {
    UniqueNormalForm { node: usize },
    MultipleNormalForms { witnesses: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Peak {
    pub node: usize,
    pub left_pivot: Index,
    pub right_pivot: Index,
    pub joinable: bool,
}

#[derive(Clone, Debug)]
pub struct ConfluenceReport {
    pub normal_forms: Vec<String>,
    pub peaks: Vec<Peak>,
    pub verdict: ConfluenceVerdict,
    /// What the verdict certifies, spelled out.
    pub scope: String,
}

pub fn confluence_report(
    dag: &ReductionDag,
    ambient_dim: usize,
) -> Result<ConfluenceReport, ReduceError> {
    if !dag.complete {
        return Err(ReduceError::IncompleteDag);
    }
    let reach = dag.reachability();
    let joins = |a: usize, b: usize| -> bool {
        if a == b {
            return true;
        }
        (0..dag.nodes.len()).any(|c| (c == a || reach[a][c]) && (c == b || reach[b][c]))
    };

    let mut peaks = vec![];
    for node in 0..dag.nodes.len() {
        let out: Vec<&DagEdge> = dag.edges.iter().filter(|e| e.from == node).collect();
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                peaks.push(Peak {
                    node,
                    left_pivot: out[i].pivot.clone(),
                    right_pivot: out[j].pivot.clone(),
                    joinable: joins(out[i].to, out[j].to),
                });
            }
        }
    }

    let nf = dag.normal_forms();
    let verdict = if nf.len() == 1 {
        ConfluenceVerdict::UniqueNormalForm { node: nf[0] }
    } else {
        ConfluenceVerdict::MultipleNormalForms { witnesses: nf.clone() }
    };
    let scope = match &verdict {
        ConfluenceVerdict::MultipleNormalForms { .. } => {
            "two or more distinct minimal coarsenings of the root exist, so no minimum \
             adapted CAD exists for this family"
                .to_string()
        }
        ConfluenceVerdict::UniqueNormalForm { .. } => {
            if ambient_dim <= 2 {
                "unique normal form below the root; in ambient dimension <= 2 a minimum \
                 adapted CAD always exists, and this normal form is it"
                    .to_string()
            } else {
                "unique normal form below the root: a minimum exists below this CAD only; \
                 this is necessary evidence, not a proof, of a global minimum"
                    .to_string()
            }
        }
    };
    let normal_forms = nf.iter().map(|&i| dag.nodes[i].fingerprint.clone()).collect();
    Ok(ConfluenceReport { normal_forms, peaks, verdict, scope })
}

/// True iff the DAG's edge set equals the transitive reduction of its own
/// reachability order.
pub fn transitive_reduction_check(dag: &ReductionDag) -> Result<bool, ReduceError> {
    if !dag.complete {
        return Err(ReduceError::IncompleteDag);
    }
    let n = dag.nodes.len();
    let reach = dag.reachability();
    let mut edge_set = std::collections::BTreeSet::new();
    for e in &dag.edges {
        edge_set.insert((e.from, e.to));
    }
    let mut tr = std::collections::BTreeSet::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && reach[u][v] {
                let shortcut = (0..n).any(|w| w != u && w != v && reach[u][w] && reach[w][v]);
                if !shortcut {
                    tr.insert((u, v));
                }
            }
        }
    }
    Ok(edge_set == tr)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cad::{check_cad_structure, parse_document, CadDocument};

    pub(crate) const TROUSERS_DOC: &str = "\
cad C dim=3 class=0
level1:
cell 1: u=1; xi2=0
cell 1.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 1.2: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 1.3: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}

cad Cprime dim=3 class=0
level1: 0
cell 1: u=0
cell 2: u=0
cell 3: u=1; xi2=0
cell 1.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 2.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 3.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 3.2: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 3.3: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}

cad Cbar dim=3 class=0
level1: 0
cell 1: u=1; xi2=0
cell 2: u=1; xi2=0
cell 3: u=1; xi2=0
cell 1.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 1.2: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 1.3: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 2.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 2.2: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 2.3: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 3.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 3.2: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 3.3: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}

set T: (x1 <= 0 | x2 <= 0) & x3 = 0 | x1 > 0 & x2 > 0 & x3 = -x1/2
";

    pub(crate) fn trousers() -> (CadDocument, Family) {
        let doc = parse_document(TROUSERS_DOC).unwrap();
        let fam = Family::single("T", doc.set("T").unwrap().clone());
        (doc, fam)
    }

    fn idx(entries: &[usize]) -> Index {
        Index(entries.to_vec())
    }

    #[test]
    fn trousers_reduction_sets() {
        let (doc, fam) = trousers();
        let config = PlanConfig::default();
        for (name, pivot) in [("C", idx(&[1, 2])), ("Cprime", idx(&[3, 2]))] {
            let cad = doc.cad(name).unwrap();
            let plan = SamplePlan::build(cad, &config);
            assert!(check_cad_structure(cad, &plan).is_clean());
            let tree = build_tree(cad, &fam, &plan).unwrap();
            let reds = tree_reductions(&tree);
            assert_eq!(reds, vec![TreeReduction { pivot }], "reductions of {}", name);
        }
    }

    #[test]
    fn trousers_pivot_fails_to_lift_with_exact_witness() {
        let (doc, fam) = trousers();
        let config = PlanConfig::default();
        let cad = doc.cad("C").unwrap();
        let plan = SamplePlan::build(cad, &config);
        let verdict = liftable(cad, &fam, &idx(&[1, 2]), &plan).unwrap();
        match verdict {
            Liftability::Fails(w) => {
                assert_eq!(w.base, vec![crate::algebra::rat_int(1), crate::algebra::rat_int(0)]);
                assert_eq!(w.level, 3);
                assert_eq!(w.piece_value, crate::algebra::ExtVal::Rat(crate::algebra::rat(-1, 2)));
                assert_eq!(w.section_value, crate::algebra::ExtVal::from_int(0));
                assert_eq!(w.gap, Gap::Exact(crate::algebra::ExtVal::Rat(crate::algebra::rat(1, 2))));
            }
            other => panic!("expected exact failure, got {:?}", other),
        }
    }

    #[test]
    fn trousers_cads_are_already_minimal() {
        let (doc, fam) = trousers();
        let config = PlanConfig::default();
        for name in ["C", "Cprime"] {
            let cad = doc.cad(name).unwrap();
            let out = minimal(cad, &fam, &config).unwrap();
            assert_eq!(
                canonical_fingerprint(&out.cad, &config),
                canonical_fingerprint(cad, &config),
                "{} must come back unchanged",
                name
            );
            assert_eq!(out.trace.len(), 1);
            assert_eq!(out.trace[0].verdict, "fails");
        }
    }

    #[test]
    fn trousers_dag_has_two_normal_forms() {
        let (doc, fam) = trousers();
        let config = PlanConfig::default();
        let cbar = doc.cad("Cbar").unwrap();
        let dag = reduction_dag(cbar, &fam, &config, DagLimits::default()).unwrap();
        assert_eq!(dag.nodes.len(), 5);
        assert_eq!(dag.edges.len(), 5);
        let nf: std::collections::BTreeSet<String> =
            dag.normal_forms().into_iter().map(|i| dag.nodes[i].fingerprint.clone()).collect();
        let expected: std::collections::BTreeSet<String> = [
            canonical_fingerprint(doc.cad("C").unwrap(), &config),
            canonical_fingerprint(doc.cad("Cprime").unwrap(), &config),
        ]
        .into_iter()
        .collect();
        assert_eq!(nf, expected);
        let report = confluence_report(&dag, 3).unwrap();
        assert!(matches!(report.verdict, ConfluenceVerdict::MultipleNormalForms { .. }));
        assert!(report.peaks.iter().any(|p| !p.joinable));
        assert!(transitive_reduction_check(&dag).unwrap());
    }

    #[test]
    fn disk_pipeline_reduces_to_the_coarse_cad() {
        use crate::cad::test_cads::{disk_coarse, unit_disk_family};
        let config = PlanConfig::default();
        let coarse = disk_coarse();
        let fam = unit_disk_family();
        let plan = SamplePlan::build(&coarse, &config);
        // refine the middle sector with the section {0}: the 23-cell variant
        let fine = coarse.refine_with_section(&idx(&[3]), &Expr::int(0), &plan).unwrap();
        assert_eq!(fine.leaf_count(), 23);
        let fine_plan = SamplePlan::build(&fine, &config);
        assert!(check_cad_structure(&fine, &fine_plan).is_clean());

        let tree = build_tree(&fine, &fam, &fine_plan).unwrap();
        assert_eq!(
            tree_reductions(&tree),
            vec![TreeReduction { pivot: idx(&[4]) }],
            "only the base merge is a tree reduction"
        );
        assert_eq!(liftable(&fine, &fam, &idx(&[4]), &fine_plan).unwrap(), Liftability::Lifts);

        let reduced = apply_reduction(&fine, &fam, &idx(&[4]), &fine_plan).unwrap();
        assert_eq!(
            canonical_fingerprint(&reduced, &config),
            canonical_fingerprint(&coarse, &config)
        );
        // the tree-level reduction commutes with the geometric one
        let tree_reduced =
            crate::tree::apply_tree_reduction(&tree, &TreeReduction { pivot: idx(&[4]) }).unwrap();
        let plan2 = SamplePlan::build(&reduced, &config);
        assert_eq!(build_tree(&reduced, &fam, &plan2).unwrap(), tree_reduced);

        let out = minimal(&fine, &fam, &config).unwrap();
        assert_eq!(
            canonical_fingerprint(&out.cad, &config),
            canonical_fingerprint(&coarse, &config)
        );
        assert!(out.trace.iter().any(|t| t.applied));
    }

    #[test]
    fn minimal_dag_is_a_single_node() {
        let (doc, fam) = trousers();
        let config = PlanConfig::default();
        let dag =
            reduction_dag(doc.cad("C").unwrap(), &fam, &config, DagLimits::default()).unwrap();
        assert_eq!(dag.nodes.len(), 1);
        assert!(dag.edges.is_empty());
        let report = confluence_report(&dag, 3).unwrap();
        assert!(matches!(report.verdict, ConfluenceVerdict::UniqueNormalForm { .. }));
        assert!(transitive_reduction_check(&dag).unwrap());
    }

    #[test]
    fn fingerprints_distinguish_the_pair() {
        let (doc, _) = trousers();
        let config = PlanConfig::default();
        let a = canonical_fingerprint(doc.cad("C").unwrap(), &config);
        let b = canonical_fingerprint(doc.cad("Cprime").unwrap(), &config);
        assert_ne!(a, b);
        // round-trip through the document format preserves fingerprints
        let printed = crate::cad::print_document(&doc);
        let again = parse_document(&printed).unwrap();
        assert_eq!(canonical_fingerprint(again.cad("C").unwrap(), &config), a);
    }
}

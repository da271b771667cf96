//! CAD trees: labelled rooted odd-ary trees with bit-vector leaf labels,
//! prefix and relabelling maps, tree reduction rules and their application.
//!
//! A node's recursive label is the whole labelled subtree, so label equality
//! is subtree equality; labels of internal nodes are never stored.

use crate::cad::Index;
use std::fmt::Write as _;
use thiserror::Error;

/// Leaf label: one membership bit per family member.
pub type Label = Vec<bool>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub children: Vec<TreeNode>,
    /// Present exactly on leaves.
    pub label: Option<Label>,
}

impl TreeNode {
    pub fn leaf(label: Label) -> TreeNode {
        TreeNode { children: vec![], label: Some(label) }
    }

    pub fn internal(children: Vec<TreeNode>) -> TreeNode {
        TreeNode { children, label: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Labelled rooted odd-ary tree of uniform depth with {0,1}^p leaf labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CadTree {
    pub depth: usize,
    pub width: usize,
    pub root: TreeNode,
}

/// A reduction rule: merge the even node `pivot` with its two neighbouring
/// sectors; defined when the three recursive labels coincide.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeReduction {
    pub pivot: Index,
}

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("pivot {0} does not satisfy the label equality condition")]
    NotReducible(Index),
    #[error("index {0} is not an even node of the tree")]
    BadPivot(Index),
}

impl CadTree {
    pub fn node(&self, index: &Index) -> Option<&TreeNode> {
        let mut node = &self.root;
        for &j in &index.0 {
            node = node.children.get(j - 1)?;
        }
        Some(node)
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            if n.is_leaf() {
                1
            } else {
                n.children.iter().map(count).sum()
            }
        }
        count(&self.root)
    }

    /// Leaves in index order.
    pub fn leaves(&self) -> Vec<(Index, Label)> {
        let mut out = vec![];
        fn walk(node: &TreeNode, index: Index, out: &mut Vec<(Index, Label)>) {
            if let Some(label) = &node.label {
                out.push((index, label.clone()));
                return;
            }
            for (i, c) in node.children.iter().enumerate() {
                walk(c, index.child(i + 1), out);
            }
        }
        walk(&self.root, Index::root(), &mut out);
        out
    }

    /// All node indices in breadth-first order (root excluded).
    pub fn node_indices(&self) -> Vec<Index> {
        let mut out = vec![];
        let mut frontier = vec![(Index::root(), &self.root)];
        while !frontier.is_empty() {
            let mut next = vec![];
            for (idx, node) in frontier {
                for (i, c) in node.children.iter().enumerate() {
                    let child = idx.child(i + 1);
                    out.push(child.clone());
                    next.push((child, c));
                }
            }
            frontier = next;
        }
        out
    }
}

/// The k-th prefix map: first k entries, shorter tuples unchanged.
pub fn prefix(index: &Index, k: usize) -> Index {
    index.prefix(k)
}

/// Index relabelling map for an even pivot A at level k: subtract e_k under
/// the pivot, 2·e_k to the right of it, identity elsewhere.
pub fn psi(pivot: &Index, index: &Index) -> Index {
    let k = pivot.level();
    debug_assert!(pivot.is_even());
    if index.level() < k {
        return index.clone();
    }
    let p = index.prefix(k);
    if p == *pivot {
        let mut v = index.0.clone();
        v[k - 1] -= 1;
        return Index(v);
    }
    if p.0[..k - 1] == pivot.0[..k - 1] && p.0[k - 1] > pivot.0[k - 1] {
        let mut v = index.0.clone();
        v[k - 1] -= 2;
        return Index(v);
    }
    index.clone()
}

/// Every even node whose recursive label equals both neighbours': exactly
/// the applicable reduction rules, in breadth-first pivot order.
pub fn tree_reductions(tree: &CadTree) -> Vec<TreeReduction> {
    let mut out = vec![];
    for idx in tree.node_indices() {
        if !idx.is_even() {
            continue;
        }
        let j = idx.last();
        let parent = tree.node(&idx.parent()).expect("parent exists");
        // an even child always has both neighbours in an odd-ary tree
        let mid = &parent.children[j - 1];
        let left = &parent.children[j - 2];
        let right = &parent.children[j];
        if left == mid && mid == right {
            out.push(TreeReduction { pivot: idx });
        }
    }
    out
}

/// Applies `Ψ_pivot`: the pivot's parent loses the pivot child and its right
/// neighbour, keeping the (identical) left subtree for the merged cell.
pub fn apply_tree_reduction(tree: &CadTree, reduction: &TreeReduction) -> Result<CadTree, TreeError> {
    let pivot = &reduction.pivot;
    if !pivot.is_even() || tree.node(pivot).is_none() {
        return Err(TreeError::BadPivot(pivot.clone()));
    }
    let j = pivot.last();
    let parent = tree.node(&pivot.parent()).unwrap();
    if parent.children[j - 2] != parent.children[j - 1]
        || parent.children[j - 1] != parent.children[j]
    {
        return Err(TreeError::NotReducible(pivot.clone()));
    }

    fn rebuild(node: &TreeNode, path: &[usize], j: usize) -> TreeNode {
        match path.split_first() {
            None => {
                // this is the pivot's parent: children j−1, j, j+1 (1-based)
                // collapse to the shared subtree
                let mut children = Vec::with_capacity(node.children.len() - 2);
                children.extend_from_slice(&node.children[..j - 2]);
                children.push(node.children[j - 2].clone());
                children.extend_from_slice(&node.children[j + 1..]);
                TreeNode { children, label: node.label.clone() }
            }
            Some((&step, rest)) => {
                let mut children = node.children.clone();
                children[step - 1] = rebuild(&node.children[step - 1], rest, j);
                TreeNode { children, label: node.label.clone() }
            }
        }
    }

    let parent_path = &pivot.0[..pivot.level() - 1];
    Ok(CadTree {
        depth: tree.depth,
        width: tree.width,
        root: rebuild(&tree.root, parent_path, j),
    })
}

/// Itemized violations of the CAD tree shape invariants.
#[derive(Clone, Debug, Default)]
pub struct TreeReport {
    pub issues: Vec<String>,
}

impl TreeReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate_tree(tree: &CadTree) -> TreeReport {
    let mut issues = vec![];
    fn walk(node: &TreeNode, index: &Index, depth: usize, tree: &CadTree, issues: &mut Vec<String>) {
        if node.is_leaf() {
            if depth != tree.depth {
                issues.push(format!("short leaf at node {} (depth {})", index, depth));
            }
            match &node.label {
                None => issues.push(format!("leaf {} has no label", index)),
                Some(l) if l.len() != tree.width => {
                    issues.push(format!("leaf {} label width {} != {}", index, l.len(), tree.width))
                }
                _ => {}
            }
        } else {
            if node.children.len() % 2 == 0 {
                issues.push(format!("even arity at node {} ({} children)", index, node.children.len()));
            }
            if node.label.is_some() {
                issues.push(format!("internal node {} carries a stored label", index));
            }
            for (i, c) in node.children.iter().enumerate() {
                walk(c, &index.child(i + 1), depth + 1, tree, issues);
            }
        }
    }
    walk(&tree.root, &Index::root(), 0, tree, &mut issues);
    TreeReport { issues }
}

fn label_str(label: &Label) -> String {
    label.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Indented text dump: `I u=<m> [labels]` per node.
pub fn dump_tree(tree: &CadTree) -> String {
    let mut out = String::new();
    fn walk(node: &TreeNode, index: &Index, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match &node.label {
            Some(l) => {
                let _ = writeln!(out, "{}{} [{}]", pad, index, label_str(l));
            }
            None => {
                let _ = writeln!(out, "{}{} u={}", pad, index, node.children.len() / 2);
            }
        }
        for (i, c) in node.children.iter().enumerate() {
            walk(c, &index.child(i + 1), depth + 1, out);
        }
    }
    walk(&tree.root, &Index::root(), 0, &mut out);
    out
}

/// DOT export; leaves are green (all-ones label), red (all-zeros) or grey,
/// with the bit string as label.
pub fn tree_to_dot(tree: &CadTree, comment: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "// {}", comment);
    let _ = writeln!(out, "digraph cadtree {{");
    let _ = writeln!(out, "  node [shape=circle, style=filled, fillcolor=white];");
    fn walk(node: &TreeNode, index: &Index, out: &mut String) {
        let id = if index.level() == 0 { "e".to_string() } else { format!("{}", index) };
        match &node.label {
            Some(l) => {
                let color = if l.iter().all(|&b| b) {
                    "green"
                } else if l.iter().all(|&b| !b) {
                    "red"
                } else {
                    "lightgrey"
                };
                let _ = writeln!(
                    out,
                    "  \"{}\" [shape=box, fillcolor={}, label=\"{}\\n{}\"];",
                    id,
                    color,
                    id,
                    label_str(l)
                );
            }
            None => {
                let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", id, id);
            }
        }
        for (i, c) in node.children.iter().enumerate() {
            let child = index.child(i + 1);
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", id, child);
            walk(c, &child, out);
        }
    }
    walk(&tree.root, &Index::root(), &mut out);
    let _ = writeln!(out, "}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(entries: &[usize]) -> Index {
        Index(entries.to_vec())
    }

    #[test]
    fn prefix_map() {
        assert_eq!(prefix(&idx(&[2, 3, 1]), 2), idx(&[2, 3]));
        assert_eq!(prefix(&idx(&[2]), 2), idx(&[2]));
        assert_eq!(prefix(&idx(&[1, 2, 3]), 3), idx(&[1, 2, 3]));
    }

    #[test]
    fn psi_branches() {
        let a = idx(&[4]);
        assert_eq!(psi(&a, &idx(&[4])), idx(&[3]));
        assert_eq!(psi(&a, &idx(&[5])), idx(&[3]));
        assert_eq!(psi(&a, &idx(&[6])), idx(&[4]));
        assert_eq!(psi(&a, &idx(&[3])), idx(&[3]));
        assert_eq!(psi(&a, &idx(&[6, 1])), idx(&[4, 1]));
        assert_eq!(psi(&idx(&[1, 2]), &idx(&[1, 3, 2])), idx(&[1, 1, 2]));
    }

    /// Tree of the 9-cell decomposition adapted to the semi-linear
    /// Trousers: one cylinder of three, each with labels (0,1,0).
    fn trousers_tree() -> CadTree {
        let cyl = TreeNode::internal(vec![
            TreeNode::leaf(vec![false]),
            TreeNode::leaf(vec![true]),
            TreeNode::leaf(vec![false]),
        ]);
        CadTree {
            depth: 3,
            width: 1,
            root: TreeNode::internal(vec![TreeNode::internal(vec![cyl.clone(), cyl.clone(), cyl])]),
        }
    }

    #[test]
    fn trousers_tree_has_single_reduction() {
        let tree = trousers_tree();
        assert_eq!(tree.leaf_count(), 9);
        let reds = tree_reductions(&tree);
        assert_eq!(reds, vec![TreeReduction { pivot: idx(&[1, 2]) }]);
    }

    #[test]
    fn apply_collapses_cylinders() {
        let tree = trousers_tree();
        let red = TreeReduction { pivot: idx(&[1, 2]) };
        let reduced = apply_tree_reduction(&tree, &red).unwrap();
        assert_eq!(reduced.leaf_count(), 3);
        assert!(validate_tree(&reduced).is_clean());
        let labels: Vec<Label> = reduced.leaves().into_iter().map(|(_, l)| l).collect();
        assert_eq!(labels, vec![vec![false], vec![true], vec![false]]);
        // leaf-count law: drop of 2 × leaves-with-pivot-prefix
        assert_eq!(reduced.leaf_count(), tree.leaf_count() - 2 * 3);
    }

    #[test]
    fn irreducible_pivot_rejected() {
        let tree = trousers_tree();
        let bad = TreeReduction { pivot: idx(&[1, 1, 2]) };
        assert_eq!(
            apply_tree_reduction(&tree, &bad),
            Err(TreeError::NotReducible(idx(&[1, 1, 2])))
        );
    }

    #[test]
    fn validation_catches_shape_errors() {
        let even = CadTree {
            depth: 1,
            width: 1,
            root: TreeNode::internal(vec![
                TreeNode::leaf(vec![true]),
                TreeNode::leaf(vec![false]),
            ]),
        };
        assert!(validate_tree(&even).issues.iter().any(|m| m.contains("even arity")));

        let short = CadTree {
            depth: 2,
            width: 1,
            root: TreeNode::internal(vec![
                TreeNode::leaf(vec![true]),
                TreeNode::internal(vec![
                    TreeNode::leaf(vec![true]),
                    TreeNode::leaf(vec![true]),
                    TreeNode::leaf(vec![true]),
                ]),
                TreeNode::leaf(vec![true]),
            ]),
        };
        assert!(validate_tree(&short).issues.iter().any(|m| m.contains("short leaf")));
    }
}

//! Concrete cylindrical algebraic decompositions (CADs) adapted to finite
//! families of semi-algebraic sets, and their simplification to minimal CADs.
//!
//! A CAD of ℝⁿ is stored level by level: exact section values on the line,
//! then ordered lists of section expressions over every lower-level cell.
//! The combinatorial skeleton of a CAD together with per-cell membership
//! bits forms a [`tree::CadTree`]; merging a section with its two
//! neighbouring sectors is a tree reduction, and a tree reduction that glues
//! geometrically is a CAD reduction. Chasing reductions to a fixpoint yields
//! a minimal CAD ([`reduce::minimal`]); exploring all reduction orders yields
//! a DAG whose normal forms decide minimum existence below the start CAD
//! ([`reduce::reduction_dag`], [`reduce::confluence_report`]).
//!
//! The [`oracle`] module provides brute-force ground truth at tiny scale by
//! enumerating coarsening partitions directly, and [`corpus`] ships encodings
//! of the worked examples the engine is validated against.

pub mod algebra;
pub mod cad;
pub mod corpus;
pub mod exec;
pub mod lowdim;
pub mod oracle;
pub mod reduce;
pub mod tree;

pub use algebra::{ExtVal, Expr, Rat, SaPredicate};
pub use cad::{ConcreteCad, Family, Index, PlanConfig, SamplePlan};

//! Structural consistency of a CAD at plan resolution: level-1 sections
//! strictly increasing exactly, higher section lists strictly increasing and
//! determinate at every interior sample of their base cell.

use super::{ConcreteCad, Index, SamplePlan};
use crate::algebra::eval;
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum StructureIssue {
    Level1NotIncreasing { position: usize },
    Level1Indeterminate { position: usize },
    SectionsOutOfOrder { cell: Index, sample: String, position: usize },
    SectionIndeterminate { cell: Index, sample: String, position: usize },
    NoDecidableSample { cell: Index },
}

impl fmt::Display for StructureIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureIssue::Level1NotIncreasing { position } => {
                write!(f, "level-1 sections not strictly increasing at position {}", position)
            }
            StructureIssue::Level1Indeterminate { position } => {
                write!(f, "level-1 section {} is indeterminate", position)
            }
            StructureIssue::SectionsOutOfOrder { cell, sample, position } => write!(
                f,
                "sections over cell {} out of order at sample {} (position {})",
                cell, sample, position
            ),
            StructureIssue::SectionIndeterminate { cell, sample, position } => write!(
                f,
                "section {} over cell {} undecidable at sample {}",
                position, cell, sample
            ),
            StructureIssue::NoDecidableSample { cell } => {
                write!(f, "cell {} has no decidable interior sample", cell)
            }
        }
    }
}

/// Consistency report; empty = structurally consistent at plan resolution.
#[derive(Clone, Debug, Default)]
pub struct StructureReport {
    pub issues: Vec<StructureIssue>,
}

impl StructureReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            writeln!(f, "structure: consistent at plan resolution")
        } else {
            for issue in &self.issues {
                writeln!(f, "structure: {}", issue)?;
            }
            Ok(())
        }
    }
}

pub fn check_cad_structure(cad: &ConcreteCad, plan: &SamplePlan) -> StructureReport {
    let mut issues = vec![];

    for (i, pair) in cad.level1.windows(2).enumerate() {
        match pair[0].cmp_exact(&pair[1]) {
            Some(Ordering::Less) => {}
            Some(_) => issues.push(StructureIssue::Level1NotIncreasing { position: i + 1 }),
            None => issues.push(StructureIssue::Level1Indeterminate { position: i + 1 }),
        }
    }
    for (i, v) in cad.level1.iter().enumerate() {
        if v.is_indeterminate() {
            issues.push(StructureIssue::Level1Indeterminate { position: i + 1 });
        }
    }

    for level in 1..cad.dim {
        for cell in cad.cells_at_level(level) {
            let node = cad.node(&cell).unwrap();
            if node.sections.is_empty() {
                continue;
            }
            let samples = plan.samples(&cell);
            if samples.is_empty() {
                issues.push(StructureIssue::NoDecidableSample { cell: cell.clone() });
                continue;
            }
            for s in samples {
                let sample = super::plan::describe_point(s);
                let mut values = vec![];
                let mut bad = false;
                for (pos, e) in node.sections.iter().enumerate() {
                    match eval(e, s) {
                        Ok(v) if !v.is_indeterminate() => values.push(v),
                        _ => {
                            issues.push(StructureIssue::SectionIndeterminate {
                                cell: cell.clone(),
                                sample: sample.clone(),
                                position: pos + 1,
                            });
                            bad = true;
                            break;
                        }
                    }
                }
                if bad {
                    continue;
                }
                for (pos, pair) in values.windows(2).enumerate() {
                    if pair[0].cmp_exact(&pair[1]) != Some(Ordering::Less) {
                        issues.push(StructureIssue::SectionsOutOfOrder {
                            cell: cell.clone(),
                            sample: sample.clone(),
                            position: pos + 1,
                        });
                    }
                }
            }
        }
    }

    StructureReport { issues }
}

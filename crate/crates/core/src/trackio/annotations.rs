//! Ground-truth activity annotations.
//!
//! One JSON record per line. Symmetric groups declare an id that inter-group
//! records refer to:
//!
//! ```text
//! {"kind":"sym","label":"Fight","frames":[0,120],"members":[1,2,3],"group_id":"g1"}
//! {"kind":"sym","label":"single","frames":[0,120],"members":[4],"group_id":"g2"}
//! {"kind":"asym","label":"Approach","frames":[10,120],"groups":["g1","g2"]}
//! ```
//!
//! `frames` is inclusive. Pairs of groups without an inter-group record are
//! taken to be in the non-interaction activity of the taxonomy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Frame, PersonId};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub label: String,
    pub frames: [Frame; 2],
    pub members: BTreeSet<PersonId>,
    pub group_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub label: String,
    pub frames: [Frame; 2],
    pub groups: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AnnotationRecord {
    #[serde(rename = "sym")]
    Group(GroupRecord),
    #[serde(rename = "asym")]
    Relation(RelationRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: unknown activity label `{label}`")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: `{label}` is not valid at the {level} level")]
    WrongLevel {
        line: usize,
        label: String,
        level: &'static str,
    },
    #[error("line {line}: group `{group}` was not declared before use")]
    UndeclaredGroup { line: usize, group: String },
    #[error("line {line}: group id `{group}` declared twice")]
    DuplicateGroup { line: usize, group: String },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("line {line}: person {person} already belongs to group `{other}` in overlapping frames")]
    Overlap {
        line: usize,
        person: PersonId,
        other: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    groups: Vec<GroupRecord>,
    relations: Vec<RelationRecord>,
}

fn overlaps(a: [Frame; 2], b: [Frame; 2]) -> bool {
    a[0] <= b[1] && b[0] <= a[1]
}

impl AnnotationSet {
    /// Validates records in order; `line` numbers in errors are 1-based record indices.
    pub fn from_records(
        records: impl IntoIterator<Item = AnnotationRecord>,
        taxonomy: &Taxonomy,
    ) -> Result<Self, AnnotationError> {
        let mut set = AnnotationSet::default();
        for (i, r) in records.into_iter().enumerate() {
            set.push(r, taxonomy, i + 1)?;
        }
        Ok(set)
    }

    fn push(
        &mut self,
        record: AnnotationRecord,
        taxonomy: &Taxonomy,
        line: usize,
    ) -> Result<(), AnnotationError> {
        let (label, frames) = match &record {
            AnnotationRecord::Group(g) => (&g.label, g.frames),
            AnnotationRecord::Relation(r) => (&r.label, r.frames),
        };
        let class = taxonomy
            .class(label)
            .ok_or_else(|| AnnotationError::UnknownLabel {
                line,
                label: label.clone(),
            })?;
        if frames[0] > frames[1] {
            return Err(AnnotationError::Invalid {
                line,
                reason: format!("empty frame interval [{}, {}]", frames[0], frames[1]),
            });
        }
        match record {
            AnnotationRecord::Group(g) => {
                if !class.is_group_level() {
                    return Err(AnnotationError::WrongLevel {
                        line,
                        label: g.label,
                        level: "group",
                    });
                }
                if g.members.is_empty() {
                    return Err(AnnotationError::Invalid {
                        line,
                        reason: "symmetric record without members".into(),
                    });
                }
                if self.groups.iter().any(|o| o.group_id == g.group_id) {
                    return Err(AnnotationError::DuplicateGroup {
                        line,
                        group: g.group_id,
                    });
                }
                for other in self.groups.iter().filter(|o| overlaps(o.frames, g.frames)) {
                    if let Some(p) = other.members.intersection(&g.members).next() {
                        return Err(AnnotationError::Overlap {
                            line,
                            person: *p,
                            other: other.group_id.clone(),
                        });
                    }
                }
                self.groups.push(g);
            }
            AnnotationRecord::Relation(r) => {
                if !class.is_inter_group() {
                    return Err(AnnotationError::WrongLevel {
                        line,
                        label: r.label,
                        level: "inter-group",
                    });
                }
                if r.groups[0] == r.groups[1] {
                    return Err(AnnotationError::Invalid {
                        line,
                        reason: format!("group `{}` related to itself", r.groups[0]),
                    });
                }
                for gid in &r.groups {
                    let Some(g) = self.groups.iter().find(|g| &g.group_id == gid) else {
                        return Err(AnnotationError::UndeclaredGroup {
                            line,
                            group: gid.clone(),
                        });
                    };
                    if r.frames[0] < g.frames[0] || r.frames[1] > g.frames[1] {
                        return Err(AnnotationError::Invalid {
                            line,
                            reason: format!("interval exceeds the lifetime of group `{gid}`"),
                        });
                    }
                }
                self.relations.push(r);
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[GroupRecord] {
        &self.groups
    }

    pub fn relations(&self) -> &[RelationRecord] {
        &self.relations
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Records in declaration order, groups first.
    pub fn records(&self) -> impl Iterator<Item = AnnotationRecord> + '_ {
        self.groups
            .iter()
            .cloned()
            .map(AnnotationRecord::Group)
            .chain(self.relations.iter().cloned().map(AnnotationRecord::Relation))
    }

    /// Inclusive range covered by symmetric records.
    pub fn frame_range(&self) -> Option<(Frame, Frame)> {
        let lo = self.groups.iter().map(|g| g.frames[0]).min()?;
        let hi = self.groups.iter().map(|g| g.frames[1]).max()?;
        Some((lo, hi))
    }

    /// Ground truth at `frame`, or `None` when no symmetric record covers it.
    pub fn frame_truth(&self, frame: Frame, taxonomy: &Taxonomy) -> Option<TruthFrame> {
        let mut active: Vec<&GroupRecord> = self
            .groups
            .iter()
            .filter(|g| g.frames[0] <= frame && frame <= g.frames[1])
            .collect();
        if active.is_empty() {
            return None;
        }
        active.sort_by_key(|g| g.members.iter().next().copied());
        let index: BTreeMap<&str, usize> = active
            .iter()
            .enumerate()
            .map(|(i, g)| (g.group_id.as_str(), i))
            .collect();
        let mut explicit: BTreeMap<(usize, usize), &str> = BTreeMap::new();
        for r in self
            .relations
            .iter()
            .filter(|r| r.frames[0] <= frame && frame <= r.frames[1])
        {
            if let (Some(&a), Some(&b)) = (index.get(r.groups[0].as_str()), index.get(r.groups[1].as_str())) {
                explicit.insert((a.min(b), a.max(b)), r.label.as_str());
            }
        }
        let default = taxonomy.non_interaction();
        let mut relations = Vec::new();
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let label = explicit.get(&(a, b)).copied().or(default);
                if let Some(label) = label {
                    relations.push(TruthRelation {
                        groups: [a, b],
                        label: label.to_string(),
                    });
                }
            }
        }
        let start = active.iter().map(|g| g.frames[0]).max().unwrap_or(frame);
        let relation_start = self
            .relations
            .iter()
            .filter(|r| r.frames[0] <= frame && frame <= r.frames[1])
            .map(|r| r.frames[0])
            .max()
            .unwrap_or(start);
        Some(TruthFrame {
            frame,
            latest_start: start.max(relation_start),
            groups: active
                .into_iter()
                .map(|g| TruthGroup {
                    group_id: g.group_id.clone(),
                    label: g.label.clone(),
                    members: g.members.clone(),
                })
                .collect(),
            relations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthGroup {
    pub group_id: String,
    pub label: String,
    pub members: BTreeSet<PersonId>,
}

/// Relation between `groups[0]` and `groups[1]` (indices into the frame's groups).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRelation {
    pub groups: [usize; 2],
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthFrame {
    pub frame: Frame,
    /// Start of the most recently begun record covering this frame.
    pub latest_start: Frame,
    pub groups: Vec<TruthGroup>,
    pub relations: Vec<TruthRelation>,
}

impl TruthFrame {
    pub fn persons(&self) -> BTreeSet<PersonId> {
        self.groups.iter().flat_map(|g| g.members.iter().copied()).collect()
    }
}

/// Parses annotations against the standard taxonomy.
pub fn parse_annotations(text: &str) -> Result<AnnotationSet, AnnotationError> {
    parse_annotations_with(text, &Taxonomy::standard())
}

pub fn parse_annotations_with(
    text: &str,
    taxonomy: &Taxonomy,
) -> Result<AnnotationSet, AnnotationError> {
    let mut set = AnnotationSet::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let record: AnnotationRecord =
            serde_json::from_str(line).map_err(|e| AnnotationError::Malformed {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        set.push(record, taxonomy, idx + 1)?;
    }
    Ok(set)
}

pub fn write_annotations(set: &AnnotationSet) -> String {
    let mut out = String::new();
    for r in set.records() {
        let _ = writeln!(out, "{}", serde_json::to_string(&r).expect("records serialize"));
    }
    out
}

//! Frame-level evaluation of detections against ground truth.
//!
//! * GCER: frames where anybody is clustered differently from the truth.
//! * EDER: frames with a clustering error, a wrong group label or a wrong
//!   label between two correctly clustered groups.
//! * TFER: frames where some person's group label, or the label between two
//!   people of different truth groups, is not detected. It reads labels
//!   through each person's detected group, so it does not require the
//!   partition itself to be exact.
//! * Per activity, Miss and FA count frames where the activity is present
//!   in the truth but not detected, and detected but not present.
//!
//! Only frames covered by truth and by the detection range are scored. A
//! warm-up excludes frames less than `warmup` frames after the most recent
//! record start, when the observation window still mixes in earlier
//! activity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::grad::{group_id, DetectedGroup, DetectedPair, FrameDetection};
use crate::taxonomy::Taxonomy;
use crate::trackio::{AnnotationSet, Frame, PersonId, TruthFrame};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("detections cover frames {det:?} but truth covers {truth:?}; nothing to compare")]
    DisjointRanges {
        det: Option<(Frame, Frame)>,
        truth: Option<(Frame, Frame)>,
    },
    #[error("person sets differ: {0:?}")]
    UniverseMismatch(BTreeSet<PersonId>),
}

/// A count over a count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub count: usize,
    pub total: usize,
}

impl Ratio {
    /// `None` when the denominator is zero.
    pub fn value(&self) -> Option<f64> {
        (self.total > 0).then(|| self.count as f64 / self.total as f64)
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.count += usize::from(hit);
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v:.6} ({}/{})", self.count, self.total),
            None => write!(f, "undefined (0/0)"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ActivityRates {
    /// Missed frames over frames where the activity is present.
    pub miss: Ratio,
    /// False-alarm frames over frames where it is absent.
    pub fa: Ratio,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub tfer: Ratio,
    pub gcer: Ratio,
    pub eder: Ratio,
    pub activities: BTreeMap<String, ActivityRates>,
    /// Scored frames with no detection (skipped by the pipeline).
    pub missing_frames: usize,
    /// Frames that had any error clause, in order.
    #[serde(skip)]
    pub error_frames: Vec<Frame>,
}

impl EvalReport {
    /// Stable plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tfer {}", self.tfer);
        let _ = writeln!(s, "gcer {}", self.gcer);
        let _ = writeln!(s, "eder {}", self.eder);
        let _ = writeln!(s, "missing_frames {}", self.missing_frames);
        for (l, r) in &self.activities {
            let _ = writeln!(s, "activity {l} miss {} fa {}", r.miss, r.fa);
        }
        s
    }

    /// `activity,miss,miss_count,positives,fa,fa_count,negatives`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("activity,miss,miss_count,positives,fa,fa_count,negatives\n");
        let v = |r: &Ratio| r.value().map_or(String::new(), |x| format!("{x:.6}"));
        for (l, r) in &self.activities {
            let _ = writeln!(
                s,
                "{l},{},{},{},{},{},{}",
                v(&r.miss),
                r.miss.count,
                r.miss.total,
                v(&r.fa),
                r.fa.count,
                r.fa.total
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    pub warmup: Frame,
}

/// People whose predicted group differs, as a member set, from their true
/// group.
pub fn partition_match(
    predicted: &[BTreeSet<PersonId>],
    truth: &[BTreeSet<PersonId>],
) -> Result<BTreeSet<PersonId>, MetricsError> {
    let owner = |groups: &[BTreeSet<PersonId>]| -> BTreeMap<PersonId, usize> {
        groups
            .iter()
            .enumerate()
            .flat_map(|(k, g)| g.iter().map(move |&p| (p, k)))
            .collect()
    };
    let (po, to) = (owner(predicted), owner(truth));
    let seen: BTreeSet<PersonId> = po.keys().copied().collect();
    let universe: BTreeSet<PersonId> = to.keys().copied().collect();
    if seen != universe {
        return Err(MetricsError::UniverseMismatch(
            seen.symmetric_difference(&universe).copied().collect(),
        ));
    }
    Ok(to
        .iter()
        .filter(|(p, &k)| predicted[po[p]] != truth[k])
        .map(|(&p, _)| p)
        .collect())
}

struct FrameVerdict {
    clustering: bool,
    error: bool,
    misdetection: bool,
}

fn judge(det: &FrameDetection, truth: &TruthFrame) -> FrameVerdict {
    let pred: Vec<BTreeSet<PersonId>> = det.groups.iter().map(|g| g.members.iter().copied().collect()).collect();
    let true_sets: Vec<&BTreeSet<PersonId>> = truth.groups.iter().map(|g| &g.members).collect();
    let owned: Vec<BTreeSet<PersonId>> = true_sets.iter().map(|s| (*s).clone()).collect();
    let clustering = partition_match(&pred, &owned).map_or(true, |m| !m.is_empty());
    let matching: Vec<Option<usize>> = true_sets
        .iter()
        .map(|s| pred.iter().position(|p| &p == s))
        .collect();
    let pair_label = |x: usize, y: usize| -> Option<&str> {
        let (ix, iy) = (&det.groups[x].id, &det.groups[y].id);
        det.pairs
            .iter()
            .find(|p| (&p.a == ix && &p.b == iy) || (&p.a == iy && &p.b == ix))
            .map(|p| p.label.as_str())
    };
    let symmetric = truth
        .groups
        .iter()
        .zip(&matching)
        .any(|(g, m)| m.is_some_and(|k| det.groups[k].label != g.label));
    let inter = truth.relations.iter().any(|r| {
        match (matching[r.groups[0]], matching[r.groups[1]]) {
            (Some(x), Some(y)) => pair_label(x, y) != Some(r.label.as_str()),
            _ => false,
        }
    });
    let person_group: BTreeMap<PersonId, usize> = det
        .groups
        .iter()
        .enumerate()
        .flat_map(|(k, g)| g.members.iter().map(move |&p| (p, k)))
        .collect();
    let person_label_wrong = truth.groups.iter().any(|g| {
        g.members
            .iter()
            .any(|p| person_group.get(p).is_none_or(|&k| det.groups[k].label != g.label))
    });
    let relation_wrong = truth.relations.iter().any(|r| {
        let (ga, gb) = (&truth.groups[r.groups[0]], &truth.groups[r.groups[1]]);
        ga.members.iter().any(|i| {
            gb.members.iter().any(|j| match (person_group.get(i), person_group.get(j)) {
                (Some(&x), Some(&y)) if x != y => pair_label(x, y) != Some(r.label.as_str()),
                _ => true,
            })
        })
    });
    FrameVerdict {
        clustering,
        error: clustering || symmetric || inter,
        misdetection: person_label_wrong || relation_wrong,
    }
}

fn truth_labels(t: &TruthFrame) -> BTreeSet<&str> {
    t.groups
        .iter()
        .map(|g| g.label.as_str())
        .chain(t.relations.iter().map(|r| r.label.as_str()))
        .collect()
}

fn detected_labels(d: &FrameDetection) -> BTreeSet<&str> {
    d.groups
        .iter()
        .map(|g| g.label.as_str())
        .chain(d.pairs.iter().map(|p| p.label.as_str()))
        .collect()
}

/// Scores `detections` (sorted by frame) against `truth`.
pub fn score(
    detections: &[FrameDetection],
    truth: &AnnotationSet,
    taxonomy: &Taxonomy,
    opts: ScoreOptions,
) -> Result<EvalReport, MetricsError> {
    let det_range = detections
        .first()
        .zip(detections.last())
        .map(|(a, b)| (a.frame, b.frame));
    let truth_range = truth.frame_range();
    let (Some((dlo, dhi)), Some((tlo, thi))) = (det_range, truth_range) else {
        return Err(MetricsError::DisjointRanges {
            det: det_range,
            truth: truth_range,
        });
    };
    let (lo, hi) = (dlo.max(tlo), dhi.min(thi));
    if lo > hi {
        return Err(MetricsError::DisjointRanges {
            det: det_range,
            truth: truth_range,
        });
    }
    let by_frame: BTreeMap<Frame, &FrameDetection> = detections.iter().map(|d| (d.frame, d)).collect();
    let mut report = EvalReport {
        activities: taxonomy
            .labels()
            .map(|l| (l.to_string(), ActivityRates::default()))
            .collect(),
        ..EvalReport::default()
    };
    for t in lo..=hi {
        let Some(tf) = truth.frame_truth(t, taxonomy) else {
            continue;
        };
        if t < tf.latest_start.saturating_add(opts.warmup) {
            continue;
        }
        let present = truth_labels(&tf);
        let (verdict, detected) = match by_frame.get(&t) {
            Some(d) => (judge(d, &tf), detected_labels(d)),
            None => {
                report.missing_frames += 1;
                let all_wrong = FrameVerdict {
                    clustering: true,
                    error: true,
                    misdetection: true,
                };
                (all_wrong, BTreeSet::new())
            }
        };
        report.gcer.add(verdict.clustering);
        report.eder.add(verdict.error);
        report.tfer.add(verdict.misdetection);
        if verdict.error {
            report.error_frames.push(t);
        }
        for (label, rates) in &mut report.activities {
            let (p, d) = (present.contains(label.as_str()), detected.contains(label.as_str()));
            if p {
                rates.miss.add(!d);
            } else {
                rates.fa.add(d);
            }
        }
    }
    Ok(report)
}

/// The truth rendered as detections, for frames in `range`.
pub fn detections_from_truth(truth: &AnnotationSet, taxonomy: &Taxonomy, range: (Frame, Frame)) -> Vec<FrameDetection> {
    (range.0..=range.1)
        .filter_map(|t| truth.frame_truth(t, taxonomy))
        .map(|tf| {
            let groups: Vec<DetectedGroup> = tf
                .groups
                .iter()
                .map(|g| DetectedGroup {
                    id: group_id(&g.members),
                    members: g.members.iter().copied().collect(),
                    label: g.label.clone(),
                    representatives: g.members.iter().copied().collect(),
                })
                .collect();
            let pairs = tf
                .relations
                .iter()
                .map(|r| DetectedPair {
                    a: groups[r.groups[0]].id.clone(),
                    b: groups[r.groups[1]].id.clone(),
                    label: r.label.clone(),
                })
                .collect();
            FrameDetection {
                frame: tf.frame,
                groups,
                pairs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trackio::{AnnotationRecord, GroupRecord, RelationRecord};
    use proptest::prelude::*;

    fn set(v: &[PersonId]) -> BTreeSet<PersonId> {
        v.iter().copied().collect()
    }

    fn fixture(frames: Frame) -> AnnotationSet {
        let g = |label: &str, members: &[PersonId], id: &str| {
            AnnotationRecord::Group(GroupRecord {
                label: label.into(),
                frames: [0, frames - 1],
                members: set(members),
                group_id: id.into(),
            })
        };
        AnnotationSet::from_records(
            vec![
                g("Fight", &[1, 2, 3], "a"),
                g("single", &[4], "b"),
                AnnotationRecord::Relation(RelationRecord {
                    label: "Approach".into(),
                    frames: [0, frames - 1],
                    groups: ["b".into(), "a".into()],
                }),
            ],
            &Taxonomy::standard(),
        )
        .unwrap()
    }

    #[test]
    fn partition_match_cases() {
        assert!(partition_match(&[set(&[1, 2]), set(&[3])], &[set(&[1, 2]), set(&[3])])
            .unwrap()
            .is_empty());
        assert_eq!(
            partition_match(&[set(&[1]), set(&[2]), set(&[3])], &[set(&[1, 2]), set(&[3])]).unwrap(),
            set(&[1, 2])
        );
        assert!(matches!(
            partition_match(&[set(&[1])], &[set(&[1, 2])]),
            Err(MetricsError::UniverseMismatch(_))
        ));
    }

    #[test]
    fn perfect_detections_score_zero() {
        let tax = Taxonomy::standard();
        let ann = fixture(10);
        let det = detections_from_truth(&ann, &tax, (0, 9));
        let r = score(&det, &ann, &tax, ScoreOptions::default()).unwrap();
        assert_eq!(r.eder, Ratio { count: 0, total: 10 });
        assert_eq!(r.gcer.count + r.tfer.count, 0);
        assert!(r.activities.values().all(|a| a.miss.count == 0 && a.fa.count == 0));
        assert_eq!(r.activities["Fight"].miss.total, 10);
        assert_eq!(r.activities["Chase"].fa.total, 10);
    }

    #[test]
    fn one_bad_label_frame_in_ten() {
        let tax = Taxonomy::standard();
        let ann = fixture(10);
        let mut det = detections_from_truth(&ann, &tax, (0, 9));
        det[3].pairs[0].label = "Ignore".into();
        let r = score(&det, &ann, &tax, ScoreOptions::default()).unwrap();
        assert_eq!(r.eder.value(), Some(0.1));
        assert_eq!(r.gcer.value(), Some(0.0));
        assert_eq!(r.tfer.value(), Some(0.1));
        assert_eq!(r.activities["Approach"].miss, Ratio { count: 1, total: 10 });
        assert_eq!(r.activities["Ignore"].fa, Ratio { count: 1, total: 10 });
        assert_eq!(r.error_frames, vec![3]);
    }

    #[test]
    fn warmup_and_skipped_frames() {
        let tax = Taxonomy::standard();
        let ann = fixture(10);
        let mut det = detections_from_truth(&ann, &tax, (0, 9));
        det.remove(6);
        let r = score(&det, &ann, &tax, ScoreOptions { warmup: 2 }).unwrap();
        assert_eq!(r.eder, Ratio { count: 1, total: 8 });
        assert_eq!(r.gcer, Ratio { count: 1, total: 8 });
        assert_eq!(r.missing_frames, 1);
    }

    #[test]
    fn disjoint_ranges_rejected() {
        let tax = Taxonomy::standard();
        let ann = fixture(10);
        let mut det = detections_from_truth(&ann, &tax, (0, 0));
        det[0].frame = 50;
        assert!(matches!(
            score(&det, &ann, &tax, ScoreOptions::default()),
            Err(MetricsError::DisjointRanges { .. })
        ));
        assert!(score(&[], &ann, &tax, ScoreOptions::default()).is_err());
    }

    #[test]
    fn text_report_is_stable() {
        let tax = Taxonomy::standard();
        let ann = fixture(10);
        let det = detections_from_truth(&ann, &tax, (0, 9));
        let r = score(&det, &ann, &tax, ScoreOptions::default()).unwrap();
        let text = r.to_text();
        assert!(text.starts_with("tfer 0.000000 (0/10)\ngcer 0.000000 (0/10)\neder 0.000000 (0/10)\n"));
        assert!(r.to_csv().lines().count() == 1 + tax.len());
    }

    proptest! {
        /// Random corruptions of a perfect detection never break GCER <= EDER
        /// and keep every ratio within [0, 1].
        #[test]
        fn gcer_never_exceeds_eder(edits in proptest::collection::vec((0usize..10, 0u8..4), 0..12)) {
            let tax = Taxonomy::standard();
            let ann = fixture(10);
            let mut det = detections_from_truth(&ann, &tax, (0, 9));
            for (f, kind) in edits {
                let d = &mut det[f];
                match kind {
                    0 => d.groups[0].label = "InGroup".into(),
                    1 => d.pairs[0].label = "Chase".into(),
                    2 => {
                        d.groups[0].members = vec![1, 2];
                        d.groups.push(DetectedGroup { id: "g3".into(), members: vec![3], label: "single".into(), representatives: vec![3] });
                    }
                    _ => d.groups[1].label = "Fight".into(),
                }
            }
            let r = score(&det, &ann, &tax, ScoreOptions::default()).unwrap();
            prop_assert!(r.gcer.count <= r.eder.count);
            for x in [r.gcer, r.eder, r.tfer] {
                prop_assert!(x.count <= x.total);
            }
        }
    }
}

//! Turning annotated tracks into training segments, and training a full bank.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::model::{ActivityModel, ActivityModelBank, AlignmentMode, Thresholds, DEFAULT_DELTA_T, DEFAULT_WINDOW};
use super::train::{train_activity_model, train_group_model, PairSegment, TrainConfig, Trained};
use super::SeqError;
use crate::features::{group_between, kinematics, pair_between, Kinematics};
use crate::taxonomy::{ActivityClass, Taxonomy};
use crate::trackio::{AnnotationSet, Frame, PersonId, TrackSet};

/// Training material grouped by activity label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCorpus {
    pub pairs: BTreeMap<String, Vec<PairSegment>>,
    pub groups: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
    /// Every label that occurs in the source annotations.
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusConfig {
    pub window: usize,
    pub stride: usize,
    /// Runs shorter than the window but at least this long give one segment.
    pub min_len: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            stride: DEFAULT_WINDOW / 2,
            min_len: 5,
        }
    }
}

/// A labeled stream source: two entities (each the mean of a person set) and
/// how their order is decided.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct StreamKey {
    label: String,
    x: Vec<PersonId>,
    y: Vec<PersonId>,
    /// For order-dependent labels, the groups whose speeds decide which
    /// entity leads; `None` means both orders are used.
    speed_groups: Option<(Vec<PersonId>, Vec<PersonId>)>,
}

fn entity(tracks: &TrackSet, members: &[PersonId], t: Frame) -> Option<Kinematics> {
    let ks: Option<Vec<Kinematics>> = members.iter().map(|&p| kinematics(tracks, p, t).ok()).collect();
    Kinematics::mean(&ks?)
}

fn runs(frames: &[Frame]) -> Vec<(Frame, Frame)> {
    let mut out: Vec<(Frame, Frame)> = Vec::new();
    for &f in frames {
        match out.last_mut() {
            Some((_, end)) if *end + 1 == f => *end = f,
            _ => out.push((f, f)),
        }
    }
    out
}

fn windows(run: (Frame, Frame), cfg: &CorpusConfig) -> Vec<Vec<Frame>> {
    let len = (run.1 - run.0 + 1) as usize;
    if len < cfg.window {
        return if len >= cfg.min_len.max(2) {
            vec![(run.0..=run.1).collect()]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    let mut start = run.0 as usize;
    while start + cfg.window <= run.1 as usize + 1 {
        out.push((start as Frame..(start + cfg.window) as Frame).collect());
        start += cfg.stride.max(1);
    }
    out
}

/// Orders two groups by mean speed over the frames: returns `true` when the
/// first group is the faster one. Equal speeds make the group holding the
/// smaller person id the slower one.
pub fn first_is_faster(speed_a: f64, speed_b: f64, a: &[PersonId], b: &[PersonId]) -> bool {
    if speed_a != speed_b {
        speed_a > speed_b
    } else {
        a.first() > b.first()
    }
}

impl TrainingCorpus {
    pub fn from_annotations(
        tracks: &TrackSet,
        annotations: &AnnotationSet,
        taxonomy: &Taxonomy,
        cfg: &CorpusConfig,
    ) -> Self {
        let mut corpus = TrainingCorpus::default();
        let Some((lo, hi)) = annotations.frame_range() else {
            return corpus;
        };
        let mut streams: BTreeMap<StreamKey, Vec<Frame>> = BTreeMap::new();
        let mut group_frames: BTreeMap<(String, Vec<PersonId>), Vec<Frame>> = BTreeMap::new();
        for t in lo..=hi {
            let Some(truth) = annotations.frame_truth(t, taxonomy) else {
                continue;
            };
            for g in &truth.groups {
                corpus.labels.insert(g.label.clone());
                if !taxonomy.is_grouping(&g.label) {
                    continue;
                }
                let m: Vec<PersonId> = g.members.iter().copied().collect();
                group_frames.entry((g.label.clone(), m.clone())).or_default().push(t);
                for (i, &a) in m.iter().enumerate() {
                    for &b in &m[i + 1..] {
                        let key = StreamKey {
                            label: g.label.clone(),
                            x: vec![a],
                            y: vec![b],
                            speed_groups: None,
                        };
                        streams.entry(key).or_default().push(t);
                    }
                }
            }
            for r in &truth.relations {
                corpus.labels.insert(r.label.clone());
                let ga: Vec<PersonId> = truth.groups[r.groups[0]].members.iter().copied().collect();
                let gb: Vec<PersonId> = truth.groups[r.groups[1]].members.iter().copied().collect();
                let ordered = taxonomy.class(&r.label) == Some(ActivityClass::Asymmetric);
                let speed_groups = ordered.then(|| (ga.clone(), gb.clone()));
                let mut push = |x: Vec<PersonId>, y: Vec<PersonId>| {
                    let key = StreamKey {
                        label: r.label.clone(),
                        x,
                        y,
                        speed_groups: speed_groups.clone(),
                    };
                    streams.entry(key).or_default().push(t);
                };
                for &a in &ga {
                    for &b in &gb {
                        push(vec![a], vec![b]);
                    }
                }
                if ga.len() > 1 || gb.len() > 1 {
                    push(ga.clone(), gb.clone());
                }
            }
        }

        for (key, frames) in &streams {
            for run in runs(frames) {
                for w in windows(run, cfg) {
                    corpus.add_stream(tracks, key, &w);
                }
            }
        }
        for ((label, members), frames) in &group_frames {
            for run in runs(frames) {
                for w in windows(run, cfg) {
                    let seq: Option<Vec<Vec<f64>>> = w
                        .iter()
                        .map(|&t| {
                            let ks: Option<Vec<Kinematics>> =
                                members.iter().map(|&p| kinematics(tracks, p, t).ok()).collect();
                            group_between(&ks?).ok().map(|g| g.to_vec())
                        })
                        .collect();
                    if let Some(seq) = seq {
                        corpus.groups.entry(label.clone()).or_default().push(seq);
                    }
                }
            }
        }
        corpus
    }

    fn add_stream(&mut self, tracks: &TrackSet, key: &StreamKey, frames: &[Frame]) {
        let xs: Option<Vec<Kinematics>> = frames.iter().map(|&t| entity(tracks, &key.x, t)).collect();
        let ys: Option<Vec<Kinematics>> = frames.iter().map(|&t| entity(tracks, &key.y, t)).collect();
        let (Some(xs), Some(ys)) = (xs, ys) else { return };
        let to_seg = |a: &[Kinematics], b: &[Kinematics]| PairSegment {
            first: a.iter().zip(b).map(|(p, q)| pair_between(p, q).to_vec()).collect(),
            second: a.iter().zip(b).map(|(p, q)| pair_between(q, p).to_vec()).collect(),
        };
        let out = self.pairs.entry(key.label.clone()).or_default();
        match &key.speed_groups {
            None => {
                out.push(to_seg(&xs, &ys));
                out.push(to_seg(&ys, &xs));
            }
            Some((gx, gy)) => {
                let mean_speed = |g: &[PersonId]| -> Option<f64> {
                    let mut total = 0.0;
                    for &t in frames {
                        total += entity(tracks, g, t)?.speed;
                    }
                    Some(total / frames.len() as f64)
                };
                let (Some(sx), Some(sy)) = (mean_speed(gx), mean_speed(gy)) else {
                    return;
                };
                if first_is_faster(sx, sy, gx, gy) {
                    out.push(to_seg(&xs, &ys));
                } else {
                    out.push(to_seg(&ys, &xs));
                }
            }
        }
    }

    pub fn merge(&mut self, other: TrainingCorpus) {
        for (l, segs) in other.pairs {
            self.pairs.entry(l).or_default().extend(segs);
        }
        for (l, seqs) in other.groups {
            self.groups.entry(l).or_default().extend(seqs);
        }
        self.labels.extend(other.labels);
    }

    /// Keeps at most `max` evenly spaced items per label.
    pub fn thin(&mut self, max: usize) {
        for v in self.pairs.values_mut() {
            *v = evenly_spaced(std::mem::take(v), max);
        }
        for v in self.groups.values_mut() {
            *v = evenly_spaced(std::mem::take(v), max);
        }
    }
}

fn evenly_spaced<T>(items: Vec<T>, max: usize) -> Vec<T> {
    let n = items.len();
    if n <= max || max == 0 {
        return items;
    }
    let keep: BTreeSet<usize> = (0..max).map(|i| i * n / max).collect();
    items
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, x)| x)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankConfig {
    pub window: usize,
    pub delta_t: usize,
    pub alignment: AlignmentMode,
    pub thresholds: Thresholds,
    pub train: TrainConfig,
    /// Per-label cap on training segments.
    pub max_segments: usize,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            delta_t: DEFAULT_DELTA_T,
            alignment: AlignmentMode::Async,
            thresholds: Thresholds::default(),
            train: TrainConfig::default(),
            max_segments: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub segments: usize,
    pub iterations: usize,
    /// Mean log-likelihood per segment at the end of training.
    pub mean_log_likelihood: f64,
    pub converged: bool,
    pub reduced_mixtures: bool,
    pub monotone: bool,
}

impl FitSummary {
    fn of<M>(t: &Trained<M>) -> Self {
        let last = t.log_likelihoods.last().copied().unwrap_or(f64::NAN);
        Self {
            segments: t.segments_used,
            iterations: t.log_likelihoods.len(),
            mean_log_likelihood: last / t.segments_used.max(1) as f64,
            converged: t.converged,
            reduced_mixtures: t.reduced_mixtures,
            monotone: t
                .log_likelihoods
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityReport {
    pub label: String,
    pub pair: Option<FitSummary>,
    pub group: Option<FitSummary>,
}

/// Trains every activity of the taxonomy. Fails naming the first activity
/// that has no training material.
pub fn train_bank(
    corpus: &TrainingCorpus,
    taxonomy: &Taxonomy,
    cfg: &BankConfig,
) -> Result<(ActivityModelBank, Vec<ActivityReport>), SeqError> {
    let mut corpus = corpus.clone();
    corpus.thin(cfg.max_segments);
    for (label, class) in taxonomy.iter() {
        let has_pairs = corpus.pairs.get(label).is_some_and(|v| !v.is_empty());
        let has_groups = corpus.groups.get(label).is_some_and(|v| !v.is_empty());
        let ok = corpus.labels.contains(label)
            && (!class.is_pairwise() || has_pairs)
            && (!class.forms_groups() || has_groups);
        if !ok {
            return Err(SeqError::NoTrainingData(label.to_string()));
        }
    }
    let train_cfg = TrainConfig {
        terminal_slack: cfg.delta_t,
        alignment: cfg.alignment,
        ..cfg.train
    };
    let entries: Vec<(usize, &str, ActivityClass)> =
        taxonomy.iter().enumerate().map(|(i, (l, c))| (i, l, c)).collect();
    let results: Vec<(ActivityModel, ActivityReport)> = entries
        .par_iter()
        .map(|&(i, label, class)| {
            let tc = TrainConfig {
                seed: cfg.train.seed.wrapping_add(1000 * i as u64),
                ..train_cfg
            };
            let pair = if class.is_pairwise() {
                Some(train_activity_model(&corpus.pairs[label], &tc)?)
            } else {
                None
            };
            let group = if class.forms_groups() {
                Some(train_group_model(&corpus.groups[label], &tc)?)
            } else {
                None
            };
            let report = ActivityReport {
                label: label.to_string(),
                pair: pair.as_ref().map(FitSummary::of),
                group: group.as_ref().map(FitSummary::of),
            };
            if report.pair.as_ref().is_some_and(|s| s.reduced_mixtures)
                || report.group.as_ref().is_some_and(|s| s.reduced_mixtures)
            {
                log::warn!("{label}: too little data for the requested mixtures, used one component");
            }
            Ok((
                ActivityModel {
                    label: label.to_string(),
                    class,
                    pair: pair.map(|p| p.model),
                    group: group.map(|g| g.model),
                },
                report,
            ))
        })
        .collect::<Result<_, SeqError>>()?;
    let mut models = BTreeMap::new();
    let mut reports = Vec::new();
    for (m, r) in results {
        models.insert(m.label.clone(), m);
        reports.push(r);
    }
    let bank = ActivityModelBank {
        taxonomy: taxonomy.clone(),
        models,
        window: cfg.window,
        delta_t: cfg.delta_t,
        alignment: cfg.alignment,
        thresholds: cfg.thresholds,
    };
    bank.validate()?;
    Ok((bank, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_and_windows() {
        assert_eq!(runs(&[1, 2, 3, 7, 8]), vec![(1, 3), (7, 8)]);
        let cfg = CorpusConfig {
            window: 4,
            stride: 2,
            min_len: 3,
        };
        assert_eq!(windows((0, 7), &cfg).len(), 3);
        assert_eq!(windows((0, 2), &cfg), vec![vec![0, 1, 2]]);
        assert!(windows((0, 1), &cfg).is_empty());
    }

    #[test]
    fn thinning_is_even() {
        assert_eq!(evenly_spaced((0..10).collect(), 3), vec![0, 3, 6]);
        assert_eq!(evenly_spaced(vec![1, 2], 5), vec![1, 2]);
    }

    #[test]
    fn speed_order_ties_use_ids() {
        assert!(first_is_faster(2.0, 1.0, &[5], &[1]));
        assert!(!first_is_faster(1.0, 1.0, &[1], &[5]));
        assert!(first_is_faster(1.0, 1.0, &[5], &[1]));
    }
}

//! Frame-by-frame group activity detection.
//!
//! Each frame is clustered into symmetric groups, every group gets a
//! symmetric label and a representative, and every pair of groups is
//! labeled by correlating the two representatives. A majority vote over the
//! cross-group person pairs is available as a baseline for the last step.
//!
//! Detections are written one JSON object per frame:
//!
//! ```text
//! {"frame":40,"groups":[{"id":"g1","members":[1,2,3],"label":"Fight","representatives":[2]},
//!  {"id":"g4","members":[4],"label":"single","representatives":[4]}],
//!  "pairs":[{"a":"g1","b":"g4","label":"Approach"}]}
//! ```
//!
//! Group ids are `g` followed by the smallest member. In a pair, `a` is the
//! slower group and `b` the faster one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_frame, mean_sequence, ClusterGroup, FrameContext, Partition};
use crate::features::group_between;
use crate::grouprep::{group_representative, GrError, GrKind, GroupRepresentative};
use crate::seqmodel::{ActivityModelBank, PreparedBank, SeqError, Thresholds};
use crate::taxonomy::SINGLE;
use crate::trackio::{Frame, PersonId, TrackSet};

/// How groups get their symmetric label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The label of the seed the group grew from.
    #[default]
    SeedLabel,
    /// Group-feature HMM likelihood with the members' correlations as prior.
    GroupHmm,
}

/// How pairs of groups get their label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterGroup {
    /// Correlate the two group representatives.
    #[default]
    Representatives,
    /// Majority vote over all cross-group person pairs.
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub gr: GrKind,
    pub variant: Variant,
    pub inter: InterGroup,
    pub thresholds: Thresholds,
    pub window: usize,
    pub delta_t: usize,
    /// Majority filter over +-2 frames on labels of unchanged groups.
    pub smoothing: bool,
    /// Fail on the first frame error instead of skipping the frame.
    pub strict: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gr: GrKind::default(),
            variant: Variant::default(),
            inter: InterGroup::default(),
            thresholds: Thresholds::default(),
            window: crate::seqmodel::DEFAULT_WINDOW,
            delta_t: crate::seqmodel::DEFAULT_DELTA_T,
            smoothing: false,
            strict: false,
        }
    }
}

impl PipelineConfig {
    /// Defaults with the bank's window, slack and thresholds.
    pub fn for_bank(bank: &ActivityModelBank) -> Self {
        Self {
            thresholds: bank.thresholds,
            window: bank.window,
            delta_t: bank.delta_t,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GradError> {
        let t = &self.thresholds;
        for (name, v) in [("tc", t.active), ("to", t.pair_seed), ("tr", t.representative)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GradError::Config(format!("threshold {name} = {v} outside [0, 1]")));
            }
        }
        if self.window < 2 {
            return Err(GradError::Config("window must be at least 2 frames".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedGroup {
    pub id: String,
    pub members: Vec<PersonId>,
    pub label: String,
    /// Members the group representative was built from.
    pub representatives: Vec<PersonId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedPair {
    /// The faster group, read as acting on `b`.
    pub a: String,
    pub b: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDetection {
    pub frame: Frame,
    pub groups: Vec<DetectedGroup>,
    pub pairs: Vec<DetectedPair>,
}

impl FrameDetection {
    pub fn group(&self, id: &str) -> Option<&DetectedGroup> {
        self.groups.iter().find(|g| g.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Nobody with features at this frame.
    NoPersons,
    /// The shared observation window is shorter than two frames.
    ShortHistory,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFrame {
    pub frame: Frame,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutput {
    pub detections: Vec<FrameDetection>,
    pub skipped: Vec<SkippedFrame>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("frame {frame}: {source}")]
    Frame { frame: Frame, source: Box<GradError> },
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Gr(#[from] GrError),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub fn group_id(members: &BTreeSet<PersonId>) -> String {
    format!("g{}", members.first().copied().unwrap_or(0))
}

/// Symmetric label of a clustered group.
pub fn recognize_symmetric(
    bank: &ActivityModelBank,
    ctx: &FrameContext,
    group: &ClusterGroup,
    variant: Variant,
) -> Result<String, SeqError> {
    if group.members.len() == 1 {
        return Ok(SINGLE.to_string());
    }
    if variant == Variant::SeedLabel {
        return Ok(group.label.clone());
    }
    let members: Vec<PersonId> = group.members.iter().copied().collect();
    let len = ctx.window(members[0]).len();
    let features: Vec<Vec<f64>> = (0..len)
        .map(|f| {
            let ks: Vec<_> = members.iter().map(|&p| ctx.window(p)[f]).collect();
            group_between(&ks).expect("nonempty group").to_vec()
        })
        .collect();
    let mut best: Option<(String, f64)> = None;
    for label in bank.taxonomy.grouping_labels() {
        let Some(model) = bank.model(label).and_then(|m| m.group.as_ref()) else {
            continue;
        };
        let prior: f64 = members
            .iter()
            .flat_map(|&i| members.iter().map(move |&j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| ctx.profile(i, j).value(label))
            .sum();
        let score = model.log_likelihood(&features)? + prior;
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((label.to_string(), score));
        }
    }
    best.map(|b| b.0)
        .ok_or_else(|| SeqError::MissingModel("any symmetric group activity".into()))
}

/// Candidate labels between two groups, sorted.
fn inter_candidates(bank: &ActivityModelBank) -> Vec<&str> {
    bank.taxonomy
        .inter_group_labels()
        .into_iter()
        .filter(|l| bank.model(l).is_some_and(|m| m.pair.is_some()))
        .collect()
}

/// Whether the first entity counts as the slower one: lower mean speed,
/// or equal speed and smaller id.
fn is_slower(speed_a: f64, speed_b: f64, id_a: PersonId, id_b: PersonId) -> bool {
    if speed_a != speed_b {
        speed_a < speed_b
    } else {
        id_a < id_b
    }
}

fn mean_speed(seq: &[crate::features::Kinematics]) -> f64 {
    seq.iter().map(|k| k.speed).sum::<f64>() / seq.len().max(1) as f64
}

/// Label between slower group `a` and faster group `b` from their
/// representatives: `ln co_{GR_b}(GR_a)` plus the cross-pair correlations
/// `co_j(i)` for `i` in `a`, `j` in `b`.
pub fn recognize_intergroup(
    bank: &PreparedBank,
    ctx: &FrameContext,
    a: (&BTreeSet<PersonId>, &GroupRepresentative),
    b: (&BTreeSet<PersonId>, &GroupRepresentative),
) -> Result<String, SeqError> {
    let prof = bank.correlate_entities(&b.1.sequence, &a.1.sequence)?;
    let mut best: Option<(&str, f64)> = None;
    for label in inter_candidates(bank.bank) {
        let prior: f64 = a
            .0
            .iter()
            .flat_map(|&i| b.0.iter().map(move |&j| ctx.profile(j, i).value(label)))
            .sum();
        let score = prof.log_value(label) + prior;
        if best.is_none_or(|x| score > x.1) {
            best = Some((label, score));
        }
    }
    best.map(|b| b.0.to_string())
        .ok_or_else(|| SeqError::MissingModel("any inter-group activity".into()))
}

/// Most frequent label over cross-group person pairs, each pair read with
/// its faster person first. Ties go to the larger summed correlation, then
/// to the lexicographically smaller label.
pub fn majority_vote_intergroup(
    bank: &ActivityModelBank,
    ctx: &FrameContext,
    a: &BTreeSet<PersonId>,
    b: &BTreeSet<PersonId>,
) -> Result<String, SeqError> {
    let candidates = inter_candidates(bank);
    let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &i in a {
        for &j in b {
            let (si, sj) = (mean_speed(ctx.window(i)), mean_speed(ctx.window(j)));
            let (fast, slow) = if is_slower(si, sj, i, j) { (j, i) } else { (i, j) };
            let prof = ctx.profile(fast, slow);
            let Some(label) = prof.best_of(|l| candidates.contains(&l)) else {
                continue;
            };
            let e = tally.entry(candidates[candidates.binary_search(&label).expect("candidate")]).or_default();
            e.0 += 1;
            e.1 += prof.value(label);
        }
    }
    let mut best: Option<(&str, usize, f64)> = None;
    for (label, (votes, sum)) in tally {
        if best.is_none_or(|b| votes > b.1 || (votes == b.1 && sum > b.2)) {
            best = Some((label, votes, sum));
        }
    }
    best.map(|b| b.0.to_string())
        .ok_or_else(|| SeqError::MissingModel("any inter-group activity".into()))
}

/// Detection for one frame from a prepared context.
pub fn detect_in_context(
    bank: &PreparedBank,
    ctx: &FrameContext,
    cfg: &PipelineConfig,
) -> Result<(Partition, FrameDetection), GradError> {
    let model = bank.bank;
    let partition = cluster_frame(ctx, bank, &cfg.thresholds)?;
    let mut labels = Vec::with_capacity(partition.groups.len());
    let mut reps = Vec::with_capacity(partition.groups.len());
    let mut speeds = Vec::with_capacity(partition.groups.len());
    for g in &partition.groups {
        let label = recognize_symmetric(model, ctx, g, cfg.variant)?;
        reps.push(group_representative(
            cfg.gr,
            model,
            ctx,
            &g.members,
            &label,
            cfg.thresholds.representative,
        )?);
        speeds.push(mean_speed(&mean_sequence(g.members.iter().map(|&p| ctx.window(p)))));
        labels.push(label);
    }
    let groups: Vec<DetectedGroup> = partition
        .groups
        .iter()
        .zip(&labels)
        .zip(&reps)
        .map(|((g, l), r)| DetectedGroup {
            id: group_id(&g.members),
            members: g.members.iter().copied().collect(),
            label: l.clone(),
            representatives: r.subset.iter().copied().collect(),
        })
        .collect();
    let n = partition.groups.len();
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let (gx, gy) = (&partition.groups[x].members, &partition.groups[y].members);
            let (a, b) = if is_slower(speeds[x], speeds[y], x as PersonId, y as PersonId) {
                (x, y)
            } else {
                (y, x)
            };
            let (ga, gb) = if a == x { (gx, gy) } else { (gy, gx) };
            let label = match cfg.inter {
                InterGroup::Representatives => recognize_intergroup(bank, ctx, (ga, &reps[a]), (gb, &reps[b]))?,
                InterGroup::MajorityVote => majority_vote_intergroup(model, ctx, ga, gb)?,
            };
            pairs.push(DetectedPair {
                a: groups[b].id.clone(),
                b: groups[a].id.clone(),
                label,
            });
        }
    }
    let frame = ctx.frame;
    Ok((partition, FrameDetection { frame, groups, pairs }))
}

/// Detection for frame `t`; `Err(reason)` when the frame is skipped.
pub fn detect_frame(
    bank: &PreparedBank,
    tracks: &TrackSet,
    t: Frame,
    cfg: &PipelineConfig,
) -> Result<FrameDetection, SkipReason> {
    if tracks.present_at(t).is_empty() {
        return Err(SkipReason::NoPersons);
    }
    let ctx = FrameContext::build(bank, tracks, t)
        .map_err(|e| SkipReason::Failed(e.to_string()))?
        .ok_or(SkipReason::ShortHistory)?;
    detect_in_context(bank, &ctx, cfg)
        .map(|d| d.1)
        .map_err(|e| SkipReason::Failed(e.to_string()))
}

fn configured_bank(bank: &ActivityModelBank, cfg: &PipelineConfig) -> ActivityModelBank {
    let mut b = bank.clone();
    b.window = cfg.window;
    b.delta_t = cfg.delta_t;
    b.thresholds = cfg.thresholds;
    b
}

/// Runs detection over `range` (inclusive; the track span when `None`).
/// Frames are processed in parallel; output is in frame order.
pub fn run_pipeline(
    bank: &ActivityModelBank,
    tracks: &TrackSet,
    cfg: &PipelineConfig,
    range: Option<(Frame, Frame)>,
) -> Result<PipelineOutput, GradError> {
    cfg.validate()?;
    let Some((lo, hi)) = range.or_else(|| tracks.frame_range()) else {
        return Ok(PipelineOutput::default());
    };
    let bank = configured_bank(bank, cfg);
    let prepared = PreparedBank::new(&bank);
    let results: Vec<(Frame, Result<FrameDetection, SkipReason>)> = (lo..=hi)
        .into_par_iter()
        .map(|t| (t, detect_frame(&prepared, tracks, t, cfg)))
        .collect();
    let mut out = PipelineOutput::default();
    for (frame, r) in results {
        match r {
            Ok(d) => out.detections.push(d),
            Err(SkipReason::Failed(msg)) if cfg.strict => {
                return Err(GradError::Frame {
                    frame,
                    source: Box::new(GradError::Config(msg)),
                })
            }
            Err(reason) => {
                log::debug!("frame {frame} skipped: {reason:?}");
                out.skipped.push(SkippedFrame { frame, reason });
            }
        }
    }
    if cfg.smoothing {
        smooth_labels(&mut out.detections);
    }
    Ok(out)
}

/// Replaces each label by the majority over the same group (or group pair)
/// in the surrounding +-2 frames. Ties keep the current label.
pub fn smooth_labels(detections: &mut [FrameDetection]) {
    const RADIUS: Frame = 2;
    type GroupKey = Vec<PersonId>;
    let group_labels: Vec<BTreeMap<GroupKey, String>> = detections
        .iter()
        .map(|d| d.groups.iter().map(|g| (g.members.clone(), g.label.clone())).collect())
        .collect();
    let pair_labels: Vec<BTreeMap<(GroupKey, GroupKey), String>> = detections
        .iter()
        .map(|d| {
            d.pairs
                .iter()
                .map(|p| {
                    let m = |id: &str| d.group(id).map(|g| g.members.clone()).unwrap_or_default();
                    (unordered(m(&p.a), m(&p.b)), p.label.clone())
                })
                .collect()
        })
        .collect();
    // Pair order follows speed and may flip between frames.
    fn unordered(a: GroupKey, b: GroupKey) -> (GroupKey, GroupKey) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
    fn vote<K: Ord>(maps: &[&BTreeMap<K, String>], key: &K, current: &str) -> String {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for m in maps {
            if let Some(l) = m.get(key) {
                *counts.entry(l.as_str()).or_default() += 1;
            }
        }
        let own = counts.get(current).copied().unwrap_or(0);
        counts
            .into_iter()
            .filter(|&(_, c)| c > own)
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
            .map_or_else(|| current.to_string(), |(l, _)| l.to_string())
    }
    let frames: Vec<Frame> = detections.iter().map(|d| d.frame).collect();
    for (k, d) in detections.iter_mut().enumerate() {
        let near: Vec<usize> = (0..frames.len())
            .filter(|&o| frames[o].abs_diff(frames[k]) <= RADIUS)
            .collect();
        let gmaps: Vec<_> = near.iter().map(|&o| &group_labels[o]).collect();
        let pmaps: Vec<_> = near.iter().map(|&o| &pair_labels[o]).collect();
        for g in &mut d.groups {
            g.label = vote(&gmaps, &g.members, &g.label);
        }
        let members: BTreeMap<String, GroupKey> = d.groups.iter().map(|g| (g.id.clone(), g.members.clone())).collect();
        for p in &mut d.pairs {
            let key = unordered(members[&p.a].clone(), members[&p.b].clone());
            p.label = vote(&pmaps, &key, &p.label);
        }
    }
}

pub fn write_detections(detections: &[FrameDetection]) -> String {
    let mut out = String::new();
    for d in detections {
        let line = serde_json::to_string(d).expect("detections serialize");
        writeln!(out, "{line}").expect("string write");
    }
    out
}

pub fn parse_detections(text: &str) -> Result<Vec<FrameDetection>, GradError> {
    let mut out: Vec<FrameDetection> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let d: FrameDetection = serde_json::from_str(line).map_err(|e| GradError::Parse {
            line: k + 1,
            reason: e.to_string(),
        })?;
        if out.last().is_some_and(|p| p.frame >= d.frame) {
            return Err(GradError::Parse {
                line: k + 1,
                reason: format!("frame {} out of order", d.frame),
            });
        }
        out.push(d);
    }
    Ok(out)
}

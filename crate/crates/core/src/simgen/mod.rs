//! Deterministic synthetic scenarios with exact ground truth.
//!
//! A [`ScenarioSpec`] places agents, assigns them to symmetric groups with a
//! motion pattern for a frame interval, and declares inter-group relations.
//! [`generate`] simulates the scene frame by frame and returns the observed
//! tracks together with the annotations. Frames not covered by any group
//! become `single` records, so the annotations partition every agent at
//! every frame.

pub mod library;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqmodel::{CorpusConfig, TrainingCorpus};
use crate::taxonomy::{Taxonomy, SINGLE};
use crate::trackio::{
    AnnotationError, AnnotationRecord, AnnotationSet, Frame, GroupRecord, MbbSample, PersonId, RelationRecord,
    TrackError, TrackSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub duration: Frame,
    /// Standard deviation of positional observation noise, pixels.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Relative standard deviation of box-size observation noise.
    #[serde(default)]
    pub box_noise: f64,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub relations: Vec<RelationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: PersonId,
    pub position: [f64; 2],
    #[serde(default = "default_size")]
    pub size: [f64; 2],
}

fn default_size() -> [f64; 2] {
    [40.0, 90.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub id: String,
    pub label: String,
    pub members: Vec<PersonId>,
    /// Inclusive frame interval.
    pub interval: [Frame; 2],
    pub motion: Motion,
    /// Per-member delay, in frames, of the group's velocity profile.
    #[serde(default)]
    pub offsets: BTreeMap<PersonId, Frame>,
    #[serde(default)]
    pub wobble: Option<Wobble>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Motion {
    Stationary,
    /// Constant heading; speed optionally modulated by a sine wave.
    Walk {
        velocity: [f64; 2],
        #[serde(default)]
        speed_wave: Option<SpeedWave>,
    },
    /// Members shake around their anchor and their boxes change size.
    Jitter { amplitude: f64, box_jitter: f64 },
    /// The group heads for another group's centroid, halting at `stop_distance`.
    Pursue {
        target: String,
        speed: f64,
        stop_distance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedWave {
    /// Relative amplitude of the speed modulation.
    pub amplitude: f64,
    pub period: f64,
}

/// Sideways oscillation of one member around its place in the group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wobble {
    pub member: PersonId,
    pub amplitude: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub label: String,
    pub groups: [String; 2],
    pub interval: [Frame; 2],
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Track(#[from] TrackError),
}

fn infeasible<T>(msg: String) -> Result<T, SimError> {
    Err(SimError::Infeasible(msg))
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.duration == 0 {
            return infeasible("duration must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.box_noise >= 0.0) {
            return infeasible("noise levels must be non-negative".into());
        }
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if !ids.insert(a.id) {
                return infeasible(format!("agent {} declared twice", a.id));
            }
            if !(a.size[0] > 0.0 && a.size[1] > 0.0) {
                return infeasible(format!("agent {} has a non-positive box", a.id));
            }
        }
        let group_ids: BTreeSet<&str> = self.groups.iter().map(|g| g.id.as_str()).collect();
        for g in &self.groups {
            if g.members.is_empty() {
                return infeasible(format!("group {} has no members", g.id));
            }
            if let Some(m) = g.members.iter().find(|m| !ids.contains(m)) {
                return infeasible(format!("group {} references missing agent {m}", g.id));
            }
            if g.interval[0] > g.interval[1] || g.interval[1] >= self.duration {
                return infeasible(format!("group {} interval outside the scenario", g.id));
            }
            if let Some(m) = g.offsets.keys().find(|m| !g.members.contains(m)) {
                return infeasible(format!("offset for non-member {m} in group {}", g.id));
            }
            if let Some(w) = &g.wobble {
                if !g.members.contains(&w.member) || !(w.period > 0.0) {
                    return infeasible(format!("invalid wobble in group {}", g.id));
                }
            }
            if let Motion::Pursue { target, .. } = &g.motion {
                if !group_ids.contains(target.as_str()) || target == &g.id {
                    return infeasible(format!("group {} pursues unknown group {target}", g.id));
                }
            }
        }
        for (i, a) in self.groups.iter().enumerate() {
            for b in &self.groups[i + 1..] {
                let overlap = a.interval[0] <= b.interval[1] && b.interval[0] <= a.interval[1];
                if let Some(m) = a.members.iter().find(|m| overlap && b.members.contains(m)) {
                    return infeasible(format!("agent {m} is in groups {} and {} at once", a.id, b.id));
                }
            }
        }
        for r in &self.relations {
            if r.interval[0] > r.interval[1] || r.interval[1] >= self.duration {
                return infeasible(format!("relation {} interval outside the scenario", r.label));
            }
        }
        Ok(())
    }

    /// Ground-truth records: declared groups, `single` fillers, relations.
    pub fn annotations(&self, taxonomy: &Taxonomy) -> Result<AnnotationSet, SimError> {
        self.validate()?;
        let mut records = Vec::new();
        for g in &self.groups {
            records.push(AnnotationRecord::Group(GroupRecord {
                label: g.label.clone(),
                frames: g.interval,
                members: g.members.iter().copied().collect(),
                group_id: g.id.clone(),
            }));
        }
        for a in &self.agents {
            let mut covered: Vec<[Frame; 2]> = self
                .groups
                .iter()
                .filter(|g| g.members.contains(&a.id))
                .map(|g| g.interval)
                .collect();
            covered.sort();
            let mut next = 0;
            let mut gaps = Vec::new();
            for c in covered {
                if c[0] > next {
                    gaps.push([next, c[0] - 1]);
                }
                next = next.max(c[1] + 1);
            }
            if next < self.duration {
                gaps.push([next, self.duration - 1]);
            }
            for gap in gaps {
                records.push(AnnotationRecord::Group(GroupRecord {
                    label: SINGLE.to_string(),
                    frames: gap,
                    members: BTreeSet::from([a.id]),
                    group_id: format!("single-{}-{}", a.id, gap[0]),
                }));
            }
        }
        for r in &self.relations {
            records.push(AnnotationRecord::Relation(RelationRecord {
                label: r.label.clone(),
                frames: r.interval,
                groups: r.groups.clone(),
            }));
        }
        Ok(AnnotationSet::from_records(records, taxonomy)?)
    }
}

struct Agent {
    pos: [f64; 2],
    size: [f64; 2],
    box_scale: [f64; 2],
    anchor: [f64; 2],
    wobble: [f64; 2],
}

fn centroid(agents: &BTreeMap<PersonId, Agent>, members: &[PersonId]) -> [f64; 2] {
    let n = members.len() as f64;
    let (sx, sy) = members
        .iter()
        .map(|m| agents[m].pos)
        .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Simulates the scenario with the standard taxonomy.
pub fn generate(spec: &ScenarioSpec) -> Result<(TrackSet, AnnotationSet), SimError> {
    generate_with(spec, &Taxonomy::standard())
}

/// Simulates every scenario and pools their annotated segments.
pub fn training_corpus(
    specs: &[ScenarioSpec],
    taxonomy: &Taxonomy,
    cfg: &CorpusConfig,
) -> Result<TrainingCorpus, SimError> {
    let mut corpus = TrainingCorpus::default();
    for spec in specs {
        let (tracks, ann) = generate_with(spec, taxonomy)?;
        corpus.merge(TrainingCorpus::from_annotations(&tracks, &ann, taxonomy, cfg));
    }
    Ok(corpus)
}

pub fn generate_with(spec: &ScenarioSpec, taxonomy: &Taxonomy) -> Result<(TrackSet, AnnotationSet), SimError> {
    let annotations = spec.annotations(taxonomy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos_noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| SimError::Infeasible(e.to_string()))?;
    let box_noise = Normal::new(0.0, spec.box_noise).map_err(|e| SimError::Infeasible(e.to_string()))?;
    let mut agents: BTreeMap<PersonId, Agent> = spec
        .agents
        .iter()
        .map(|a| {
            (
                a.id,
                Agent {
                    pos: a.position,
                    size: a.size,
                    box_scale: [1.0, 1.0],
                    anchor: a.position,
                    wobble: [0.0, 0.0],
                },
            )
        })
        .collect();
    let mut samples = Vec::with_capacity(spec.agents.len() * spec.duration as usize);
    for t in 0..spec.duration {
        let snapshot: BTreeMap<String, [f64; 2]> = spec
            .groups
            .iter()
            .map(|g| (g.id.clone(), centroid(&agents, &g.members)))
            .collect();
        for g in &spec.groups {
            let [start, end] = g.interval;
            if t < start || t > end {
                continue;
            }
            if t == start {
                for m in &g.members {
                    let a = agents.get_mut(m).expect("validated member");
                    a.anchor = a.pos;
                }
            }
            let mut heading = [0.0, 1.0];
            match &g.motion {
                Motion::Stationary => {}
                Motion::Walk { velocity, speed_wave } => {
                    let norm = velocity[0].hypot(velocity[1]);
                    if norm > 0.0 {
                        heading = [-velocity[1] / norm, velocity[0] / norm];
                    }
                    for m in &g.members {
                        let delay = g.offsets.get(m).copied().unwrap_or(0);
                        if t < start + delay + 1 {
                            continue;
                        }
                        let u = (t - start - delay) as f64;
                        let gain = speed_wave
                            .map(|w| 1.0 + w.amplitude * (2.0 * std::f64::consts::PI * u / w.period).sin())
                            .unwrap_or(1.0);
                        let a = agents.get_mut(m).expect("validated member");
                        a.pos[0] += velocity[0] * gain;
                        a.pos[1] += velocity[1] * gain;
                    }
                }
                Motion::Jitter { amplitude, box_jitter } => {
                    for m in &g.members {
                        let a = agents.get_mut(m).expect("validated member");
                        if t > start {
                            a.pos = [
                                a.anchor[0] + rng.random_range(-1.0..=1.0) * amplitude,
                                a.anchor[1] + rng.random_range(-1.0..=1.0) * amplitude,
                            ];
                            a.box_scale = [
                                1.0 + rng.random_range(-1.0..=1.0) * box_jitter,
                                1.0 + rng.random_range(-1.0..=1.0) * box_jitter,
                            ];
                        }
                    }
                }
                Motion::Pursue {
                    target,
                    speed,
                    stop_distance,
                } => {
                    let c = snapshot[&g.id];
                    let goal = snapshot[target];
                    let (dx, dy) = (goal[0] - c[0], goal[1] - c[1]);
                    let d = dx.hypot(dy);
                    if d > 0.0 {
                        heading = [-dy / d, dx / d];
                    }
                    if t > start && d > *stop_distance {
                        let step = speed.min(d - stop_distance);
                        for m in &g.members {
                            let a = agents.get_mut(m).expect("validated member");
                            a.pos[0] += dx / d * step;
                            a.pos[1] += dy / d * step;
                        }
                    }
                }
            }
            if !matches!(g.motion, Motion::Jitter { .. }) || t == end {
                for m in &g.members {
                    agents.get_mut(m).expect("validated member").box_scale = [1.0, 1.0];
                }
            }
            if let Some(w) = &g.wobble {
                let phase = 2.0 * std::f64::consts::PI * (t - start) as f64 / w.period;
                let amp = w.amplitude * phase.sin();
                agents.get_mut(&w.member).expect("validated member").wobble = [heading[0] * amp, heading[1] * amp];
            }
            if t == end {
                if let Some(w) = &g.wobble {
                    let a = agents.get_mut(&w.member).expect("validated member");
                    a.pos[0] += a.wobble[0];
                    a.pos[1] += a.wobble[1];
                    a.wobble = [0.0, 0.0];
                }
            }
        }
        for (&id, a) in &agents {
            let w = a.size[0] * a.box_scale[0] * (1.0 + box_noise.sample(&mut rng));
            let h = a.size[1] * a.box_scale[1] * (1.0 + box_noise.sample(&mut rng));
            samples.push(MbbSample {
                frame: t,
                person: id,
                x: a.pos[0] + a.wobble[0] + pos_noise.sample(&mut rng),
                y: a.pos[1] + a.wobble[1] + pos_noise.sample(&mut rng),
                w: w.max(a.size[0] * 0.05),
                h: h.max(a.size[1] * 0.05),
            });
        }
    }
    Ok((TrackSet::from_samples(samples)?, annotations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::kinematics;

    fn spec(agents: &[(PersonId, [f64; 2])], groups: Vec<GroupSpec>) -> ScenarioSpec {
        ScenarioSpec {
            seed: 3,
            duration: 40,
            noise_sigma: 0.0,
            box_noise: 0.0,
            agents: agents
                .iter()
                .map(|&(id, position)| AgentSpec {
                    id,
                    position,
                    size: default_size(),
                })
                .collect(),
            groups,
            relations: Vec::new(),
        }
    }

    fn group(id: &str, label: &str, members: &[PersonId], motion: Motion) -> GroupSpec {
        GroupSpec {
            id: id.into(),
            label: label.into(),
            members: members.to_vec(),
            interval: [0, 39],
            motion,
            offsets: BTreeMap::new(),
            wobble: None,
        }
    }

    #[test]
    fn lone_stationary_agent() {
        let s = spec(&[(1, [5.0, 6.0])], vec![]);
        let (tracks, ann) = generate(&s).unwrap();
        assert!(tracks.samples().all(|x| x.x == 5.0 && x.y == 6.0));
        assert_eq!(ann.groups().len(), 1);
        assert_eq!(ann.groups()[0].label, SINGLE);
        assert_eq!(ann.groups()[0].frames, [0, 39]);
    }

    #[test]
    fn asynchrony_delays_velocity_profile() {
        let mut g = group(
            "g1",
            "WalkTogether",
            &[1, 2],
            Motion::Walk {
                velocity: [1.5, 0.0],
                speed_wave: Some(SpeedWave {
                    amplitude: 0.5,
                    period: 10.0,
                }),
            },
        );
        g.offsets.insert(2, 3);
        let s = spec(&[(1, [0.0, 0.0]), (2, [0.0, 25.0])], vec![g]);
        let (tracks, _) = generate(&s).unwrap();
        for t in 5..36 {
            let a = kinematics(&tracks, 1, t).unwrap();
            let b = kinematics(&tracks, 2, t + 3).unwrap();
            assert!((a.speed - b.speed).abs() < 1e-9, "frame {t}");
        }
    }

    #[test]
    fn fight_and_approach_have_both_levels() {
        let s = library::hierarchical(7);
        let (tracks, ann) = generate(&s).unwrap();
        assert_eq!(tracks.persons().count(), 4);
        let truth = ann.frame_truth(100, &Taxonomy::standard()).unwrap();
        let labels: BTreeSet<&str> = truth.groups.iter().map(|g| g.label.as_str()).collect();
        assert!(labels.contains("Fight"));
        assert_eq!(truth.relations.len(), 1);
        assert_eq!(truth.relations[0].label, "Approach");
    }

    #[test]
    fn deterministic() {
        let s = library::planted(library::Planted::Fight, 11);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn truth_partitions_every_agent() {
        for kind in library::Planted::ALL {
            let s = library::planted(kind, 5);
            let (tracks, ann) = generate(&s).unwrap();
            let all: BTreeSet<PersonId> = tracks.persons().collect();
            for t in 0..s.duration {
                let truth = ann.frame_truth(t, &Taxonomy::standard()).unwrap();
                let mut seen = BTreeSet::new();
                for g in &truth.groups {
                    for m in &g.members {
                        assert!(seen.insert(*m));
                    }
                }
                assert_eq!(seen, all);
            }
        }
    }

    #[test]
    fn rejects_infeasible() {
        let s = spec(
            &[(1, [0.0, 0.0]), (2, [1.0, 0.0])],
            vec![
                group("a", "InGroup", &[1, 2], Motion::Stationary),
                group("b", "Fight", &[2], Motion::Stationary),
            ],
        );
        assert!(matches!(generate(&s), Err(SimError::Infeasible(_))));
        let s = spec(&[(1, [0.0, 0.0])], vec![group("a", "InGroup", &[1, 9], Motion::Stationary)]);
        assert!(matches!(generate(&s), Err(SimError::Infeasible(_))));
        let s = spec(&[(1, [0.0, 0.0])], vec![group("a", "Teleport", &[1], Motion::Stationary)]);
        assert!(matches!(generate(&s), Err(SimError::Annotation(_))));
    }
}

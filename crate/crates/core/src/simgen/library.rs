//! Ready-made scenarios, each planting one activity (plus background).
//!
//! Every builder draws its layout, orientation and speeds from `seed`, so a
//! range of seeds gives a family of varied but equivalent scenes. Use
//! disjoint seed ranges for training and evaluation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentSpec, GroupSpec, Motion, RelationSpec, ScenarioSpec, SpeedWave, Wobble};
use crate::trackio::{Frame, PersonId};

pub const DURATION: Frame = 300;
const NOISE_SIGMA: f64 = 0.3;
const BOX_NOISE: f64 = 0.005;
/// Split groups stop and stand apart after this frame.
const SPLIT_END: Frame = 119;
/// Range of distances between background groups and planted activity.
const FAR: std::ops::Range<f64> = 450.0..900.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Planted {
    WalkTogether,
    Fight,
    RunTogether,
    Approach,
    Split,
    Chase,
}

impl Planted {
    pub const ALL: [Planted; 6] = [
        Planted::WalkTogether,
        Planted::Fight,
        Planted::RunTogether,
        Planted::Approach,
        Planted::Split,
        Planted::Chase,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Planted::WalkTogether => "WalkTogether",
            Planted::Fight => "Fight",
            Planted::RunTogether => "RunTogether",
            Planted::Approach => "Approach",
            Planted::Split => "Split",
            Planted::Chase => "Chase",
        }
    }
}

/// Lays out a scene in a local frame, then rotates and shifts it.
struct Scene {
    rng: ChaCha8Rng,
    rot: (f64, f64),
    origin: [f64; 2],
    far: f64,
    spec: ScenarioSpec,
}

impl Scene {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let origin = [rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0)];
        let far = rng.random_range(FAR);
        Self {
            rng,
            rot: theta.sin_cos(),
            origin,
            far,
            spec: ScenarioSpec {
                seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5EED,
                duration: DURATION,
                noise_sigma: NOISE_SIGMA,
                box_noise: BOX_NOISE,
                agents: Vec::new(),
                groups: Vec::new(),
                relations: Vec::new(),
            },
        }
    }

    fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rot;
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn walk_speed(&mut self) -> f64 {
        self.uniform(1.1, 1.7)
    }

    fn run_speed(&mut self) -> f64 {
        self.uniform(4.5, 5.5)
    }

    fn agent(&mut self, id: PersonId, local: [f64; 2]) {
        let p = self.rotate(local);
        let size = [self.uniform(34.0, 46.0), self.uniform(80.0, 100.0)];
        self.spec.agents.push(AgentSpec {
            id,
            position: [p[0] + self.origin[0], p[1] + self.origin[1]],
            size,
        });
    }

    fn group(&mut self, id: &str, label: &str, members: &[PersonId], motion: Motion) -> &mut GroupSpec {
        let motion = match motion {
            Motion::Walk { velocity, speed_wave } => Motion::Walk {
                velocity: self.rotate(velocity),
                speed_wave,
            },
            other => other,
        };
        self.spec.groups.push(GroupSpec {
            id: id.into(),
            label: label.into(),
            members: members.to_vec(),
            interval: [0, DURATION - 1],
            motion,
            offsets: BTreeMap::new(),
            wobble: None,
        });
        self.spec.groups.last_mut().expect("just pushed")
    }

    fn relation(&mut self, label: &str, a: &str, b: &str) {
        self.spec.relations.push(RelationSpec {
            label: label.into(),
            groups: [a.into(), b.into()],
            interval: [0, DURATION - 1],
        });
    }

    /// A stationary pair far off the x axis.
    fn background(&mut self, first: PersonId, x: f64) {
        self.agent(first, [x, self.far]);
        self.agent(first + 1, [x + 26.0, self.far + 4.0]);
        self.group("bg", "InGroup", &[first, first + 1], Motion::Stationary);
    }

    fn fight(&mut self, members: &[PersonId]) {
        const SPOTS: [[f64; 2]; 4] = [[0.0, 0.0], [22.0, 6.0], [8.0, 24.0], [30.0, 28.0]];
        for (&m, &p) in members.iter().zip(&SPOTS) {
            self.agent(m, p);
        }
        let amplitude = self.uniform(0.8, 1.4);
        let box_jitter = self.uniform(0.15, 0.25);
        self.group("g1", "Fight", members, Motion::Jitter { amplitude, box_jitter });
    }

    fn wave(&mut self, amplitude: f64) -> Option<SpeedWave> {
        Some(SpeedWave {
            amplitude,
            period: self.uniform(30.0, 60.0),
        })
    }

    fn finish(self) -> ScenarioSpec {
        self.spec
    }
}

fn approach_start(speed: f64, stop: f64) -> f64 {
    stop + speed * DURATION as f64 + 20.0
}

/// One planted activity, with a distant background group where the
/// activity leaves room for one. Fighters are kept apart from bystanders.
pub fn planted(kind: Planted, seed: u64) -> ScenarioSpec {
    let mut s = Scene::new(seed);
    match kind {
        Planted::WalkTogether => {
            s.agent(1, [0.0, 0.0]);
            s.agent(2, [0.0, 26.0]);
            s.agent(3, [-18.0, 12.0]);
            let v = s.walk_speed();
            let speed_wave = s.wave(0.15);
            s.group("g1", "WalkTogether", &[1, 2, 3], Motion::Walk { velocity: [v, 0.0], speed_wave });
            s.background(4, 100.0);
        }
        Planted::Fight => {
            s.fight(&[1, 2, 3, 4]);
        }
        Planted::RunTogether => {
            s.agent(1, [0.0, 0.0]);
            s.agent(2, [0.0, 26.0]);
            let v = s.run_speed();
            let speed_wave = s.wave(0.1);
            s.group("g1", "RunTogether", &[1, 2], Motion::Walk { velocity: [v, 0.0], speed_wave });
            s.background(3, 300.0);
        }
        Planted::Approach => {
            s.agent(1, [0.0, 0.0]);
            s.agent(2, [0.0, 26.0]);
            s.group("g1", "InGroup", &[1, 2], Motion::Stationary);
            let speed = s.uniform(1.0, 1.3);
            let d0 = approach_start(speed, 40.0);
            s.agent(3, [d0, 0.0]);
            s.agent(4, [d0, 26.0]);
            s.group(
                "g2",
                "WalkTogether",
                &[3, 4],
                Motion::Pursue {
                    target: "g1".into(),
                    speed,
                    stop_distance: 40.0,
                },
            );
            s.relation("Approach", "g2", "g1");
        }
        Planted::Split => {
            s.agent(1, [-20.0, 0.0]);
            s.agent(2, [-20.0, 26.0]);
            s.agent(3, [20.0, 0.0]);
            s.agent(4, [20.0, 26.0]);
            let v = s.walk_speed();
            s.group("g1", "WalkTogether", &[1, 2], Motion::Walk { velocity: [-v, 0.0], speed_wave: None })
                .interval = [0, SPLIT_END];
            let v = s.walk_speed();
            s.group("g2", "WalkTogether", &[3, 4], Motion::Walk { velocity: [v, 0.0], speed_wave: None })
                .interval = [0, SPLIT_END];
            s.relation("Split", "g1", "g2");
            s.spec.relations[0].interval = [0, SPLIT_END];
            s.group("g3", "InGroup", &[1, 2], Motion::Stationary).interval = [SPLIT_END + 1, DURATION - 1];
            s.group("g4", "InGroup", &[3, 4], Motion::Stationary).interval = [SPLIT_END + 1, DURATION - 1];
        }
        Planted::Chase => {
            s.agent(1, [150.0, 0.0]);
            s.agent(2, [150.0, 26.0]);
            s.agent(3, [0.0, 0.0]);
            s.agent(4, [0.0, 26.0]);
            let v = s.uniform(4.5, 5.0);
            s.group("g1", "RunTogether", &[1, 2], Motion::Walk { velocity: [v, 0.0], speed_wave: None });
            s.group(
                "g2",
                "RunTogether",
                &[3, 4],
                Motion::Pursue {
                    target: "g1".into(),
                    speed: v + 0.5,
                    stop_distance: 50.0,
                },
            );
            s.relation("Chase", "g2", "g1");
            s.background(5, 0.0);
        }
    }
    s.finish()
}

/// Three people fighting while a fourth, alone, approaches them.
pub fn hierarchical(seed: u64) -> ScenarioSpec {
    let mut s = Scene::new(seed);
    s.fight(&[1, 2, 3]);
    let speed = s.uniform(1.0, 1.3);
    let d0 = approach_start(speed, 40.0);
    s.agent(4, [d0, 12.0]);
    s.group(
        "g2",
        "single",
        &[4],
        Motion::Pursue {
            target: "g1".into(),
            speed,
            stop_distance: 40.0,
        },
    );
    s.relation("Approach", "g2", "g1");
    s.finish()
}

/// An approach in which one member of the approaching group weaves
/// sideways, so its own motion misrepresents the group.
pub fn outlier(seed: u64) -> ScenarioSpec {
    let mut s = Scene::new(seed);
    s.agent(1, [0.0, 0.0]);
    s.agent(2, [0.0, 26.0]);
    s.group("g1", "InGroup", &[1, 2], Motion::Stationary);
    let speed = s.uniform(1.0, 1.3);
    let d0 = approach_start(speed, 40.0);
    s.agent(3, [d0, -13.0]);
    s.agent(4, [d0, 13.0]);
    s.agent(5, [d0 + 20.0, 0.0]);
    let amplitude = s.uniform(12.0, 18.0);
    let period = s.uniform(25.0, 35.0);
    let g = s.group(
        "g2",
        "WalkTogether",
        &[3, 4, 5],
        Motion::Pursue {
            target: "g1".into(),
            speed,
            stop_distance: 40.0,
        },
    );
    g.wobble = Some(Wobble {
        member: 5,
        amplitude,
        period,
    });
    s.relation("Approach", "g2", "g1");
    s.finish()
}

/// A group walking together whose members follow the same speed profile
/// `offset` and `2 * offset` frames late.
pub fn asynchronous(seed: u64, offset: Frame) -> ScenarioSpec {
    let mut s = Scene::new(seed);
    s.agent(1, [0.0, 0.0]);
    s.agent(2, [-10.0, 26.0]);
    s.agent(3, [-20.0, 12.0]);
    let v = s.walk_speed();
    let speed_wave = s.wave(0.6);
    let g = s.group("g1", "WalkTogether", &[1, 2, 3], Motion::Walk { velocity: [v, 0.0], speed_wave });
    g.offsets.insert(2, offset);
    g.offsets.insert(3, 2 * offset);
    s.background(4, 100.0);
    s.finish()
}

/// Two standing groups and a lone bystander at moderate distances, with no
/// interaction between them.
pub fn standing(seed: u64) -> ScenarioSpec {
    let mut s = Scene::new(seed);
    let d = s.uniform(250.0, 600.0);
    s.agent(1, [0.0, 0.0]);
    s.agent(2, [0.0, 26.0]);
    s.group("g1", "InGroup", &[1, 2], Motion::Stationary);
    s.agent(3, [d, 0.0]);
    s.agent(4, [d + 20.0, 18.0]);
    s.group("g2", "InGroup", &[3, 4], Motion::Stationary);
    let e = s.uniform(250.0, 600.0);
    s.agent(5, [d / 2.0, e]);
    s.finish()
}

/// Every builder, `copies` times, on seeds derived from `base_seed`.
pub fn training_set(base_seed: u64, copies: u64) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for c in 0..copies {
        let seed = base_seed.wrapping_add(c * 97);
        for (i, kind) in Planted::ALL.into_iter().enumerate() {
            out.push(planted(kind, seed.wrapping_add(i as u64)));
        }
        out.push(hierarchical(seed + 10));
        out.push(outlier(seed + 11));
        out.push(asynchronous(seed + 12, 2 + (c % 4) as Frame));
        out.push(standing(seed + 13));
    }
    out
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::topology::{LogTopology, Topology};
use super::SeqError;
use crate::gmm::{GaussianMixture, PreparedMixture};
use crate::logspace::ln;
use crate::taxonomy::{ActivityClass, Taxonomy};

/// Bounds for the advance probability of every state.
pub const ADVANCE_MIN: f64 = 1e-3;

/// How the shorter stream is aligned against the longer one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMode {
    /// Learned per-state advance probabilities.
    #[default]
    Async,
    /// Both streams advance together at every step.
    Sync,
}

/// Pairwise model over two observation streams with a hidden alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncModel {
    pub topology: Topology,
    /// Per-state probability that the first stream emits its next observation.
    pub advance: Vec<f64>,
    /// Per-state density of the concatenated pair `(F_i(s), F_j(t))`.
    pub joint: Vec<GaussianMixture>,
    /// Per-state density of `F_j(t)` alone.
    pub marginal: Vec<GaussianMixture>,
}

impl AsyncModel {
    pub fn n_states(&self) -> usize {
        self.topology.n_states()
    }

    /// Dimension of one stream's observation.
    pub fn obs_dim(&self) -> usize {
        self.marginal[0].dim()
    }

    pub fn validate(&self) -> Result<(), SeqError> {
        self.topology.validate()?;
        let n = self.n_states();
        if self.advance.len() != n || self.joint.len() != n || self.marginal.len() != n {
            return Err(SeqError::InvalidModel("per-state parameter count mismatch".into()));
        }
        for e in &self.advance {
            if !(ADVANCE_MIN..=1.0 - ADVANCE_MIN).contains(e) {
                return Err(SeqError::InvalidModel(format!("advance probability {e} out of range")));
            }
        }
        let d = self.marginal[0].dim();
        for (j, m) in self.joint.iter().zip(&self.marginal) {
            j.validate()?;
            m.validate()?;
            if m.dim() != d || j.dim() != 2 * d {
                return Err(SeqError::InvalidModel("emission dimensions inconsistent".into()));
            }
        }
        Ok(())
    }

    pub fn prepare(&self, mode: AlignmentMode) -> PreparedAsync {
        let (ln_advance, ln_hold) = match mode {
            AlignmentMode::Async => (
                self.advance.iter().map(|e| ln(*e)).collect(),
                self.advance.iter().map(|e| ln(1.0 - e)).collect(),
            ),
            AlignmentMode::Sync => (vec![0.0; self.n_states()], vec![f64::NEG_INFINITY; self.n_states()]),
        };
        PreparedAsync {
            topology: self.topology.log(),
            ln_advance,
            ln_hold,
            joint: self.joint.iter().map(GaussianMixture::prepare).collect(),
            marginal: self.marginal.iter().map(GaussianMixture::prepare).collect(),
            dim: self.obs_dim(),
        }
    }
}

/// Inference-ready form of an [`AsyncModel`].
#[derive(Debug, Clone)]
pub struct PreparedAsync {
    pub topology: LogTopology,
    pub ln_advance: Vec<f64>,
    pub ln_hold: Vec<f64>,
    pub joint: Vec<PreparedMixture>,
    pub marginal: Vec<PreparedMixture>,
    pub dim: usize,
}

impl PreparedAsync {
    pub fn n_states(&self) -> usize {
        self.ln_advance.len()
    }
}

/// Ordinary HMM over a single stream (used for group features).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncModel {
    pub topology: Topology,
    pub emissions: Vec<GaussianMixture>,
}

impl SyncModel {
    pub fn n_states(&self) -> usize {
        self.topology.n_states()
    }

    pub fn obs_dim(&self) -> usize {
        self.emissions[0].dim()
    }

    pub fn validate(&self) -> Result<(), SeqError> {
        self.topology.validate()?;
        if self.emissions.len() != self.n_states() {
            return Err(SeqError::InvalidModel("per-state parameter count mismatch".into()));
        }
        let d = self.obs_dim();
        for e in &self.emissions {
            e.validate()?;
            if e.dim() != d {
                return Err(SeqError::InvalidModel("emission dimensions inconsistent".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityModel {
    pub label: String,
    pub class: ActivityClass,
    /// Pairwise correlation model; absent for the solitary label.
    pub pair: Option<AsyncModel>,
    /// Group-feature model; present for group-forming labels.
    pub group: Option<SyncModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Body-size change above which a person is an active seed.
    pub active: f64,
    /// Mutual correlation above which a pair is a seed.
    pub pair_seed: f64,
    /// Normalized score above which a member is representative.
    pub representative: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            active: 0.1,
            pair_seed: 0.95,
            representative: 0.3,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), SeqError> {
        for v in [self.active, self.pair_seed, self.representative] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SeqError::InvalidModel(format!("threshold {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Trained models for every activity plus the settings they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityModelBank {
    pub taxonomy: Taxonomy,
    pub models: BTreeMap<String, ActivityModel>,
    /// Correlation window length in frames.
    pub window: usize,
    /// Alignment slack at the end of the window.
    pub delta_t: usize,
    pub alignment: AlignmentMode,
    pub thresholds: Thresholds,
}

pub const DEFAULT_WINDOW: usize = 25;
pub const DEFAULT_DELTA_T: usize = 5;

impl ActivityModelBank {
    pub fn validate(&self) -> Result<(), SeqError> {
        if self.window < 2 {
            return Err(SeqError::InvalidModel("window must be at least 2".into()));
        }
        if self.delta_t >= self.window {
            return Err(SeqError::InvalidModel("delta_t must be below the window".into()));
        }
        self.thresholds.validate()?;
        let mut pair_dim = None;
        let mut group_dim = None;
        for (label, class) in self.taxonomy.iter() {
            let m = self
                .models
                .get(label)
                .ok_or_else(|| SeqError::MissingModel(label.to_string()))?;
            if m.label != label || m.class != class {
                return Err(SeqError::InvalidModel(format!("model entry for {label} mislabeled")));
            }
            match (&m.pair, class.is_pairwise()) {
                (Some(p), true) => {
                    p.validate()?;
                    check_same(&mut pair_dim, p.obs_dim())?;
                }
                (None, true) => return Err(SeqError::MissingModel(label.to_string())),
                (Some(_), false) => {
                    return Err(SeqError::InvalidModel(format!("{label} cannot have a pair model")))
                }
                (None, false) => {}
            }
            match (&m.group, class.forms_groups()) {
                (Some(g), _) => {
                    g.validate()?;
                    check_same(&mut group_dim, g.obs_dim())?;
                }
                (None, true) => return Err(SeqError::MissingModel(label.to_string())),
                (None, false) => {}
            }
        }
        if let Some(extra) = self.models.keys().find(|k| !self.taxonomy.contains(k)) {
            return Err(SeqError::InvalidModel(format!("model {extra} not in taxonomy")));
        }
        Ok(())
    }

    pub fn model(&self, label: &str) -> Option<&ActivityModel> {
        self.models.get(label)
    }

    /// Observation dimension of the pairwise models.
    pub fn pair_dim(&self) -> Option<usize> {
        self.models.values().find_map(|m| m.pair.as_ref().map(AsyncModel::obs_dim))
    }

    pub fn group_dim(&self) -> Option<usize> {
        self.models.values().find_map(|m| m.group.as_ref().map(SyncModel::obs_dim))
    }
}

fn check_same(slot: &mut Option<usize>, d: usize) -> Result<(), SeqError> {
    match slot {
        Some(prev) if *prev != d => Err(SeqError::InvalidModel(format!(
            "models disagree on observation dimension ({prev} vs {d})"
        ))),
        _ => {
            *slot = Some(d);
            Ok(())
        }
    }
}

//! Activity correlation between two entities over a sliding window.

use std::collections::BTreeMap;

use super::ahmm::{ahmm_forward, ForwardOptions};
use super::model::{ActivityModelBank, PreparedAsync};
use super::SeqError;
use crate::features::{kinematics, pair_between, Kinematics};
use crate::logspace::log_sum_exp;
use crate::trackio::{Frame, PersonId, TrackSet};

/// Normalized correlation of one ordered pair over every pairwise activity.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    log_values: BTreeMap<String, f64>,
}

impl CorrelationProfile {
    /// Normalizes per-activity log masses. If every mass is zero the profile
    /// is uniform.
    pub fn from_log_masses(masses: BTreeMap<String, f64>) -> Self {
        let all: Vec<f64> = masses.values().copied().collect();
        let z = log_sum_exp(&all);
        let uniform = -(masses.len().max(1) as f64).ln();
        let log_values = masses
            .into_iter()
            .map(|(l, m)| (l, if z.is_finite() { m - z } else { uniform }))
            .collect();
        Self { log_values }
    }

    pub fn value(&self, label: &str) -> f64 {
        self.log_value(label).exp()
    }

    /// `ln co`; `-inf` for unknown labels.
    pub fn log_value(&self, label: &str) -> f64 {
        self.log_values.get(label).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn values(&self) -> impl Iterator<Item = (&str, f64)> {
        self.log_values.iter().map(|(l, v)| (l.as_str(), v.exp()))
    }

    pub fn total(&self) -> f64 {
        self.log_values.values().map(|v| v.exp()).sum()
    }

    /// Highest-valued activity; ties go to the lexicographically smaller name.
    pub fn label(&self) -> &str {
        self.best_of(|_| true).unwrap_or("")
    }

    /// Highest-valued activity among those accepted by `keep`.
    pub fn best_of(&self, keep: impl Fn(&str) -> bool) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (l, v) in &self.log_values {
            if !keep(l) {
                continue;
            }
            if best.is_none_or(|(_, bv)| *v > bv) {
                best = Some((l, *v));
            }
        }
        best.map(|(l, _)| l)
    }
}

/// A bank with its pairwise models ready for repeated inference.
#[derive(Debug, Clone)]
pub struct PreparedBank<'a> {
    pub bank: &'a ActivityModelBank,
    pairwise: Vec<(String, PreparedAsync)>,
}

impl<'a> PreparedBank<'a> {
    pub fn new(bank: &'a ActivityModelBank) -> Self {
        let pairwise = bank
            .models
            .iter()
            .filter_map(|(l, m)| m.pair.as_ref().map(|p| (l.clone(), p.prepare(bank.alignment))))
            .collect();
        Self { bank, pairwise }
    }

    /// Per-activity lattice mass for `fi` against `fj`, normalized across
    /// activities.
    pub fn correlate_streams(&self, fi: &[Vec<f64>], fj: &[Vec<f64>]) -> Result<CorrelationProfile, SeqError> {
        let opts = ForwardOptions {
            terminal_slack: self.bank.delta_t,
            banded: true,
        };
        let mut masses = BTreeMap::new();
        for (label, model) in &self.pairwise {
            let f = ahmm_forward(model, fi, fj, opts)?;
            masses.insert(label.clone(), f.terminal_mass);
        }
        Ok(CorrelationProfile::from_log_masses(masses))
    }

    /// `co_a(b)`: correlation with `a` as the first stream.
    pub fn correlate_entities(&self, a: &[Kinematics], b: &[Kinematics]) -> Result<CorrelationProfile, SeqError> {
        let (fi, fj) = pair_streams(a, b);
        self.correlate_streams(&fi, &fj)
    }
}

/// Feature streams for `a` relative to `b` and for `b` relative to `a`.
pub fn pair_streams(a: &[Kinematics], b: &[Kinematics]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    a.iter()
        .zip(b)
        .map(|(x, y)| (pair_between(x, y).to_vec(), pair_between(y, x).to_vec()))
        .unzip()
}

/// Kinematics of every listed person over the longest run of frames ending
/// at `t` (at most `window` long) in which all of them are observable.
/// Indexed `[person][frame]`; `None` when fewer than two frames qualify.
pub fn window_kinematics(
    tracks: &TrackSet,
    persons: &[PersonId],
    t: Frame,
    window: usize,
) -> Option<Vec<Vec<Kinematics>>> {
    let mut cols: Vec<Vec<Kinematics>> = vec![Vec::with_capacity(window); persons.len()];
    let mut frame = t;
    for _ in 0..window {
        let ks: Option<Vec<Kinematics>> = persons.iter().map(|&p| kinematics(tracks, p, frame).ok()).collect();
        let Some(ks) = ks else { break };
        for (c, k) in cols.iter_mut().zip(ks) {
            c.push(k);
        }
        if frame == 0 {
            break;
        }
        frame -= 1;
    }
    if cols.first().is_none_or(|c| c.len() < 2) {
        return None;
    }
    for c in &mut cols {
        c.reverse();
    }
    Some(cols)
}

/// `co_i(j, t)` over the bank's window; `Ok(None)` when the window is
/// unavailable.
pub fn correlation(
    bank: &ActivityModelBank,
    tracks: &TrackSet,
    i: PersonId,
    j: PersonId,
    t: Frame,
) -> Result<Option<CorrelationProfile>, SeqError> {
    let Some(w) = window_kinematics(tracks, &[i, j], t, bank.window) else {
        return Ok(None);
    };
    PreparedBank::new(bank).correlate_entities(&w[0], &w[1]).map(Some)
}

/// Both `co_i(j, t)` and `co_j(i, t)`.
pub fn asymmetry_check(
    bank: &ActivityModelBank,
    tracks: &TrackSet,
    i: PersonId,
    j: PersonId,
    t: Frame,
) -> Result<Option<(CorrelationProfile, CorrelationProfile)>, SeqError> {
    let Some(w) = window_kinematics(tracks, &[i, j], t, bank.window) else {
        return Ok(None);
    };
    let p = PreparedBank::new(bank);
    Ok(Some((p.correlate_entities(&w[0], &w[1])?, p.correlate_entities(&w[1], &w[0])?)))
}

//! Synchronous HMM recursions over a precomputed emission table.

use super::model::SyncModel;
use super::topology::{LogTopology, TopologyCounts};
use super::SeqError;
use crate::gmm::MixtureAccumulator;
use crate::logspace::log_sum_exp;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Forward log-likelihood. `emission(t, k)` is the log-density of step `t` in
/// state `k`. With `with_exit` the final step is weighted by exit
/// probabilities; without, the result is the likelihood of the prefix.
pub fn sync_forward(
    topology: &LogTopology,
    t_len: usize,
    emission: impl Fn(usize, usize) -> f64,
    with_exit: bool,
) -> f64 {
    let n = topology.entry.len();
    if t_len == 0 {
        return NEG_INF;
    }
    let mut alpha: Vec<f64> = (0..n).map(|k| topology.entry[k] + emission(0, k)).collect();
    let mut next = vec![0.0; n];
    let mut terms = vec![0.0; n];
    for t in 1..t_len {
        for (k, slot) in next.iter_mut().enumerate() {
            for (kp, term) in terms.iter_mut().enumerate() {
                *term = alpha[kp] + topology.transition[kp][k];
            }
            *slot = log_sum_exp(&terms) + emission(t, k);
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    if with_exit {
        for (a, e) in alpha.iter_mut().zip(&topology.exit) {
            *a += e;
        }
    }
    log_sum_exp(&alpha)
}

fn emission_table(m: &SyncModel, seq: &[Vec<f64>]) -> Result<Vec<f64>, SeqError> {
    if seq.is_empty() {
        return Err(SeqError::EmptySequence);
    }
    let d = m.obs_dim();
    let prepared: Vec<_> = m.emissions.iter().map(|e| e.prepare()).collect();
    let mut table = Vec::with_capacity(seq.len() * prepared.len());
    for x in seq {
        if x.len() != d {
            return Err(SeqError::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        table.extend(prepared.iter().map(|p| p.log_density(x)));
    }
    Ok(table)
}

impl SyncModel {
    /// Log-likelihood of an observed prefix (no exit term).
    pub fn log_likelihood(&self, seq: &[Vec<f64>]) -> Result<f64, SeqError> {
        let table = emission_table(self, seq)?;
        let n = self.n_states();
        Ok(sync_forward(&self.topology.log(), seq.len(), |t, k| table[t * n + k], false))
    }

    /// Log-likelihood of a complete sequence, ending with an exit.
    pub fn total_log_likelihood(&self, seq: &[Vec<f64>]) -> Result<f64, SeqError> {
        let table = emission_table(self, seq)?;
        let n = self.n_states();
        Ok(sync_forward(&self.topology.log(), seq.len(), |t, k| table[t * n + k], true))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SyncStats {
    pub topology: TopologyCounts,
    pub emissions: Vec<MixtureAccumulator>,
    pub log_likelihood: f64,
    pub segments: usize,
}

impl SyncStats {
    pub fn new(m: &SyncModel) -> Self {
        Self {
            topology: TopologyCounts::new(m.n_states()),
            emissions: m
                .emissions
                .iter()
                .map(|e| MixtureAccumulator::new(e.components().len(), e.dim()))
                .collect(),
            log_likelihood: 0.0,
            segments: 0,
        }
    }

    pub fn merge(&mut self, o: &SyncStats) {
        self.topology.merge(&o.topology);
        for (a, b) in self.emissions.iter_mut().zip(&o.emissions) {
            a.merge(b);
        }
        self.log_likelihood += o.log_likelihood;
        self.segments += o.segments;
    }
}

/// Baum-Welch E-step for one complete sequence.
pub(crate) fn accumulate_sync(m: &SyncModel, seq: &[Vec<f64>], stats: &mut SyncStats) -> Result<bool, SeqError> {
    let table = emission_table(m, seq)?;
    let prepared: Vec<_> = m.emissions.iter().map(|e| e.prepare()).collect();
    let topo = m.topology.log();
    let n = m.n_states();
    let t_len = seq.len();
    let e = |t: usize, k: usize| table[t * n + k];
    let mut alpha = vec![NEG_INF; t_len * n];
    let mut terms = vec![0.0; n];
    for k in 0..n {
        alpha[k] = topo.entry[k] + e(0, k);
    }
    for t in 1..t_len {
        for k in 0..n {
            for (kp, term) in terms.iter_mut().enumerate() {
                *term = alpha[(t - 1) * n + kp] + topo.transition[kp][k];
            }
            alpha[t * n + k] = log_sum_exp(&terms) + e(t, k);
        }
    }
    let fin: Vec<f64> = (0..n).map(|k| alpha[(t_len - 1) * n + k] + topo.exit[k]).collect();
    let ll = log_sum_exp(&fin);
    if !ll.is_finite() {
        return Ok(false);
    }
    let mut beta = vec![NEG_INF; t_len * n];
    beta[(t_len - 1) * n..].copy_from_slice(&topo.exit);
    for t in (0..t_len - 1).rev() {
        for k in 0..n {
            for (kp, term) in terms.iter_mut().enumerate() {
                *term = topo.transition[k][kp] + e(t + 1, kp) + beta[(t + 1) * n + kp];
            }
            beta[t * n + k] = log_sum_exp(&terms);
        }
    }
    for t in 0..t_len {
        for k in 0..n {
            let g = (alpha[t * n + k] + beta[t * n + k] - ll).exp();
            if t == 0 {
                stats.topology.entry[k] += g;
            }
            if t == t_len - 1 {
                stats.topology.exit[k] += g;
            }
            if g > 0.0 {
                stats.emissions[k].add(&prepared[k], &seq[t], &[], g);
            }
            if t > 0 {
                for kp in 0..n {
                    stats.topology.transition[kp][k] += (alpha[(t - 1) * n + kp]
                        + topo.transition[kp][k]
                        + e(t, k)
                        + beta[t * n + k]
                        - ll)
                        .exp();
                }
            }
        }
    }
    stats.log_likelihood += ll;
    stats.segments += 1;
    Ok(true)
}

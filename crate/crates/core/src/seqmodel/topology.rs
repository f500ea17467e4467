use serde::{Deserialize, Serialize};

use super::SeqError;
use crate::logspace::ln;

const SUM_TOLERANCE: f64 = 1e-12;

/// Entry distribution, transitions and exit probabilities over the emitting
/// states. Each transition row plus the state's exit probability sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub entry: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub exit: Vec<f64>,
}

impl Topology {
    /// Left-to-right-agnostic start: uniform entry, `stay` mass on the
    /// diagonal, the remainder spread over the other states.
    pub fn initial(n: usize, stay: f64, exit: f64) -> Self {
        let transition = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        if n == 1 {
                            1.0 - exit
                        } else if k == l {
                            stay * (1.0 - exit)
                        } else {
                            (1.0 - stay) * (1.0 - exit) / (n - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            entry: vec![1.0 / n as f64; n],
            transition,
            exit: vec![exit; n],
        }
    }

    pub fn n_states(&self) -> usize {
        self.entry.len()
    }

    pub fn validate(&self) -> Result<(), SeqError> {
        let n = self.entry.len();
        let bad = |m: String| Err(SeqError::InvalidModel(m));
        if n == 0 {
            return bad("no states".into());
        }
        if self.transition.len() != n || self.exit.len() != n {
            return bad("topology shape mismatch".into());
        }
        let valid = |p: f64| (0.0..=1.0).contains(&p);
        if !self.entry.iter().all(|p| valid(*p)) {
            return bad("entry probability out of range".into());
        }
        if (self.entry.iter().sum::<f64>() - 1.0).abs() > SUM_TOLERANCE {
            return bad("entry distribution does not sum to 1".into());
        }
        for (k, row) in self.transition.iter().enumerate() {
            if row.len() != n || !row.iter().chain([&self.exit[k]]).all(|p| valid(*p)) {
                return bad(format!("transition row {k} invalid"));
            }
            let s: f64 = row.iter().sum::<f64>() + self.exit[k];
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return bad(format!("transition row {k} plus exit sums to {s}"));
            }
        }
        Ok(())
    }

    /// Raises every probability to at least `floor` and renormalizes.
    pub fn floored(&self, floor: f64) -> Self {
        let entry = normalized(self.entry.iter().map(|p| p.max(floor)).collect());
        let mut transition = Vec::with_capacity(self.n_states());
        let mut exit = Vec::with_capacity(self.n_states());
        for (row, e) in self.transition.iter().zip(&self.exit) {
            let mut r: Vec<f64> = row.iter().chain([e]).map(|p| p.max(floor)).collect();
            r = normalized(r);
            exit.push(r.pop().unwrap_or(0.0));
            transition.push(r);
        }
        let mut t = Self {
            entry,
            transition,
            exit,
        };
        t.absorb_residue();
        t
    }

    /// Puts floating-point residue of each distribution into its largest entry
    /// so that sums are one to the last bit that matters.
    pub(crate) fn absorb_residue(&mut self) {
        fix_sum(&mut self.entry, 0.0);
        for k in 0..self.exit.len() {
            let e = self.exit[k];
            fix_sum(&mut self.transition[k], e);
        }
    }

    pub fn log(&self) -> LogTopology {
        LogTopology {
            entry: self.entry.iter().map(|p| ln(*p)).collect(),
            transition: self
                .transition
                .iter()
                .map(|r| r.iter().map(|p| ln(*p)).collect())
                .collect(),
            exit: self.exit.iter().map(|p| ln(*p)).collect(),
        }
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|p| *p /= s);
    }
    v
}

fn fix_sum(v: &mut [f64], extra: f64) {
    let residue = 1.0 - extra - v.iter().sum::<f64>();
    if let Some(big) = v.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *big = (*big + residue).max(0.0);
    }
}

/// Log-domain copy of a [`Topology`] for inference.
#[derive(Debug, Clone)]
pub struct LogTopology {
    pub entry: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub exit: Vec<f64>,
}

/// Expected usage counts gathered in an E-step.
#[derive(Debug, Clone)]
pub(crate) struct TopologyCounts {
    pub entry: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub exit: Vec<f64>,
}

impl TopologyCounts {
    pub fn new(n: usize) -> Self {
        Self {
            entry: vec![0.0; n],
            transition: vec![vec![0.0; n]; n],
            exit: vec![0.0; n],
        }
    }

    pub fn merge(&mut self, o: &TopologyCounts) {
        for k in 0..self.entry.len() {
            self.entry[k] += o.entry[k];
            self.exit[k] += o.exit[k];
            for l in 0..self.entry.len() {
                self.transition[k][l] += o.transition[k][l];
            }
        }
    }

    /// Maximum-likelihood topology; states without outgoing mass keep their
    /// previous row.
    pub fn finish(&self, previous: &Topology) -> Topology {
        let n = self.entry.len();
        let es: f64 = self.entry.iter().sum();
        let entry = if es > 0.0 {
            self.entry.iter().map(|c| c / es).collect()
        } else {
            previous.entry.clone()
        };
        let mut transition = Vec::with_capacity(n);
        let mut exit = Vec::with_capacity(n);
        for k in 0..n {
            let out: f64 = self.transition[k].iter().sum::<f64>() + self.exit[k];
            if out > 0.0 {
                transition.push(self.transition[k].iter().map(|c| c / out).collect());
                exit.push(self.exit[k] / out);
            } else {
                transition.push(previous.transition[k].clone());
                exit.push(previous.exit[k]);
            }
        }
        let mut t = Topology {
            entry,
            transition,
            exit,
        };
        t.absorb_residue();
        t
    }
}

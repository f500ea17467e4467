//! EM training of pairwise and group models.

use rayon::prelude::*;

use super::ahmm::{accumulate, AsyncStats, ForwardOptions};
use super::hmm::{accumulate_sync, SyncStats};
use super::model::{AlignmentMode, AsyncModel, SyncModel, ADVANCE_MIN, DEFAULT_DELTA_T};
use super::topology::Topology;
use super::SeqError;
use crate::gmm::{fit_em, kmeans, relative_gain, EmConfig, GaussianMixture};

/// Probability floor applied to the topology once training finishes, so
/// that no transition or exit is impossible on unseen data.
pub const PROBABILITY_FLOOR: f64 = 1e-8;

/// Two aligned observation streams: `first` plays `F_i`, `second` `F_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSegment {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub states: usize,
    pub mixtures: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub terminal_slack: usize,
    pub alignment: AlignmentMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            states: 2,
            mixtures: 2,
            max_iters: 30,
            tol: 1e-4,
            seed: 0,
            terminal_slack: DEFAULT_DELTA_T,
            alignment: AlignmentMode::Async,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    /// Training log-likelihood at each EM iteration, the last one belonging
    /// to the returned parameters before the probability floor.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
    /// Some state had too little data for the requested mixture count and
    /// was fitted with a single component.
    pub reduced_mixtures: bool,
    /// Segments that contributed to the final iteration.
    pub segments_used: usize,
}

fn check_dims<'a>(seqs: impl Iterator<Item = &'a Vec<Vec<f64>>>) -> Result<usize, SeqError> {
    let mut dim = None;
    for seq in seqs {
        if seq.is_empty() {
            return Err(SeqError::EmptySequence);
        }
        for x in seq {
            match dim {
                None => dim = Some(x.len()),
                Some(d) if d != x.len() => {
                    return Err(SeqError::DimensionMismatch {
                        expected: d,
                        found: x.len(),
                    })
                }
                _ => {}
            }
        }
    }
    dim.ok_or_else(|| SeqError::NoTrainingData("no segments".into()))
}

/// Assigns each sample to a state by k-means on standardized coordinates.
fn initial_states(samples: &[Vec<f64>], n: usize, seed: u64) -> Vec<usize> {
    let d = samples[0].len();
    let count = samples.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|x| x[j]).sum::<f64>() / count).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let v = samples.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / count;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let z: Vec<Vec<f64>> = samples
        .iter()
        .map(|x| (0..d).map(|j| (x[j] - mean[j]) / sd[j]).collect())
        .collect();
    kmeans(&z, n.min(z.len()), seed, 100).1
}

/// Fits one state's emission mixture, dropping to one component when the
/// state has fewer than `mixtures * (dim + 1)` samples.
fn fit_state(
    samples: &[Vec<f64>],
    mixtures: usize,
    seed: u64,
    reduced: &mut bool,
) -> Result<GaussianMixture, SeqError> {
    let dim = samples[0].len();
    let k = if samples.len() < mixtures * (dim + 1) {
        if mixtures > 1 {
            *reduced = true;
        }
        1
    } else {
        mixtures
    };
    let cfg = EmConfig {
        seed,
        ..EmConfig::default()
    };
    Ok(fit_em(samples, k, &cfg)?.mixture)
}

fn state_members<'a>(samples: &'a [Vec<f64>], assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let picked: Vec<Vec<f64>> = samples
        .iter()
        .zip(assign)
        .filter(|(_, a)| **a == k)
        .map(|(x, _)| x.clone())
        .collect();
    if picked.len() >= 2 {
        picked
    } else {
        samples.to_vec()
    }
}

fn initial_exit(lengths: impl Iterator<Item = usize>) -> f64 {
    let (sum, count) = lengths.fold((0usize, 0usize), |(s, c), l| (s + l, c + 1));
    (count as f64 / sum.max(1) as f64).clamp(1e-3, 0.5)
}

fn init_async(segments: &[PairSegment], cfg: &TrainConfig, reduced: &mut bool) -> Result<AsyncModel, SeqError> {
    let joint: Vec<Vec<f64>> = segments
        .iter()
        .flat_map(|seg| {
            seg.first
                .iter()
                .zip(&seg.second)
                .map(|(a, b)| a.iter().chain(b).copied().collect())
        })
        .collect();
    let d = segments[0].second[0].len();
    let assign = initial_states(&joint, cfg.states, cfg.seed);
    let mut joints = Vec::with_capacity(cfg.states);
    let mut marginals = Vec::with_capacity(cfg.states);
    for k in 0..cfg.states {
        let members = state_members(&joint, &assign, k);
        let seed = cfg.seed.wrapping_add(1 + k as u64);
        joints.push(fit_state(&members, cfg.mixtures, seed, reduced)?);
        let second: Vec<Vec<f64>> = members.iter().map(|x| x[d..].to_vec()).collect();
        marginals.push(fit_state(&second, cfg.mixtures, seed, reduced)?);
    }
    Ok(AsyncModel {
        topology: Topology::initial(cfg.states, 0.9, initial_exit(segments.iter().map(|s| s.second.len()))),
        advance: vec![0.9; cfg.states],
        joint: joints,
        marginal: marginals,
    })
}

fn e_step_async(model: &AsyncModel, segments: &[PairSegment], cfg: &TrainConfig) -> Result<AsyncStats, SeqError> {
    let prepared = model.prepare(cfg.alignment);
    let opts = ForwardOptions {
        terminal_slack: cfg.terminal_slack,
        banded: true,
    };
    let parts: Vec<AsyncStats> = segments
        .par_chunks(8)
        .map(|chunk| {
            let mut stats = AsyncStats::new(&prepared);
            for seg in chunk {
                accumulate(&prepared, &seg.first, &seg.second, opts, &mut stats)?;
            }
            Ok(stats)
        })
        .collect::<Result<_, SeqError>>()?;
    let mut total = AsyncStats::new(&prepared);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

fn m_step_async(model: &AsyncModel, stats: &AsyncStats, cfg: &TrainConfig) -> AsyncModel {
    let advance = match cfg.alignment {
        AlignmentMode::Sync => model.advance.clone(),
        AlignmentMode::Async => (0..model.n_states())
            .map(|k| {
                if stats.occupancy[k] > 0.0 {
                    (stats.advanced[k] / stats.occupancy[k]).clamp(ADVANCE_MIN, 1.0 - ADVANCE_MIN)
                } else {
                    model.advance[k]
                }
            })
            .collect(),
    };
    AsyncModel {
        topology: stats.topology.finish(&model.topology),
        advance,
        joint: (0..model.n_states())
            .map(|k| stats.joint[k].finish(&model.joint[k]))
            .collect(),
        marginal: (0..model.n_states())
            .map(|k| stats.marginal[k].finish(&model.marginal[k]))
            .collect(),
    }
}

/// Trains a pairwise model by EM over the alignment lattice.
pub fn train_activity_model(segments: &[PairSegment], cfg: &TrainConfig) -> Result<Trained<AsyncModel>, SeqError> {
    if segments.is_empty() {
        return Err(SeqError::NoTrainingData("no segments".into()));
    }
    let d = check_dims(segments.iter().map(|s| &s.first).chain(segments.iter().map(|s| &s.second)))?;
    let mut reduced = false;
    let mut model = init_async(segments, cfg, &mut reduced)?;
    debug_assert_eq!(model.obs_dim(), d);
    let mut lls = Vec::new();
    let mut converged = false;
    let mut used = 0;
    for _ in 0..cfg.max_iters.max(1) {
        let stats = e_step_async(&model, segments, cfg)?;
        if stats.segments == 0 {
            return Err(SeqError::NoTrainingData("every segment has zero likelihood".into()));
        }
        used = stats.segments;
        let ll = stats.log_likelihood;
        if let Some(&prev) = lls.last() {
            if relative_gain(prev, ll) < cfg.tol {
                lls.push(ll);
                converged = true;
                break;
            }
        }
        lls.push(ll);
        model = m_step_async(&model, &stats, cfg);
    }
    if !converged {
        let stats = e_step_async(&model, segments, cfg)?;
        used = stats.segments;
        lls.push(stats.log_likelihood);
    }
    model.topology = model.topology.floored(PROBABILITY_FLOOR);
    Ok(Trained {
        model,
        log_likelihoods: lls,
        converged,
        reduced_mixtures: reduced,
        segments_used: used,
    })
}

fn e_step_sync(model: &SyncModel, seqs: &[Vec<Vec<f64>>]) -> Result<SyncStats, SeqError> {
    let parts: Vec<SyncStats> = seqs
        .par_chunks(16)
        .map(|chunk| {
            let mut stats = SyncStats::new(model);
            for seq in chunk {
                accumulate_sync(model, seq, &mut stats)?;
            }
            Ok(stats)
        })
        .collect::<Result<_, SeqError>>()?;
    let mut total = SyncStats::new(model);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Trains a single-stream HMM by Baum-Welch.
pub fn train_group_model(seqs: &[Vec<Vec<f64>>], cfg: &TrainConfig) -> Result<Trained<SyncModel>, SeqError> {
    if seqs.is_empty() {
        return Err(SeqError::NoTrainingData("no sequences".into()));
    }
    check_dims(seqs.iter())?;
    let samples: Vec<Vec<f64>> = seqs.iter().flatten().cloned().collect();
    let assign = initial_states(&samples, cfg.states, cfg.seed);
    let mut reduced = false;
    let mut emissions = Vec::with_capacity(cfg.states);
    for k in 0..cfg.states {
        let members = state_members(&samples, &assign, k);
        emissions.push(fit_state(&members, cfg.mixtures, cfg.seed.wrapping_add(1 + k as u64), &mut reduced)?);
    }
    let mut model = SyncModel {
        topology: Topology::initial(cfg.states, 0.9, initial_exit(seqs.iter().map(Vec::len))),
        emissions,
    };
    let mut lls = Vec::new();
    let mut converged = false;
    let mut used = 0;
    for _ in 0..cfg.max_iters.max(1) {
        let stats = e_step_sync(&model, seqs)?;
        if stats.segments == 0 {
            return Err(SeqError::NoTrainingData("every sequence has zero likelihood".into()));
        }
        used = stats.segments;
        let ll = stats.log_likelihood;
        if let Some(&prev) = lls.last() {
            if relative_gain(prev, ll) < cfg.tol {
                lls.push(ll);
                converged = true;
                break;
            }
        }
        lls.push(ll);
        model = SyncModel {
            topology: stats.topology.finish(&model.topology),
            emissions: (0..model.n_states())
                .map(|k| stats.emissions[k].finish(&model.emissions[k]))
                .collect(),
        };
    }
    if !converged {
        let stats = e_step_sync(&model, seqs)?;
        used = stats.segments;
        lls.push(stats.log_likelihood);
    }
    model.topology = model.topology.floored(PROBABILITY_FLOOR);
    Ok(Trained {
        model,
        log_likelihoods: lls,
        converged,
        reduced_mixtures: reduced,
        segments_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::ahmm::ahmm_forward;
    use crate::seqmodel::ahmm::tests::random_model;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Draws a complete segment from the generative process: each step picks
    /// advance or hold, emits, then transitions or exits.
    fn sample_segment<R: Rng>(m: &AsyncModel, rng: &mut R, max_len: usize) -> Option<PairSegment> {
        let pick = |rng: &mut R, probs: &[f64]| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            probs.len()
        };
        let d = m.obs_dim();
        let mut k = pick(rng, &m.topology.entry).min(m.n_states() - 1);
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for _ in 0..max_len {
            if rng.random::<f64>() < m.advance[k] {
                let x = m.joint[k].sample(rng);
                first.push(x[..d].to_vec());
                second.push(x[d..].to_vec());
            } else {
                second.push(m.marginal[k].sample(rng));
            }
            let mut row = m.topology.transition[k].clone();
            row.push(m.topology.exit[k]);
            let next = pick(rng, &row);
            if next >= m.n_states() {
                return (!first.is_empty()).then_some(PairSegment { first, second });
            }
            k = next;
        }
        None
    }

    fn mean_ll(m: &AsyncModel, segs: &[PairSegment]) -> f64 {
        let p = m.prepare(AlignmentMode::Async);
        segs.iter()
            .map(|s| ahmm_forward(&p, &s.first, &s.second, ForwardOptions::default()).unwrap().log_likelihood)
            .sum::<f64>()
            / segs.len() as f64
    }

    #[test]
    fn recovers_generating_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut truth = random_model(&mut rng, 2, 2);
        truth.topology = Topology::initial(2, 0.8, 0.08);
        truth.advance = vec![0.85, 0.4];
        let mut segs = Vec::new();
        while segs.len() < 500 {
            if let Some(s) = sample_segment(&truth, &mut rng, 40) {
                segs.push(s);
            }
        }
        let (train, held) = segs.split_at(400);
        let cfg = TrainConfig {
            terminal_slack: 0,
            seed: 3,
            max_iters: 60,
            ..Default::default()
        };
        let fit = train_activity_model(train, &cfg).unwrap();
        for w in fit.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
        let ours = mean_ll(&fit.model, held);
        let theirs = mean_ll(&truth, held);
        assert!(((ours - theirs) / theirs).abs() < 0.05, "trained {ours} vs true {theirs}");
    }

    #[test]
    fn constant_segment_converges() {
        let seg = PairSegment {
            first: vec![vec![1.0, 2.0]; 6],
            second: vec![vec![-1.0, 0.5]; 6],
        };
        let fit = train_activity_model(&[seg], &TrainConfig::default()).unwrap();
        assert!(fit.reduced_mixtures);
        assert!(fit.log_likelihoods.iter().all(|l| l.is_finite()));
        fit.model.validate().unwrap();
        for g in fit.model.joint.iter().chain(&fit.model.marginal) {
            for c in g.components() {
                assert!(c.variance.iter().all(|v| *v == crate::gmm::VARIANCE_FLOOR));
            }
        }
    }

    #[test]
    fn deterministic_and_monotone_group_training() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let seqs: Vec<Vec<Vec<f64>>> = (0..30)
            .map(|i| {
                (0..20)
                    .map(|t| {
                        let base = if (t / 5 + i) % 2 == 0 { 0.0 } else { 4.0 };
                        vec![base + rng.random_range(-0.5..0.5), rng.random_range(0.0..1.0)]
                    })
                    .collect()
            })
            .collect();
        let cfg = TrainConfig::default();
        let a = train_group_model(&seqs, &cfg).unwrap();
        let b = train_group_model(&seqs, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        for w in a.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
        }
        a.model.validate().unwrap();
    }

    #[test]
    fn synchronous_training_keeps_advance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let segs: Vec<PairSegment> = (0..10)
            .map(|_| {
                let s: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
                PairSegment {
                    first: s.clone(),
                    second: s,
                }
            })
            .collect();
        let cfg = TrainConfig {
            alignment: AlignmentMode::Sync,
            terminal_slack: 0,
            ..Default::default()
        };
        let fit = train_activity_model(&segs, &cfg).unwrap();
        assert_eq!(fit.model.advance, vec![0.9, 0.9]);
        for w in fit.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn empty_input() {
        assert!(matches!(
            train_activity_model(&[], &TrainConfig::default()),
            Err(SeqError::NoTrainingData(_))
        ));
    }
}

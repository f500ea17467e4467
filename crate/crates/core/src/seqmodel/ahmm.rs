//! Forward/backward recursions over the (time, alignment, state) lattice.
//!
//! `fj` is the driving stream: one step per observation. The alignment index
//! `s` counts how many observations of `fi` have been emitted so far. At each
//! step the current state `k` either advances (probability `eps_k`, joint
//! emission of `(fi[s-1], fj[t])`) or holds (`1 - eps_k`, emission of `fj[t]`
//! alone).

use super::model::PreparedAsync;
use super::topology::TopologyCounts;
use super::SeqError;
use crate::gmm::MixtureAccumulator;
use crate::logspace::{log_add, log_sum_exp};

const NEG_INF: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ForwardOptions {
    /// Paths may end with up to this many observations of `fi` unemitted.
    pub terminal_slack: usize,
    /// Skip lattice cells that cannot reach the terminal set. Leaves the
    /// likelihood unchanged; the stored lattice then holds only those cells.
    pub banded: bool,
}

/// Log-domain forward lattice split by the branch that produced each cell.
#[derive(Debug, Clone)]
pub struct Lattice {
    t_len: usize,
    s_len: usize,
    n: usize,
    advance: Vec<f64>,
    hold: Vec<f64>,
}

impl Lattice {
    fn new(t_len: usize, s_len: usize, n: usize) -> Self {
        let size = t_len * (s_len + 1) * n;
        Self {
            t_len,
            s_len,
            n,
            advance: vec![NEG_INF; size],
            hold: vec![NEG_INF; size],
        }
    }

    #[inline]
    fn idx(&self, t: usize, s: usize, k: usize) -> usize {
        (t * (self.s_len + 1) + s) * self.n + k
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn s_len(&self) -> usize {
        self.s_len
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    /// `ln alpha(t, s, k)`: joint probability of `fj[..=t]`, `fi[..s]` and
    /// state `k` at step `t`.
    pub fn alpha(&self, t: usize, s: usize, k: usize) -> f64 {
        let i = self.idx(t, s, k);
        log_add(self.advance[i], self.hold[i])
    }

    /// Log of the summed lattice mass at step `t`.
    pub fn step_mass(&self, t: usize) -> f64 {
        let v: Vec<f64> = (0..=self.s_len)
            .flat_map(|s| (0..self.n).map(move |k| (s, k)))
            .map(|(s, k)| self.alpha(t, s, k))
            .collect();
        log_sum_exp(&v)
    }
}

#[derive(Debug, Clone)]
pub struct AhmmForward {
    pub lattice: Lattice,
    /// Total log-likelihood: terminal alignments, including exit probabilities.
    pub log_likelihood: f64,
    /// Terminal lattice mass without exit probabilities.
    pub terminal_mass: f64,
}

struct Band {
    t_len: usize,
    s_len: usize,
    s_end: usize,
    banded: bool,
}

impl Band {
    fn new(t_len: usize, s_len: usize, opts: ForwardOptions) -> Self {
        Self {
            t_len,
            s_len,
            s_end: s_len.saturating_sub(opts.terminal_slack),
            banded: opts.banded,
        }
    }

    /// Inclusive range of alignment indices evaluated at step `t`; empty when
    /// `lo > hi`.
    fn range(&self, t: usize) -> (usize, usize) {
        let hi = (t + 1).min(self.s_len);
        let lo = if self.banded {
            self.s_end.saturating_sub(self.t_len - 1 - t)
        } else {
            0
        };
        (lo, hi)
    }

    fn contains(&self, t: usize, s: usize) -> bool {
        let (lo, hi) = self.range(t);
        lo <= s && s <= hi
    }
}

/// Emission log-densities for every lattice cell that the band can visit.
struct Emissions {
    s_len: usize,
    n: usize,
    /// `[t][s][k]`: joint density of `(fi[s], fj[t])`.
    joint: Vec<f64>,
    /// `[t][k]`: density of `fj[t]`.
    marginal: Vec<f64>,
}

impl Emissions {
    fn compute(m: &PreparedAsync, fi: &[Vec<f64>], fj: &[Vec<f64>], band: &Band) -> Self {
        let (t_len, s_len, n) = (fj.len(), fi.len(), m.n_states());
        let mut joint = vec![NEG_INF; t_len * s_len.max(1) * n];
        let mut marginal = vec![NEG_INF; t_len * n];
        let hold_possible = m.ln_hold.iter().any(|h| *h > NEG_INF);
        for t in 0..t_len {
            let (lo, hi) = band.range(t);
            for s in lo.max(1)..=hi {
                for k in 0..n {
                    joint[(t * s_len + s - 1) * n + k] =
                        m.joint[k].log_density_split(&fi[s - 1], &fj[t]);
                }
            }
            if hold_possible {
                for k in 0..n {
                    marginal[t * n + k] = m.marginal[k].log_density(&fj[t]);
                }
            }
        }
        Self {
            s_len,
            n,
            joint,
            marginal,
        }
    }

    #[inline]
    fn joint(&self, t: usize, s_idx: usize, k: usize) -> f64 {
        self.joint[(t * self.s_len + s_idx) * self.n + k]
    }

    #[inline]
    fn marginal(&self, t: usize, k: usize) -> f64 {
        self.marginal[t * self.n + k]
    }
}

fn check_inputs(m: &PreparedAsync, fi: &[Vec<f64>], fj: &[Vec<f64>]) -> Result<(), SeqError> {
    if fi.is_empty() || fj.is_empty() {
        return Err(SeqError::EmptySequence);
    }
    for x in fi.iter().chain(fj) {
        if x.len() != m.dim {
            return Err(SeqError::DimensionMismatch {
                expected: m.dim,
                found: x.len(),
            });
        }
    }
    Ok(())
}

fn run_forward(m: &PreparedAsync, em: &Emissions, band: &Band) -> Lattice {
    let (t_len, s_len, n) = (band.t_len, band.s_len, m.n_states());
    let mut lat = Lattice::new(t_len, s_len, n);
    let topo = &m.topology;
    let (lo, hi) = band.range(0);
    for k in 0..n {
        if lo <= 1 && 1 <= hi {
            let i = lat.idx(0, 1, k);
            lat.advance[i] = topo.entry[k] + m.ln_advance[k] + em.joint(0, 0, k);
        }
        if lo == 0 {
            let i = lat.idx(0, 0, k);
            lat.hold[i] = topo.entry[k] + m.ln_hold[k] + em.marginal(0, k);
        }
    }
    // pre[s][k] = ln sum_k' alpha(t-1, s, k') a(k', k)
    let mut pre = vec![NEG_INF; (s_len + 1) * n];
    let mut terms = vec![0.0; n];
    for t in 1..t_len {
        let (plo, phi) = band.range(t - 1);
        pre.iter_mut().for_each(|v| *v = NEG_INF);
        for s in plo..=phi.min(s_len) {
            if plo > phi {
                break;
            }
            let prev: Vec<f64> = (0..n).map(|k| lat.alpha(t - 1, s, k)).collect();
            if prev.iter().all(|a| *a == NEG_INF) {
                continue;
            }
            for k in 0..n {
                for (kp, term) in terms.iter_mut().enumerate() {
                    *term = prev[kp] + topo.transition[kp][k];
                }
                pre[s * n + k] = log_sum_exp(&terms);
            }
        }
        let (lo, hi) = band.range(t);
        for s in lo..=hi {
            for k in 0..n {
                let i = lat.idx(t, s, k);
                if s >= 1 {
                    let p = pre[(s - 1) * n + k];
                    if p > NEG_INF {
                        lat.advance[i] = p + m.ln_advance[k] + em.joint(t, s - 1, k);
                    }
                }
                let p = pre[s * n + k];
                if p > NEG_INF {
                    lat.hold[i] = p + m.ln_hold[k] + em.marginal(t, k);
                }
            }
        }
    }
    lat
}

fn terminal_sums(m: &PreparedAsync, lat: &Lattice, band: &Band) -> (f64, f64) {
    let t = lat.t_len - 1;
    let mut with_exit = Vec::new();
    let mut mass = Vec::new();
    for s in band.s_end..=lat.s_len {
        if !band.contains(t, s) {
            continue;
        }
        for k in 0..lat.n {
            let a = lat.alpha(t, s, k);
            mass.push(a);
            with_exit.push(a + m.topology.exit[k]);
        }
    }
    (log_sum_exp(&with_exit), log_sum_exp(&mass))
}

/// Forward pass for one pair of streams.
pub fn ahmm_forward(
    m: &PreparedAsync,
    fi: &[Vec<f64>],
    fj: &[Vec<f64>],
    opts: ForwardOptions,
) -> Result<AhmmForward, SeqError> {
    check_inputs(m, fi, fj)?;
    let band = Band::new(fj.len(), fi.len(), opts);
    let em = Emissions::compute(m, fi, fj, &band);
    let lattice = run_forward(m, &em, &band);
    let (log_likelihood, terminal_mass) = terminal_sums(m, &lattice, &band);
    Ok(AhmmForward {
        lattice,
        log_likelihood,
        terminal_mass,
    })
}

/// Expected sufficient statistics of one or more pair segments.
#[derive(Debug, Clone)]
pub(crate) struct AsyncStats {
    pub topology: TopologyCounts,
    pub advanced: Vec<f64>,
    pub occupancy: Vec<f64>,
    pub joint: Vec<MixtureAccumulator>,
    pub marginal: Vec<MixtureAccumulator>,
    pub log_likelihood: f64,
    pub segments: usize,
}

impl AsyncStats {
    pub fn new(m: &PreparedAsync) -> Self {
        let n = m.n_states();
        Self {
            topology: TopologyCounts::new(n),
            advanced: vec![0.0; n],
            occupancy: vec![0.0; n],
            joint: m
                .joint
                .iter()
                .map(|j| MixtureAccumulator::new(j.n_components(), j.dim()))
                .collect(),
            marginal: m
                .marginal
                .iter()
                .map(|j| MixtureAccumulator::new(j.n_components(), j.dim()))
                .collect(),
            log_likelihood: 0.0,
            segments: 0,
        }
    }

    pub fn merge(&mut self, o: &AsyncStats) {
        self.topology.merge(&o.topology);
        for k in 0..self.advanced.len() {
            self.advanced[k] += o.advanced[k];
            self.occupancy[k] += o.occupancy[k];
            self.joint[k].merge(&o.joint[k]);
            self.marginal[k].merge(&o.marginal[k]);
        }
        self.log_likelihood += o.log_likelihood;
        self.segments += o.segments;
    }
}

/// E-step for one segment. Returns `false` (and adds nothing) when the
/// segment has zero likelihood under the model.
pub(crate) fn accumulate(
    m: &PreparedAsync,
    fi: &[Vec<f64>],
    fj: &[Vec<f64>],
    opts: ForwardOptions,
    stats: &mut AsyncStats,
) -> Result<bool, SeqError> {
    check_inputs(m, fi, fj)?;
    let band = Band::new(fj.len(), fi.len(), opts);
    let em = Emissions::compute(m, fi, fj, &band);
    let lat = run_forward(m, &em, &band);
    let (ll, _) = terminal_sums(m, &lat, &band);
    if !ll.is_finite() {
        return Ok(false);
    }
    let (t_len, s_len, n) = (fj.len(), fi.len(), m.n_states());
    let topo = &m.topology;

    let mut beta = vec![NEG_INF; t_len * (s_len + 1) * n];
    let bidx = |t: usize, s: usize, k: usize| (t * (s_len + 1) + s) * n + k;
    for s in band.s_end..=s_len {
        if band.contains(t_len - 1, s) {
            for k in 0..n {
                beta[bidx(t_len - 1, s, k)] = topo.exit[k];
            }
        }
    }
    let mut terms = vec![0.0; n];
    for t in (0..t_len - 1).rev() {
        let (lo, hi) = band.range(t);
        for s in lo..=hi {
            // u[k'] = ln P(step t+1 in state k' and everything after | s at t)
            let u: Vec<f64> = (0..n)
                .map(|kp| {
                    let adv = if s < s_len && band.contains(t + 1, s + 1) {
                        m.ln_advance[kp] + em.joint(t + 1, s, kp) + beta[bidx(t + 1, s + 1, kp)]
                    } else {
                        NEG_INF
                    };
                    let hold = if band.contains(t + 1, s) {
                        m.ln_hold[kp] + em.marginal(t + 1, kp) + beta[bidx(t + 1, s, kp)]
                    } else {
                        NEG_INF
                    };
                    log_add(adv, hold)
                })
                .collect();
            for k in 0..n {
                for (kp, term) in terms.iter_mut().enumerate() {
                    *term = topo.transition[k][kp] + u[kp];
                }
                beta[bidx(t, s, k)] = log_sum_exp(&terms);
            }
        }
    }

    let post = |x: f64| if x > NEG_INF { (x - ll).exp() } else { 0.0 };
    let mut hold_weight = vec![0.0; n];
    for t in 0..t_len {
        hold_weight.iter_mut().for_each(|w| *w = 0.0);
        let (lo, hi) = band.range(t);
        for s in lo..=hi {
            for k in 0..n {
                let i = lat.idx(t, s, k);
                let b = beta[bidx(t, s, k)];
                let wa = post(lat.advance[i] + b);
                let wh = post(lat.hold[i] + b);
                stats.occupancy[k] += wa + wh;
                stats.advanced[k] += wa;
                hold_weight[k] += wh;
                if wa > 0.0 {
                    stats.joint[k].add(&m.joint[k], &fi[s - 1], &fj[t], wa);
                }
                if t == 0 {
                    stats.topology.entry[k] += wa + wh;
                }
                if t == t_len - 1 {
                    stats.topology.exit[k] += wa + wh;
                }
                if t > 0 {
                    for kp in 0..n {
                        let a = topo.transition[kp][k] + b;
                        let mut x = 0.0;
                        if s >= 1 {
                            x += post(
                                lat.alpha(t - 1, s - 1, kp) + a + m.ln_advance[k] + em.joint(t, s - 1, k),
                            );
                        }
                        x += post(lat.alpha(t - 1, s, kp) + a + m.ln_hold[k] + em.marginal(t, k));
                        stats.topology.transition[kp][k] += x;
                    }
                }
            }
        }
        for k in 0..n {
            if hold_weight[k] > 0.0 {
                stats.marginal[k].add(&m.marginal[k], &fj[t], &[], hold_weight[k]);
            }
        }
    }
    stats.log_likelihood += ll;
    stats.segments += 1;
    Ok(true)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::gmm::{Component, GaussianMixture};
    use crate::seqmodel::model::{AlignmentMode, AsyncModel};
    use crate::seqmodel::topology::Topology;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scripted_normal_ln(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
        x.iter()
            .zip(mean)
            .zip(var)
            .map(|((x, m), v)| {
                (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
            })
            .product::<f64>()
            .ln()
    }

    fn scripted_mix(g: &GaussianMixture, x: &[f64]) -> f64 {
        g.components()
            .iter()
            .map(|c| c.weight * scripted_normal_ln(x, &c.mean, &c.variance).exp())
            .sum::<f64>()
    }

    /// Exhaustive enumeration over advance patterns and state paths, in the
    /// probability domain.
    pub(crate) fn brute_force(
        m: &AsyncModel,
        advance_override: Option<f64>,
        fi: &[Vec<f64>],
        fj: &[Vec<f64>],
        slack: usize,
        with_exit: bool,
        upto: Option<usize>,
    ) -> f64 {
        let n = m.n_states();
        let t_len = upto.map_or(fj.len(), |u| u + 1);
        let s_len = fi.len();
        let mut total = 0.0;
        let paths = n.pow(t_len as u32);
        for code in 0..paths {
            let mut q = Vec::with_capacity(t_len);
            let mut c = code;
            for _ in 0..t_len {
                q.push(c % n);
                c /= n;
            }
            for pattern in 0u32..(1 << t_len) {
                let mut p = m.topology.entry[q[0]];
                let mut s = 0usize;
                let mut ok = true;
                for t in 0..t_len {
                    let k = q[t];
                    if t > 0 {
                        p *= m.topology.transition[q[t - 1]][k];
                    }
                    let eps = advance_override.unwrap_or(m.advance[k]);
                    if pattern >> t & 1 == 1 {
                        if s >= s_len {
                            ok = false;
                            break;
                        }
                        let x: Vec<f64> = fi[s].iter().chain(&fj[t]).copied().collect();
                        p *= eps * scripted_mix(&m.joint[k], &x);
                        s += 1;
                    } else {
                        p *= (1.0 - eps) * scripted_mix(&m.marginal[k], &fj[t]);
                    }
                }
                if !ok {
                    continue;
                }
                if upto.is_none() {
                    if s + slack < s_len {
                        continue;
                    }
                    if with_exit {
                        p *= m.topology.exit[q[t_len - 1]];
                    }
                }
                total += p;
            }
        }
        total
    }

    fn random_probs<R: Rng>(rng: &mut R, n: usize, reserve: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|r| r / s * (1.0 - reserve)).collect()
    }

    fn random_mixture<R: Rng>(rng: &mut R, d: usize) -> GaussianMixture {
        let k = rng.random_range(1..=2);
        let w = random_probs(rng, k, 0.0);
        let mut comps: Vec<Component> = w
            .into_iter()
            .map(|weight| Component {
                weight,
                mean: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                variance: (0..d).map(|_| rng.random_range(0.3..2.0)).collect(),
            })
            .collect();
        let residue = 1.0 - comps.iter().map(|c| c.weight).sum::<f64>();
        comps[0].weight += residue;
        GaussianMixture::new(comps).unwrap()
    }

    pub(crate) fn random_model<R: Rng>(rng: &mut R, n: usize, d: usize) -> AsyncModel {
        let mut transition = Vec::new();
        let mut exit = Vec::new();
        for _ in 0..n {
            let e = rng.random_range(0.05..0.5);
            transition.push(random_probs(rng, n, e));
            exit.push(e);
        }
        let mut topology = Topology {
            entry: random_probs(rng, n, 0.0),
            transition,
            exit,
        };
        topology.absorb_residue();
        let m = AsyncModel {
            topology,
            advance: (0..n).map(|_| rng.random_range(0.05..0.95)).collect(),
            joint: (0..n).map(|_| random_mixture(rng, 2 * d)).collect(),
            marginal: (0..n).map(|_| random_mixture(rng, d)).collect(),
        };
        m.validate().unwrap();
        m
    }

    pub(crate) fn random_seq<R: Rng>(rng: &mut R, len: usize, d: usize) -> Vec<Vec<f64>> {
        (0..len)
            .map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn two_step_single_observation() {
        // One state, T = 2, S = 1: exactly two alignments (advance at step 0
        // or at step 1), each weighted eps * (1 - eps).
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = random_model(&mut rng, 1, 1);
        m.advance = vec![0.3];
        let fi = vec![vec![0.2]];
        let fj = vec![vec![-0.4], vec![0.7]];
        let j = |a: f64, b: f64| scripted_mix(&m.joint[0], &[a, b]);
        let g = |b: f64| scripted_mix(&m.marginal[0], &[b]);
        let a = m.topology.transition[0][0];
        let expected = 0.3 * 0.7 * a * m.topology.exit[0]
            * (j(0.2, -0.4) * g(0.7) + g(-0.4) * j(0.2, 0.7));
        let got = ahmm_forward(&m.prepare(AlignmentMode::Async), &fi, &fj, ForwardOptions::default())
            .unwrap();
        assert!(rel_err(got.log_likelihood.exp(), expected) < 1e-12);
    }

    #[test]
    fn forced_advance_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_model(&mut rng, 1, 2);
        let fi = random_seq(&mut rng, 4, 2);
        let fj = random_seq(&mut rng, 4, 2);
        let f = ahmm_forward(&m.prepare(AlignmentMode::Sync), &fi, &fj, ForwardOptions::default())
            .unwrap();
        for t in 0..4 {
            for s in 0..=4 {
                let a = f.lattice.alpha(t, s, 0);
                assert_eq!(a > NEG_INF, s == t + 1, "t={t} s={s}");
            }
        }
    }

    #[test]
    fn banding_preserves_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_model(&mut rng, 2, 2);
        let p = m.prepare(AlignmentMode::Async);
        let fi = random_seq(&mut rng, 9, 2);
        let fj = random_seq(&mut rng, 9, 2);
        for slack in 0..4 {
            let full = ahmm_forward(&p, &fi, &fj, ForwardOptions { terminal_slack: slack, banded: false }).unwrap();
            let band = ahmm_forward(&p, &fi, &fj, ForwardOptions { terminal_slack: slack, banded: true }).unwrap();
            assert!(rel_err(band.log_likelihood, full.log_likelihood) < 1e-12);
            assert!(rel_err(band.terminal_mass, full.terminal_mass) < 1e-12);
        }
    }

    #[test]
    fn long_windows_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = random_model(&mut rng, 2, 2);
        for g in m.joint.iter_mut().chain(m.marginal.iter_mut()) {
            let comps = g
                .components()
                .iter()
                .map(|c| Component { variance: vec![1e-6; c.variance.len()], ..c.clone() })
                .collect();
            *g = GaussianMixture::new(comps).unwrap();
        }
        let p = m.prepare(AlignmentMode::Async);
        let fi = random_seq(&mut rng, 200, 2);
        let fj = random_seq(&mut rng, 200, 2);
        let f = ahmm_forward(&p, &fi, &fj, ForwardOptions { terminal_slack: 5, banded: false }).unwrap();
        assert!(f.log_likelihood.is_finite());
        assert!(f.log_likelihood < -1e5);
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_model(&mut rng, 1, 2).prepare(AlignmentMode::Async);
        let ok = random_seq(&mut rng, 2, 2);
        assert_eq!(
            ahmm_forward(&m, &[], &ok, ForwardOptions::default()).unwrap_err(),
            SeqError::EmptySequence
        );
        assert!(matches!(
            ahmm_forward(&m, &[vec![1.0]], &ok, ForwardOptions::default()),
            Err(SeqError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn running_evidence_on_identical_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_model(&mut rng, 2, 1);
        let f = random_seq(&mut rng, 4, 1);
        let fw = ahmm_forward(&m.prepare(AlignmentMode::Async), &f, &f, ForwardOptions::default()).unwrap();
        assert!(fw.log_likelihood.is_finite());
        for t in 0..4 {
            let oracle = brute_force(&m, None, &f, &f, 0, false, Some(t));
            assert!(rel_err(fw.lattice.step_mass(t).exp(), oracle) < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_enumeration(
            seed in any::<u64>(),
            n in 1usize..=3,
            t_len in 1usize..=5,
            s_off in 0usize..5,
            slack in 0usize..3,
        ) {
            let s_len = t_len.saturating_sub(s_off).max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_model(&mut rng, n, 1);
            let fi = random_seq(&mut rng, s_len, 1);
            let fj = random_seq(&mut rng, t_len, 1);
            let opts = ForwardOptions { terminal_slack: slack, banded: seed % 2 == 0 };
            let f = ahmm_forward(&m.prepare(AlignmentMode::Async), &fi, &fj, opts).unwrap();
            let oracle = brute_force(&m, None, &fi, &fj, slack, true, None);
            prop_assert!(rel_err(f.log_likelihood.exp(), oracle) < 1e-9);
            let mass = brute_force(&m, None, &fi, &fj, slack, false, None);
            prop_assert!(rel_err(f.terminal_mass.exp(), mass) < 1e-9);
        }
    }

    /// Posterior counts from the E-step must agree with finite differences of
    /// the likelihood in the advance parameter: d ln L / d eps_k equals
    /// advanced_k / eps_k - held_k / (1 - eps_k).
    #[test]
    fn posteriors_match_likelihood_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_model(&mut rng, 2, 1);
        let fi = random_seq(&mut rng, 4, 1);
        let fj = random_seq(&mut rng, 5, 1);
        let opts = ForwardOptions { terminal_slack: 1, banded: true };
        let p = m.prepare(AlignmentMode::Async);
        let mut stats = AsyncStats::new(&p);
        assert!(accumulate(&p, &fi, &fj, opts, &mut stats).unwrap());
        for k in 0..2 {
            let h = 1e-6;
            let ll = |e: f64| {
                let mut mm = m.clone();
                mm.advance[k] = e;
                brute_force(&mm, None, &fi, &fj, 1, true, None).ln()
            };
            let e = m.advance[k];
            let numeric = (ll(e + h) - ll(e - h)) / (2.0 * h);
            let held = stats.occupancy[k] - stats.advanced[k];
            let analytic = stats.advanced[k] / e - held / (1.0 - e);
            assert!((numeric - analytic).abs() < 1e-5, "{numeric} vs {analytic}");
        }
        let entry: f64 = stats.topology.entry.iter().sum();
        let exit: f64 = stats.topology.exit.iter().sum();
        assert!((entry - 1.0).abs() < 1e-9 && (exit - 1.0).abs() < 1e-9);
        let steps: f64 = stats.occupancy.iter().sum();
        assert!((steps - 5.0).abs() < 1e-9);
        let moves: f64 = stats.topology.transition.iter().flatten().sum();
        assert!((moves - 4.0).abs() < 1e-9);
    }
}

//! Diagonal-covariance Gaussian mixtures.
//!
//! Mixtures are the per-state emission densities of every sequence model in
//! the crate. Parameters live in [`GaussianMixture`] (serializable, validated);
//! hot loops evaluate densities through a [`PreparedMixture`] that caches
//! inverse variances and normalizing constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logspace::{log_sum_exp, LN_2PI};

pub const VARIANCE_FLOOR: f64 = 1e-6;
const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Components never drop below this weight during EM.
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GmmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid mixture: {0}")]
    Invalid(String),
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    components: Vec<Component>,
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self, GmmError> {
        let g = Self { components };
        g.validate()?;
        Ok(g)
    }

    /// Single standard-normal-shaped component at `mean` with `variance`.
    pub fn single(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self, GmmError> {
        Self::new(vec![Component {
            weight: 1.0,
            mean,
            variance,
        }])
    }

    pub fn validate(&self) -> Result<(), GmmError> {
        let first = self
            .components
            .first()
            .ok_or_else(|| GmmError::Invalid("no components".into()))?;
        let d = first.mean.len();
        if d == 0 {
            return Err(GmmError::Invalid("zero dimension".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            if c.mean.len() != d || c.variance.len() != d {
                return Err(GmmError::DimensionMismatch {
                    expected: d,
                    found: c.mean.len().max(c.variance.len()),
                });
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(GmmError::Invalid(format!("weight {} not positive", c.weight)));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(GmmError::Invalid("non-finite mean".into()));
            }
            if c.variance.iter().any(|v| !(*v >= VARIANCE_FLOOR) || !v.is_finite()) {
                return Err(GmmError::Invalid("variance below floor".into()));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(GmmError::Invalid(format!("weights sum to {total}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn prepare(&self) -> PreparedMixture {
        PreparedMixture::new(self)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64, GmmError> {
        if x.len() != self.dim() {
            return Err(GmmError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.prepare().log_density(x))
    }

    /// Log-likelihood of a sample set.
    pub fn log_likelihood(&self, samples: &[Vec<f64>]) -> Result<f64, GmmError> {
        let p = self.prepare();
        samples
            .iter()
            .map(|x| {
                if x.len() != p.dim {
                    Err(GmmError::DimensionMismatch {
                        expected: p.dim,
                        found: x.len(),
                    })
                } else {
                    Ok(p.log_density(x))
                }
            })
            .sum()
    }

    /// Draws one sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        chosen
            .mean
            .iter()
            .zip(&chosen.variance)
            .map(|(m, v)| m + v.sqrt() * standard_normal(rng))
            .collect()
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)
}

/// Density evaluator with cached constants.
#[derive(Debug, Clone)]
pub struct PreparedMixture {
    dim: usize,
    log_weights: Vec<f64>,
    /// Per component: `-0.5 * sum(ln(2 pi var))`, split into the first `split`
    /// dimensions and the rest so that a density over a concatenation can be
    /// evaluated without building the concatenated vector.
    means: Vec<Vec<f64>>,
    inv_var: Vec<Vec<f64>>,
    log_norm: Vec<f64>,
}

impl PreparedMixture {
    fn new(g: &GaussianMixture) -> Self {
        let comps = &g.components;
        Self {
            dim: g.dim(),
            log_weights: comps.iter().map(|c| c.weight.ln()).collect(),
            means: comps.iter().map(|c| c.mean.clone()).collect(),
            inv_var: comps
                .iter()
                .map(|c| c.variance.iter().map(|v| 1.0 / v).collect())
                .collect(),
            log_norm: comps
                .iter()
                .map(|c| -0.5 * c.variance.iter().map(|v| LN_2PI + v.ln()).sum::<f64>())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.log_weights.len()
    }

    #[inline]
    fn quad(&self, c: usize, offset: usize, x: &[f64]) -> f64 {
        let m = &self.means[c][offset..offset + x.len()];
        let iv = &self.inv_var[c][offset..offset + x.len()];
        let mut q = 0.0;
        for ((xi, mi), ivi) in x.iter().zip(m).zip(iv) {
            let d = xi - mi;
            q += d * d * ivi;
        }
        q
    }

    /// Weighted per-component log densities `ln w_c + ln N(x; c)`.
    pub fn component_log_densities(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.log_weights[c] + self.log_norm[c] - 0.5 * self.quad(c, 0, x);
        }
    }

    /// Same as [`Self::component_log_densities`] for the concatenation `a ++ b`.
    pub fn component_log_densities_split(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        debug_assert_eq!(a.len() + b.len(), self.dim);
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.log_weights[c] + self.log_norm[c]
                - 0.5 * (self.quad(c, 0, a) + self.quad(c, a.len(), b));
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut buf = [0.0; 8];
        if self.n_components() <= buf.len() {
            let out = &mut buf[..self.n_components()];
            self.component_log_densities(x, out);
            log_sum_exp(out)
        } else {
            let mut out = vec![0.0; self.n_components()];
            self.component_log_densities(x, &mut out);
            log_sum_exp(&out)
        }
    }

    /// Density of the concatenation `a ++ b`.
    pub fn log_density_split(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n_components()];
        self.component_log_densities_split(a, b, &mut out);
        log_sum_exp(&out)
    }
}

/// Sufficient statistics for one generalized-EM update of a mixture whose
/// samples carry external (state-posterior) weights.
#[derive(Debug, Clone)]
pub struct MixtureAccumulator {
    weight: Vec<f64>,
    sum: Vec<Vec<f64>>,
    sum_sq: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl MixtureAccumulator {
    pub fn new(components: usize, dim: usize) -> Self {
        Self {
            weight: vec![0.0; components],
            sum: vec![vec![0.0; dim]; components],
            sum_sq: vec![vec![0.0; dim]; components],
            scratch: vec![0.0; components],
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Adds `a ++ b` with weight `w`, split across components by their
    /// responsibilities under `current`. `b` may be empty.
    pub fn add(&mut self, current: &PreparedMixture, a: &[f64], b: &[f64], w: f64) {
        if !(w > 0.0) {
            return;
        }
        if b.is_empty() {
            current.component_log_densities(a, &mut self.scratch);
        } else {
            current.component_log_densities_split(a, b, &mut self.scratch);
        }
        let z = log_sum_exp(&self.scratch);
        for c in 0..self.weight.len() {
            let r = if z.is_finite() {
                w * (self.scratch[c] - z).exp()
            } else {
                w / self.weight.len() as f64
            };
            if r == 0.0 {
                continue;
            }
            self.weight[c] += r;
            for (d, x) in a.iter().chain(b).enumerate() {
                self.sum[c][d] += r * x;
                self.sum_sq[c][d] += r * x * x;
            }
        }
    }

    pub fn merge(&mut self, other: &MixtureAccumulator) {
        for c in 0..self.weight.len() {
            self.weight[c] += other.weight[c];
            for d in 0..self.sum[c].len() {
                self.sum[c][d] += other.sum[c][d];
                self.sum_sq[c][d] += other.sum_sq[c][d];
            }
        }
    }

    /// Maximizes the expected complete-data likelihood; components without
    /// support keep their previous parameters.
    pub fn finish(&self, previous: &GaussianMixture) -> GaussianMixture {
        let total = self.total_weight();
        if !(total > 0.0) {
            return previous.clone();
        }
        let mut comps: Vec<Component> = previous
            .components
            .iter()
            .enumerate()
            .map(|(c, prev)| {
                let w = self.weight[c];
                if !(w > 0.0) {
                    return Component {
                        weight: WEIGHT_FLOOR,
                        ..prev.clone()
                    };
                }
                let mean: Vec<f64> = self.sum[c].iter().map(|s| s / w).collect();
                let variance = self.sum_sq[c]
                    .iter()
                    .zip(&mean)
                    .map(|(sq, m)| (sq / w - m * m).max(VARIANCE_FLOOR))
                    .collect();
                Component {
                    weight: (w / total).max(WEIGHT_FLOOR),
                    mean,
                    variance,
                }
            })
            .collect();
        normalize_weights(&mut comps);
        GaussianMixture { components: comps }
    }
}

fn normalize_weights(comps: &mut [Component]) {
    let s: f64 = comps.iter().map(|c| c.weight).sum();
    for c in comps.iter_mut() {
        c.weight /= s;
    }
    // Push any rounding residue into the largest component.
    let residue = 1.0 - comps.iter().map(|c| c.weight).sum::<f64>();
    if let Some(big) = comps
        .iter_mut()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
    {
        big.weight += residue;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which iteration stops.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Log-likelihood of the data under the parameters of each iteration,
    /// ending with the returned mixture.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

/// Lloyd's k-means with k-means++ seeding. Returns (centers, assignment).
pub fn kmeans(samples: &[Vec<f64>], k: usize, seed: u64, iters: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut centers: Vec<Vec<f64>> = vec![samples[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d: Vec<f64> = samples
            .iter()
            .map(|x| {
                centers
                    .iter()
                    .map(|c| dist2(x, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, di) in d.iter().enumerate() {
                if u < *di {
                    idx = i;
                    break;
                }
                u -= di;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(samples[next].clone());
    }
    let mut assign = vec![0usize; n];
    for _ in 0..iters.max(1) {
        let mut changed = false;
        for (i, x) in samples.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| dist2(x, &centers[a]).total_cmp(&dist2(x, &centers[b])))
                .unwrap_or(0);
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = samples
                .iter()
                .zip(&assign)
                .filter(|(_, a)| **a == c)
                .map(|(x, _)| x)
                .collect();
            if members.is_empty() {
                continue;
            }
            for (d, v) in center.iter_mut().enumerate() {
                *v = members.iter().map(|x| x[d]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    (centers, assign)
}

fn moments(samples: &[&Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len().max(1) as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|d| samples.iter().map(|x| x[d]).sum::<f64>() / n)
        .collect();
    let var = (0..dim)
        .map(|d| {
            let v = samples.iter().map(|x| (x[d] - mean[d]).powi(2)).sum::<f64>() / n;
            v.max(VARIANCE_FLOOR)
        })
        .collect();
    (mean, var)
}

/// Mixture initialized from a k-means partition.
pub fn init_from_kmeans(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<GaussianMixture, GmmError> {
    if samples.len() < k || k == 0 {
        return Err(GmmError::TooFewSamples {
            needed: k.max(1),
            found: samples.len(),
        });
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|x| x.len() != dim) {
        return Err(GmmError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let all: Vec<&Vec<f64>> = samples.iter().collect();
    let (_, global_var) = moments(&all, dim);
    let (centers, assign) = kmeans(samples, k, seed, 50);
    let mut comps: Vec<Component> = (0..k)
        .map(|c| {
            let members: Vec<&Vec<f64>> = samples
                .iter()
                .zip(&assign)
                .filter(|(_, a)| **a == c)
                .map(|(x, _)| x)
                .collect();
            let variance = if members.len() >= 2 {
                moments(&members, dim).1
            } else {
                global_var.clone()
            };
            Component {
                weight: (members.len() as f64 / samples.len() as f64).max(WEIGHT_FLOOR),
                mean: centers[c].clone(),
                variance,
            }
        })
        .collect();
    normalize_weights(&mut comps);
    Ok(GaussianMixture { components: comps })
}

/// Fits a `k`-component mixture by EM from a seeded k-means start.
pub fn fit_em(samples: &[Vec<f64>], k: usize, config: &EmConfig) -> Result<EmFit, GmmError> {
    let mut mixture = init_from_kmeans(samples, k, config.seed)?;
    let dim = mixture.dim();
    let mut lls = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iters {
        let prepared = mixture.prepare();
        let mut acc = MixtureAccumulator::new(k, dim);
        let mut ll = 0.0;
        for x in samples {
            ll += prepared.log_density(x);
            acc.add(&prepared, x, &[], 1.0);
        }
        if let Some(&prev) = lls.last() {
            if relative_gain(prev, ll) < config.tol {
                lls.push(ll);
                converged = true;
                break;
            }
        }
        lls.push(ll);
        mixture = acc.finish(&mixture);
    }
    if !converged {
        lls.push(mixture.log_likelihood(samples)?);
    }
    Ok(EmFit {
        mixture,
        log_likelihoods: lls,
        converged,
    })
}

pub(crate) fn relative_gain(prev: f64, next: f64) -> f64 {
    (next - prev) / prev.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    // Scripted normal pdf, independent of the mixture code.
    fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    fn mix1(m: &[(f64, f64, f64)]) -> GaussianMixture {
        GaussianMixture::new(
            m.iter()
                .map(|&(w, mu, v)| Component {
                    weight: w,
                    mean: vec![mu],
                    variance: vec![v],
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_at_mode() {
        let g = mix1(&[(1.0, 0.0, 1.0)]);
        assert_relative_eq!(g.log_density(&[0.0]).unwrap(), -0.918_938_533_204_672_7, epsilon = 1e-12);
        assert_relative_eq!(
            g.log_density(&[0.0]).unwrap(),
            normal_pdf(0.0, 0.0, 1.0).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn identical_components_collapse() {
        let one = mix1(&[(1.0, 0.3, 2.0)]);
        let two = mix1(&[(0.5, 0.3, 2.0), (0.5, 0.3, 2.0)]);
        for x in [-3.0, 0.0, 0.3, 5.0] {
            assert_relative_eq!(
                one.log_density(&[x]).unwrap(),
                two.log_density(&[x]).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn symmetric_pair_at_zero() {
        let g = mix1(&[(0.5, -1.0, 1.0), (0.5, 1.0, 1.0)]);
        let oracle = (0.5 * normal_pdf(0.0, -1.0, 1.0) + 0.5 * normal_pdf(0.0, 1.0, 1.0)).ln();
        assert_relative_eq!(g.log_density(&[0.0]).unwrap(), oracle, epsilon = 1e-12);
        assert_relative_eq!(oracle, -1.418_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn split_density_matches_concatenation() {
        let g = GaussianMixture::new(vec![
            Component {
                weight: 0.3,
                mean: vec![0.0, 1.0, 2.0],
                variance: vec![1.0, 0.5, 2.0],
            },
            Component {
                weight: 0.7,
                mean: vec![1.0, -1.0, 0.0],
                variance: vec![0.2, 3.0, 1.0],
            },
        ])
        .unwrap();
        let p = g.prepare();
        assert_relative_eq!(
            p.log_density_split(&[0.5], &[0.1, 1.9]),
            g.log_density(&[0.5, 0.1, 1.9]).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn dimension_mismatch() {
        let g = mix1(&[(1.0, 0.0, 1.0)]);
        assert_eq!(
            g.log_density(&[0.0, 1.0]),
            Err(GmmError::DimensionMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianMixture::new(vec![]).is_err());
        let bad_w = vec![Component {
            weight: 0.9,
            mean: vec![0.0],
            variance: vec![1.0],
        }];
        assert!(GaussianMixture::new(bad_w).is_err());
        let bad_v = vec![Component {
            weight: 1.0,
            mean: vec![0.0],
            variance: vec![1e-9],
        }];
        assert!(GaussianMixture::new(bad_v).is_err());
    }

    #[test]
    fn integrates_to_one() {
        let g = mix1(&[(0.4, -2.0, 0.5), (0.6, 3.0, 2.0)]);
        let p = g.prepare();
        let (lo, hi, n) = (-20.0, 25.0, 45_000);
        let h = (hi - lo) / n as f64;
        // Simpson's rule.
        let mut s = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * p.log_density(&[x]).exp();
        }
        assert!((s * h / 3.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_component_closed_form() {
        let xs: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 7.0].iter().map(|v| vec![*v]).collect();
        let fit = fit_em(&xs, 1, &EmConfig::default()).unwrap();
        let c = &fit.mixture.components()[0];
        assert_relative_eq!(c.mean[0], 3.5, epsilon = 1e-12);
        assert_relative_eq!(c.variance[0], (6.25 + 2.25 + 0.25 + 12.25) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_samples_degenerate() {
        let xs = vec![vec![3.0, -1.0]; 20];
        let fit = fit_em(&xs, 2, &EmConfig::default()).unwrap();
        let w: f64 = fit.mixture.components().iter().map(|c| c.weight).sum();
        assert_relative_eq!(w, 1.0, epsilon = 1e-12);
        for c in fit.mixture.components() {
            assert_relative_eq!(c.mean[0], 3.0, epsilon = 1e-12);
            assert_relative_eq!(c.mean[1], -1.0, epsilon = 1e-12);
            assert_eq!(c.variance, vec![VARIANCE_FLOOR; 2]);
        }
        assert!(fit.log_likelihoods.iter().all(|l| l.is_finite()));
    }

    fn two_normals(seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Normal::new(0.0, 1.0).unwrap();
        let b = Normal::new(10.0, 1.0).unwrap();
        (0..500)
            .map(|i| vec![if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) }])
            .collect()
    }

    #[test]
    fn recovers_separated_means() {
        let xs = two_normals(7);
        let fit = fit_em(&xs, 2, &EmConfig { seed: 11, ..Default::default() }).unwrap();
        let mut means: Vec<f64> = fit.mixture.components().iter().map(|c| c.mean[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] - 0.0).abs() < 0.3, "{means:?}");
        assert!((means[1] - 10.0).abs() < 0.3, "{means:?}");
    }

    #[test]
    fn em_is_monotone_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<f64>> = (0..300)
            .map(|i| {
                let c = (i % 3) as f64;
                vec![c * 2.0 + standard_normal(&mut rng), -c + 0.5 * standard_normal(&mut rng)]
            })
            .collect();
        let cfg = EmConfig { seed: 5, tol: 1e-10, max_iters: 100 };
        let a = fit_em(&xs, 3, &cfg).unwrap();
        for w in a.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
        let b = fit_em(&xs, 3, &cfg).unwrap();
        assert_eq!(a.mixture, b.mixture);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_em(&[vec![1.0]], 2, &EmConfig::default()),
            Err(GmmError::TooFewSamples { .. })
        ));
    }
}

//! Shared fixtures and brute-force references for the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use groupact::gmm::{Component, GaussianMixture};
use groupact::seqmodel::{
    train_bank, ActivityModelBank, ActivityReport, AlignmentMode, AsyncModel, BankConfig, CorpusConfig, Topology,
    TrainingCorpus,
};
use groupact::simgen::{library, training_corpus};
use groupact::taxonomy::Taxonomy;
use rand::Rng;

pub const TRAIN_SEED: u64 = 1000;
pub const TRAIN_COPIES: u64 = 3;

fn corpus() -> &'static TrainingCorpus {
    static CORPUS: OnceLock<TrainingCorpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        training_corpus(
            &library::training_set(TRAIN_SEED, TRAIN_COPIES),
            &Taxonomy::standard(),
            &CorpusConfig::default(),
        )
        .expect("library scenarios simulate")
    })
}

/// Models trained once per test binary on the library's training scenes.
pub fn trained() -> &'static (ActivityModelBank, Vec<ActivityReport>) {
    static BANK: OnceLock<(ActivityModelBank, Vec<ActivityReport>)> = OnceLock::new();
    BANK.get_or_init(|| train_bank(corpus(), &Taxonomy::standard(), &BankConfig::default()).expect("training"))
}

pub fn bank() -> &'static ActivityModelBank {
    &trained().0
}

/// Same data, synchronous pair models.
pub fn sync_bank() -> &'static ActivityModelBank {
    static BANK: OnceLock<ActivityModelBank> = OnceLock::new();
    BANK.get_or_init(|| {
        let cfg = BankConfig {
            alignment: AlignmentMode::Sync,
            ..BankConfig::default()
        };
        train_bank(corpus(), &Taxonomy::standard(), &cfg).expect("training").0
    })
}

// ---- brute-force references, probability domain ----

pub fn normal_pdf(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((x, m), v)| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
        .product()
}

pub fn mixture_pdf(g: &GaussianMixture, x: &[f64]) -> f64 {
    g.components().iter().map(|c| c.weight * normal_pdf(x, &c.mean, &c.variance)).sum()
}

/// Sum over every state path and every monotone alignment of `fi` against
/// `fj`, by depth-first enumeration. A step either consumes the next `fi`
/// observation together with `fj[t]` or emits `fj[t]` alone. Paths must end
/// with at most `slack` observations of `fi` unconsumed and are weighted by
/// the exit probability of their final state.
pub fn enumerate_alignments(
    m: &AsyncModel,
    advance: &dyn Fn(usize) -> f64,
    fi: &[Vec<f64>],
    fj: &[Vec<f64>],
    slack: usize,
) -> f64 {
    fn walk(
        m: &AsyncModel,
        advance: &dyn Fn(usize) -> f64,
        fi: &[Vec<f64>],
        fj: &[Vec<f64>],
        slack: usize,
        t: usize,
        s: usize,
        k: usize,
        p: f64,
    ) -> f64 {
        let eps = advance(k);
        let mut total = 0.0;
        // Advance branch.
        if s < fi.len() && eps > 0.0 {
            let x: Vec<f64> = fi[s].iter().chain(&fj[t]).copied().collect();
            total += next(m, advance, fi, fj, slack, t, s + 1, k, p * eps * mixture_pdf(&m.joint[k], &x));
        }
        // Hold branch.
        if eps < 1.0 {
            total += next(m, advance, fi, fj, slack, t, s, k, p * (1.0 - eps) * mixture_pdf(&m.marginal[k], &fj[t]));
        }
        total
    }
    fn next(
        m: &AsyncModel,
        advance: &dyn Fn(usize) -> f64,
        fi: &[Vec<f64>],
        fj: &[Vec<f64>],
        slack: usize,
        t: usize,
        s: usize,
        k: usize,
        p: f64,
    ) -> f64 {
        if t + 1 == fj.len() {
            return if s + slack >= fi.len() { p * m.topology.exit[k] } else { 0.0 };
        }
        (0..m.topology.entry.len())
            .map(|l| walk(m, advance, fi, fj, slack, t + 1, s, l, p * m.topology.transition[k][l]))
            .sum()
    }
    (0..m.topology.entry.len())
        .map(|k| walk(m, advance, fi, fj, slack, 0, 0, k, m.topology.entry[k]))
        .sum()
}

/// Plain forward algorithm of an HMM whose states emit the concatenated
/// pair `(fi[t], fj[t])`.
pub fn pair_hmm_likelihood(m: &AsyncModel, fi: &[Vec<f64>], fj: &[Vec<f64>]) -> f64 {
    let n = m.topology.entry.len();
    let emit = |t: usize, k: usize| {
        let x: Vec<f64> = fi[t].iter().chain(&fj[t]).copied().collect();
        mixture_pdf(&m.joint[k], &x)
    };
    let mut alpha: Vec<f64> = (0..n).map(|k| m.topology.entry[k] * emit(0, k)).collect();
    for t in 1..fj.len() {
        alpha = (0..n)
            .map(|k| (0..n).map(|l| alpha[l] * m.topology.transition[l][k]).sum::<f64>() * emit(t, k))
            .collect();
    }
    alpha.iter().zip(&m.topology.exit).map(|(a, e)| a * e).sum()
}

/// `n` positive numbers summing to `total`.
fn simplex<R: Rng>(rng: &mut R, n: usize, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|r| r / s * total).collect()
}

fn mixture<R: Rng>(rng: &mut R, d: usize) -> GaussianMixture {
    let k = rng.random_range(1..=2);
    let mut weights = simplex(rng, k, 1.0);
    let residue = 1.0 - weights.iter().sum::<f64>();
    weights[0] += residue;
    GaussianMixture::new(
        weights
            .into_iter()
            .map(|weight| Component {
                weight,
                mean: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                variance: (0..d).map(|_| rng.random_range(0.3..2.0)).collect(),
            })
            .collect(),
    )
    .expect("valid mixture")
}

pub fn random_pair_model<R: Rng>(rng: &mut R, n: usize, d: usize) -> AsyncModel {
    let mut transition = Vec::new();
    let mut exit = Vec::new();
    for _ in 0..n {
        let e = rng.random_range(0.05..0.5);
        let mut row = simplex(rng, n, 1.0 - e);
        let residue = 1.0 - e - row.iter().sum::<f64>();
        row[0] += residue;
        transition.push(row);
        exit.push(e);
    }
    let mut entry = simplex(rng, n, 1.0);
    let residue = 1.0 - entry.iter().sum::<f64>();
    entry[0] += residue;
    let m = AsyncModel {
        topology: Topology { entry, transition, exit },
        advance: (0..n).map(|_| rng.random_range(0.05..0.95)).collect(),
        joint: (0..n).map(|_| mixture(rng, 2 * d)).collect(),
        marginal: (0..n).map(|_| mixture(rng, d)).collect(),
    };
    m.validate().expect("valid random model");
    m
}

pub fn random_stream<R: Rng>(rng: &mut R, len: usize, d: usize) -> Vec<Vec<f64>> {
    (0..len).map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

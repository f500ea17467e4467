//! Fits a two-component diagonal Gaussian mixture with EM.

use groupact::gmm::{fit_em, Component, EmConfig, GaussianMixture};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = GaussianMixture::new(vec![
        Component { weight: 0.3, mean: vec![-2.0, 0.5], variance: vec![0.4, 0.4] },
        Component { weight: 0.7, mean: vec![2.5, -1.0], variance: vec![1.0, 0.3] },
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<Vec<f64>> = (0..1000).map(|_| truth.sample(&mut rng)).collect();
    let fit = fit_em(&samples, 2, &EmConfig::default())?;
    println!("{} iterations, converged: {}", fit.log_likelihoods.len(), fit.converged);
    println!("log-likelihood {:.2} -> {:.2}", fit.log_likelihoods[0], fit.log_likelihoods.last().unwrap());
    for c in fit.mixture.components() {
        println!("weight {:.3} mean {:.3?} variance {:.3?}", c.weight, c.mean, c.variance);
    }
    Ok(())
}

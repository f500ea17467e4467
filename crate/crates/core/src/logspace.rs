//! Log-domain arithmetic helpers.

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(exp(a) + exp(b))` without overflow; handles `-inf` operands.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum(exp(x)))`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Natural log that maps 0 to `-inf` without warnings.
#[inline]
pub fn ln(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Normalizes log-weights into probabilities that sum to one.
pub fn softmax(logs: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logs);
    if !z.is_finite() {
        let n = logs.len().max(1) as f64;
        return vec![1.0 / n; logs.len()];
    }
    logs.iter().map(|l| (l - z).exp()).collect()
}

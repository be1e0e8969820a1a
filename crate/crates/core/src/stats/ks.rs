use crate::error::{Error, Result};

/// Standard normal CDF by Abramowitz & Stegun 26.2.17 (absolute error
/// below 7.5e-8). Fixed so that KS values are identical on every platform.
pub fn normal_cdf(x: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [0.319_381_530, -0.356_563_782, 1.781_477_937, -1.821_255_978, 1.330_274_429];
    let z = x.abs();
    let t = 1.0 / (1.0 + P * z);
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let tail = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * poly;
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `(x - mean) / sd` with the sample (n − 1) standard deviation. Constant
/// samples map to zeros.
pub fn standardize(samples: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    samples
        .iter()
        .map(|x| if sd > 0.0 { (x - mean) / sd } else { 0.0 })
        .collect()
}

/// Kolmogorov–Smirnov distance between the empirical CDF of standardized
/// samples and the standard normal CDF.
pub fn ks_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < 20 {
        return Err(Error::contract(format!(
            "ks_normal needs at least 20 samples, got {}",
            samples.len()
        )));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in x.iter().enumerate() {
        let f = normal_cdf(*v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

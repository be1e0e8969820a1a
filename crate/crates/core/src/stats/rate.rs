use serde::{Deserialize, Serialize};

use super::sweep::SweepResult;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateVerdict {
    Pass,
    Fail,
    /// Successive means differ by less than twice their combined standard
    /// error, so the fit is driven by Monte Carlo noise.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log|mean(λ) − μ̂|` against `log λ`.
    pub exponent: f64,
    pub mu_hat: f64,
    pub verdict: RateVerdict,
}

/// Least-squares slope and intercept of `y` on `x`, with `r²`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Richardson extrapolation with a fitted exponent: for each trial `p`,
/// `mean(λ) = μ + c·λ^{-p}` is solved by least squares; the `p` with the
/// smallest residual gives `μ̂`.
fn extrapolate(lambdas: &[f64], means: &[f64]) -> (f64, f64) {
    let resid = |p: f64| -> (f64, f64) {
        let a: Vec<f64> = lambdas.iter().map(|l| l.powf(-p)).collect();
        let (c, mu, _) = linear_fit(&a, means);
        let r: f64 = a.iter().zip(means).map(|(ai, m)| (m - mu - c * ai).powi(2)).sum();
        (r, mu)
    };
    let mut best = (f64::INFINITY, 1.0, means[means.len() - 1]);
    for k in 1..=400 {
        let p = k as f64 * 0.005;
        let (r, mu) = resid(p);
        if r < best.0 {
            best = (r, p, mu);
        }
    }
    // Golden-section polish around the grid optimum.
    let (mut lo, mut hi) = ((best.1 - 0.005).max(1e-4), best.1 + 0.005);
    let g = 0.618_033_988_749_894_9;
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if resid(a).0 < resid(b).0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let p = 0.5 * (lo + hi);
    (resid(p).1, p)
}

/// Fits the convergence exponent of `λ^{-1} E N_λ` and compares it with the
/// `λ^{-1/d}` rate.
pub fn rate_fit(sweep: &SweepResult, d: usize) -> Result<RateFit> {
    let pts = &sweep.points;
    if pts.len() < 3 {
        return Err(Error::contract("rate_fit needs at least 3 grid points"));
    }
    let lambdas: Vec<f64> = pts.iter().map(|p| p.lambda).collect();
    let means: Vec<f64> = pts.iter().map(|p| p.mean_ratio).collect();
    let (mu_hat, _) = extrapolate(&lambdas, &means);
    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| (m - mu_hat).abs().max(1e-300).ln()).collect();
    let (exponent, _, _) = linear_fit(&x, &y);
    let noisy = pts
        .windows(2)
        .any(|w| (w[0].mean_ratio - w[1].mean_ratio).abs() < 2.0 * (w[0].se_mean.powi(2) + w[1].se_mean.powi(2)).sqrt());
    let verdict = if exponent <= -1.0 / d as f64 + 0.25 {
        RateVerdict::Pass
    } else if noisy {
        RateVerdict::Inconclusive
    } else {
        RateVerdict::Fail
    };
    Ok(RateFit { exponent, mu_hat, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SweepPoint;

    fn synthetic(f: impl Fn(f64) -> f64) -> SweepResult {
        let points = [1e2, 1e3, 1e4, 1e5]
            .iter()
            .map(|&l| SweepPoint {
                lambda: l,
                reps: 100,
                mean_ratio: f(l),
                var_ratio: 0.0,
                se_mean: 0.0,
                se_var: 0.0,
                ks: None,
                counts: vec![],
            })
            .collect();
        SweepResult { points }
    }

    #[test]
    fn exact_power_laws() {
        let fit = rate_fit(&synthetic(|l| 0.7 + 1.0 / l), 1).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.mu_hat - 0.7).abs() < 1e-9);
        let fit = rate_fit(&synthetic(|l| 0.7 + l.powf(-0.5)), 1).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-6, "{fit:?}");
        assert_eq!(fit.verdict, RateVerdict::Fail);
    }
}

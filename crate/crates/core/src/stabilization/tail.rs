use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// Least-squares fit of `log τ̂(L)` against `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points used: those with `0 < τ̂ < 1`.
    pub points: usize,
    /// A quadratic term fits markedly better and bends downwards, as for
    /// a tail decaying faster than exponentially.
    pub super_exponential: bool,
}

fn quadratic_sse(x: &[f64], y: &[f64]) -> f64 {
    // Normal equations for y = a + b x + c x².
    let n = x.len() as f64;
    let s = |k: i32| x.iter().map(|v| v.powi(k)).sum::<f64>();
    let t = |k: i32| x.iter().zip(y).map(|(v, w)| v.powi(k) * w).sum::<f64>();
    let m = [[n, s(1), s(2)], [s(1), s(2), s(3)], [s(2), s(3), s(4)]];
    let r = [t(0), t(1), t(2)];
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let coef: Vec<f64> = (0..3)
        .map(|c| {
            let mut mc = m;
            for row in 0..3 {
                mc[row][c] = r[row];
            }
            det(&mc) / d
        })
        .collect();
    let sse = x.iter().zip(y).map(|(v, w)| (w - coef[0] - coef[1] * v - coef[2] * v * v).powi(2)).sum();
    if coef[2] < 0.0 { sse } else { f64::INFINITY }
}

/// Fits `log τ̂(L) = intercept + slope · L` over the grid points with
/// `0 < τ̂(L) < 1`. A negative slope is the exponential-decay diagnostic.
pub fn fit_tail(table: &[(f64, f64)]) -> Result<TailFit> {
    if table.iter().filter(|(_, t)| *t > 0.0).count() < 3 {
        return Err(Error::contract("fit_tail needs at least 3 grid points with positive tail"));
    }
    let used: Vec<(f64, f64)> = table.iter().copied().filter(|(_, t)| *t > 0.0 && *t < 1.0).collect();
    if used.len() < 2 {
        return Err(Error::DegenerateTail(format!(
            "only {} grid point(s) with 0 < tau < 1; widen or refine the L grid",
            used.len()
        )));
    }
    let x: Vec<f64> = used.iter().map(|p| p.0).collect();
    let y: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    let lin_sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let super_exponential = x.len() >= 4 && lin_sse > 1e-12 && quadratic_sse(&x, &y) < 0.1 * lin_sse;
    Ok(TailFit { slope, intercept, r_squared, points: used.len(), super_exponential })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let t: Vec<(f64, f64)> = (1..10).map(|l| (l as f64, (-(l as f64) / 3.0).exp())).collect();
        let f = fit_tail(&t).unwrap();
        assert!((f.slope + 1.0 / 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(!f.super_exponential);
    }

    #[test]
    fn gaussian_tail_is_flagged() {
        let t: Vec<(f64, f64)> = (1..6).map(|l| (l as f64 * 0.5, (-(l as f64 * 0.5).powi(2)).exp())).collect();
        let f = fit_tail(&t).unwrap();
        assert!(f.r_squared < 1.0);
        assert!(f.super_exponential);
    }

    #[test]
    fn degenerate() {
        let t = vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 0.0)];
        assert!(matches!(fit_tail(&t), Err(Error::DegenerateTail(_))));
    }
}

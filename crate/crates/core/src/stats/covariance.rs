use serde::{Deserialize, Serialize};

use crate::engine::{replicate, saturate, PackingState, SaturationOptions};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};
use crate::measures::{integrate_point, integrate_volume, point_measure, volume_measure, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Point,
    Volume,
}

/// `λ^{-1}·Cov` estimates between test-function integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceResult {
    pub lambda: f64,
    pub reps: usize,
    /// `λ^{-1}` times the sample covariance matrix.
    pub matrix: Vec<Vec<f64>>,
    /// Standard error of each entry.
    pub se: Vec<Vec<f64>>,
    /// Per-replication integrals, one row per replication.
    pub values: Vec<Vec<f64>>,
}

/// Pairs of replications are sorted before aggregation so the output does
/// not depend on replication order.
fn sorted_rows(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut rows = values.to_vec();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows
}

/// Sample covariance of columns `i` and `j` over rows, with the standard
/// error of the mean of the centered products.
pub fn covariance_entry(rows: &[Vec<f64>], i: usize, j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mi = rows.iter().map(|r| r[i]).sum::<f64>() / n;
    let mj = rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let w: Vec<f64> = rows.iter().map(|r| (r[i] - mi) * (r[j] - mj)).collect();
    let cov = w.iter().sum::<f64>() / (n - 1.0);
    let wm = w.iter().sum::<f64>() / n;
    let wv = w.iter().map(|x| (x - wm).powi(2)).sum::<f64>() / (n - 1.0);
    (cov, (wv / n).sqrt())
}

impl CovarianceResult {
    pub fn from_values(lambda: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let reps = values.len();
        if reps < 2 {
            return Err(Error::contract("need at least two replications"));
        }
        let k = values[0].len();
        let rows = sorted_rows(&values);
        let mut matrix = vec![vec![0.0; k]; k];
        let mut se = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                let (c, s) = covariance_entry(&rows, i, j);
                matrix[i][j] = c / lambda;
                se[i][j] = s / lambda;
            }
        }
        Ok(CovarianceResult { lambda, reps, matrix, se, values })
    }
}

/// Difference `λ^{-1}(Var X − a·Var N)` between the variance of column
/// `x` and `a` times that of column `n`, with its standard error computed
/// from the per-replication terms `((X−X̄)² − a(N−N̄)²)/λ`.
pub fn variance_share_check(rows: &[Vec<f64>], x: usize, n: usize, a: f64, lambda: f64) -> (f64, f64) {
    let rows = sorted_rows(rows);
    let k = rows.len() as f64;
    let mx = rows.iter().map(|r| r[x]).sum::<f64>() / k;
    let mn = rows.iter().map(|r| r[n]).sum::<f64>() / k;
    let u: Vec<f64> = rows
        .iter()
        .map(|r| ((r[x] - mx).powi(2) - a * (r[n] - mn).powi(2)) / lambda)
        .collect();
    let diff = u.iter().sum::<f64>() / (k - 1.0);
    let um = u.iter().sum::<f64>() / k;
    let uv = u.iter().map(|v| (v - um).powi(2)).sum::<f64>() / (k - 1.0);
    (diff, (uv / k).sqrt())
}

/// Integrals of every test function against `ν_λ` or `ν′_λ` on one packing.
pub fn integrals(
    state: &PackingState<f64>,
    lambda: f64,
    fs: &[TestFunction<f64>],
    which: MeasureKind,
    tol: f64,
) -> Result<Vec<f64>> {
    match which {
        MeasureKind::Point => {
            let m = point_measure(state, lambda)?;
            fs.iter().map(|f| integrate_point(f, &m)).collect()
        }
        MeasureKind::Volume => {
            let m = volume_measure(state, lambda)?;
            fs.iter().map(|f| integrate_volume(f, &m, tol)).collect()
        }
    }
}

/// Saturates `Q_λ` `reps` times and returns `λ^{-1}·Cov(⟨f_i, ν⟩, ⟨f_j, ν⟩)`.
pub fn covariance_experiment(
    fs: &[TestFunction<f64>],
    lambda: f64,
    reps: usize,
    seed: u64,
    which: MeasureKind,
    solid: &ConvexSolid<f64>,
    opts: &SaturationOptions,
) -> Result<CovarianceResult> {
    if reps < 30 {
        return Err(Error::contract("covariance experiment needs reps ≥ 30"));
    }
    let region = Aabb::rsa_cube(solid.dim(), lambda)?;
    let rows: Vec<Result<Vec<f64>>> = replicate(seed, "covariance", reps as u64, |_, _, rng| {
        let st = PackingState::new(solid.clone(), region.clone())?;
        let run = saturate(st, rng, opts)?;
        integrals(&run.state, lambda, fs, which, 1e-9)
    });
    CovarianceResult::from_values(lambda, rows.into_iter().collect::<Result<_>>()?)
}

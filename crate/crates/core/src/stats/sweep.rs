use serde::{Deserialize, Serialize};

use super::ks::{ks_normal, standardize};
use crate::engine::{replicate, saturate, PackingState, SaturationOptions};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};

/// Summary of `N_λ` over replications at one `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub reps: usize,
    pub mean_ratio: f64,
    pub var_ratio: f64,
    pub se_mean: f64,
    pub se_var: f64,
    /// KS distance of the standardized counts, when there are at least 20.
    pub ks: Option<f64>,
    /// Counts in replication order.
    pub counts: Vec<f64>,
}

impl SweepPoint {
    /// Aggregates counts. The statistics are computed on the sorted
    /// counts, so replication order never changes a bit of the output.
    pub fn from_counts(lambda: f64, counts: Vec<f64>) -> Result<Self> {
        let n = counts.len();
        if n < 2 {
            return Err(Error::contract("need at least two replications"));
        }
        let mut sorted = counts.clone();
        sorted.sort_by(f64::total_cmp);
        let nf = n as f64;
        let mean = sorted.iter().sum::<f64>() / nf;
        let dev2: Vec<f64> = sorted.iter().map(|x| (x - mean).powi(2)).collect();
        let var = dev2.iter().sum::<f64>() / (nf - 1.0);
        let m4 = dev2.iter().map(|d| d * d).sum::<f64>() / nf;
        // Standard error of the unbiased sample variance.
        let var_of_var = ((m4 - var * var * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
        let ks = if n >= 20 { Some(ks_normal(&standardize(&sorted))?) } else { None };
        Ok(SweepPoint {
            lambda,
            reps: n,
            mean_ratio: mean / lambda,
            var_ratio: var / lambda,
            se_mean: var.sqrt() / nf.sqrt() / lambda,
            se_var: var_of_var.sqrt() / lambda,
            ks,
            counts,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Seed tag for the `k`-th grid value of a sweep.
pub fn sweep_tag(k: usize) -> String {
    format!("sweep/{k}")
}

/// Saturates `Q_λ` `reps` times for each `λ` of the ascending grid.
/// Replication `r` at grid index `k` uses `derive_seed(seed, "sweep/k", r)`.
pub fn sweep_jamming(
    lambda_grid: &[f64],
    reps: usize,
    solid: &ConvexSolid<f64>,
    opts: &SaturationOptions,
    seed: u64,
) -> Result<SweepResult> {
    if reps < 2 {
        return Err(Error::contract("sweep needs reps ≥ 2"));
    }
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::contract("lambda grid must be strictly ascending"));
    }
    let mut points = Vec::with_capacity(lambda_grid.len());
    for (k, &lambda) in lambda_grid.iter().enumerate() {
        let region = Aabb::rsa_cube(solid.dim(), lambda)?;
        let runs: Vec<Result<f64>> = replicate(seed, &sweep_tag(k), reps as u64, |_, _, rng| {
            let st = PackingState::new(solid.clone(), region.clone())?;
            Ok(saturate(st, rng, opts)?.n() as f64)
        });
        let counts = runs.into_iter().collect::<Result<Vec<f64>>>()?;
        points.push(SweepPoint::from_counts(lambda, counts)?);
    }
    Ok(SweepResult { points })
}

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lazy::{pack_lazy, LazyInput, Resample};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    Perturbation,
    CausalDiameter,
}

/// One empirical radius of stabilization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizationSample {
    pub center: Vec<i64>,
    pub lambda: f64,
    /// `+∞` when no radius of the grid showed zero discrepancies.
    pub radius: f64,
    pub method: RadiusMethod,
    pub resamples: usize,
    pub horizon: f64,
    /// Time of the last input point drawn by the baseline run.
    pub baseline_last_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOptions {
    /// Ascending radii to try.
    pub l_grid: Vec<f64>,
    pub resamples: usize,
    pub horizon: f64,
    /// The baseline must leave vacant measure at most `epsilon · |Q_λ|`.
    pub epsilon: f64,
}

/// The window `i + Q_1` widened by the diameter of `S`.
pub fn comparison_window(solid: &ConvexSolid<f64>, center: &[i64]) -> Aabb<f64> {
    let lo: Vec<f64> = center.iter().map(|&c| c as f64).collect();
    let hi: Vec<f64> = lo.iter().map(|c| c + 1.0).collect();
    let pad = vec![solid.diameter(); center.len()];
    Aabb::new(lo, hi).expect("unit cube").dilate(&pad)
}

fn window_centers(run: &super::LazyRun, window: &Aabb<f64>) -> Vec<Vec<f64>> {
    let mut v = run.state.accepted_in(window);
    v.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    v
}

/// Monte Carlo radius of stabilization at cube `i`.
///
/// A baseline input on `Q_λ × [0, horizon]` is packed; then, for each `L`
/// of the grid in turn, the input outside `B_L(i)` is redrawn `resamples`
/// times and the accepted centers near `i + Q_1` are compared with the
/// baseline. The estimate is the first `L` for which no redraw changed
/// them. Random redraws can only witness influence, so this is a lower
/// bound on the worst-case radius.
pub fn estimate_radius_perturbation<R: Rng + ?Sized>(
    lambda: f64,
    solid: &ConvexSolid<f64>,
    center: &[i64],
    opts: &PerturbationOptions,
    rng: &mut R,
) -> Result<StabilizationSample> {
    let region = Aabb::rsa_cube(solid.dim(), lambda)?;
    if center.len() != region.dim() {
        return Err(Error::contract("center dimension differs from the solid's"));
    }
    if opts.l_grid.is_empty() || opts.l_grid.windows(2).any(|w| !(w[0] < w[1])) || opts.l_grid[0] < 0.0 {
        return Err(Error::contract("L grid must be nonempty, nonnegative and ascending"));
    }
    if opts.resamples == 0 {
        return Err(Error::contract("need at least one resample"));
    }
    let window = comparison_window(solid, center);
    if window.intersection(&region).is_none() {
        return Err(Error::contract("cube i lies outside Q_λ"));
    }
    let base_seed: u64 = rng.random();
    let baseline = pack_lazy(solid, &region, &LazyInput { seed: base_seed, horizon: opts.horizon, resample: None })?;
    if baseline.vacancy_bound > opts.epsilon * region.volume() {
        return Err(Error::HorizonTooSmall {
            horizon: opts.horizon,
            last_time: baseline.last_time,
            vacancy: baseline.vacancy_bound,
        });
    }
    let reference = window_centers(&baseline, &window);
    let ball_center: Vec<f64> = center.iter().map(|&c| c as f64).collect();
    // Farthest point of Q_λ from i.
    let reach_all = (0..region.dim())
        .map(|a| (region.lo[a] - ball_center[a]).abs().max((region.hi[a] - ball_center[a]).abs()).powi(2))
        .sum::<f64>()
        .sqrt();

    let mut radius = f64::INFINITY;
    for (li, &l) in opts.l_grid.iter().enumerate() {
        if l >= reach_all {
            radius = l;
            break;
        }
        let changed = (0..opts.resamples).into_par_iter().map(|k| -> Result<bool> {
            let seed = derive_seed(base_seed, "resample", (li * opts.resamples + k) as u64);
            let input = LazyInput {
                seed: base_seed,
                horizon: opts.horizon,
                resample: Some(Resample { center: ball_center.clone(), radius: l, seed }),
            };
            Ok(window_centers(&pack_lazy(solid, &region, &input)?, &window) != reference)
        });
        let changed = changed.try_fold(|| false, |acc, r| r.map(|c| acc || c)).try_reduce(|| false, |a, b| Ok(a || b))?;
        if !changed {
            radius = l;
            break;
        }
    }
    Ok(StabilizationSample {
        center: center.to_vec(),
        lambda,
        radius,
        method: RadiusMethod::Perturbation,
        resamples: opts.resamples,
        horizon: opts.horizon,
        baseline_last_time: baseline.last_time,
    })
}

/// `τ̂(L)`: the fraction of radii exceeding `L`, for each `L` of the grid.
pub fn tail_table(radii: &[f64], l_grid: &[f64]) -> Vec<(f64, f64)> {
    let n = radii.len().max(1) as f64;
    l_grid
        .iter()
        .map(|&l| (l, radii.iter().filter(|&&r| r > l).count() as f64 / n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn opts(grid: Vec<f64>) -> PerturbationOptions {
        PerturbationOptions { l_grid: grid, resamples: 5, horizon: 1e5, epsilon: 1e-6 }
    }

    #[test]
    fn small_region_inside_first_ball() {
        let solid = ConvexSolid::ball(1, 0.5).unwrap();
        let s = estimate_radius_perturbation(4.0, &solid, &[2], &opts(vec![5.0, 6.0]), &mut rng_from_seed(1)).unwrap();
        assert_eq!(s.radius, 5.0);
    }

    #[test]
    fn finite_radius_in_one_dimension() {
        let solid = ConvexSolid::ball(1, 0.5).unwrap();
        let grid: Vec<f64> = (0..=30).map(|k| k as f64).collect();
        for seed in 0..4 {
            let s = estimate_radius_perturbation(100.0, &solid, &[50], &opts(grid.clone()), &mut rng_from_seed(seed)).unwrap();
            assert!(s.radius.is_finite(), "{s:?}");
        }
    }

    #[test]
    fn short_horizon_is_reported() {
        let solid = ConvexSolid::ball(1, 0.5).unwrap();
        let mut o = opts(vec![1.0]);
        o.horizon = 0.5;
        let err = estimate_radius_perturbation(100.0, &solid, &[50], &o, &mut rng_from_seed(2)).unwrap_err();
        assert!(matches!(err, Error::HorizonTooSmall { .. }));
    }

    #[test]
    fn tail_is_nonincreasing() {
        let t = tail_table(&[1.0, 3.0, f64::INFINITY, 2.0], &[0.0, 1.0, 2.0, 5.0]);
        assert_eq!(t.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1.0, 0.75, 0.5, 0.25]);
    }
}

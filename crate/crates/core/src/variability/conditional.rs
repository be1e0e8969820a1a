use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lattice::PeriodicPackedSet;
use crate::engine::{pack_with_boundary, replicate, PackingState};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};
use crate::seed::{derive_seed, rng_from_seed};

/// Shipped boundary configurations around `[0, L]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaPreset {
    Empty,
    /// Points of the periodic packed set, shifted by `0.3·reach`, in the
    /// band of width `reach` around the box.
    LatticeRing,
    /// Random sequential packing of the same band.
    GreedyRing,
}

impl std::str::FromStr for EtaPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empty" => Ok(EtaPreset::Empty),
            "lattice-ring" => Ok(EtaPreset::LatticeRing),
            "greedy-ring" => Ok(EtaPreset::GreedyRing),
            _ => Err(Error::invalid(format!(
                "unknown eta design {s:?}; accepted: empty, lattice-ring, greedy-ring"
            ))),
        }
    }
}

impl EtaPreset {
    pub fn name(&self) -> &'static str {
        match self {
            EtaPreset::Empty => "empty",
            EtaPreset::LatticeRing => "lattice-ring",
            EtaPreset::GreedyRing => "greedy-ring",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaDesign {
    pub id: String,
    pub points: Vec<Vec<f64>>,
}

fn in_band(p: &[f64], l: f64, reach: &[f64]) -> bool {
    let inside_closed = p.iter().all(|x| (0.0..=l).contains(x));
    let near = p.iter().zip(reach).all(|(x, r)| *x > -r && *x < l + r);
    near && !inside_closed
}

/// Builds a preset. Candidates are admitted one by one and only when they
/// are at gauge distance above 1 from those already admitted, so every
/// design is admissible.
pub fn eta_design(
    preset: EtaPreset,
    solid: &ConvexSolid<f64>,
    set: Option<&PeriodicPackedSet>,
    l: f64,
    seed: u64,
) -> Result<EtaDesign> {
    let d = solid.dim();
    let reach = solid.reach().to_vec();
    let pad: Vec<f64> = reach.iter().map(|r| r + 1.0).collect();
    let frame = Aabb::cube(d, 0.0, l)?.dilate(&pad);
    let mut st = PackingState::new(solid.clone(), frame.clone())?;
    match preset {
        EtaPreset::Empty => {}
        EtaPreset::LatticeRing => {
            let set = set.ok_or_else(|| Error::contract("lattice-ring needs a periodic packed set"))?;
            let half = l / 2.0 + reach.iter().copied().fold(0.0, f64::max) + 1.0;
            for p in set.scaled_points_in_box(1.0, half) {
                // Off-grid shift so that lattice rows do not sit on the faces.
                let q: Vec<f64> = p.iter().zip(&reach).map(|(x, r)| x + l / 2.0 + 0.3 * r).collect();
                if in_band(&q, l, &reach) {
                    st.try_accept(&q, 0.0, 0);
                }
            }
        }
        EtaPreset::GreedyRing => {
            let mut rng = rng_from_seed(derive_seed(seed, "eta/greedy-ring", 0));
            let band_volume: f64 = reach.iter().map(|r| l + 2.0 * r).product::<f64>() - l.powi(d as i32);
            let attempts = (50.0 * band_volume / solid.half_gauge_ball_volume()).ceil() as u64;
            let mut tried = 0u64;
            while tried < attempts {
                let q: Vec<f64> = (0..d).map(|a| rng.random_range(-reach[a]..l + reach[a])).collect();
                if in_band(&q, l, &reach) {
                    tried += 1;
                    st.try_accept(&q, 0.0, 0);
                }
            }
        }
    }
    Ok(EtaDesign { id: preset.name().to_string(), points: st.accepted_positions().map(|p| p.to_vec()).collect() })
}

/// Mirror image `x ↦ L − x` of a design.
pub fn reflect_design(design: &EtaDesign, l: f64) -> EtaDesign {
    EtaDesign {
        id: format!("{}-reflected", design.id),
        points: design.points.iter().map(|p| p.iter().map(|x| l - x).collect()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub eta_id: String,
    pub eta_points: usize,
    pub reps: usize,
    pub mean: f64,
    pub var_hat: f64,
    /// Two-sided 95% percentile bootstrap interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// One-sided 95% bootstrap lower bound.
    pub lower_95: f64,
    pub counts: Vec<u64>,
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Percentile bootstrap of the sample variance: `(2.5%, 97.5%, 5%)`.
pub fn bootstrap_variance(samples: &[f64], resamples: usize, seed: u64) -> (f64, f64, f64) {
    let mut rng = rng_from_seed(seed);
    let n = samples.len();
    let mut vs: Vec<f64> = (0..resamples)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            sample_variance(&r)
        })
        .collect();
    vs.sort_by(f64::total_cmp);
    let q = |p: f64| vs[((p * resamples as f64) as usize).min(resamples - 1)];
    (q(0.025), q(0.975), q(0.05))
}

/// `Var N[[0,L]^d | η]` for each design, from `reps` saturations each.
pub fn conditional_variance_experiment(
    l: f64,
    solid: &ConvexSolid<f64>,
    designs: &[EtaDesign],
    reps: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<VarianceRow>> {
    if reps < 2 {
        return Err(Error::contract("variance needs reps ≥ 2"));
    }
    designs
        .iter()
        .map(|design| {
            crate::engine::check_admissible(solid, &design.points)?;
            let tag = format!("variability/{}", design.id);
            let runs: Vec<Result<u64>> = replicate(seed, &tag, reps as u64, |_, _, rng| {
                Ok(pack_with_boundary(l, &design.points, solid, rng, epsilon)? as u64)
            });
            let counts = runs.into_iter().collect::<Result<Vec<u64>>>()?;
            let x: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let (ci_lo, ci_hi, lower_95) = bootstrap_variance(&x, 2000, derive_seed(seed, &tag, u64::MAX));
            Ok(VarianceRow {
                eta_id: design.id.clone(),
                eta_points: design.points.len(),
                reps,
                mean: x.iter().sum::<f64>() / reps as f64,
                var_hat: sample_variance(&x),
                ci_lo,
                ci_hi,
                lower_95,
                counts,
            })
        })
        .collect()
}

use serde::{Deserialize, Serialize};

use super::conditional::{conditional_variance_experiment, eta_design, EtaPreset, VarianceRow};
use super::counts::{auto_delta, check_delta, counts_n1_n2_n3, find_l0, Counts};
use super::lattice::build_periodic_packed_set;
use super::race::{estimate_event_probabilities, RaceEstimate};
use crate::error::Result;
use crate::geometry::ConvexSolid;
use crate::seed::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariabilityOptions {
    /// Grid step of the certification sweep.
    pub resolution: f64,
    /// `None` picks the midpoint of the feasible interval.
    pub delta: Option<f64>,
    pub l_max: f64,
    /// Saturations per boundary design.
    pub reps: usize,
    /// Initial and maximal replications of the direct race simulation.
    pub race_reps: u64,
    pub race_budget: u64,
    pub designs: Vec<EtaPreset>,
    pub epsilon: f64,
}

impl Default for VariabilityOptions {
    fn default() -> Self {
        VariabilityOptions {
            resolution: 1.0 / 64.0,
            delta: None,
            l_max: 2000.0,
            reps: 10,
            race_reps: 1000,
            race_budget: 100_000,
            designs: vec![EtaPreset::Empty, EtaPreset::LatticeRing, EtaPreset::GreedyRing],
            epsilon: crate::engine::DEFAULT_EPSILON,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariabilityReport {
    pub solid: String,
    pub generators: Vec<Vec<f64>>,
    pub beta_grid: f64,
    pub beta: f64,
    pub delta: f64,
    pub l0: f64,
    /// Counts at `L_0` and at evenly spaced smaller lengths.
    pub counts: Vec<Counts>,
    pub event1: RaceEstimate,
    pub event2: RaceEstimate,
    pub variance: Vec<VarianceRow>,
    pub min_var: f64,
    /// Smallest one-sided 95% lower bound over the designs.
    pub min_lower_95: f64,
}

/// Builds `ℒ`, fixes `δ`, finds `L_0`, runs both races at `L_0` and the
/// conditional variance experiment on `[0, L_0]^d`.
pub fn run_pipeline(solid: &ConvexSolid<f64>, opts: &VariabilityOptions, seed: u64) -> Result<VariabilityReport> {
    let set = build_periodic_packed_set(solid, opts.resolution)?;
    let delta = opts.delta.unwrap_or_else(|| auto_delta(&set));
    check_delta(&set, delta)?;
    let at_l0 = find_l0(&set, delta, opts.l_max)?;
    let l0 = at_l0.l;
    let mut counts = Vec::new();
    for k in 1..10 {
        let l = (7.0 + (l0 - 7.0) * k as f64 / 10.0).round();
        if l > 6.0 && l < l0 && counts.last().is_none_or(|c: &Counts| c.l < l) {
            counts.push(counts_n1_n2_n3(&set, delta, l)?);
        }
    }
    counts.push(at_l0);
    let mut rng = stream(seed, "variability/race", 0);
    let (event1, event2) = estimate_event_probabilities(&set, delta, l0, opts.race_reps, opts.race_budget, &mut rng)?;
    let designs = opts
        .designs
        .iter()
        .map(|p| eta_design(*p, solid, Some(&set), l0, seed))
        .collect::<Result<Vec<_>>>()?;
    let variance = conditional_variance_experiment(l0, solid, &designs, opts.reps, opts.epsilon, seed)?;
    let min_var = variance.iter().map(|r| r.var_hat).fold(f64::INFINITY, f64::min);
    let min_lower_95 = variance.iter().map(|r| r.lower_95).fold(f64::INFINITY, f64::min);
    Ok(VariabilityReport {
        solid: solid.spec(),
        generators: set.generators.clone(),
        beta_grid: set.beta_grid,
        beta: set.beta(),
        delta,
        l0,
        counts,
        event1,
        event2,
        variance,
        min_var,
        min_lower_95,
    })
}

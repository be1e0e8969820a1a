use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use super::counts::check_delta;
use super::lattice::PeriodicPackedSet;
use crate::error::{Error, Result};

/// Estimates of `P[E]` for one first-arrival race: `n` disjoint regions
/// of volume `v` each against their complement of volume `V_c` inside
/// `Box(L)`, with `E` the event that all `n` regions receive a point
/// before the complement does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaceEstimate {
    pub n_regions: u64,
    pub region_volume: f64,
    pub complement_volume: f64,
    /// Direct simulation.
    pub reps: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// No hit within the replication budget.
    pub inconclusive: bool,
    /// Importance-sampling estimate of `log P[E]` and its standard error.
    pub log_p_is: f64,
    pub log_p_is_se: f64,
    /// `log Π_{k≤n} k / (k + V_c/v)`.
    pub log_p_exact: f64,
}

impl RaceEstimate {
    /// Positivity of `P[E]` as certified by the importance sampler.
    pub fn positive(&self) -> bool {
        self.log_p_is.is_finite()
    }
}

/// Wilson score interval for `hits` out of `n`.
pub fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// `log P[E] = Σ_k log(k / (k + a))`, `a = V_c / v`.
pub fn race_log_probability(n: u64, region_volume: f64, complement: f64) -> f64 {
    if complement <= 0.0 {
        return 0.0;
    }
    let a = complement / region_volume;
    (1..=n).map(|k| -(a / k as f64).ln_1p()).sum()
}

/// Largest of `n` independent `Exp(v)` variables, by inversion.
fn max_exponential<R: Rng + ?Sized>(n: u64, v: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    -(-(u.ln() / n as f64).exp_m1()).ln() / v
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Conditioning on the complement's first arrival `s ~ Exp(V_c)` gives
/// `P[E] = E[(1 − e^{−v s})^n]`. The integral is sampled from a gamma law
/// fitted to the peak of the integrand.
fn importance<R: Rng + ?Sized>(n: u64, v: f64, vc: f64, draws: u64, rng: &mut R) -> (f64, f64) {
    if vc <= 0.0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let log_f = |s: f64| vc.ln() - vc * s + nf * (-(-v * s).exp_m1()).ln();
    let q = vc / (nf * v + vc);
    let mode = (1.0 + nf * v / vc).ln() / v;
    let sigma = ((1.0 - q) * (1.0 - q) / (nf * v * v * q)).sqrt();
    // Scale at least 1/(1.5 V_c) keeps the weights' variance finite.
    let scale = (2.25 * sigma * sigma / mode).max(1.0 / (1.5 * vc));
    let shape = mode / scale;
    let g = Gamma::new(shape, scale).expect("positive gamma parameters");
    let log_norm = -ln_gamma(shape) - shape * scale.ln();
    let lw: Vec<f64> = (0..draws)
        .map(|_| {
            let s: f64 = g.sample(rng);
            let log_q = log_norm + (shape - 1.0) * s.ln() - s / scale;
            log_f(s) - log_q
        })
        .collect();
    let lse = log_sum_exp(&lw);
    let log_mean = lse - (draws as f64).ln();
    // Relative standard error of the mean weight.
    let w: Vec<f64> = lw.iter().map(|x| (x - log_mean).exp()).collect();
    let var = w.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
    (log_mean, (var / draws as f64).sqrt())
}

/// Lanczos approximation of `ln Γ(x)` for `x > 0`.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Runs one race. Direct simulation starts at `reps` replications and
/// doubles until a hit is seen or `budget` is reached.
pub fn race<R: Rng + ?Sized>(
    n: u64,
    region_volume: f64,
    complement: f64,
    reps: u64,
    budget: u64,
    rng: &mut R,
) -> Result<RaceEstimate> {
    if reps == 0 {
        return Err(Error::contract("race needs reps ≥ 1"));
    }
    if n == 0 || !(region_volume > 0.0) || complement < 0.0 {
        return Err(Error::contract("race needs n ≥ 1 regions of positive volume"));
    }
    let comp = if complement > 0.0 { Some(Exp::new(complement).expect("positive rate")) } else { None };
    let (mut done, mut hits, mut batch) = (0u64, 0u64, reps);
    loop {
        for _ in 0..batch {
            let m = max_exponential(n, region_volume, rng);
            let tc = comp.as_ref().map_or(f64::INFINITY, |e| e.sample(rng));
            hits += u64::from(m < tc);
        }
        done += batch;
        if hits > 0 || done >= budget {
            break;
        }
        batch = done.min(budget - done);
    }
    let (wilson_lo, wilson_hi) = wilson(hits, done, 1.959_963_984_540_054);
    let (log_p_is, log_p_is_se) = importance(n, region_volume, complement, 4000, rng);
    Ok(RaceEstimate {
        n_regions: n,
        region_volume,
        complement_volume: complement,
        reps: done,
        hits,
        p_hat: hits as f64 / done as f64,
        wilson_lo,
        wilson_hi,
        inconclusive: hits == 0,
        log_p_is,
        log_p_is_se,
        log_p_exact: race_log_probability(n, region_volume, complement),
    })
}

/// The races `E_1`, `E_2`: gauge balls of radius `δ` around the points of
/// `ℒ_i = (1 + 3iδ)ℒ` in `Box(L−4)` against the rest of `Box(L)`.
pub fn estimate_event_probabilities<R: Rng + ?Sized>(
    set: &PeriodicPackedSet,
    delta: f64,
    l: f64,
    reps: u64,
    budget: u64,
    rng: &mut R,
) -> Result<(RaceEstimate, RaceEstimate)> {
    check_delta(set, delta)?;
    let d = set.dim() as i32;
    let v = set.solid().difference_volume() * delta.powi(d);
    let total = l.powi(d);
    let one = |i: f64, rng: &mut R| -> Result<RaceEstimate> {
        let n = set.count_scaled_in_box(1.0 + 3.0 * i * delta, (l - 4.0) / 2.0);
        if n == 0 {
            return Err(Error::invalid(format!("Box(L-4) holds no point of L_{i}; L = {l} is too small")));
        }
        race(n, v, (total - n as f64 * v).max(0.0), reps, budget.max(reps), rng)
    };
    let e1 = one(1.0, rng)?;
    let e2 = one(2.0, rng)?;
    Ok((e1, e2))
}

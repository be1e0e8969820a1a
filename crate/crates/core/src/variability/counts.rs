use serde::{Deserialize, Serialize};

use super::lattice::PeriodicPackedSet;
use crate::error::{Error, Result};

/// The counts behind the inequality `n_3(L) < n_1(L) − n_2(L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub l: f64,
    /// `#(ℒ_1 ∩ Box(L−4))`.
    pub n1: u64,
    /// `#(ℒ_2 ∩ Box(L−4))`.
    pub n2: u64,
    /// Upper bound on the largest packed subset of `Box(L) ∖ Box(L−6)`.
    pub n3_bound: u64,
}

impl Counts {
    pub fn separates(&self) -> bool {
        self.n1 > self.n2 && self.n3_bound < self.n1 - self.n2
    }
}

/// Largest `δ` with `β(1+6δ) < 1 − 2δ`, i.e. `(1−β)/(6β+2)` (excluded).
pub fn delta_upper(beta: f64) -> f64 {
    (1.0 - beta) / (6.0 * beta + 2.0)
}

/// Midpoint of the feasible interval `(0, delta_upper(β))`.
pub fn auto_delta(set: &PeriodicPackedSet) -> f64 {
    0.5 * delta_upper(set.beta())
}

pub fn check_delta(set: &PeriodicPackedSet, delta: f64) -> Result<()> {
    let beta = set.beta();
    if delta > 0.0 && beta * (1.0 + 6.0 * delta) < 1.0 - 2.0 * delta {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "delta = {delta} violates beta(1+6 delta) < 1 - 2 delta for beta = {beta}; feasible range is (0, {})",
            delta_upper(beta)
        )))
    }
}

/// `n_1`, `n_2` by exact lattice counting, `n_3` by the volume bound:
/// the gauge balls of radius ½ around a packed set have disjoint
/// interiors and stay within the shell dilated by half the reach of `D`.
pub fn counts_n1_n2_n3(set: &PeriodicPackedSet, delta: f64, l: f64) -> Result<Counts> {
    check_delta(set, delta)?;
    if !(l > 6.0) {
        return Err(Error::invalid(format!("L too small: the shell Box(L) minus Box(L-6) needs L > 6, got {l}")));
    }
    let h = (l - 4.0) / 2.0;
    let n1 = set.count_scaled_in_box(1.0 + 3.0 * delta, h);
    let n2 = set.count_scaled_in_box(1.0 + 6.0 * delta, h);
    let solid = set.solid();
    let reach = solid.reach();
    let outer: f64 = reach.iter().map(|r| l + r).product();
    let inner: f64 = reach.iter().map(|r| (l - 6.0 - r).max(0.0)).product();
    let n3_bound = ((outer - inner) / solid.half_gauge_ball_volume()).floor() as u64;
    Ok(Counts { l, n1, n2, n3_bound })
}

/// Smallest integer `L ∈ [7, l_max]` with `n_3(L) < n_1(L) − n_2(L)`.
pub fn find_l0(set: &PeriodicPackedSet, delta: f64, l_max: f64) -> Result<Counts> {
    check_delta(set, delta)?;
    let mut l = 7.0;
    while l <= l_max {
        let c = counts_n1_n2_n3(set, delta, l)?;
        if c.separates() {
            return Ok(c);
        }
        l += 1.0;
    }
    Err(Error::Infeasible(format!("no L up to {l_max} satisfies n3 < n1 - n2; raise Lmax")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexSolid;
    use crate::variability::build_periodic_packed_set;

    fn intervals() -> PeriodicPackedSet {
        build_periodic_packed_set(&ConvexSolid::ball(1, 0.2).unwrap(), 1.0 / 64.0).unwrap()
    }

    #[test]
    fn small_l_is_an_error() {
        let set = intervals();
        assert!(counts_n1_n2_n3(&set, auto_delta(&set), 6.0).is_err());
        assert!(matches!(counts_n1_n2_n3(&set, 0.2, 50.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn ratio_approaches_scaling() {
        let set = intervals();
        let delta = auto_delta(&set);
        let c = counts_n1_n2_n3(&set, delta, 40.0).unwrap();
        let want = (1.0 + 6.0 * delta) / (1.0 + 3.0 * delta);
        let got = c.n1 as f64 / c.n2 as f64;
        assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
    }

    #[test]
    fn l0_is_the_first_separating_length() {
        let set = intervals();
        let delta = auto_delta(&set);
        let c = find_l0(&set, delta, 1000.0).unwrap();
        assert!(counts_n1_n2_n3(&set, delta, c.l).unwrap().separates());
        assert!(!counts_n1_n2_n3(&set, delta, c.l - 1.0).unwrap().separates());
    }
}

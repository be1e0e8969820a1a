use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::points::{arrival_cmp, uniform_in, SpaceTimePoint};
use super::state::PackingState;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};
use crate::scalar::Scalar;
use crate::vacancy::{IntervalVacancy, Refinement, VacancyTree};

/// Default relative vacancy tolerance in `d ≥ 2`.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationOptions {
    /// Stop once the vacancy bound is below `epsilon · |region|`. Zero is
    /// allowed only in one dimension, where vacancy is exact.
    pub epsilon: f64,
    pub refinement: Refinement,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        SaturationOptions { epsilon: DEFAULT_EPSILON, refinement: Refinement::Lazy }
    }
}

impl SaturationOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SaturationOptions { epsilon, ..Default::default() }
    }
}

/// Result of an event-driven saturation run.
#[derive(Clone, Debug)]
pub struct SaturationRun<T> {
    pub state: PackingState<T>,
    /// Virtual Poisson time of the last acceptance.
    pub virtual_time: T,
    /// Upper bound on the vacant measure left at termination.
    pub vacancy_bound: T,
    /// Set when the non-termination guard declared saturation.
    pub guard_saturated: bool,
    pub probes: u64,
}

impl<T: Scalar> SaturationRun<T> {
    pub fn n(&self) -> usize {
        self.state.len()
    }

    /// At most this many more solids fit in the leftover vacancy.
    pub fn extra_solids_bound(&self) -> T {
        self.vacancy_bound / self.state.solid().half_gauge_ball_volume()
    }
}

/// Packs `points` in order into `state`. Returns the number accepted.
pub fn pack_sequence<T: Scalar>(
    points: &[SpaceTimePoint<T>],
    state: &mut PackingState<T>,
) -> Result<usize> {
    for (k, w) in points.windows(2).enumerate() {
        if arrival_cmp(w[0].time, &w[0].position, w[1].time, &w[1].position) == Ordering::Greater {
            return Err(Error::contract(format!(
                "pack_sequence: input not sorted by (time, position) at {}",
                k + 1
            )));
        }
    }
    let before = state.len();
    for p in points {
        if p.position.len() != state.dim() {
            return Err(Error::contract("pack_sequence: point dimension mismatch"));
        }
        state.try_accept(&p.position, p.time, p.index);
    }
    Ok(state.len() - before)
}

/// Packs the first `⌈λτ⌉` uniform arrivals in `Q_λ`; arrival `k` has
/// time `k + 1`.
pub fn pack_finite_input<T: Scalar, R: Rng + ?Sized>(
    lambda: T,
    tau: T,
    solid: &ConvexSolid<T>,
    rng: &mut R,
) -> Result<PackingState<T>> {
    if !(tau > T::zero()) {
        return Err(Error::contract("tau must be positive"));
    }
    let region = Aabb::rsa_cube(solid.dim(), lambda)?;
    let mut state = PackingState::new(solid.clone(), region)?;
    let n = (lambda * tau).ceil().f64() as u64;
    for k in 0..n {
        let p = uniform_in(state.region(), rng);
        state.try_accept(&p, T::lit((k + 1) as f64), k);
    }
    Ok(state)
}

/// Event-driven saturation of `Q_λ`.
pub fn pack_to_saturation<T: Scalar, R: Rng + ?Sized>(
    lambda: T,
    solid: &ConvexSolid<T>,
    rng: &mut R,
    epsilon: T,
) -> Result<SaturationRun<T>> {
    let region = Aabb::rsa_cube(solid.dim(), lambda)?;
    let state = PackingState::new(solid.clone(), region)?;
    saturate(state, rng, &SaturationOptions::with_epsilon(epsilon.f64()))
}

/// Runs `state` to saturation: each step waits an exponential time with
/// rate equal to the tracked vacant measure and accepts a uniform vacant
/// point.
pub fn saturate<T: Scalar, R: Rng + ?Sized>(
    mut state: PackingState<T>,
    rng: &mut R,
    opts: &SaturationOptions,
) -> Result<SaturationRun<T>> {
    if opts.epsilon.is_nan() || opts.epsilon < 0.0 {
        return Err(Error::contract("epsilon must be nonnegative"));
    }
    let threshold = T::lit(opts.epsilon) * state.region().volume();
    let mut clock = T::zero();
    let mut last = T::zero();
    let mut index = state.len() as u64;
    if state.dim() == 1 {
        let mut vac = IntervalVacancy::from_state(&state)?;
        while let Some(x) = vac.next_arrival(&state, rng, &mut clock, threshold) {
            state.insert_unchecked(&[x], clock, index);
            vac.update_on_accept(x);
            index += 1;
            last = clock;
        }
        return Ok(SaturationRun {
            vacancy_bound: vac.measure(),
            state,
            virtual_time: last,
            guard_saturated: false,
            probes: index,
        });
    }
    if opts.epsilon == 0.0 {
        return Err(Error::Unsupported(
            "epsilon = 0 is only supported in dimension 1, where vacancy is exact".into(),
        ));
    }
    let mut tree = VacancyTree::new(&state, T::lit(opts.epsilon), opts.refinement)?;
    while let Some(p) = tree.next_arrival(&state, rng, &mut clock, threshold) {
        state.insert_unchecked(&p, clock, index);
        tree.on_accept(&p, &state);
        index += 1;
        last = clock;
    }
    Ok(SaturationRun {
        vacancy_bound: tree.frontier_measure(),
        guard_saturated: tree.guard_saturated(),
        probes: tree.probes(),
        state,
        virtual_time: last,
    })
}

/// Rejection sampling until jamming in one dimension: uniform arrivals in
/// `Q_λ` drawn exactly as [`pack_finite_input`] draws them, packed one by
/// one until the exact vacant set is empty. Arrival `k` has time `k + 1`.
pub fn pack_rejection<T: Scalar, R: Rng + ?Sized>(
    lambda: T,
    solid: &ConvexSolid<T>,
    rng: &mut R,
) -> Result<SaturationRun<T>> {
    if solid.dim() != 1 {
        return Err(Error::Unsupported("rejection mode needs exact vacancy (d = 1)".into()));
    }
    let region = Aabb::rsa_cube(1, lambda)?;
    let mut state = PackingState::new(solid.clone(), region)?;
    let mut vac = IntervalVacancy::from_state(&state)?;
    let mut k = 0u64;
    let mut last = T::zero();
    while vac.gap_count() > 0 {
        let p = uniform_in(state.region(), rng);
        let t = T::lit((k + 1) as f64);
        if state.try_accept(&p, t, k) {
            vac.update_on_accept(p[0]);
            last = t;
        }
        k += 1;
    }
    Ok(SaturationRun {
        state,
        virtual_time: last,
        vacancy_bound: T::zero(),
        guard_saturated: false,
        probes: k,
    })
}

/// `N[[0,L]^d | η]`: saturates `[0, L)^d` with arrivals adjacent to the
/// pre-packed `eta` rejected.
pub fn pack_with_boundary<T: Scalar, R: Rng + ?Sized>(
    l: T,
    eta: &[Vec<T>],
    solid: &ConvexSolid<T>,
    rng: &mut R,
    epsilon: T,
) -> Result<usize> {
    Ok(saturate_with_boundary(l, eta, solid, rng, &SaturationOptions::with_epsilon(epsilon.f64()))?.n())
}

pub fn saturate_with_boundary<T: Scalar, R: Rng + ?Sized>(
    l: T,
    eta: &[Vec<T>],
    solid: &ConvexSolid<T>,
    rng: &mut R,
    opts: &SaturationOptions,
) -> Result<SaturationRun<T>> {
    let region = Aabb::cube(solid.dim(), T::zero(), l)?;
    if let Some(i) = eta.iter().position(|p| p.len() == solid.dim() && region.contains_closed(p)) {
        return Err(Error::invalid(format!(
            "pre-packed point {i} lies inside [0, L]^d; eta must be outside the box"
        )));
    }
    let state = PackingState::with_frozen(solid.clone(), region, eta)?;
    saturate(state, rng, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn unit() -> ConvexSolid<f64> {
        ConvexSolid::ball(1, 0.5).unwrap()
    }

    fn at(x: f64, t: f64, i: u64) -> SpaceTimePoint<f64> {
        SpaceTimePoint::new(vec![x], t, i)
    }

    #[test]
    fn sequence_examples() {
        let pts = vec![at(0.0, 1.0, 0), at(0.6, 2.0, 1), at(2.0, 3.0, 2)];
        let mut st = PackingState::new(unit(), Aabb::cube(1, 0.0, 3.0).unwrap()).unwrap();
        assert_eq!(pack_sequence(&pts, &mut st).unwrap(), 2);
        let got: Vec<f64> = st.accepted_positions().map(|p| p[0]).collect();
        assert_eq!(got, vec![0.0, 2.0]);

        let mut st =
            PackingState::with_frozen(unit(), Aabb::cube(1, 0.0, 3.0).unwrap(), &[vec![1.0]]).unwrap();
        pack_sequence(&pts, &mut st).unwrap();
        // 2.0 touches the frozen solid at 1.5; touching counts as overlap.
        assert!(st.is_empty());
        let mut st =
            PackingState::with_frozen(unit(), Aabb::cube(1, 0.0, 3.0).unwrap(), &[vec![1.0]]).unwrap();
        let shifted = vec![at(0.0, 1.0, 0), at(0.6, 2.0, 1), at(2.01, 3.0, 2)];
        pack_sequence(&shifted, &mut st).unwrap();
        let got: Vec<f64> = st.accepted_positions().map(|p| p[0]).collect();
        assert_eq!(got, vec![2.01]);

        let unsorted = vec![at(0.0, 2.0, 0), at(1.0, 1.0, 1)];
        assert!(pack_sequence(&unsorted, &mut st).is_err());
    }

    #[test]
    fn single_input_always_packs() {
        let st = pack_finite_input(1.0, 1.0, &unit(), &mut rng_from_seed(2)).unwrap();
        assert_eq!(st.len(), 1);
    }

    #[test]
    fn unit_region_saturates_with_one() {
        for s in 0..20 {
            let run = pack_to_saturation(1.0, &unit(), &mut rng_from_seed(s), 0.0).unwrap();
            assert_eq!(run.n(), 1);
            assert_eq!(run.vacancy_bound, 0.0);
        }
    }

    #[test]
    fn eps_zero_rejected_in_plane() {
        let disk = ConvexSolid::ball(2, 0.2).unwrap();
        assert!(matches!(
            pack_to_saturation(10.0, &disk, &mut rng_from_seed(0), 0.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn boundary_gap_fills() {
        let eta = vec![vec![-0.6], vec![1.6]];
        for s in 0..20 {
            let n = pack_with_boundary(1.0, &eta, &unit(), &mut rng_from_seed(s), 0.0).unwrap();
            assert_eq!(n, 1);
        }
        assert!(pack_with_boundary(1.0, &[vec![0.5]], &unit(), &mut rng_from_seed(0), 0.0).is_err());
    }

    #[test]
    fn rejection_matches_long_finite_input() {
        for s in 0..10 {
            let rej = pack_rejection(20.0, &unit(), &mut rng_from_seed(s)).unwrap();
            let tau = (rej.probes as f64 + 5.0) / 20.0;
            let fin = pack_finite_input(20.0, tau, &unit(), &mut rng_from_seed(s)).unwrap();
            let a: Vec<&[f64]> = rej.state.accepted_positions().collect();
            let b: Vec<&[f64]> = fin.accepted_positions().collect();
            assert_eq!(a, b);
        }
    }
}

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::scalar::Scalar;

/// A point `(x, t)` of space-time with its position in the arrival order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint<T> {
    pub position: Vec<T>,
    pub time: T,
    pub index: u64,
}

impl<T: Scalar> SpaceTimePoint<T> {
    pub fn new(position: Vec<T>, time: T, index: u64) -> Self {
        SpaceTimePoint { position, time, index }
    }

    /// Arrival order: time first, ties broken lexicographically on position.
    pub fn arrival_cmp(&self, other: &Self) -> Ordering {
        arrival_cmp(self.time, &self.position, other.time, &other.position)
    }
}

pub(crate) fn arrival_cmp<T: Scalar>(ta: T, a: &[T], tb: T, b: &[T]) -> Ordering {
    match ta.partial_cmp(&tb) {
        Some(Ordering::Equal) | None => {}
        Some(o) => return o,
    }
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => {}
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Sorts by arrival order and renumbers indices `0, 1, 2, ...`.
pub fn sort_arrivals<T: Scalar>(points: &mut [SpaceTimePoint<T>]) {
    points.sort_by(|a, b| a.arrival_cmp(b));
    for (i, p) in points.iter_mut().enumerate() {
        p.index = i as u64;
    }
}

/// Draws a uniform point of `region`, one coordinate per axis in order.
pub fn uniform_in<T: Scalar, R: Rng + ?Sized>(region: &Aabb<T>, rng: &mut R) -> Vec<T> {
    (0..region.dim()).map(|a| uniform_coord(region.lo[a], region.hi[a], rng)).collect()
}

/// Uniform on `[lo, hi)`; rounding up to `hi` is folded back to `lo`.
#[inline]
pub(crate) fn uniform_coord<T: Scalar, R: Rng + ?Sized>(lo: T, hi: T, rng: &mut R) -> T {
    let u: f64 = rng.random();
    let x = lo + (hi - lo) * T::lit(u);
    if x >= hi {
        lo
    } else {
        x
    }
}

/// Homogeneous Poisson process on `region × [0, time_horizon]` with
/// intensity `intensity · dx · ds`, sorted by arrival order.
pub fn poisson_spacetime<T: Scalar, R: Rng + ?Sized>(
    region: &Aabb<T>,
    time_horizon: T,
    intensity: T,
    rng: &mut R,
) -> Result<Vec<SpaceTimePoint<T>>> {
    if !(time_horizon > T::zero()) {
        return Err(Error::contract("poisson_spacetime: time horizon must be positive"));
    }
    if !(intensity > T::zero()) {
        return Err(Error::contract("poisson_spacetime: intensity must be positive"));
    }
    let mean = (intensity * region.volume() * time_horizon).f64();
    let n = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::contract(e.to_string()))?.sample(rng) as usize
    } else {
        0
    };
    let mut pts: Vec<SpaceTimePoint<T>> = (0..n)
        .map(|_| {
            let position = uniform_in(region, rng);
            let time = uniform_coord(T::zero(), time_horizon, rng);
            SpaceTimePoint::new(position, time, 0)
        })
        .collect();
    sort_arrivals(&mut pts);
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn sorted_and_deterministic() {
        let region = Aabb::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let a = poisson_spacetime(&region, 3.0, 5.0, &mut rng_from_seed(4)).unwrap();
        let b = poisson_spacetime(&region, 3.0, 5.0, &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].arrival_cmp(&w[1]) != Ordering::Greater));
        assert!(a.iter().all(|p| region.contains(&p.position) && p.time <= 3.0));
    }

    #[test]
    fn bad_horizon() {
        let region = Aabb::<f64>::cube(1, 0.0, 1.0).unwrap();
        assert!(poisson_spacetime(&region, 0.0, 1.0, &mut rng_from_seed(0)).is_err());
        assert!(poisson_spacetime(&region, 1.0, 0.0, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let a = SpaceTimePoint::new(vec![0.5, 0.1], 1.0, 0);
        let b = SpaceTimePoint::new(vec![0.5, 0.2], 1.0, 1);
        assert_eq!(a.arrival_cmp(&b), Ordering::Less);
    }
}

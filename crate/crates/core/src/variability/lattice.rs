use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::ConvexSolid;

/// A `Z^d`-periodic set `ℒ` whose points are pairwise at gauge distance at
/// least 1, stored by its generators in `[0, 1)^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicPackedSet {
    pub generators: Vec<Vec<f64>>,
    /// Largest `D(w, ℒ)` over the certification grid.
    pub beta_grid: f64,
    /// Largest gauge norm of a vector in `[-h/2, h/2]^d`, `h` the grid
    /// step. `D(·, ℒ)` is 1-Lipschitz in the gauge, so `β ≤ beta_grid + slack`.
    pub slack: f64,
    pub resolution: f64,
    #[serde(serialize_with = "solid_spec")]
    solid: ConvexSolid<f64>,
}

fn solid_spec<S: Serializer>(solid: &ConvexSolid<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&solid.spec())
}

fn offsets(d: usize) -> Vec<Vec<f64>> {
    (0..3usize.pow(d as u32))
        .map(|m| {
            let mut r = m;
            (0..d)
                .map(|_| {
                    let o = (r % 3) as f64 - 1.0;
                    r /= 3;
                    o
                })
                .collect()
        })
        .collect()
}

/// Gauge distance from `w` to `g + Z^d`. Exact when `2 d_S < 1`: any
/// image outside the `3^d` neighbour copies is at Euclidean distance at
/// least 1, hence at gauge distance above 2.
fn torus_gauge(solid: &ConvexSolid<f64>, w: &[f64], g: &[f64], offs: &[Vec<f64>], buf: &mut Vec<f64>) -> f64 {
    let mut best = f64::INFINITY;
    for o in offs {
        buf.clear();
        buf.extend(w.iter().zip(g).zip(o).map(|((a, b), z)| {
            let mut t = a - b;
            t -= t.round();
            t + z
        }));
        best = best.min(solid.gauge_unchecked(buf));
    }
    best
}

impl PeriodicPackedSet {
    /// `β`, certified: an upper bound on `sup_w D(w, ℒ)`.
    pub fn beta(&self) -> f64 {
        self.beta_grid + self.slack
    }

    pub fn dim(&self) -> usize {
        self.generators.first().map_or(0, |g| g.len())
    }

    /// Number of points of `ℒ` per unit cube (`c_1`).
    pub fn density(&self) -> usize {
        self.generators.len()
    }

    /// `D(w, ℒ)` for any `w ∈ R^d`.
    pub fn distance(&self, w: &[f64]) -> f64 {
        let solid = &self.solid;
        let offs = offsets(w.len());
        let mut buf = Vec::with_capacity(w.len());
        self.generators
            .iter()
            .map(|g| torus_gauge(solid, w, g, &offs, &mut buf))
            .fold(f64::INFINITY, f64::min)
    }

    /// `D(x, sℒ) = s · D(x/s, ℒ)`.
    pub fn scaled_distance(&self, x: &[f64], scale: f64) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v / scale).collect();
        scale * self.distance(&y)
    }

    /// Smallest gauge distance between two distinct points of `ℒ`,
    /// periodic images included.
    pub fn min_separation(&self) -> f64 {
        let solid = &self.solid;
        let d = self.dim();
        let offs = offsets(d);
        let mut buf = Vec::with_capacity(d);
        let mut best = f64::INFINITY;
        for (a, g) in self.generators.iter().enumerate() {
            for h in &self.generators[a + 1..] {
                best = best.min(torus_gauge(solid, g, h, &offs, &mut buf));
            }
            // Own images: nonzero integer shifts.
            for o in offs.iter().filter(|o| o.iter().any(|z| *z != 0.0)) {
                best = best.min(solid.gauge_unchecked(o));
            }
        }
        best
    }

    pub fn solid(&self) -> &ConvexSolid<f64> {
        &self.solid
    }

    /// Points of `s·ℒ` in the closed box `[-h, h]^d`, in lexicographic
    /// order of (generator, shift).
    pub fn scaled_points_in_box(&self, scale: f64, h: f64) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = Vec::new();
        for g in &self.generators {
            let ranges: Vec<(i64, i64)> = (0..d).map(|a| axis_range(g[a], scale, h)).collect();
            if ranges.iter().any(|(lo, hi)| lo > hi) {
                continue;
            }
            let mut z: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            loop {
                out.push((0..d).map(|a| scale * (g[a] + z[a] as f64)).collect());
                let mut a = 0;
                while a < d {
                    z[a] += 1;
                    if z[a] <= ranges[a].1 {
                        break;
                    }
                    z[a] = ranges[a].0;
                    a += 1;
                }
                if a == d {
                    break;
                }
            }
        }
        out
    }

    /// `#(s·ℒ ∩ [-h, h]^d)`, counted exactly axis by axis.
    pub fn count_scaled_in_box(&self, scale: f64, h: f64) -> u64 {
        self.generators
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&c| {
                        let (lo, hi) = axis_range(c, scale, h);
                        (hi - lo + 1).max(0) as u64
                    })
                    .product::<u64>()
            })
            .sum()
    }
}

/// Integers `z` with `|s (c + z)| ≤ h`.
fn axis_range(c: f64, s: f64, h: f64) -> (i64, i64) {
    let mut lo = (-h / s - c).ceil() as i64;
    let mut hi = (h / s - c).floor() as i64;
    // Guard the rounding of the division against the exact predicate.
    while (s * (c + (lo - 1) as f64)).abs() <= h {
        lo -= 1;
    }
    while lo <= hi && (s * (c + lo as f64)).abs() > h {
        lo += 1;
    }
    while (s * (c + (hi + 1) as f64)).abs() <= h {
        hi += 1;
    }
    while hi >= lo && (s * (c + hi as f64)).abs() > h {
        hi -= 1;
    }
    (lo, hi)
}

/// Retries with a halved grid step before giving up.
const RETRIES: usize = 3;
const MAX_GRID_POINTS: usize = 1 << 22;

/// Construction of a maximally packed periodic set.
///
/// Farthest-point greedy first: starting from the origin, the grid point
/// of step `resolution` farthest (in the gauge, on the torus) from the
/// current generators is added while that distance is at least 1. When no
/// grid point is that far, `β` is certified from the grid maximum plus the
/// Lipschitz slack. Greedy packings can leave holes just under distance 1,
/// so if that bound is not below 1 the rank-1 lattices `{k g / n}` are
/// searched at the same grid, and failing both the grid is refined.
pub fn build_periodic_packed_set(solid: &ConvexSolid<f64>, resolution: f64) -> Result<PeriodicPackedSet> {
    if !(2.0 * solid.diameter() < 1.0) {
        return Err(Error::invalid(format!(
            "a period-1 packed set needs 2·diam(S) < 1, got diam(S) = {}",
            solid.diameter()
        )));
    }
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::contract("resolution must lie in (0, 1/2]"));
    }
    let d = solid.dim();
    let mut h = resolution;
    for _ in 0..=RETRIES {
        let per_axis = (1.0 / h).ceil() as usize;
        let h_eff = 1.0 / per_axis as f64;
        let total = per_axis.pow(d as u32);
        if total > MAX_GRID_POINTS {
            break;
        }
        let set = greedy(solid, per_axis, h_eff, total);
        if set.beta() < 1.0 {
            return Ok(set);
        }
        if let Some(set) = rank1_search(solid, per_axis, h_eff, total) {
            return Ok(set);
        }
        h = h_eff / 2.0;
    }
    Err(Error::Certification(format!(
        "could not certify β < 1 down to grid step {h}; resolution too coarse for this solid"
    )))
}

fn greedy(solid: &ConvexSolid<f64>, per_axis: usize, h: f64, total: usize) -> PeriodicPackedSet {
    let d = solid.dim();
    let offs = offsets(d);
    let grid: Vec<Vec<f64>> = (0..total).map(|lin| grid_point(lin, per_axis, h, d)).collect();
    let mut dist = vec![f64::INFINITY; total];
    let mut generators: Vec<Vec<f64>> = Vec::new();
    let mut buf = Vec::with_capacity(d);
    let mut next = 0usize;
    loop {
        let g = grid[next].clone();
        for (w, dw) in grid.iter().zip(dist.iter_mut()) {
            *dw = dw.min(torus_gauge(solid, w, &g, &offs, &mut buf));
        }
        generators.push(g);
        // Farthest grid point; ties go to the lowest index.
        let (k, far) = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
        if far < 1.0 {
            return PeriodicPackedSet {
                generators,
                beta_grid: far,
                slack: grid_slack(solid, h),
                resolution: h,
                solid: solid.clone(),
            };
        }
        next = k;
    }
}

/// Largest gauge of a corner of the half grid cell: every point lies this
/// close to some grid point.
fn grid_slack(solid: &ConvexSolid<f64>, h: f64) -> f64 {
    let d = solid.dim();
    (0..1usize << d)
        .map(|m| {
            let c: Vec<f64> = (0..d).map(|a| if m >> a & 1 == 1 { -h / 2.0 } else { h / 2.0 }).collect();
            solid.gauge_unchecked(&c)
        })
        .fold(0.0, f64::max)
}

fn grid_point(lin: usize, per_axis: usize, h: f64, d: usize) -> Vec<f64> {
    let mut r = lin;
    (0..d)
        .map(|_| {
            let k = r % per_axis;
            r /= per_axis;
            k as f64 * h
        })
        .collect()
}

/// Rank-1 lattices `{ frac(k g / n) : 0 ≤ k < n }` with `g = (1, a, b, ..)`,
/// densest `n` first. The first packed one whose certified `β` is below 1
/// is returned.
fn rank1_search(solid: &ConvexSolid<f64>, per_axis: usize, h: f64, total: usize) -> Option<PeriodicPackedSet> {
    let d = solid.dim();
    let offs = offsets(d);
    let slack = grid_slack(solid, h);
    if slack >= 1.0 {
        return None;
    }
    let zero = vec![0.0; d];
    let mut buf = Vec::with_capacity(d);
    // n·|B_{1/2}| ≤ 1 for a packing, n·|B_1| ≥ 1 for a covering.
    let half = solid.half_gauge_ball_volume();
    let n_max = (1.0 / half).floor() as usize;
    let n_min = ((1.0 / (half * 2f64.powi(d as i32))).ceil() as usize).max(1);
    let grid: Vec<Vec<f64>> = (0..total).map(|lin| grid_point(lin, per_axis, h, d)).collect();
    for n in (n_min..=n_max).rev() {
        let choices = n.pow(d as u32 - 1);
        for c in 0..choices {
            let mut g = vec![1usize; d];
            let mut r = c;
            for ga in g.iter_mut().skip(1) {
                *ga = r % n;
                r /= n;
            }
            let pts: Vec<Vec<f64>> =
                (0..n).map(|k| g.iter().map(|&ga| ((k * ga) % n) as f64 / n as f64).collect()).collect();
            // a lattice is packed iff every nonzero point is far from the origin
            let packed = pts[1..].iter().all(|p| torus_gauge(solid, p, &zero, &offs, &mut buf) >= 1.0)
                && offs.iter().filter(|o| o.iter().any(|z| *z != 0.0)).all(|o| solid.gauge_unchecked(o) >= 1.0);
            if !packed {
                continue;
            }
            let mut far: f64 = 0.0;
            for w in &grid {
                let dw = pts.iter().map(|p| torus_gauge(solid, w, p, &offs, &mut buf)).fold(f64::INFINITY, f64::min);
                far = far.max(dw);
                if far + slack >= 1.0 {
                    break;
                }
            }
            if far + slack < 1.0 {
                return Some(PeriodicPackedSet { generators: pts, beta_grid: far, slack, resolution: h, solid: solid.clone() });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_intervals() {
        let solid = ConvexSolid::ball(1, 0.2).unwrap();
        let set = build_periodic_packed_set(&solid, 1.0 / 64.0).unwrap();
        assert_eq!(set.generators, vec![vec![0.0], vec![0.5]]);
        assert!((set.beta_grid - 0.625).abs() < 1e-12);
        assert!(set.beta() < 1.0);
        assert!(set.min_separation() >= 1.0);
    }

    #[test]
    fn disks_give_square_lattice() {
        let solid = ConvexSolid::ball(2, 0.24).unwrap();
        let set = build_periodic_packed_set(&solid, 1.0 / 32.0).unwrap();
        assert_eq!(set.density(), 4);
        assert!(set.min_separation() >= 1.0);
        assert!((set.beta_grid - 0.125f64.sqrt() / 0.48).abs() < 1e-9);
    }

    #[test]
    fn counts_match_enumeration() {
        let solid = ConvexSolid::ball(2, 0.24).unwrap();
        let set = build_periodic_packed_set(&solid, 1.0 / 16.0).unwrap();
        for (s, h) in [(1.0, 3.0), (1.07, 5.5), (1.3, 0.2)] {
            assert_eq!(set.count_scaled_in_box(s, h), set.scaled_points_in_box(s, h).len() as u64);
        }
        assert_eq!(set.count_scaled_in_box(1.0, 1.0), 5 * 5);
    }

    #[test]
    fn small_disks_fall_back_to_a_lattice() {
        let solid = ConvexSolid::ball(2, 0.089).unwrap();
        let set = build_periodic_packed_set(&solid, 1.0 / 32.0).unwrap();
        assert!(set.beta() < 1.0);
        assert!(set.min_separation() >= 1.0);
    }

    #[test]
    fn rejects_large_solids() {
        let solid = ConvexSolid::ball(1, 0.5).unwrap();
        assert!(build_periodic_packed_set(&solid, 0.1).is_err());
    }
}

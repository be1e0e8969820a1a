//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use jamlab::engine::{sort_arrivals, SpaceTimePoint};
use jamlab::geometry::Shape;
use jamlab::{Region, Solid, SpacePoint};
use rand::Rng;

/// Closed overlap written from the shape parameters alone, without the
/// difference body or gauge code of the library.
pub fn naive_overlap(solid: &Solid, x: &[f64], y: &[f64]) -> bool {
    match solid.shape() {
        Shape::Ball { radius } => {
            let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 <= 4.0 * radius * radius
        }
        Shape::Box { half_extents } => {
            x.iter().zip(y).zip(half_extents).all(|((a, b), h)| (a - b).abs() <= 2.0 * h)
        }
        Shape::Polygon { vertices } => {
            let pa: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0] + x[0], v[1] + x[1]]).collect();
            let pb: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0] + y[0], v[1] + y[1]]).collect();
            !separated(&pa, &pb)
        }
    }
}

/// Separating axis test; touching polygons are not separated.
fn separated(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    for poly in [a, b] {
        for k in 0..poly.len() {
            let p = poly[k];
            let q = poly[(k + 1) % poly.len()];
            let n = [q[1] - p[1], p[0] - q[0]];
            let proj = |v: &[f64; 2]| v[0] * n[0] + v[1] * n[1];
            let (alo, ahi) = a.iter().map(proj).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            let (blo, bhi) = b.iter().map(proj).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if ahi < blo || bhi < alo {
                return true;
            }
        }
    }
    false
}

/// O(n²) reference packer: a point is kept iff it lies in the region and
/// overlaps nothing kept or frozen before it.
pub fn naive_pack(solid: &Solid, region: &Region, eta: &[Vec<f64>], points: &[SpacePoint]) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !region.contains(&p.position) {
            continue;
        }
        if eta.iter().chain(kept.iter()).any(|q| naive_overlap(solid, &p.position, q)) {
            continue;
        }
        kept.push(p.position.clone());
    }
    kept
}

/// Random convex polygon: hull of a few points on a jittered circle.
pub fn random_polygon<R: Rng>(rng: &mut R) -> Solid {
    let k = rng.random_range(3..8);
    let r = rng.random_range(0.2..0.6);
    let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let verts: Vec<[f64; 2]> = angles.iter().map(|a| [r * a.cos(), 0.7 * r * a.sin()]).collect();
    Solid::polygon(verts).unwrap_or_else(|_| Solid::polygon(vec![[-r, -r], [r, -r], [0.0, r]]).unwrap())
}

/// Random solid of the requested family index (0 ball, 1 box, 2 polygon).
pub fn random_solid<R: Rng>(rng: &mut R, family: usize) -> Solid {
    match family {
        0 => {
            let d = rng.random_range(1..4);
            Solid::ball(d, rng.random_range(0.1..0.6)).unwrap()
        }
        1 => {
            let d = rng.random_range(1..4);
            Solid::cuboid((0..d).map(|_| rng.random_range(0.1..0.6)).collect()).unwrap()
        }
        _ => random_polygon(rng),
    }
}

/// Greedy admissible configuration in the shell of width `reach` just
/// outside the closed region.
pub fn random_eta<R: Rng>(solid: &Solid, region: &Region, attempts: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = solid.dim();
    let pad: Vec<f64> = solid.reach().to_vec();
    let outer = region.dilate(&pad);
    let mut eta: Vec<Vec<f64>> = Vec::new();
    for _ in 0..attempts {
        let p: Vec<f64> = (0..d).map(|a| rng.random_range(outer.lo[a]..outer.hi[a])).collect();
        if region.contains_closed(&p) {
            continue;
        }
        if eta.iter().any(|q| naive_overlap(solid, &p, q)) {
            continue;
        }
        eta.push(p);
    }
    eta
}

/// Sorted uniform arrivals over a box slightly larger than the region, so
/// some fall outside and must be rejected.
pub fn random_input<R: Rng>(region: &Region, n: usize, rng: &mut R) -> Vec<SpacePoint> {
    let d = region.dim();
    let mut pts: Vec<SpacePoint> = (0..n)
        .map(|k| {
            let p: Vec<f64> = (0..d)
                .map(|a| {
                    let w = region.hi[a] - region.lo[a];
                    rng.random_range(region.lo[a] - 0.05 * w..region.hi[a] + 0.05 * w)
                })
                .collect();
            SpaceTimePoint::new(p, rng.random_range(0.0..1.0), k as u64)
        })
        .collect();
    sort_arrivals(&mut pts);
    pts
}

/// One randomized instance for the oracle comparison.
pub struct Instance {
    pub solid: Solid,
    pub region: Region,
    pub eta: Vec<Vec<f64>>,
    pub input: Vec<SpacePoint>,
}

pub fn random_instance<R: Rng>(k: usize, rng: &mut R) -> Instance {
    let solid = random_solid(rng, k % 3);
    let d = solid.dim();
    let side = match d {
        1 => rng.random_range(2.0..20.0),
        2 => rng.random_range(2.0..8.0),
        _ => rng.random_range(2.0..4.0),
    };
    let region = Region::cube(d, 0.0, side).unwrap();
    let eta = if (k / 3) % 2 == 1 { random_eta(&solid, &region, 200, rng) } else { Vec::new() };
    let n = rng.random_range(20..500);
    let input = random_input(&region, n, rng);
    Instance { solid, region, eta, input }
}

/// `P(N = 2)` for unit intervals with centers in `[0, 3)`; otherwise `N = 3`.
///
/// The first center `x` leaves a gap of center length `2 − x` (for `x < 1`)
/// that holds a second extra point with probability `2(g − 1)/g`, which
/// integrates to `(2/3)(2 ln 2 − 1)`.
pub fn renyi_three_p2() -> f64 {
    2.0 / 3.0 * (2.0 * std::f64::consts::LN_2 - 1.0)
}

/// Mean count `m(ℓ)` for unit intervals with centers in an interval of
/// length `ℓ`, from `m(ℓ) = 1 + (2/ℓ) ∫₀^{ℓ−1} m(u) du` for `ℓ > 0`,
/// solved on a grid of step `h` with the trapezoid rule.
pub fn renyi_mean(ell: f64, h: f64) -> f64 {
    let n = (ell / h).round() as usize;
    let lag = (1.0 / h).round() as usize;
    let mut m = vec![0.0; n + 1];
    // cumulative trapezoid integral of m from 0 to grid point k
    let mut cum = vec![0.0; n + 1];
    for k in 1..=n {
        let l = k as f64 * h;
        m[k] = if k <= lag { 1.0 } else { 1.0 + 2.0 / l * cum[k - lag] };
        // m jumps from 0 to 1 at the origin; the integral over (0, h] is h
        cum[k] = cum[k - 1] + if k == 1 { h } else { 0.5 * h * (m[k] + m[k - 1]) };
    }
    m[n]
}

/// Coverage `ρ(τ) = ∫₀^τ exp(−2 ∫₀^t (1 − e^{−s})/s ds) dt` of the
/// unit-interval process at time `τ` (unit arrival intensity per unit
/// length and time), by nested Simpson/trapezoid on step 1e-3.
pub fn renyi_density(t_max: f64) -> f64 {
    let h = 1e-3;
    let n = (t_max / h) as usize;
    let g = |s: f64| if s == 0.0 { 1.0 } else { -(-s).exp_m1() / s };
    let mut inner = 0.0;
    let mut total = 0.0;
    let mut prev = 1.0;
    for k in 1..=n {
        let a = (k - 1) as f64 * h;
        let b = k as f64 * h;
        inner += h / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
        let f = (-2.0 * inner).exp();
        total += 0.5 * h * (prev + f);
        prev = f;
    }
    total
}

/// Rényi's constant, `ρ(∞)`. Past `T = 60` the inner integral is
/// `ln t + γ` up to `E₁(t) < e^{-60}`, so the tail is `e^{-2γ}/T`.
pub fn renyi_constant() -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    renyi_density(60.0) + (-2.0 * EULER_GAMMA).exp() / 60.0
}

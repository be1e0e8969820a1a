//! `|(center + S) ∩ box|`.
//!
//! Boxes and intervals are clipped exactly, disks and polygons in the
//! plane by closed forms, and balls in `d ≥ 3` by adaptive Simpson
//! integration over one axis of the `(d−1)`-dimensional sections.
//! [`dyadic_clipped_volume`] is the shape-agnostic cell-classification
//! quadrature used as a cross-check.

use super::aabb::Aabb;
use super::polygon;
use super::solid::{unit_ball_volume, ConvexSolid, Shape};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn clipped_volume<T: Scalar>(
    solid: &ConvexSolid<T>,
    center: &[T],
    bx: &Aabb<T>,
    tol: T,
) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::contract("clipped_volume: tolerance must be positive"));
    }
    if center.len() != solid.dim() || bx.dim() != solid.dim() {
        return Err(Error::contract("clipped_volume: dimension mismatch"));
    }
    let bounds = solid.solid_bounds(center);
    if bx.contains_box(&bounds) {
        return Ok(solid.volume());
    }
    let Some(window) = bounds.intersection(bx) else {
        return Ok(T::zero());
    };
    let v = match solid.shape() {
        Shape::Box { .. } => window.volume(),
        Shape::Ball { radius } => {
            let r = radius.f64();
            let lo: Vec<f64> = (0..solid.dim()).map(|a| (window.lo[a] - center[a]).f64()).collect();
            let hi: Vec<f64> = (0..solid.dim()).map(|a| (window.hi[a] - center[a]).f64()).collect();
            let full = unit_ball_volume(solid.dim()) * r.powi(solid.dim() as i32);
            T::lit(ball_box_volume(r, &lo, &hi, tol.f64() * full))
        }
        Shape::Polygon { vertices } => {
            let shifted: Vec<[T; 2]> =
                vertices.iter().map(|v| [v[0] + center[0], v[1] + center[1]]).collect();
            let clipped = polygon::clip_to_rect(
                &shifted,
                [window.lo[0], window.lo[1]],
                [window.hi[0], window.hi[1]],
            );
            if clipped.len() < 3 {
                T::zero()
            } else {
                polygon::signed_area(&clipped).max(T::zero())
            }
        }
    };
    Ok(v.min(solid.volume()))
}

/// Volume of `B(0, r) ∩ Π[lo_a, hi_a]`, absolute error target `abs_tol`.
pub(crate) fn ball_box_volume(r: f64, lo: &[f64], hi: &[f64], abs_tol: f64) -> f64 {
    let d = lo.len();
    if r <= 0.0 {
        return 0.0;
    }
    match d {
        1 => (hi[0].min(r) - lo[0].max(-r)).max(0.0),
        2 => disk_rect_area(r, lo[0], hi[0], lo[1], hi[1]),
        _ => {
            let a = lo[0].max(-r);
            let b = hi[0].min(r);
            if a >= b {
                return 0.0;
            }
            let section = |x: f64| {
                let rr = (r * r - x * x).max(0.0).sqrt();
                ball_box_volume(rr, &lo[1..], &hi[1..], abs_tol * 1e-3)
            };
            // Sections have kinks where the sub-ball starts touching a face.
            let mut knots = vec![a, b];
            for t in lo[1..].iter().chain(&hi[1..]) {
                if t.abs() < r {
                    let x = (r * r - t * t).sqrt();
                    for k in [x, -x] {
                        if k > a && k < b {
                            knots.push(k);
                        }
                    }
                }
            }
            if 0.0 > a && 0.0 < b {
                knots.push(0.0);
            }
            knots.sort_by(|p, q| p.partial_cmp(q).unwrap());
            knots.dedup();
            let pieces = (knots.len() - 1) as f64;
            knots
                .windows(2)
                .map(|w| adaptive_simpson(&section, w[0], w[1], abs_tol / pieces, 40))
                .sum()
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Exact area of the disk `B(0, r)` intersected with `[x0,x1] × [y0,y1]`.
pub(crate) fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let a = x0.max(-r);
    let b = x1.min(r);
    let (y0, y1) = (y0.max(-r), y1.min(r));
    if a >= b || y0 >= y1 {
        return 0.0;
    }
    // ∫ sqrt(r² − x²) dx
    let g = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin())
    };
    let h = |x: f64| (r * r - x * x).max(0.0).sqrt();
    let mut knots = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let x = (r * r - y * y).sqrt();
            for k in [x, -x] {
                if k > a && k < b {
                    knots.push(k);
                }
            }
        }
    }
    knots.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut area = 0.0;
    for w in knots.windows(2) {
        let (s, t) = (w[0], w[1]);
        if t <= s {
            continue;
        }
        let m = 0.5 * (s + t);
        let hm = h(m);
        // ties happen only at a tangent face (y = ±r), where the curve is
        // the binding side on the whole piece
        let upper_is_curve = hm <= y1;
        let lower_is_curve = -hm >= y0;
        let up = if upper_is_curve { hm } else { y1 };
        let low = if lower_is_curve { -hm } else { y0 };
        if up <= low {
            continue;
        }
        let int_upper = if upper_is_curve { g(t) - g(s) } else { y1 * (t - s) };
        let int_lower = if lower_is_curve { -(g(t) - g(s)) } else { y0 * (t - s) };
        area += int_upper - int_lower;
    }
    area.max(0.0)
}

/// Shape-agnostic adaptive dyadic quadrature: cells inside `center + S`
/// (all corners inside, by convexity) count fully, cells missing the solid
/// count zero, and mixed cells are split breadth-first until their total
/// mass drops below `tol · |S|`; the remaining mixed mass is counted at
/// one half. `max_cells` caps the work per level.
pub fn dyadic_clipped_volume<T: Scalar>(
    solid: &ConvexSolid<T>,
    center: &[T],
    bx: &Aabb<T>,
    tol: T,
    max_cells: usize,
) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::contract("dyadic_clipped_volume: tolerance must be positive"));
    }
    let Some(root) = solid.solid_bounds(center).intersection(bx) else {
        return Ok(T::zero());
    };
    let d = solid.dim();
    let target = tol * solid.volume();
    let mut inside = T::zero();
    let mut mixed = vec![root];
    let mut corner = vec![T::zero(); d];
    loop {
        let mut next_mixed = Vec::new();
        let mut mixed_mass = T::zero();
        for cell in mixed {
            let all_in = (0..1usize << d).all(|m| {
                cell.corner_into(m, &mut corner);
                solid.solid_contains(center, &corner)
            });
            if all_in {
                inside += cell.volume();
                continue;
            }
            if !solid_may_meet_box(solid, center, &cell) {
                continue;
            }
            mixed_mass += cell.volume();
            next_mixed.push(cell);
        }
        if mixed_mass < target || next_mixed.len() * (1 << d) > max_cells {
            return Ok(inside + mixed_mass / T::lit(2.0));
        }
        mixed = next_mixed.iter().flat_map(|c| c.split()).collect();
    }
}

pub(crate) fn solid_may_meet_box<T: Scalar>(solid: &ConvexSolid<T>, center: &[T], cell: &Aabb<T>) -> bool {
    match solid.shape() {
        Shape::Ball { radius } => cell.distance_to(center) <= *radius,
        Shape::Box { .. } => solid.solid_bounds(center).intersection(cell).is_some(),
        Shape::Polygon { vertices } => {
            let shifted: Vec<[T; 2]> =
                vertices.iter().map(|v| [v[0] + center[0], v[1] + center[1]]).collect();
            let rect = [
                [cell.lo[0], cell.lo[1]],
                [cell.hi[0], cell.lo[1]],
                [cell.hi[0], cell.hi[1]],
                [cell.lo[0], cell.hi[1]],
            ];
            polygon::convex_polygons_intersect(&shifted, &rect)
        }
    }
}

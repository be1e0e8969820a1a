//! Planar convex polygon helpers: validation, centroid, difference body,
//! facet representation and clipping.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type P2<T> = [T; 2];

#[inline]
fn cross<T: Scalar>(o: P2<T>, a: P2<T>, b: P2<T>) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Signed shoelace area (positive for counter-clockwise order).
pub fn signed_area<T: Scalar>(v: &[P2<T>]) -> T {
    let n = v.len();
    let mut s = T::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        s += v[i][0] * v[j][1] - v[j][0] * v[i][1];
    }
    s / T::lit(2.0)
}

pub fn area_centroid<T: Scalar>(v: &[P2<T>]) -> P2<T> {
    let n = v.len();
    let a = signed_area(v);
    let (mut cx, mut cy) = (T::zero(), T::zero());
    for i in 0..n {
        let j = (i + 1) % n;
        let w = v[i][0] * v[j][1] - v[j][0] * v[i][1];
        cx += (v[i][0] + v[j][0]) * w;
        cy += (v[i][1] + v[j][1]) * w;
    }
    let six_a = T::lit(6.0) * a;
    [cx / six_a, cy / six_a]
}

/// Checks strict convexity, orients counter-clockwise and re-centers the
/// polygon on its area centroid.
pub fn normalize_convex<T: Scalar>(mut v: Vec<P2<T>>) -> Result<Vec<P2<T>>> {
    if v.len() < 3 {
        return Err(Error::invalid("polygon needs at least three vertices"));
    }
    if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::invalid("polygon vertex is not finite"));
    }
    if signed_area(&v) < T::zero() {
        v.reverse();
    }
    let n = v.len();
    for i in 0..n {
        let c = cross(v[i], v[(i + 1) % n], v[(i + 2) % n]);
        if !(c > T::zero()) {
            return Err(Error::invalid(
                "polygon vertices must be in strictly convex position",
            ));
        }
    }
    let c = area_centroid(&v);
    Ok(v.into_iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect())
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// collinear points.
pub fn convex_hull<T: Scalar>(points: &[P2<T>]) -> Vec<P2<T>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2<T>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= T::zero() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2<T>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= T::zero() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// `P ⊕ (−P)` as the hull of all pairwise vertex differences.
pub fn difference_polygon<T: Scalar>(v: &[P2<T>]) -> Vec<P2<T>> {
    let mut diffs = Vec::with_capacity(v.len() * v.len());
    for a in v {
        for b in v {
            diffs.push([a[0] - b[0], a[1] - b[1]]);
        }
    }
    convex_hull(&diffs)
}

/// Outward facet normals `n` and offsets `h` with `P = {x : n·x ≤ h}`.
pub fn facets<T: Scalar>(v: &[P2<T>]) -> Vec<(P2<T>, T)> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            let normal = [b[1] - a[1], a[0] - b[0]];
            let h = normal[0] * a[0] + normal[1] * a[1];
            (normal, h)
        })
        .collect()
}

/// Separating-axis test for two closed convex polygons.
pub fn convex_polygons_intersect<T: Scalar>(a: &[P2<T>], b: &[P2<T>]) -> bool {
    for poly in [a, b] {
        for (normal, _) in facets(poly) {
            let proj = |q: &[P2<T>]| {
                q.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                    let s = normal[0] * p[0] + normal[1] * p[1];
                    (lo.min(s), hi.max(s))
                })
            };
            let (alo, ahi) = proj(a);
            let (blo, bhi) = proj(b);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
    }
    true
}

/// Sutherland–Hodgman clip of a convex polygon against an axis-aligned
/// rectangle.
pub fn clip_to_rect<T: Scalar>(poly: &[P2<T>], lo: P2<T>, hi: P2<T>) -> Vec<P2<T>> {
    let mut out = poly.to_vec();
    // (axis, bound, keep_greater)
    let planes = [(0, lo[0], true), (0, hi[0], false), (1, lo[1], true), (1, hi[1], false)];
    for (axis, bound, keep_greater) in planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &P2<T>| if keep_greater { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut p = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
                p[axis] = bound;
                out.push(p);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

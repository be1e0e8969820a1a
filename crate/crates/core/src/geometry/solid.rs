use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::aabb::Aabb;
use super::polygon::{self, P2};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The shape of a solid centered on its centroid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape<T> {
    Ball { radius: T },
    Box { half_extents: Vec<T> },
    /// Convex polygon (d = 2), stored counter-clockwise around its centroid.
    Polygon { vertices: Vec<P2<T>> },
}

/// `D = S ⊕ (−S)`, the set of displacements at which two translates of
/// `S` meet.
#[derive(Clone, Debug, PartialEq)]
pub enum DifferenceBody<T> {
    Ball { radius: T },
    Box { half_extents: Vec<T> },
    Polygon { vertices: Vec<P2<T>>, facets: Vec<(P2<T>, T)> },
}

/// A solid `S`: bounded, closed, convex, non-empty interior, centroid at the
/// origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSolid<T> {
    shape: Shape<T>,
    dim: usize,
    diameter: T,
    volume: T,
    difference: DifferenceBody<T>,
    difference_volume: T,
    /// Half-extent of `D` along each axis.
    reach: Vec<T>,
    /// Half-extent of `S` along each axis.
    half_width: Vec<T>,
    /// Facets of `S` itself (polygons only).
    own_facets: Vec<(P2<T>, T)>,
    /// Radius of the largest Euclidean ball inside `D`.
    difference_inradius: T,
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

impl<T: Scalar> ConvexSolid<T> {
    pub fn ball(dim: usize, radius: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::invalid("ball radius must be positive and finite"));
        }
        let two = T::lit(2.0);
        let volume = T::lit(unit_ball_volume(dim)) * radius.powi(dim as i32);
        Ok(Self {
            shape: Shape::Ball { radius },
            dim,
            diameter: two * radius,
            volume,
            difference: DifferenceBody::Ball { radius: two * radius },
            difference_volume: volume * two.powi(dim as i32),
            reach: vec![two * radius; dim],
            half_width: vec![radius; dim],
            own_facets: Vec::new(),
            difference_inradius: two * radius,
        })
    }

    pub fn cuboid(half_extents: Vec<T>) -> Result<Self> {
        let dim = half_extents.len();
        if dim == 0 {
            return Err(Error::invalid("box needs at least one half-extent"));
        }
        if half_extents.iter().any(|h| !(*h > T::zero()) || !h.is_finite()) {
            return Err(Error::invalid("box half-extents must be positive and finite"));
        }
        let two = T::lit(2.0);
        let volume = half_extents.iter().fold(T::one(), |acc, h| acc * two * *h);
        let diameter = two * half_extents.iter().map(|h| *h * *h).sum::<T>().sqrt();
        let reach: Vec<T> = half_extents.iter().map(|h| two * *h).collect();
        let inradius = reach.iter().cloned().fold(T::infinity(), T::min);
        Ok(Self {
            shape: Shape::Box { half_extents: half_extents.clone() },
            dim,
            diameter,
            volume,
            difference: DifferenceBody::Box { half_extents: reach.clone() },
            difference_volume: volume * two.powi(dim as i32),
            reach,
            half_width: half_extents,
            own_facets: Vec::new(),
            difference_inradius: inradius,
        })
    }

    /// Convex polygon in the plane; vertices may be given in either
    /// orientation and are re-centered on the area centroid.
    pub fn polygon(vertices: Vec<P2<T>>) -> Result<Self> {
        let v = polygon::normalize_convex(vertices)?;
        let volume = polygon::signed_area(&v);
        if !(volume > T::zero()) {
            return Err(Error::invalid("polygon has zero area"));
        }
        let mut diameter = T::zero();
        for a in &v {
            for b in &v {
                diameter = diameter.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let dv = polygon::difference_polygon(&v);
        let dfacets = polygon::facets(&dv);
        let difference_volume = polygon::signed_area(&dv);
        let mut reach = vec![T::zero(); 2];
        let mut half_width = vec![T::zero(); 2];
        for p in &dv {
            reach[0] = reach[0].max(p[0].abs());
            reach[1] = reach[1].max(p[1].abs());
        }
        for p in &v {
            half_width[0] = half_width[0].max(p[0].abs());
            half_width[1] = half_width[1].max(p[1].abs());
        }
        let inradius = dfacets
            .iter()
            .map(|(n, h)| *h / (n[0] * n[0] + n[1] * n[1]).sqrt())
            .fold(T::infinity(), T::min);
        Ok(Self {
            own_facets: polygon::facets(&v),
            shape: Shape::Polygon { vertices: v },
            dim: 2,
            diameter,
            volume,
            difference: DifferenceBody::Polygon { vertices: dv, facets: dfacets },
            difference_volume,
            reach,
            half_width,
            difference_inradius: inradius,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    pub fn difference_body(&self) -> &DifferenceBody<T> {
        &self.difference
    }

    /// Exact diameter `d_S`.
    #[inline]
    pub fn diameter(&self) -> T {
        self.diameter
    }

    /// Lebesgue measure `|S|`.
    #[inline]
    pub fn volume(&self) -> T {
        self.volume
    }

    #[inline]
    pub fn difference_volume(&self) -> T {
        self.difference_volume
    }

    /// Volume of the gauge ball of radius ½, i.e. of `D/2`.
    pub fn half_gauge_ball_volume(&self) -> T {
        self.difference_volume / T::lit(2.0).powi(self.dim as i32)
    }

    /// Half-extents of `D` per axis. Two centers can only be adjacent when
    /// they differ by at most this much on every axis.
    #[inline]
    pub fn reach(&self) -> &[T] {
        &self.reach
    }

    /// Half-extents of `S` per axis.
    #[inline]
    pub fn half_width(&self) -> &[T] {
        &self.half_width
    }

    /// Inradius of `D`; `gauge(v) ≤ |v| / inradius` for all `v`.
    pub fn difference_inradius(&self) -> T {
        self.difference_inradius
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            Err(Error::contract(format!(
                "expected a {}-dimensional vector, got {}",
                self.dim, len
            )))
        } else {
            Ok(())
        }
    }

    /// Minkowski gauge of `x` with respect to `D`:
    /// `sup{a ≥ 0 : (x + aS) ∩ aS = ∅}`.
    pub fn gauge_norm(&self, x: &[T]) -> Result<T> {
        self.check_dim(x.len())?;
        Ok(self.gauge_unchecked(x))
    }

    #[inline]
    pub fn gauge_unchecked(&self, x: &[T]) -> T {
        match &self.difference {
            DifferenceBody::Ball { radius } => {
                x.iter().map(|v| *v * *v).sum::<T>().sqrt() / *radius
            }
            DifferenceBody::Box { half_extents } => x
                .iter()
                .zip(half_extents)
                .map(|(v, h)| v.abs() / *h)
                .fold(T::zero(), T::max),
            DifferenceBody::Polygon { facets, .. } => facets
                .iter()
                .map(|(n, h)| (n[0] * x[0] + n[1] * x[1]) / *h)
                .fold(T::zero(), T::max),
        }
    }

    /// Gauge distance between two points.
    #[inline]
    pub fn gauge_between(&self, x: &[T], y: &[T]) -> T {
        match &self.difference {
            DifferenceBody::Ball { radius } => {
                x.iter().zip(y).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>().sqrt() / *radius
            }
            DifferenceBody::Box { half_extents } => x
                .iter()
                .zip(y)
                .zip(half_extents)
                .map(|((a, b), h)| (*a - *b).abs() / *h)
                .fold(T::zero(), T::max),
            DifferenceBody::Polygon { facets, .. } => {
                let dx = x[0] - y[0];
                let dy = x[1] - y[1];
                facets
                    .iter()
                    .map(|(n, h)| (n[0] * dx + n[1] * dy) / *h)
                    .fold(T::zero(), T::max)
            }
        }
    }

    /// `(x + S) ∩ (y + S) ≠ ∅`, closed sets: touching counts.
    pub fn overlaps(&self, x: &[T], y: &[T]) -> Result<bool> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        Ok(self.overlaps_unchecked(x, y))
    }

    #[inline]
    pub fn overlaps_unchecked(&self, x: &[T], y: &[T]) -> bool {
        self.gauge_between(x, y) <= T::one()
    }

    /// Whether `p ∈ center + S`.
    pub fn solid_contains(&self, center: &[T], p: &[T]) -> bool {
        match &self.shape {
            Shape::Ball { radius } => {
                center.iter().zip(p).map(|(c, q)| (*q - *c) * (*q - *c)).sum::<T>()
                    <= *radius * *radius
            }
            Shape::Box { half_extents } => center
                .iter()
                .zip(p)
                .zip(half_extents)
                .all(|((c, q), h)| (*q - *c).abs() <= *h),
            Shape::Polygon { .. } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                self.own_facets.iter().all(|(n, h)| n[0] * dx + n[1] * dy <= *h)
            }
        }
    }

    /// Axis-aligned bounding box of `center + S`.
    pub fn solid_bounds(&self, center: &[T]) -> Aabb<T> {
        Aabb {
            lo: center.iter().zip(&self.half_width).map(|(c, h)| *c - *h).collect(),
            hi: center.iter().zip(&self.half_width).map(|(c, h)| *c + *h).collect(),
        }
    }

    /// Whether `cell ⊆ center + D`. Exact by convexity: it suffices that all
    /// `2^d` corners lie in `center + D`.
    pub fn difference_contains_box(&self, center: &[T], cell: &Aabb<T>) -> bool {
        match &self.difference {
            DifferenceBody::Ball { radius } => {
                // The farthest corner decides.
                let mut s = T::zero();
                for a in 0..self.dim {
                    let d = (cell.lo[a] - center[a]).abs().max((cell.hi[a] - center[a]).abs());
                    s += d * d;
                }
                s.sqrt() <= *radius
            }
            DifferenceBody::Box { half_extents } => (0..self.dim).all(|a| {
                cell.lo[a] - center[a] >= -half_extents[a] && cell.hi[a] - center[a] <= half_extents[a]
            }),
            DifferenceBody::Polygon { .. } => {
                let mut corner = [T::zero(); 2];
                (0..4).all(|mask| {
                    cell.corner_into(mask, &mut corner);
                    self.gauge_between(&corner, center) <= T::one()
                })
            }
        }
    }

    /// Conservative test for `cell ∩ (center + D) ≠ ∅`: never reports
    /// `false` for an intersecting pair.
    pub fn difference_may_meet_box(&self, center: &[T], cell: &Aabb<T>) -> bool {
        match &self.difference {
            DifferenceBody::Ball { radius } => cell.distance_to(center) <= *radius,
            DifferenceBody::Box { half_extents } => (0..self.dim).all(|a| {
                cell.lo[a] - center[a] <= half_extents[a] && center[a] - cell.hi[a] <= half_extents[a]
            }),
            DifferenceBody::Polygon { vertices, .. } => {
                let shifted: Vec<P2<T>> =
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

    /// Canonical spec string, parseable by [`FromStr`].
    pub fn spec(&self) -> String {
        match &self.shape {
            Shape::Ball { radius } => format!("ball d={} r={}", self.dim, radius),
            Shape::Box { half_extents } => format!(
                "box d={} h={}",
                self.dim,
                half_extents.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",")
            ),
            Shape::Polygon { vertices } => format!(
                "poly2 v={}",
                vertices
                    .iter()
                    .map(|p| format!("{},{}", p[0], p[1]))
                    .collect::<Vec<_>>()
                    .join(";")
            ),
        }
    }

    pub fn cast<U: Scalar>(&self) -> ConvexSolid<U> {
        match &self.shape {
            Shape::Ball { radius } => ConvexSolid::ball(self.dim, U::lit(radius.f64())),
            Shape::Box { half_extents } => {
                ConvexSolid::cuboid(half_extents.iter().map(|h| U::lit(h.f64())).collect())
            }
            Shape::Polygon { vertices } => ConvexSolid::polygon(
                vertices.iter().map(|p| [U::lit(p[0].f64()), U::lit(p[1].f64())]).collect(),
            ),
        }
        .expect("a valid solid stays valid under casting")
    }
}

impl<T: Scalar> fmt::Display for ConvexSolid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

fn parse_float<T: Scalar>(key: &str, s: &str) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("`{key}`: `{s}` is not a number")))?;
    Ok(T::lit(v))
}

/// Grammar: `ball d=<int> r=<float>`, `box d=<int> h=<float,...>` (a single
/// value is broadcast to every axis), `poly2 v=<x1,y1;x2,y2;...>`.
impl<T: Scalar> FromStr for ConvexSolid<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let kind = words.next().ok_or_else(|| Error::invalid("empty solid spec"))?;
        let mut dim: Option<usize> = None;
        let mut radius: Option<T> = None;
        let mut halves: Option<Vec<T>> = None;
        let mut verts: Option<Vec<P2<T>>> = None;
        for w in words {
            let (key, val) = w
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got `{w}`")))?;
            match (kind, key) {
                ("ball" | "box", "d") => {
                    dim = Some(val.parse().map_err(|_| {
                        Error::invalid(format!("`d`: `{val}` is not a positive integer"))
                    })?)
                }
                ("ball", "r") => radius = Some(parse_float("r", val)?),
                ("box", "h") => {
                    halves = Some(val.split(',').map(|x| parse_float("h", x)).collect::<Result<_>>()?)
                }
                ("poly2", "v") => {
                    verts = Some(
                        val.split(';')
                            .map(|pair| {
                                let (x, y) = pair.split_once(',').ok_or_else(|| {
                                    Error::invalid(format!("`v`: vertex `{pair}` is not `x,y`"))
                                })?;
                                Ok([parse_float("v", x)?, parse_float("v", y)?])
                            })
                            .collect::<Result<_>>()?,
                    )
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "unknown key `{key}` for solid `{kind}` (accepted: ball: d,r; box: d,h; poly2: v)"
                    )))
                }
            }
        }
        match kind {
            "ball" => {
                let d = dim.ok_or_else(|| Error::invalid("ball: missing `d`"))?;
                let r = radius.ok_or_else(|| Error::invalid("ball: missing `r`"))?;
                ConvexSolid::ball(d, r)
            }
            "box" => {
                let d = dim.ok_or_else(|| Error::invalid("box: missing `d`"))?;
                let mut h = halves.ok_or_else(|| Error::invalid("box: missing `h`"))?;
                if h.len() == 1 {
                    h = vec![h[0]; d];
                }
                if h.len() != d {
                    return Err(Error::invalid(format!(
                        "box: `h` has {} entries but d={d}",
                        h.len()
                    )));
                }
                ConvexSolid::cuboid(h)
            }
            "poly2" => ConvexSolid::polygon(verts.ok_or_else(|| Error::invalid("poly2: missing `v`"))?),
            other => Err(Error::invalid(format!(
                "unknown solid kind `{other}` (accepted: ball, box, poly2)"
            ))),
        }
    }
}

/// `{y : ‖y − center‖ ≤ radius}` in the gauge norm of a solid.
#[derive(Clone, Debug)]
pub struct GaugeBall<'a, T> {
    pub center: Vec<T>,
    pub radius: T,
    pub solid: &'a ConvexSolid<T>,
}

impl<'a, T: Scalar> GaugeBall<'a, T> {
    pub fn new(center: Vec<T>, radius: T, solid: &'a ConvexSolid<T>) -> Result<Self> {
        if center.len() != solid.dim() {
            return Err(Error::contract("gauge ball center has the wrong dimension"));
        }
        if radius < T::zero() {
            return Err(Error::contract("gauge ball radius must be nonnegative"));
        }
        Ok(Self { center, radius, solid })
    }

    pub fn contains(&self, y: &[T]) -> bool {
        self.solid.gauge_between(y, &self.center) <= self.radius
    }

    /// `radius^d · |D|`.
    pub fn volume(&self) -> T {
        self.radius.powi(self.solid.dim() as i32) * self.solid.difference_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_examples() {
        let unit = ConvexSolid::<f64>::cuboid(vec![0.5]).unwrap();
        assert!(unit.overlaps(&[0.0], &[0.6]).unwrap());
        let disk = ConvexSolid::<f64>::ball(2, 0.2).unwrap();
        assert!(!disk.overlaps(&[0.0, 0.0], &[0.5, 0.0]).unwrap());
        let sq = ConvexSolid::<f64>::cuboid(vec![0.2, 0.2]).unwrap();
        assert!(sq.overlaps(&[0.0, 0.0], &[0.4, 0.4]).unwrap());
        assert!(disk.overlaps(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn gauge_examples() {
        let disk = ConvexSolid::<f64>::ball(2, 0.2).unwrap();
        assert!((disk.gauge_norm(&[0.4, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let sq = ConvexSolid::<f64>::cuboid(vec![0.2, 0.2]).unwrap();
        assert!((sq.gauge_norm(&[0.2, 0.1]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(disk.gauge_norm(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn diameters() {
        assert_eq!(ConvexSolid::<f64>::ball(3, 0.25).unwrap().diameter(), 0.5);
        let b = ConvexSolid::<f64>::cuboid(vec![0.3, 0.4]).unwrap();
        assert!((b.diameter() - 1.0).abs() < 1e-15);
        let p = ConvexSolid::<f64>::polygon(vec![[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!((p.diameter() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_recentered_and_difference_symmetric() {
        let p = ConvexSolid::<f64>::polygon(vec![[1.0, 1.0], [2.0, 1.0], [1.0, 2.0]]).unwrap();
        let Shape::Polygon { vertices } = p.shape() else { unreachable!() };
        let c = polygon::area_centroid(vertices);
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        for v in [[0.3, -0.1], [0.05, 0.7], [-1.0, 0.2]] {
            let a = p.gauge_norm(&v).unwrap();
            let b = p.gauge_norm(&[-v[0], -v[1]]).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_round_trip() {
        for s in ["ball d=3 r=0.25", "box d=2 h=0.1,0.3", "poly2 v=-0.5,-0.5;0.5,-0.5;0.5,0.5;-0.5,0.5"] {
            let solid: ConvexSolid<f64> = s.parse().unwrap();
            let again: ConvexSolid<f64> = solid.spec().parse().unwrap();
            assert_eq!(solid, again);
        }
        let b: ConvexSolid<f64> = "box d=3 h=0.5".parse().unwrap();
        assert_eq!(b.half_width(), &[0.5, 0.5, 0.5]);
        assert!("ball d=2".parse::<ConvexSolid<f64>>().is_err());
        assert!("ball d=2 r=0.1 q=3".parse::<ConvexSolid<f64>>().is_err());
        assert!("ball d=2 r=0".parse::<ConvexSolid<f64>>().is_err());
        assert!("cone d=2".parse::<ConvexSolid<f64>>().is_err());
    }

    #[test]
    fn gauge_ball_membership() {
        let disk = ConvexSolid::<f64>::ball(2, 0.25).unwrap();
        let g = GaugeBall::new(vec![1.0, 1.0], 0.5, &disk).unwrap();
        assert!(g.contains(&[1.25, 1.0]));
        assert!(!g.contains(&[1.26, 1.0]));
        assert!((g.volume() - disk.half_gauge_ball_volume()).abs() < 1e-15);
    }
}

//! Rescaled packing measures: atoms at `λ^{-1/d}·x` for each accepted
//! center `x` (point measure), and Lebesgue measure on the union of the
//! rescaled solids with density `λ/|S|` (volume measure). Both have total
//! mass `N`.

use std::fmt;
use std::sync::Arc;

use crate::engine::PackingState;
use crate::error::{Error, Result};
use crate::geometry::{clipped_volume, solid_may_meet_box, Aabb, ConvexSolid};
use crate::scalar::Scalar;

/// A bounded test function with an a.e. continuity guarantee.
#[derive(Clone)]
pub enum TestFunction<T> {
    Constant(T),
    /// Indicator of a half-open box.
    Indicator(Aabb<T>),
    /// `Σ v_k 1_{B_k}` over pairwise disjoint half-open boxes.
    PiecewiseConstant(Vec<(Aabb<T>, T)>),
    /// A user function with a declared sup-norm bound; evaluations above
    /// the bound are contract violations.
    Callback { f: Arc<dyn Fn(&[T]) -> T + Send + Sync>, bound: T },
}

impl<T: Scalar> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Constant(c) => write!(f, "Constant({c})"),
            TestFunction::Indicator(b) => write!(f, "Indicator({:?}, {:?})", b.lo, b.hi),
            TestFunction::PiecewiseConstant(p) => write!(f, "PiecewiseConstant({} pieces)", p.len()),
            TestFunction::Callback { bound, .. } => write!(f, "Callback(bound {bound})"),
        }
    }
}

impl<T: Scalar> TestFunction<T> {
    pub fn indicator(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        Ok(TestFunction::Indicator(Aabb::new(lo, hi)?))
    }

    pub fn piecewise(pieces: Vec<(Aabb<T>, T)>) -> Result<Self> {
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if pieces[i].0.intersection(&pieces[j].0).is_some() {
                    return Err(Error::invalid(format!("pieces {i} and {j} overlap")));
                }
            }
        }
        Ok(TestFunction::PiecewiseConstant(pieces))
    }

    /// Piecewise constant on the regular grid of `domain` with `shape[a]`
    /// cells along axis `a`; `values` in row-major order.
    pub fn grid(domain: &Aabb<T>, shape: &[usize], values: &[T]) -> Result<Self> {
        let d = domain.dim();
        if shape.len() != d || values.len() != shape.iter().product::<usize>() {
            return Err(Error::invalid("grid shape and values disagree"));
        }
        let mut pieces = Vec::with_capacity(values.len());
        for (k, v) in values.iter().enumerate() {
            let mut rem = k;
            let mut lo = vec![T::zero(); d];
            let mut hi = vec![T::zero(); d];
            for a in (0..d).rev() {
                let i = rem % shape[a];
                rem /= shape[a];
                let w = domain.extent(a) / T::from_usize_lossy(shape[a]);
                lo[a] = domain.lo[a] + w * T::from_usize_lossy(i);
                hi[a] = if i + 1 == shape[a] { domain.hi[a] } else { lo[a] + w };
            }
            pieces.push((Aabb::new(lo, hi)?, *v));
        }
        Ok(TestFunction::PiecewiseConstant(pieces))
    }

    pub fn callback(f: impl Fn(&[T]) -> T + Send + Sync + 'static, bound: T) -> Self {
        TestFunction::Callback { f: Arc::new(f), bound }
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        match self {
            TestFunction::Constant(c) => Ok(*c),
            TestFunction::Indicator(b) => Ok(if b.contains(x) { T::one() } else { T::zero() }),
            TestFunction::PiecewiseConstant(p) => {
                Ok(p.iter().find(|(b, _)| b.contains(x)).map_or(T::zero(), |(_, v)| *v))
            }
            TestFunction::Callback { f, bound } => {
                let v = f(x);
                if !(v.abs() <= *bound) {
                    return Err(Error::contract(format!(
                        "test function value {v} exceeds its declared bound {bound}"
                    )));
                }
                Ok(v)
            }
        }
    }
}

/// `ν_λ`: one unit atom per accepted center at `λ^{-1/d}·x`.
#[derive(Clone, Debug)]
pub struct PackingPointMeasure<T> {
    dim: usize,
    atoms: Vec<T>,
    pub lambda: T,
}

impl<T: Scalar> PackingPointMeasure<T> {
    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.atoms.chunks_exact(self.dim)
    }

    pub fn total_mass(&self) -> T {
        T::from_usize_lossy(self.len())
    }
}

/// `ν′_λ`: Lebesgue measure on `⋃ λ^{-1/d}(x_i + S)` with density `λ/|S|`.
#[derive(Clone, Debug)]
pub struct PackingVolumeMeasure<T> {
    solid: ConvexSolid<T>,
    /// Unscaled accepted centers.
    centers: Vec<T>,
    /// `λ^{1/d}`
    inv_scale: T,
    pub lambda: T,
}

impl<T: Scalar> PackingVolumeMeasure<T> {
    pub fn len(&self) -> usize {
        self.centers.len() / self.solid.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Bounding box of the support, in rescaled coordinates.
    pub fn support_bounds(&self) -> Option<Aabb<T>> {
        let d = self.solid.dim();
        let mut it = self.centers.chunks_exact(d);
        let first = self.solid.solid_bounds(it.next()?);
        let (mut lo, mut hi) = (first.lo, first.hi);
        for c in it {
            let b = self.solid.solid_bounds(c);
            for a in 0..d {
                lo[a] = lo[a].min(b.lo[a]);
                hi[a] = hi[a].max(b.hi[a]);
            }
        }
        Some(Aabb { lo, hi }.scaled(T::one() / self.inv_scale))
    }
}

fn scaling<T: Scalar>(lambda: T, dim: usize) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::contract("lambda must be positive"));
    }
    Ok(lambda.powf(T::one() / T::from_usize_lossy(dim)))
}

pub fn point_measure<T: Scalar>(state: &PackingState<T>, lambda: T) -> Result<PackingPointMeasure<T>> {
    let s = scaling(lambda, state.dim())?;
    let atoms = state.accepted_positions().flat_map(|p| p.iter().map(move |x| *x / s)).collect();
    Ok(PackingPointMeasure { dim: state.dim(), atoms, lambda })
}

pub fn volume_measure<T: Scalar>(
    state: &PackingState<T>,
    lambda: T,
) -> Result<PackingVolumeMeasure<T>> {
    let s = scaling(lambda, state.dim())?;
    Ok(PackingVolumeMeasure {
        solid: state.solid().clone(),
        centers: state.accepted_positions().flat_map(|p| p.iter().copied()).collect(),
        inv_scale: s,
        lambda,
    })
}

/// `⟨f, ν_λ⟩ = Σ f(atom)`.
pub fn integrate_point<T: Scalar>(f: &TestFunction<T>, m: &PackingPointMeasure<T>) -> Result<T> {
    if let TestFunction::Constant(c) = f {
        return Ok(*c * m.total_mass());
    }
    let mut total = T::zero();
    for a in m.atoms() {
        total += f.eval(a)?;
    }
    Ok(total)
}

/// `⟨f, ν′_λ⟩`, each solid's integral to relative accuracy `tol`.
pub fn integrate_volume<T: Scalar>(
    f: &TestFunction<T>,
    m: &PackingVolumeMeasure<T>,
    tol: T,
) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::contract("integrate_volume: tolerance must be positive"));
    }
    let d = m.solid.dim();
    let vol = m.solid.volume();
    // In unscaled coordinates the density λ/|S| times the Jacobian λ^{-1}
    // leaves 1/|S|.
    let box_mass = |b: &Aabb<T>| -> Result<T> {
        let big = b.scaled(m.inv_scale);
        let mut s = T::zero();
        for c in m.centers.chunks_exact(d) {
            s += clipped_volume(&m.solid, c, &big, tol)?;
        }
        Ok(s / vol)
    };
    match f {
        TestFunction::Constant(c) => Ok(*c * T::from_usize_lossy(m.len())),
        TestFunction::Indicator(b) => box_mass(b),
        TestFunction::PiecewiseConstant(p) => {
            let mut s = T::zero();
            for (b, v) in p {
                s += *v * box_mass(b)?;
            }
            Ok(s)
        }
        TestFunction::Callback { .. } => {
            let mut s = T::zero();
            for c in m.centers.chunks_exact(d) {
                s += solid_integral(f, &m.solid, c, m.inv_scale, tol)?;
            }
            Ok(s / vol)
        }
    }
}

/// `∫_{c+S} f(y / scale) dy` by adaptive cell quadrature. A cell inside
/// the solid on which `f` agrees at the corners and the midpoint uses the
/// midpoint rule; other cells are split until their total volume is below
/// `tol·|S|`. Leftover cells count `f(mid)` times their volume, halved
/// where they straddle the solid's boundary.
fn solid_integral<T: Scalar>(
    f: &TestFunction<T>,
    solid: &ConvexSolid<T>,
    c: &[T],
    scale: T,
    tol: T,
) -> Result<T> {
    let d = solid.dim();
    let target = tol * solid.volume();
    let mut total = T::zero();
    let mut open = vec![solid.solid_bounds(c)];
    let mut corner = vec![T::zero(); d];
    let mut scaled = vec![T::zero(); d];
    let half = T::lit(0.5);
    let mut eval_at = |p: &[T]| -> Result<T> {
        for a in 0..d {
            scaled[a] = p[a] / scale;
        }
        f.eval(&scaled)
    };
    loop {
        let mut next: Vec<(Aabb<T>, bool)> = Vec::new();
        let mut open_mass = T::zero();
        for cell in &open {
            let mid = cell.center();
            let fm = eval_at(&mid)?;
            let mut inside = 0;
            let mut flat = true;
            for mask in 0..1usize << d {
                cell.corner_into(mask, &mut corner);
                if solid.solid_contains(c, &corner) {
                    inside += 1;
                }
                if eval_at(&corner)? != fm {
                    flat = false;
                }
            }
            let all_in = inside == 1 << d;
            if all_in && flat {
                total += fm * cell.volume();
            } else if all_in || inside > 0 || solid_may_meet_box(solid, c, cell) {
                open_mass += cell.volume();
                next.push((cell.clone(), all_in));
            }
        }
        if open_mass < target || next.len() << d > 1 << 20 {
            for (cell, all_in) in &next {
                let w = if *all_in { T::one() } else { half };
                total += w * eval_at(&cell.center())? * cell.volume();
            }
            return Ok(total);
        }
        open = next.iter().flat_map(|(c, _)| c.split()).collect();
    }
}

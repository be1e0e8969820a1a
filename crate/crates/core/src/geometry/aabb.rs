use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Corner coordinates, stored inline up to four axes.
pub type Coords<T> = SmallVec<[T; 4]>;

/// Axis-aligned box `[lo, hi)` in `d` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub lo: Coords<T>,
    pub hi: Coords<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::contract(format!(
                "box corners have dimensions {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::contract("box is degenerate or not finite"));
        }
        Ok(Self { lo: lo.into(), hi: hi.into() })
    }

    /// The cube `[lo, hi)^d`.
    pub fn cube(dim: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// `Q_λ = [0, λ^{1/d})^d`.
    pub fn rsa_cube(dim: usize, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::contract("lambda must be positive"));
        }
        let side = lambda.powf(T::one() / T::from_usize_lossy(dim));
        Self::cube(dim, T::zero(), side)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> T {
        (0..self.dim()).map(|a| self.extent(a)).fold(T::one(), |acc, e| acc * e)
    }

    /// Half-open membership.
    #[inline]
    pub fn contains(&self, p: &[T]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *x >= *l && *x < *h)
    }

    #[inline]
    pub fn contains_closed(&self, p: &[T]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    pub fn contains_box(&self, other: &Aabb<T>) -> bool {
        (0..self.dim()).all(|a| other.lo[a] >= self.lo[a] && other.hi[a] <= self.hi[a])
    }

    pub fn intersection(&self, other: &Aabb<T>) -> Option<Aabb<T>> {
        let lo: Coords<T> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Coords<T> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(a, b)| a < b) {
            Some(Aabb { lo, hi })
        } else {
            None
        }
    }

    /// Euclidean distance from `p` to the closed box.
    pub fn distance_to(&self, p: &[T]) -> T {
        let mut s = T::zero();
        for a in 0..self.dim() {
            let d = if p[a] < self.lo[a] {
                self.lo[a] - p[a]
            } else if p[a] > self.hi[a] {
                p[a] - self.hi[a]
            } else {
                T::zero()
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Box grown by `pad[a]` on both sides of every axis.
    pub fn dilate(&self, pad: &[T]) -> Aabb<T> {
        Aabb {
            lo: self.lo.iter().zip(pad).map(|(l, p)| *l - *p).collect(),
            hi: self.hi.iter().zip(pad).map(|(h, p)| *h + *p).collect(),
        }
    }

    pub fn scaled(&self, factor: T) -> Aabb<T> {
        Aabb {
            lo: self.lo.iter().map(|x| *x * factor).collect(),
            hi: self.hi.iter().map(|x| *x * factor).collect(),
        }
    }

    pub fn center(&self) -> Vec<T> {
        let two = T::lit(2.0);
        self.lo.iter().zip(&self.hi).map(|(l, h)| (*l + *h) / two).collect()
    }

    /// Corner `mask` (bit `a` picks `hi` on axis `a`) written into `out`.
    #[inline]
    pub fn corner_into(&self, mask: usize, out: &mut [T]) {
        for a in 0..self.dim() {
            out[a] = if mask >> a & 1 == 1 { self.hi[a] } else { self.lo[a] };
        }
    }

    /// The `2^d` congruent children.
    pub fn split(&self) -> Vec<Aabb<T>> {
        let d = self.dim();
        let mid = self.center();
        (0..1usize << d)
            .map(|mask| {
                let mut lo = Coords::with_capacity(d);
                let mut hi = Coords::with_capacity(d);
                for a in 0..d {
                    if mask >> a & 1 == 1 {
                        lo.push(mid[a]);
                        hi.push(self.hi[a]);
                    } else {
                        lo.push(self.lo[a]);
                        hi.push(mid[a]);
                    }
                }
                Aabb { lo, hi }
            })
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> Aabb<U> {
        Aabb {
            lo: self.lo.iter().map(|x| U::lit(x.f64())).collect(),
            hi: self.hi.iter().map(|x| U::lit(x.f64())).collect(),
        }
    }
}

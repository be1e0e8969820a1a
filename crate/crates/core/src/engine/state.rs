use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};
use crate::scalar::Scalar;

const FROZEN: u32 = 1 << 31;
const MAX_CELLS: usize = 1 << 24;

/// Accepted centers over a region, plus frozen blockers, behind a uniform
/// hash grid whose cells are at least as wide as `D` reaches on each axis,
/// so every adjacent pair sits in the same or neighbouring cells.
#[derive(Clone, Debug)]
pub struct PackingState<T> {
    solid: ConvexSolid<T>,
    region: Aabb<T>,
    dim: usize,
    acc_pos: Vec<T>,
    acc_time: Vec<T>,
    acc_index: Vec<u64>,
    frozen_pos: Vec<T>,
    /// Frozen centers too far from the grid box to matter there.
    far_frozen: Vec<u32>,
    origin: Vec<T>,
    cell_side: Vec<T>,
    shape: Vec<usize>,
    cells: Vec<SmallVec<[u32; 4]>>,
}

impl<T: Scalar> PackingState<T> {
    pub fn new(solid: ConvexSolid<T>, region: Aabb<T>) -> Result<Self> {
        let dim = solid.dim();
        if region.dim() != dim {
            return Err(Error::contract(format!(
                "region has dimension {} but the solid has dimension {}",
                region.dim(),
                dim
            )));
        }
        let reach = solid.reach().to_vec();
        let grid_box = region.dilate(&reach);
        let mut shape: Vec<usize> = (0..dim)
            .map(|a| ((grid_box.extent(a) / reach[a]).floor().f64() as usize).max(1))
            .collect();
        while shape.iter().product::<usize>() > MAX_CELLS {
            for s in shape.iter_mut() {
                *s = (*s).div_ceil(2);
            }
        }
        let cell_side =
            (0..dim).map(|a| grid_box.extent(a) / T::from_usize_lossy(shape[a])).collect();
        let n = shape.iter().product();
        Ok(PackingState {
            solid,
            region,
            dim,
            acc_pos: Vec::new(),
            acc_time: Vec::new(),
            acc_index: Vec::new(),
            frozen_pos: Vec::new(),
            far_frozen: Vec::new(),
            origin: grid_box.lo.to_vec(),
            cell_side,
            shape,
            cells: vec![SmallVec::new(); n],
        })
    }

    /// A state whose frozen configuration `eta` blocks arrivals without
    /// being counted. Fails if two frozen solids overlap.
    pub fn with_frozen(solid: ConvexSolid<T>, region: Aabb<T>, eta: &[Vec<T>]) -> Result<Self> {
        let mut st = Self::new(solid, region)?;
        st.add_frozen(eta)?;
        Ok(st)
    }

    fn add_frozen(&mut self, eta: &[Vec<T>]) -> Result<()> {
        if eta.len() >= FROZEN as usize {
            return Err(Error::invalid("too many frozen points"));
        }
        for p in eta {
            if p.len() != self.dim {
                return Err(Error::contract("frozen point has the wrong dimension"));
            }
        }
        check_admissible(&self.solid, eta)?;
        for p in eta {
            let id = (self.frozen_pos.len() / self.dim) as u32;
            self.frozen_pos.extend_from_slice(p);
            match self.cell_of(p) {
                Some(c) => self.cells[c].push(id | FROZEN),
                None => self.far_frozen.push(id),
            }
        }
        Ok(())
    }

    pub fn solid(&self) -> &ConvexSolid<T> {
        &self.solid
    }

    pub fn region(&self) -> &Aabb<T> {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of accepted centers.
    pub fn len(&self) -> usize {
        self.acc_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc_time.is_empty()
    }

    pub fn accepted_position(&self, i: usize) -> &[T] {
        &self.acc_pos[i * self.dim..(i + 1) * self.dim]
    }

    pub fn accepted_positions(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.acc_pos.chunks_exact(self.dim)
    }

    pub fn accepted_times(&self) -> &[T] {
        &self.acc_time
    }

    pub fn accepted_indices(&self) -> &[u64] {
        &self.acc_index
    }

    pub fn frozen_len(&self) -> usize {
        self.frozen_pos.len() / self.dim
    }

    pub fn frozen_positions(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.frozen_pos.chunks_exact(self.dim)
    }

    /// Position of a grid entry as produced by [`Self::blockers_near_box`].
    #[inline]
    pub fn entry_position(&self, entry: u32) -> &[T] {
        let i = (entry & !FROZEN) as usize * self.dim;
        if entry & FROZEN != 0 {
            &self.frozen_pos[i..i + self.dim]
        } else {
            &self.acc_pos[i..i + self.dim]
        }
    }

    fn cell_coord(&self, p: &[T], axis: usize) -> Option<usize> {
        let q = ((p[axis] - self.origin[axis]) / self.cell_side[axis]).f64();
        if !(q >= 0.0) {
            return None;
        }
        let q = q as usize;
        if q < self.shape[axis] {
            Some(q)
        } else if q == self.shape[axis] && p[axis] <= self.origin[axis] + self.cell_side[axis] * T::from_usize_lossy(q) {
            Some(q - 1)
        } else {
            None
        }
    }

    fn cell_of(&self, p: &[T]) -> Option<usize> {
        let mut c = 0;
        for a in 0..self.dim {
            c = c * self.shape[a] + self.cell_coord(p, a)?;
        }
        Some(c)
    }

    /// Visits every grid cell whose index range intersects `[lo, hi]` per axis.
    fn visit_cells(&self, lo: &[usize], hi: &[usize], mut f: impl FnMut(usize) -> bool) -> bool {
        let d = self.dim;
        let mut cur: SmallVec<[usize; 4]> = SmallVec::from_slice(lo);
        loop {
            let mut c = 0;
            for a in 0..d {
                c = c * self.shape[a] + cur[a];
            }
            if f(c) {
                return true;
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return false;
                }
                a -= 1;
                if cur[a] < hi[a] {
                    cur[a] += 1;
                    break;
                }
                cur[a] = lo[a];
            }
        }
    }

    fn index_range(&self, lo: &[T], hi: &[T]) -> Option<(SmallVec<[usize; 4]>, SmallVec<[usize; 4]>)> {
        let mut l = SmallVec::new();
        let mut h = SmallVec::new();
        for a in 0..self.dim {
            // Truncation equals floor for the nonnegative values kept.
            let ql = ((lo[a] - self.origin[a]) / self.cell_side[a]).f64();
            let qh = ((hi[a] - self.origin[a]) / self.cell_side[a]).f64();
            let n = self.shape[a] as f64;
            if qh < 0.0 || ql >= n {
                return None;
            }
            l.push(ql.max(0.0) as usize);
            h.push(qh.min(n - 1.0) as usize);
        }
        Some((l, h))
    }

    /// Whether `p` is adjacent to an accepted or frozen center.
    pub fn is_blocked(&self, p: &[T]) -> bool {
        let reach = self.solid.reach();
        let mut lo: SmallVec<[T; 4]> = SmallVec::new();
        let mut hi: SmallVec<[T; 4]> = SmallVec::new();
        for a in 0..self.dim {
            lo.push(p[a] - reach[a]);
            hi.push(p[a] + reach[a]);
        }
        let near = match self.index_range(&lo, &hi) {
            Some((l, h)) => self.visit_cells(&l, &h, |c| {
                self.cells[c]
                    .iter()
                    .any(|&e| self.solid.overlaps_unchecked(self.entry_position(e), p))
            }),
            None => false,
        };
        near || self.far_frozen.iter().any(|&i| {
            self.solid.overlaps_unchecked(self.entry_position(i | FROZEN), p)
        })
    }

    /// Applies the packing rule to one arrival: accepted iff `p` lies in
    /// the region (half-open) and is adjacent to nothing packed so far.
    pub fn try_accept(&mut self, p: &[T], time: T, index: u64) -> bool {
        if p.len() != self.dim || !self.region.contains(p) || self.is_blocked(p) {
            return false;
        }
        self.insert_unchecked(p, time, index);
        true
    }

    pub(crate) fn insert_unchecked(&mut self, p: &[T], time: T, index: u64) {
        let id = self.len() as u32;
        self.acc_pos.extend_from_slice(p);
        self.acc_time.push(time);
        self.acc_index.push(index);
        let c = self.cell_of(p).expect("accepted centers lie in the grid box");
        self.cells[c].push(id);
    }

    /// Grid entries whose translate `x + D` may meet `cell`.
    pub fn blockers_near_box(&self, cell: &Aabb<T>, out: &mut Vec<u32>) {
        out.clear();
        let reach = self.solid.reach();
        let lo: SmallVec<[T; 4]> = (0..self.dim).map(|a| cell.lo[a] - reach[a]).collect();
        let hi: SmallVec<[T; 4]> = (0..self.dim).map(|a| cell.hi[a] + reach[a]).collect();
        if let Some((l, h)) = self.index_range(&lo, &hi) {
            self.visit_cells(&l, &h, |c| {
                for &e in &self.cells[c] {
                    if self.solid.difference_may_meet_box(self.entry_position(e), cell) {
                        out.push(e);
                    }
                }
                false
            });
        }
        for &i in &self.far_frozen {
            if self.solid.difference_may_meet_box(self.entry_position(i | FROZEN), cell) {
                out.push(i | FROZEN);
            }
        }
    }

    /// Accepted centers lying in `window` (half-open).
    pub fn accepted_in(&self, window: &Aabb<T>) -> Vec<Vec<T>> {
        self.accepted_positions()
            .filter(|p| window.contains(p))
            .map(|p| p.to_vec())
            .collect()
    }

    /// Smallest gauge distance between two distinct packed centers
    /// (accepted or frozen), or `+∞` with fewer than two.
    pub fn min_pairwise_gauge(&self) -> T {
        let mut best = T::infinity();
        let reach = self.solid.reach();
        let n_acc = self.len();
        for i in 0..n_acc {
            let p = self.accepted_position(i);
            let lo: Vec<T> = (0..self.dim).map(|a| p[a] - reach[a] - reach[a]).collect();
            let hi: Vec<T> = (0..self.dim).map(|a| p[a] + reach[a] + reach[a]).collect();
            if let Some((l, h)) = self.index_range(&lo, &hi) {
                self.visit_cells(&l, &h, |c| {
                    for &e in &self.cells[c] {
                        if e == i as u32 {
                            continue;
                        }
                        best = best.min(self.solid.gauge_between(self.entry_position(e), p));
                    }
                    false
                });
            }
            for &f in &self.far_frozen {
                best = best.min(self.solid.gauge_between(self.entry_position(f | FROZEN), p));
            }
        }
        let frozen: Vec<Vec<T>> = self.frozen_positions().map(|p| p.to_vec()).collect();
        for i in 0..frozen.len() {
            for j in i + 1..frozen.len() {
                best = best.min(self.solid.gauge_between(&frozen[i], &frozen[j]));
            }
        }
        best
    }

    /// `|region ⊕ B½| / |B½|` with `B½` the gauge ball of radius ½, using
    /// the bounding box of `B½` for the dilation. No packing of the region
    /// can hold more centers.
    pub fn counting_bound(&self) -> T {
        let half: Vec<T> = self.solid.reach().iter().map(|r| *r / T::lit(2.0)).collect();
        self.region.dilate(&half).volume() / self.solid.half_gauge_ball_volume()
    }

    /// Every accepted index is stored in exactly the cell of its position.
    pub fn grid_is_consistent(&self) -> bool {
        let mut seen = vec![0u32; self.len()];
        for (c, entries) in self.cells.iter().enumerate() {
            for &e in entries {
                if e & FROZEN != 0 {
                    continue;
                }
                let i = e as usize;
                if self.cell_of(self.accepted_position(i)) != Some(c) {
                    return false;
                }
                seen[i] += 1;
            }
        }
        seen.iter().all(|&k| k == 1)
    }
}

/// Validates that no two solids centered at `eta` overlap, naming the first
/// offending pair.
pub fn check_admissible<T: Scalar>(solid: &ConvexSolid<T>, eta: &[Vec<T>]) -> Result<()> {
    use std::collections::HashMap;
    let reach = solid.reach();
    let key = |p: &[T]| -> Vec<i64> {
        p.iter().zip(reach).map(|(x, r)| (*x / *r).floor().f64() as i64).collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in eta.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let d = solid.dim();
    for (i, p) in eta.iter().enumerate() {
        let k = key(p);
        let mut off = vec![-1i64; d];
        loop {
            let nk: Vec<i64> = k.iter().zip(&off).map(|(a, b)| a + b).collect();
            if let Some(js) = buckets.get(&nk) {
                for &j in js {
                    if j > i && solid.overlaps_unchecked(p, &eta[j]) {
                        return Err(Error::Inadmissible {
                            first: i,
                            second: j,
                            gauge: solid.gauge_between(p, &eta[j]).f64(),
                        });
                    }
                }
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                if off[a] < 1 {
                    off[a] += 1;
                    break;
                }
                off[a] = -1;
            }
            if off.iter().all(|&o| o == -1) {
                break;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ConvexSolid<f64> {
        ConvexSolid::ball(1, 0.5).unwrap()
    }

    #[test]
    fn blocked_is_closed() {
        let mut st = PackingState::new(unit(), Aabb::cube(1, 0.0, 3.0).unwrap()).unwrap();
        assert!(!st.is_blocked(&[1.0]));
        assert!(st.try_accept(&[1.0], 0.0, 0));
        assert!(st.is_blocked(&[1.99]));
        assert!(st.is_blocked(&[2.0]));
        assert!(!st.is_blocked(&[2.01]));
        assert!(!st.try_accept(&[3.0], 1.0, 1));
        assert!(st.grid_is_consistent());
    }

    #[test]
    fn frozen_blocks_and_validates() {
        let region = Aabb::cube(1, 0.0, 3.0).unwrap();
        let st = PackingState::with_frozen(unit(), region.clone(), &[vec![-0.6], vec![100.0]]).unwrap();
        assert!(st.is_blocked(&[0.3]));
        assert!(!st.is_blocked(&[0.5]));
        assert!(st.is_blocked(&[99.5]));
        match PackingState::with_frozen(unit(), region, &[vec![-0.6], vec![-1.2]]) {
            Err(Error::Inadmissible { first: 0, second: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn counting_bound_holds_for_line() {
        let st = PackingState::new(unit(), Aabb::cube(1, 0.0, 10.0).unwrap()).unwrap();
        assert!((st.counting_bound() - 11.0).abs() < 1e-12);
    }
}

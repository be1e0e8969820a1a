use rand::Rng;
use rand_distr::Exp1;
use smallvec::SmallVec;

use super::cover::{union_covers, union_supported, UNION_MAX};
use crate::engine::points::uniform_coord;
use crate::engine::PackingState;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Coords};
use crate::scalar::Scalar;

/// Largest dimension the tree handles.
pub const MAX_TREE_DIM: usize = 4;

/// Consecutive blocked probes before the non-termination guard fires.
pub const GUARD_PROBES: u64 = 1_000_000;

/// Deepest split level for shapes with an exact union-coverage test.
const DEEP_LEVEL: u8 = 30;

/// How leaves are refined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Refinement {
    /// Leaves are reclassified only when a probe inside them is blocked.
    Lazy,
    /// Every acceptance also reclassifies all leaves meeting `x + D`,
    /// splitting mixed ones down to `min_cell`.
    Eager,
}

#[derive(Clone, Copy, Debug)]
struct Leaf {
    base: u32,
    level: u8,
    pool_pos: u32,
    base_pos: u32,
    coords: [u32; MAX_TREE_DIM],
}

/// Dyadic refinement of the region into leaves that may still contain
/// vacant points. Leaves of equal level have equal measure and live in one
/// pool per level, so proportional sampling picks a level, then a leaf.
///
/// Every leaf that is dropped is certified covered, either by one translate
/// `x + D` (corner test) or by the union of the few translates near it.
#[derive(Clone, Debug)]
pub struct VacancyTree<T> {
    region: Aabb<T>,
    dim: usize,
    base_shape: Vec<usize>,
    base_side: Vec<T>,
    base_lo: Vec<[T; MAX_TREE_DIM]>,
    base_edge: Vec<u8>,
    level_side: Vec<[T; MAX_TREE_DIM]>,
    level_measure: Vec<f64>,
    slab: Vec<Leaf>,
    free_slots: Vec<u32>,
    pools: Vec<Vec<u32>>,
    base_leaves: Vec<SmallVec<[u32; 1]>>,
    min_cell: Vec<T>,
    floor_level: u8,
    split_cap: u8,
    union: bool,
    refinement: Refinement,
    consecutive_blocked: u64,
    guard_limit: u64,
    guard_trips: u32,
    guard_saturated: bool,
    probes: u64,
    scratch: Vec<u32>,
}

impl<T: Scalar> VacancyTree<T> {
    /// A tree whose leaves start as the base grid of `state`'s region.
    /// `epsilon` sets `min_cell = side · ε^{1/d} / 2` per axis.
    pub fn new(state: &PackingState<T>, epsilon: T, refinement: Refinement) -> Result<Self> {
        let dim = state.dim();
        if dim > MAX_TREE_DIM {
            return Err(Error::Unsupported(format!(
                "vacancy tree supports d ≤ {MAX_TREE_DIM}, got {dim}"
            )));
        }
        if !(epsilon > T::zero()) {
            return Err(Error::Unsupported(
                "epsilon must be positive when the vacant set is tracked by the tree".into(),
            ));
        }
        let region = state.region().clone();
        let reach = state.solid().reach();
        let mut base_shape: Vec<usize> = (0..dim)
            .map(|a| ((region.extent(a) / reach[a]).ceil().f64() as usize).max(1))
            .collect();
        while base_shape.iter().product::<usize>() > (1 << 22) {
            for s in base_shape.iter_mut() {
                *s = (*s).div_ceil(2);
            }
        }
        let base_side: Vec<T> =
            (0..dim).map(|a| region.extent(a) / T::from_usize_lossy(base_shape[a])).collect();
        let root = epsilon.powf(T::one() / T::from_usize_lossy(dim)) / T::lit(2.0);
        let min_cell: Vec<T> = (0..dim).map(|a| region.extent(a) * root).collect();
        let mut floor_level = 0u8;
        while floor_level < DEEP_LEVEL
            && (0..dim).any(|a| {
                base_side[a] / T::lit(2f64.powi(floor_level as i32)) > min_cell[a]
            })
        {
            floor_level += 1;
        }
        let union = union_supported(state.solid());
        let split_cap = if union { DEEP_LEVEL.max(floor_level) } else { floor_level };
        let base_volume: f64 = base_side.iter().map(|s| s.f64()).product();
        let level_measure: Vec<f64> = (0..=split_cap as i32 + 2)
            .map(|l| base_volume / 2f64.powi(l * dim as i32))
            .collect();
        let n_base: usize = base_shape.iter().product();
        let mut base_lo = Vec::with_capacity(n_base);
        let mut base_edge = Vec::with_capacity(n_base);
        for b in 0..n_base {
            let mut rem = b;
            let mut lo = [T::zero(); MAX_TREE_DIM];
            let mut edge = 0u8;
            for a in (0..dim).rev() {
                let m = rem % base_shape[a];
                rem /= base_shape[a];
                lo[a] = region.lo[a] + base_side[a] * T::from_usize_lossy(m);
                if m + 1 == base_shape[a] {
                    edge |= 1 << a;
                }
            }
            base_lo.push(lo);
            base_edge.push(edge);
        }
        let level_side: Vec<[T; MAX_TREE_DIM]> = (0..level_measure.len())
            .map(|l| {
                let mut s = [T::zero(); MAX_TREE_DIM];
                for a in 0..dim {
                    s[a] = base_side[a] / T::lit(2f64.powi(l as i32));
                }
                s
            })
            .collect();
        let mut tree = VacancyTree {
            region,
            dim,
            base_shape,
            base_side,
            base_lo,
            base_edge,
            level_side,
            level_measure,
            slab: Vec::with_capacity(n_base),
            free_slots: Vec::new(),
            pools: vec![Vec::new(); split_cap as usize + 3],
            base_leaves: vec![SmallVec::new(); n_base],
            min_cell,
            floor_level,
            split_cap,
            union,
            refinement,
            consecutive_blocked: 0,
            guard_limit: GUARD_PROBES,
            guard_trips: 0,
            guard_saturated: false,
            probes: 0,
            scratch: Vec::new(),
        };
        for b in 0..n_base {
            tree.insert(b as u32, 0, [0; MAX_TREE_DIM]);
        }
        Ok(tree)
    }

    /// Overrides the guard threshold (tests use small values).
    pub fn with_guard_limit(mut self, limit: u64) -> Self {
        self.guard_limit = limit;
        self
    }

    pub fn min_cell(&self) -> &[T] {
        &self.min_cell
    }

    pub fn leaf_count(&self) -> usize {
        self.pools.iter().map(|p| p.len()).sum()
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    /// Whether the run ended because the non-termination guard fired twice.
    pub fn guard_saturated(&self) -> bool {
        self.guard_saturated
    }

    pub fn guard_trips(&self) -> u32 {
        self.guard_trips
    }

    /// Total measure of the remaining leaves; an upper bound on the vacant
    /// measure.
    pub fn frontier_measure(&self) -> T {
        T::lit(self.frontier())
    }

    fn frontier(&self) -> f64 {
        self.pools.iter().zip(&self.level_measure).map(|(p, m)| p.len() as f64 * m).sum()
    }

    /// Measure of leaves that no translate can meet: a lower bound on the
    /// vacant measure.
    pub fn free_measure(&mut self, state: &PackingState<T>) -> T {
        let mut total = 0.0;
        let mut scratch = std::mem::take(&mut self.scratch);
        for pool in &self.pools {
            for &id in pool {
                let bx = self.leaf_box(id);
                state.blockers_near_box(&bx, &mut scratch);
                if scratch.is_empty() {
                    total += self.level_measure[self.slab[id as usize].level as usize];
                }
            }
        }
        self.scratch = scratch;
        T::lit(total)
    }

    /// Boxes of all current leaves.
    pub fn leaf_boxes(&self) -> Vec<Aabb<T>> {
        self.pools.iter().flatten().map(|&id| self.leaf_box(id)).collect()
    }

    fn box_of(&self, base: u32, level: u8, coords: &[u32; MAX_TREE_DIM]) -> Aabb<T> {
        let b = base as usize;
        let side = &self.level_side[level as usize];
        let last = (1u64 << level) - 1;
        let mut lo = Coords::with_capacity(self.dim);
        let mut hi = Coords::with_capacity(self.dim);
        for a in 0..self.dim {
            let l = self.base_lo[b][a] + side[a] * T::lit(coords[a] as f64);
            lo.push(l);
            if coords[a] as u64 == last && self.base_edge[b] >> a & 1 == 1 {
                hi.push(self.region.hi[a]);
            } else {
                hi.push(l + side[a]);
            }
        }
        Aabb { lo, hi }
    }

    fn leaf_box(&self, id: u32) -> Aabb<T> {
        let leaf = &self.slab[id as usize];
        self.box_of(leaf.base, leaf.level, &leaf.coords)
    }

    fn insert(&mut self, base: u32, level: u8, coords: [u32; MAX_TREE_DIM]) {
        let pool = &mut self.pools[level as usize];
        let leaf = Leaf {
            base,
            level,
            pool_pos: pool.len() as u32,
            base_pos: self.base_leaves[base as usize].len() as u32,
            coords,
        };
        let id = match self.free_slots.pop() {
            Some(id) => {
                self.slab[id as usize] = leaf;
                id
            }
            None => {
                self.slab.push(leaf);
                (self.slab.len() - 1) as u32
            }
        };
        pool.push(id);
        self.base_leaves[base as usize].push(id);
    }

    fn remove(&mut self, id: u32) {
        let leaf = self.slab[id as usize];
        let pool = &mut self.pools[leaf.level as usize];
        let last = *pool.last().unwrap();
        pool.swap_remove(leaf.pool_pos as usize);
        if last != id {
            self.slab[last as usize].pool_pos = leaf.pool_pos;
        }
        let bl = &mut self.base_leaves[leaf.base as usize];
        let last = *bl.last().unwrap();
        bl.swap_remove(leaf.base_pos as usize);
        if last != id {
            self.slab[last as usize].base_pos = leaf.base_pos;
        }
        self.free_slots.push(id);
    }

    fn children(&self, leaf: &Leaf) -> impl Iterator<Item = [u32; MAX_TREE_DIM]> + '_ {
        let parent = leaf.coords;
        (0..1usize << self.dim).map(move |mask| {
            let mut c = [0u32; MAX_TREE_DIM];
            for a in 0..self.dim {
                c[a] = parent[a] * 2 + ((mask >> a) & 1) as u32;
            }
            c
        })
    }

    /// Reclassifies a leaf after a blocked probe: drops it when certified
    /// covered, otherwise splits it while above `cap`.
    fn refine(&mut self, id: u32, state: &PackingState<T>, cap: u8) {
        let leaf = self.slab[id as usize];
        let bx = self.leaf_box(id);
        let mut scratch = std::mem::take(&mut self.scratch);
        state.blockers_near_box(&bx, &mut scratch);
        let solid = state.solid();
        let single = scratch.iter().any(|&e| solid.difference_contains_box(state.entry_position(e), &bx));
        let covered = single
            || (self.union && scratch.len() <= UNION_MAX && {
                let refs: SmallVec<[&[T]; UNION_MAX]> =
                    scratch.iter().map(|&e| state.entry_position(e)).collect();
                union_covers(solid, &bx, &refs) == Some(true)
            });
        if covered {
            self.remove(id);
        } else if leaf.level < cap {
            self.remove(id);
            let kids: SmallVec<[[u32; MAX_TREE_DIM]; 16]> = self.children(&leaf).collect();
            let mut near: SmallVec<[&[T]; 16]> = SmallVec::new();
            for c in kids {
                let cb = self.box_of(leaf.base, leaf.level + 1, &c);
                near.clear();
                let mut single = false;
                for &e in &scratch {
                    let x = state.entry_position(e);
                    if solid.difference_may_meet_box(x, &cb) {
                        if solid.difference_contains_box(x, &cb) {
                            single = true;
                            break;
                        }
                        near.push(x);
                    }
                }
                let covered = single
                    || (self.union
                        && !near.is_empty()
                        && near.len() <= UNION_MAX
                        && union_covers(solid, &cb, &near) == Some(true));
                if !covered {
                    self.insert(leaf.base, leaf.level + 1, c);
                }
            }
        }
        self.scratch = scratch;
    }

    /// Advances `clock` by the waiting time of the next Poisson arrival in
    /// the frontier and returns the first such arrival that is vacant, or
    /// `None` once the frontier measure drops below `threshold` (or the
    /// guard gives up).
    pub fn next_arrival<R: Rng + ?Sized>(
        &mut self,
        state: &PackingState<T>,
        rng: &mut R,
        clock: &mut T,
        threshold: T,
    ) -> Option<Vec<T>> {
        let threshold = threshold.f64();
        loop {
            let f = self.frontier();
            if f <= 0.0 || f < threshold || self.guard_saturated {
                return None;
            }
            if self.consecutive_blocked >= self.guard_limit {
                self.consecutive_blocked = 0;
                if self.guard_trips >= 1 {
                    self.guard_trips += 1;
                    self.guard_saturated = true;
                    return None;
                }
                self.guard_trips += 1;
                let ids: Vec<u32> = self.pools.iter().flatten().copied().collect();
                let cap = self.split_cap + 1;
                for id in ids {
                    self.refine(id, state, cap);
                }
                continue;
            }
            let e: f64 = rng.sample(Exp1);
            *clock += T::lit(e / f);
            let mut u = rng.random::<f64>() * f;
            let mut level = self.pools.len() - 1;
            for (l, (p, m)) in self.pools.iter().zip(&self.level_measure).enumerate() {
                let w = p.len() as f64 * m;
                if u < w {
                    level = l;
                    break;
                }
                u -= w;
            }
            while self.pools[level].is_empty() {
                level -= 1;
            }
            let id = self.pools[level][rng.random_range(0..self.pools[level].len())];
            let bx = self.leaf_box(id);
            let p: Coords<T> = (0..self.dim).map(|a| uniform_coord(bx.lo[a], bx.hi[a], rng)).collect();
            self.probes += 1;
            if !self.region.contains(&p) {
                continue;
            }
            if !state.is_blocked(&p) {
                self.consecutive_blocked = 0;
                return Some(p.to_vec());
            }
            self.consecutive_blocked += 1;
            let cap = self.split_cap;
            self.refine(id, state, cap);
        }
    }

    /// A uniform vacant point with no clock, or `None` when saturated.
    pub fn sample_vacant<R: Rng + ?Sized>(
        &mut self,
        state: &PackingState<T>,
        rng: &mut R,
        threshold: T,
    ) -> Option<Vec<T>> {
        let mut clock = T::zero();
        self.next_arrival(state, rng, &mut clock, threshold)
    }

    /// Hook called after `x` is accepted. Lazy trees do nothing; eager
    /// trees reclassify every leaf meeting `x + D`.
    pub fn on_accept(&mut self, x: &[T], state: &PackingState<T>) {
        if self.refinement == Refinement::Eager {
            self.update_on_accept(x, state);
        }
    }

    /// Reclassifies every leaf meeting `x + D`: covered leaves are dropped,
    /// mixed leaves are split down to `min_cell`, and at that size a leaf is
    /// dropped if the translates near it jointly cover it.
    pub fn update_on_accept(&mut self, x: &[T], state: &PackingState<T>) {
        let solid = state.solid();
        let reach = solid.reach();
        let mut lo = SmallVec::<[usize; MAX_TREE_DIM]>::new();
        let mut hi = SmallVec::<[usize; MAX_TREE_DIM]>::new();
        for a in 0..self.dim {
            let to_idx = |v: T| -> f64 { ((v - self.region.lo[a]) / self.base_side[a]).floor().f64() };
            let l = to_idx(x[a] - reach[a]).max(0.0);
            let h = to_idx(x[a] + reach[a]).min(self.base_shape[a] as f64 - 1.0);
            if h < l {
                return;
            }
            lo.push(l as usize);
            hi.push(h as usize);
        }
        let mut cur = lo.clone();
        loop {
            let mut b = 0usize;
            for a in 0..self.dim {
                b = b * self.base_shape[a] + cur[a];
            }
            let ids: SmallVec<[u32; 8]> = self.base_leaves[b].iter().copied().collect();
            for id in ids {
                let bx = self.leaf_box(id);
                if solid.difference_may_meet_box(x, &bx) {
                    let leaf = self.slab[id as usize];
                    self.remove(id);
                    self.eager_place(x, state, leaf.base, leaf.level, leaf.coords);
                }
            }
            let mut a = self.dim;
            loop {
                if a == 0 {
                    return;
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

    fn eager_place(
        &mut self,
        x: &[T],
        state: &PackingState<T>,
        base: u32,
        level: u8,
        coords: [u32; MAX_TREE_DIM],
    ) {
        let solid = state.solid();
        let mut stack = vec![(level, coords)];
        while let Some((level, coords)) = stack.pop() {
            let bx = self.box_of(base, level, &coords);
            if !solid.difference_may_meet_box(x, &bx) {
                self.insert(base, level, coords);
                continue;
            }
            if solid.difference_contains_box(x, &bx) {
                continue;
            }
            if level < self.floor_level {
                let leaf = Leaf { base, level, pool_pos: 0, base_pos: 0, coords };
                let kids: SmallVec<[[u32; MAX_TREE_DIM]; 16]> = self.children(&leaf).collect();
                for c in kids {
                    stack.push((level + 1, c));
                }
                continue;
            }
            if self.union {
                let mut scratch = std::mem::take(&mut self.scratch);
                state.blockers_near_box(&bx, &mut scratch);
                let covered = scratch.len() <= UNION_MAX && {
                    let refs: SmallVec<[&[T]; UNION_MAX]> =
                        scratch.iter().map(|&e| state.entry_position(e)).collect();
                    union_covers(solid, &bx, &refs) == Some(true)
                };
                self.scratch = scratch;
                if covered {
                    continue;
                }
            }
            self.insert(base, level, coords);
        }
    }

    /// Deepest level a leaf may be split to without the guard.
    pub fn split_cap(&self) -> u8 {
        self.split_cap
    }
}

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Exp1;

use crate::engine::points::uniform_coord;
use crate::engine::PackingState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact vacant set of a one-dimensional region: a union of disjoint
/// half-open gaps, sampled through a Fenwick tree over gap lengths.
#[derive(Clone, Debug)]
pub struct IntervalVacancy<T> {
    lo: T,
    hi: T,
    reach: T,
    /// gap slot -> (start, end); empty slots have start == end
    gaps: Vec<(T, T)>,
    free: Vec<usize>,
    by_start: BTreeMap<i64, usize>,
    fenwick: Vec<f64>,
    live: usize,
}

fn key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    b ^ (((b >> 63) as u64) >> 1) as i64
}

impl<T: Scalar> IntervalVacancy<T> {
    /// The complement in the region of `⋃ (x + D)` over all accepted and
    /// frozen centers of `state`.
    pub fn from_state(state: &PackingState<T>) -> Result<Self> {
        if state.dim() != 1 {
            return Err(Error::contract("interval vacancy needs dimension 1"));
        }
        let reach = state.solid().reach()[0];
        let mut centers: Vec<T> = state
            .accepted_positions()
            .chain(state.frozen_positions())
            .map(|p| p[0])
            .collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (lo, hi) = (state.region().lo[0], state.region().hi[0]);
        let mut v = IntervalVacancy {
            lo,
            hi,
            reach,
            gaps: Vec::new(),
            free: Vec::new(),
            by_start: BTreeMap::new(),
            fenwick: vec![0.0; 16],
            live: 0,
        };
        let mut cursor = lo;
        for c in centers {
            let a = c - reach;
            if a > cursor {
                v.insert_gap(cursor, a.min(hi));
            }
            cursor = cursor.max(c + reach);
            if cursor >= hi {
                break;
            }
        }
        if cursor < hi {
            v.insert_gap(cursor, hi);
        }
        Ok(v)
    }

    fn fen_add(&mut self, slot: usize, delta: f64) {
        let mut i = slot + 1;
        while i <= self.fenwick.len() {
            self.fenwick[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn grow(&mut self) {
        let n = self.fenwick.len() * 2;
        self.fenwick = vec![0.0; n];
        for s in 0..self.gaps.len() {
            let (a, b) = self.gaps[s];
            if b > a {
                self.fen_add(s, (b - a).f64());
            }
        }
    }

    fn insert_gap(&mut self, a: T, b: T) {
        if !(b > a) {
            return;
        }
        let slot = match self.free.pop() {
            Some(s) => {
                self.gaps[s] = (a, b);
                s
            }
            None => {
                self.gaps.push((a, b));
                if self.gaps.len() > self.fenwick.len() {
                    self.grow();
                    self.by_start.insert(key(a.f64()), self.gaps.len() - 1);
                    self.live += 1;
                    return;
                }
                self.gaps.len() - 1
            }
        };
        self.fen_add(slot, (b - a).f64());
        self.by_start.insert(key(a.f64()), slot);
        self.live += 1;
    }

    fn remove_gap(&mut self, slot: usize) {
        let (a, b) = self.gaps[slot];
        self.fen_add(slot, -(b - a).f64());
        self.by_start.remove(&key(a.f64()));
        self.gaps[slot] = (a, a);
        self.free.push(slot);
        self.live -= 1;
    }

    /// Number of gaps.
    pub fn gap_count(&self) -> usize {
        self.live
    }

    /// The gaps in increasing order.
    pub fn gaps(&self) -> Vec<(T, T)> {
        self.by_start.values().map(|&s| self.gaps[s]).collect()
    }

    /// Exact vacant measure, summed gap by gap.
    pub fn measure(&self) -> T {
        self.by_start.values().map(|&s| self.gaps[s].1 - self.gaps[s].0).sum()
    }

    fn total(&self) -> f64 {
        if self.live == 0 {
            return 0.0;
        }
        let mut i = self.fenwick.len();
        let mut s = 0.0;
        while i > 0 {
            s += self.fenwick[i - 1];
            i -= i & i.wrapping_neg();
        }
        s.max(0.0)
    }

    fn find(&self, mut target: f64) -> usize {
        let mut pos = 0;
        let mut step = self.fenwick.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.fenwick.len() && self.fenwick[next - 1] <= target {
                target -= self.fenwick[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(self.gaps.len().saturating_sub(1))
    }

    /// Removes `x + D` from the vacant set.
    pub fn update_on_accept(&mut self, x: T) {
        let (a, b) = (x - self.reach, x + self.reach);
        let hits: Vec<usize> = self
            .by_start
            .range(..=key(b.f64()))
            .rev()
            .map(|(_, &s)| s)
            .take_while(|&s| self.gaps[s].1 > a)
            .collect();
        for s in hits {
            let (g0, g1) = self.gaps[s];
            if g0 > b || g1 <= a {
                continue;
            }
            self.remove_gap(s);
            if g0 < a {
                self.insert_gap(g0, a);
            }
            if b < g1 {
                // `(b, g1)` is open at `b`; the endpoint has measure zero.
                self.insert_gap(b, g1);
            }
        }
    }

    /// Advances `clock` by the waiting time of the next Poisson arrival in
    /// the vacant set and returns that arrival, or `None` once the vacant
    /// measure is at most `threshold`.
    pub fn next_arrival<R: Rng + ?Sized>(
        &mut self,
        state: &PackingState<T>,
        rng: &mut R,
        clock: &mut T,
        threshold: T,
    ) -> Option<T> {
        loop {
            let total = self.total();
            if self.live == 0 || T::lit(total) <= threshold {
                return None;
            }
            let e: f64 = rng.sample(Exp1);
            *clock += T::lit(e / total);
            let u: f64 = rng.random::<f64>() * total;
            let s = self.find(u);
            let (g0, g1) = self.gaps[s];
            if !(g1 > g0) {
                continue;
            }
            let x = uniform_coord(g0, g1, rng);
            if x < self.lo || x >= self.hi || state.is_blocked(&[x]) {
                continue;
            }
            return Some(x);
        }
    }
}

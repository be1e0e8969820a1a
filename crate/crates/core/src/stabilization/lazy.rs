//! Explicit Poisson input on `Q × [0, horizon]`, realized cell by cell.
//!
//! The region is cut into grid cells of side about the reach of `D`. Each
//! cell owns an independent time-ordered stream (exponential gaps with
//! rate `|cell|`, uniform positions) drawn from a seed that depends only on
//! the cell index, so the same seed always yields the same input points.
//! A cell stops generating once every point of it is adjacent to a packed
//! center, since later arrivals there would all be rejected. The packing
//! produced is exactly the one obtained by feeding the full input in time
//! order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::engine::PackingState;
use crate::error::Result;
use crate::geometry::{Aabb, ConvexSolid};
use crate::seed::{stream, SimRng};
use crate::vacancy::{box_coverage, IntervalVacancy};

/// Ball whose complement gets fresh input.
#[derive(Clone, Debug, PartialEq)]
pub struct Resample {
    pub center: Vec<f64>,
    pub radius: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LazyInput {
    pub seed: u64,
    pub horizon: f64,
    /// Input outside this ball comes from `resample.seed` instead.
    pub resample: Option<Resample>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Keep {
    All,
    Inside,
    Outside,
}

struct Source {
    rng: SimRng,
    keep: Keep,
    time: f64,
    next: Option<(f64, Vec<f64>, bool)>,
    tag: u64,
    count: u64,
}

struct Cell {
    bx: Aabb<f64>,
    sources: Vec<Source>,
    pending: Vec<(Aabb<f64>, u8)>,
}

/// The packing of one lazily generated input.
#[derive(Debug)]
pub struct LazyRun {
    pub state: PackingState<f64>,
    /// Input points actually drawn.
    pub generated: u64,
    /// Time of the last drawn point.
    pub last_time: f64,
    /// Upper bound on the vacant measure left at the horizon.
    pub vacancy_bound: f64,
}

impl LazyRun {
    pub fn saturated(&self) -> bool {
        self.vacancy_bound == 0.0
    }
}

const MAX_SPLIT: u8 = 12;

fn inside(p: &[f64], r: &Resample) -> bool {
    let d2: f64 = p.iter().zip(&r.center).map(|(a, b)| (a - b).powi(2)).sum();
    d2 <= r.radius * r.radius
}

impl Source {
    /// Draws the next raw point of the cell stream. Points outside the
    /// source's part of the cell are kept as null events so that the
    /// stream is never read further ahead than the packing needs.
    fn advance(&mut self, bx: &Aabb<f64>, rate: &Exp<f64>, horizon: f64, ball: Option<&Resample>) {
        self.time += rate.sample(&mut self.rng);
        if self.time > horizon {
            self.next = None;
            return;
        }
        let p: Vec<f64> = (0..bx.dim())
            .map(|a| {
                let u: f64 = self.rng.random();
                let x = bx.lo[a] + (bx.hi[a] - bx.lo[a]) * u;
                if x >= bx.hi[a] { bx.lo[a] } else { x }
            })
            .collect();
        let kept = match (self.keep, ball) {
            (Keep::All, _) | (_, None) => true,
            (Keep::Inside, Some(b)) => inside(&p, b),
            (Keep::Outside, Some(b)) => !inside(&p, b),
        };
        self.next = Some((self.time, p, kept));
    }
}

impl Cell {
    fn head(&self) -> Option<(f64, usize)> {
        self.sources
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.next.as_ref().map(|(t, _, _)| (*t, k)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }
}

/// Packs the lazily generated input into `region` (empty start).
pub fn pack_lazy(solid: &ConvexSolid<f64>, region: &Aabb<f64>, input: &LazyInput) -> Result<LazyRun> {
    let mut state = PackingState::new(solid.clone(), region.clone())?;
    let d = region.dim();
    let reach = solid.reach();
    let counts: Vec<usize> = (0..d)
        .map(|a| ((region.extent(a) / reach[a]).ceil() as usize).max(1))
        .collect();
    let total: usize = counts.iter().product();
    let mut cells = Vec::with_capacity(total);
    let mut rates = Vec::with_capacity(total);
    for lin in 0..total {
        let mut rem = lin;
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for a in 0..d {
            let k = rem % counts[a];
            rem /= counts[a];
            let side = region.extent(a) / counts[a] as f64;
            lo.push(region.lo[a] + side * k as f64);
            hi.push(if k + 1 == counts[a] { region.hi[a] } else { region.lo[a] + side * (k + 1) as f64 });
        }
        let bx = Aabb::new(lo, hi)?;
        let plan: Vec<(u64, Keep, u64)> = match &input.resample {
            None => vec![(input.seed, Keep::All, 0)],
            Some(r) => {
                let far = (0..1usize << d)
                    .map(|m| {
                        (0..d)
                            .map(|a| {
                                let x = if m >> a & 1 == 1 { bx.hi[a] } else { bx.lo[a] };
                                (x - r.center[a]).powi(2)
                            })
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
                    .sqrt();
                let near = bx.distance_to(&r.center);
                if far <= r.radius {
                    vec![(input.seed, Keep::All, 0)]
                } else if near > r.radius {
                    vec![(r.seed, Keep::All, 1)]
                } else {
                    vec![(input.seed, Keep::Inside, 0), (r.seed, Keep::Outside, 1)]
                }
            }
        };
        let rate = Exp::new(bx.volume()).expect("cells have positive volume");
        let sources = plan
            .into_iter()
            .map(|(seed, keep, tag)| {
                let mut s = Source { rng: stream(seed, "cell", lin as u64), keep, time: 0.0, next: None, tag, count: 0 };
                s.advance(&bx, &rate, input.horizon, input.resample.as_ref());
                s
            })
            .collect();
        cells.push(Cell { pending: vec![(bx.clone(), 0)], bx, sources });
        rates.push(rate);
    }

    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    for (c, cell) in cells.iter().enumerate() {
        if let Some((t, _)) = cell.head() {
            heap.push(Reverse((t.to_bits(), c)));
        }
    }
    let mut generated = 0u64;
    let mut last_time = 0.0f64;
    let mut scratch = Vec::new();
    while let Some(Reverse((_, c))) = heap.pop() {
        let cell = &mut cells[c];
        let Some((t, k)) = cell.head() else { continue };
        let src = &mut cell.sources[k];
        let (_, p, kept) = src.next.take().expect("head has a point");
        if !kept {
            src.advance(&cell.bx, &rates[c], input.horizon, input.resample.as_ref());
            if let Some((t2, _)) = cell.head() {
                heap.push(Reverse((t2.to_bits(), c)));
            }
            continue;
        }
        let index = (src.tag << 63) | ((c as u64) << 32) | src.count;
        src.count += 1;
        src.advance(&cell.bx, &rates[c], input.horizon, input.resample.as_ref());
        generated += 1;
        last_time = t;
        if !state.try_accept(&p, t, index) {
            // Retire the covered part of the cell around the rejected point.
            if let Some(j) = cell.pending.iter().position(|(b, _)| b.contains_closed(&p)) {
                let (b, depth) = cell.pending[j].clone();
                match box_coverage(&state, &b, &mut scratch) {
                    Some(true) => {
                        cell.pending.swap_remove(j);
                    }
                    None if depth < MAX_SPLIT => {
                        cell.pending.swap_remove(j);
                        cell.pending.extend(b.split().into_iter().map(|x| (x, depth + 1)));
                    }
                    _ => {}
                }
            }
            if cell.pending.is_empty() {
                continue;
            }
        }
        if let Some((t2, _)) = cell.head() {
            heap.push(Reverse((t2.to_bits(), c)));
        }
    }

    let vacancy_bound = if d == 1 {
        IntervalVacancy::from_state(&state)?.measure()
    } else {
        let mut v = 0.0;
        for cell in &cells {
            for (b, _) in &cell.pending {
                v += vacant_volume_bound(&state, b, 10, &mut scratch);
            }
        }
        v
    };
    Ok(LazyRun { state, generated, last_time, vacancy_bound })
}

/// Volume of the sub-boxes of `bx`, down to `depth` bisections, that are
/// not certified covered.
fn vacant_volume_bound(state: &PackingState<f64>, bx: &Aabb<f64>, depth: u32, scratch: &mut Vec<u32>) -> f64 {
    match box_coverage(state, bx, scratch) {
        Some(true) => 0.0,
        _ if depth == 0 => bx.volume(),
        _ => bx.split().iter().map(|c| vacant_volume_bound(state, c, depth - 1, scratch)).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{pack_sequence, SpaceTimePoint};

    /// Regenerates the full (unpruned) input of each cell and packs it the
    /// slow way.
    fn explicit(region: &Aabb<f64>, solid: &ConvexSolid<f64>, seed: u64, horizon: f64) -> Vec<Vec<f64>> {
        let d = region.dim();
        let reach = solid.reach();
        let n = (region.extent(0) / reach[0]).ceil() as usize;
        assert_eq!(d, 1);
        let mut pts = Vec::new();
        for c in 0..n {
            let side = region.extent(0) / n as f64;
            let lo = side * c as f64;
            let hi = if c + 1 == n { region.hi[0] } else { side * (c + 1) as f64 };
            let bx = Aabb::new(vec![lo], vec![hi]).unwrap();
            let rate = Exp::new(bx.volume()).unwrap();
            let mut s = Source { rng: stream(seed, "cell", c as u64), keep: Keep::All, time: 0.0, next: None, tag: 0, count: 0 };
            loop {
                s.advance(&bx, &rate, horizon, None);
                match s.next.take() {
                    Some((t, p, _)) => pts.push(SpaceTimePoint::new(p, t, 0)),
                    None => break,
                }
            }
        }
        crate::engine::sort_arrivals(&mut pts);
        let mut st = PackingState::new(solid.clone(), region.clone()).unwrap();
        pack_sequence(&pts, &mut st).unwrap();
        let mut out: Vec<Vec<f64>> = st.accepted_positions().map(|p| p.to_vec()).collect();
        out.sort_by(|a, b| a[0].total_cmp(&b[0]));
        out
    }

    #[test]
    fn pruned_input_packs_like_full_input() {
        let solid = ConvexSolid::ball(1, 0.5).unwrap();
        let region = Aabb::cube(1, 0.0, 30.0).unwrap();
        for seed in 0..5 {
            let input = LazyInput { seed, horizon: 300.0, resample: None };
            let run = pack_lazy(&solid, &region, &input).unwrap();
            let mut got: Vec<Vec<f64>> = run.state.accepted_positions().map(|p| p.to_vec()).collect();
            got.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert_eq!(got, explicit(&region, &solid, seed, 300.0));
            assert!(run.generated < 30 * 300);
        }
    }

    #[test]
    fn saturates_disks() {
        let solid = ConvexSolid::ball(2, 0.25).unwrap();
        let region = Aabb::cube(2, 0.0, 5.0).unwrap();
        let run = pack_lazy(&solid, &region, &LazyInput { seed: 3, horizon: 1e5, resample: None }).unwrap();
        assert!(run.vacancy_bound < 1e-3, "{}", run.vacancy_bound);
        assert!(run.state.min_pairwise_gauge() > 1.0);
    }
}

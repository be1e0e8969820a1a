use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::perturb::{RadiusMethod, StabilizationSample};
use crate::engine::{poisson_spacetime, PackingState, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexSolid};
use crate::vacancy::fully_covered;

/// Bisection depth used when certifying that a unit cube is fully packed.
const COVER_DEPTH: u32 = 14;

pub fn cube_of(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| v.floor() as i64).collect()
}

fn unit_cube(i: &[i64], pad: f64) -> Aabb<f64> {
    let lo = i.iter().map(|&c| c as f64 - pad).collect();
    let hi = i.iter().map(|&c| c as f64 + 1.0 + pad).collect();
    Aabb::new(lo, hi).expect("unit cube")
}

/// `C_i`, the unit cube with lower corner `i`.
pub fn cube(i: &[i64]) -> Aabb<f64> {
    unit_cube(i, 0.0)
}

/// `C_i^+`, the cube together with its `3^d − 1` neighbours.
pub fn cube_plus(i: &[i64]) -> Aabb<f64> {
    unit_cube(i, 1.0)
}

/// Local strong saturation time of one cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSaturation {
    /// `+∞` when the input never saturates the cube.
    pub time: f64,
    /// False when the moat had more points than the subset budget at the
    /// reported time; then only `η = ∅` and the full moat were tried and
    /// the time is a lower bound.
    pub exact: bool,
    pub subsets_evaluated: u64,
}

fn packs_cube(solid: &ConvexSolid<f64>, i: &[i64], pts: &[&SpaceTimePoint<f64>]) -> Result<bool> {
    let mut st = PackingState::new(solid.clone(), cube_plus(i))?;
    for p in pts {
        st.try_accept(&p.position, p.time, p.index);
    }
    Ok(fully_covered(&st, &cube(i), COVER_DEPTH))
}

/// Earliest time `t` such that, for every subset `η` of the moat points
/// with mark at most `t`, packing the cube's own points up to `t` together
/// with `η` leaves no vacant point in `C_i`.
///
/// `input` may contain points anywhere; only those in `C_i^+` are used.
pub fn local_saturation_time(
    solid: &ConvexSolid<f64>,
    i: &[i64],
    input: &[SpaceTimePoint<f64>],
    subset_budget: usize,
) -> Result<LocalSaturation> {
    let own_box = cube(i);
    let plus = cube_plus(i);
    let mut pts: Vec<&SpaceTimePoint<f64>> = input.iter().filter(|p| plus.contains(&p.position)).collect();
    pts.sort_by(|a, b| a.arrival_cmp(b));
    let mut evaluated = 0u64;
    let mut times: Vec<f64> = pts.iter().map(|p| p.time).collect();
    times.dedup();
    for &t in &times {
        let upto: Vec<&SpaceTimePoint<f64>> = pts.iter().copied().filter(|p| p.time <= t).collect();
        let own: Vec<&SpaceTimePoint<f64>> = upto.iter().copied().filter(|p| own_box.contains(&p.position)).collect();
        let moat: Vec<&SpaceTimePoint<f64>> = upto.iter().copied().filter(|p| !own_box.contains(&p.position)).collect();
        evaluated += 1;
        if !packs_cube(solid, i, &own)? {
            continue;
        }
        let k = moat.len();
        let exact = k <= subset_budget.min(63);
        let masks: Box<dyn Iterator<Item = u64>> = if exact {
            Box::new(1..(1u64 << k))
        } else {
            Box::new(std::iter::once(u64::MAX))
        };
        let mut all = true;
        for mask in masks {
            let mut set: Vec<&SpaceTimePoint<f64>> = own.clone();
            set.extend(moat.iter().enumerate().filter(|(j, _)| mask == u64::MAX || mask >> j & 1 == 1).map(|(_, p)| *p));
            set.sort_by(|a, b| a.arrival_cmp(b));
            evaluated += 1;
            if !packs_cube(solid, i, &set)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(LocalSaturation { time: t, exact, subsets_evaluated: evaluated });
        }
    }
    Ok(LocalSaturation { time: f64::INFINITY, exact: true, subsets_evaluated: evaluated })
}

/// Default `T*`: the empirical 90th percentile of saturation times.
pub fn calibrate_t_star(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::contract("no saturation times to calibrate from"));
    }
    let mut v = times.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((0.9 * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    Ok(v[k])
}

/// Causal cluster of a target point and its cube cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalCluster {
    /// Positions in `input` of the members, ascending; the target is
    /// included when it belongs to `input`.
    pub members: Vec<usize>,
    /// The target's own cube plus every `C_j^+` with a member in `C_j`, as
    /// lower corners of unit cubes.
    pub cubes: BTreeSet<Vec<i64>>,
}

impl CausalCluster {
    /// Euclidean diameter of the union of cubes.
    pub fn diameter(&self) -> f64 {
        cubes_diameter(&self.cubes)
    }
}

pub fn cubes_diameter(cubes: &BTreeSet<Vec<i64>>) -> f64 {
    let v: Vec<&Vec<i64>> = cubes.iter().collect();
    let mut best: f64 = 0.0;
    for a in 0..v.len() {
        for b in a..v.len() {
            let s: f64 = v[a].iter().zip(v[b]).map(|(x, y)| ((x - y).abs() as f64 + 1.0).powi(2)).sum();
            best = best.max(s.sqrt());
        }
    }
    best
}

fn relevant(p: &SpaceTimePoint<f64>, t_star: f64, saturated: &BTreeMap<Vec<i64>, bool>) -> bool {
    match saturated.get(&cube_of(&p.position)) {
        Some(true) => p.time <= t_star,
        _ => true,
    }
}

fn add_plus(cubes: &mut BTreeSet<Vec<i64>>, j: &[i64]) {
    let d = j.len();
    for m in 0..3usize.pow(d as u32) {
        let mut r = m;
        let c: Vec<i64> = j
            .iter()
            .map(|&x| {
                let o = (r % 3) as i64 - 1;
                r /= 3;
                x + o
            })
            .collect();
        cubes.insert(c);
    }
}

/// Reverse breadth-first search over the edges `(y,s) → (x,t)` with
/// `|y − x| ≤ 2 d_S`, `s < t`, both ends causally relevant. A point in a
/// cube marked saturated is relevant only up to time `t_star`; cubes
/// missing from `saturated` count as unsaturated.
pub fn causal_cluster(
    solid: &ConvexSolid<f64>,
    target: &SpaceTimePoint<f64>,
    input: &[SpaceTimePoint<f64>],
    t_star: f64,
    saturated: &BTreeMap<Vec<i64>, bool>,
) -> CausalCluster {
    let reach = 2.0 * solid.diameter();
    let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v / reach).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (k, p) in input.iter().enumerate() {
        if relevant(p, t_star, saturated) {
            grid.entry(key(&p.position)).or_default().push(k);
        }
    }
    let mut seen = vec![false; input.len()];
    let mut members = Vec::new();
    let mut cubes = BTreeSet::new();
    add_plus(&mut cubes, &cube_of(&target.position));
    let mut queue: VecDeque<(Vec<f64>, f64)> = VecDeque::new();
    if let Some(k) = input.iter().position(|p| p == target) {
        seen[k] = true;
        members.push(k);
    }
    if relevant(target, t_star, saturated) {
        queue.push_back((target.position.clone(), target.time));
    }
    let d = target.position.len();
    while let Some((x, t)) = queue.pop_front() {
        let base = key(&x);
        for m in 0..3usize.pow(d as u32) {
            let mut r = m;
            let nb: Vec<i64> = base
                .iter()
                .map(|&b| {
                    let o = (r % 3) as i64 - 1;
                    r /= 3;
                    b + o
                })
                .collect();
            let Some(list) = grid.get(&nb) else { continue };
            for &k in list {
                let p = &input[k];
                if seen[k] || !(p.time < t) {
                    continue;
                }
                let dist2: f64 = p.position.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
                if dist2 <= reach * reach {
                    seen[k] = true;
                    members.push(k);
                    queue.push_back((p.position.clone(), p.time));
                }
            }
        }
    }
    members.sort_unstable();
    for &k in &members {
        add_plus(&mut cubes, &cube_of(&input[k].position));
    }
    CausalCluster { members, cubes }
}

/// Radius from the causal cube cluster of `i`: the diameter of the union of
/// the cube clusters of all input points in `C_i^+`. The input is an
/// explicit Poisson process on `Q_λ × [0, horizon]`; `π_j` is the event
/// that cube `j` locally saturates by `t_star`.
pub fn estimate_radius_causal<R: Rng + ?Sized>(
    lambda: f64,
    solid: &ConvexSolid<f64>,
    center: &[i64],
    horizon: f64,
    t_star: f64,
    subset_budget: usize,
    rng: &mut R,
) -> Result<StabilizationSample> {
    let region = Aabb::rsa_cube(solid.dim(), lambda)?;
    let input = poisson_spacetime(&region, horizon, 1.0, rng)?;
    let saturated = saturation_map(solid, &region, &input, t_star, subset_budget)?;
    let plus = cube_plus(center);
    let mut cubes = BTreeSet::new();
    add_plus(&mut cubes, center);
    for p in input.iter().filter(|p| plus.contains(&p.position)) {
        cubes.extend(causal_cluster(solid, p, &input, t_star, &saturated).cubes);
    }
    Ok(StabilizationSample {
        center: center.to_vec(),
        lambda,
        radius: cubes_diameter(&cubes),
        method: RadiusMethod::CausalDiameter,
        resamples: 0,
        horizon,
        baseline_last_time: input.last().map_or(0.0, |p| p.time),
    })
}

/// `π_j = 1{T̂_j ≤ t_star}` for every unit cube meeting `region`.
pub fn saturation_map(
    solid: &ConvexSolid<f64>,
    region: &Aabb<f64>,
    input: &[SpaceTimePoint<f64>],
    t_star: f64,
    subset_budget: usize,
) -> Result<BTreeMap<Vec<i64>, bool>> {
    let d = region.dim();
    let lo: Vec<i64> = (0..d).map(|a| region.lo[a].floor() as i64).collect();
    let n: Vec<i64> = (0..d).map(|a| region.hi[a].ceil() as i64 - lo[a]).collect();
    let total: i64 = n.iter().product();
    let mut out = BTreeMap::new();
    let early: Vec<SpaceTimePoint<f64>> = input.iter().filter(|p| p.time <= t_star).cloned().collect();
    for lin in 0..total {
        let mut r = lin;
        let j: Vec<i64> = (0..d)
            .map(|a| {
                let k = r % n[a];
                r /= n[a];
                lo[a] + k
            })
            .collect();
        let ls = local_saturation_time(solid, &j, &early, subset_budget)?;
        out.insert(j, ls.time <= t_star);
    }
    Ok(out)
}

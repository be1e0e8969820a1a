//! The vacant set: points of the region adjacent to no packed center.
//!
//! In one dimension it is a finite union of gaps and is tracked exactly
//! ([`IntervalVacancy`]). In higher dimension a dyadic tree
//! ([`VacancyTree`]) keeps a superset of it whose measure bounds the
//! vacancy from above.

mod cover;
mod interval;
mod tree;

pub use interval::IntervalVacancy;
pub use tree::{Refinement, VacancyTree, GUARD_PROBES, MAX_TREE_DIM};

use crate::engine::PackingState;
use crate::scalar::Scalar;

/// Whether `p` is adjacent to an accepted or frozen center of `state`.
pub fn is_blocked<T: Scalar>(p: &[T], state: &PackingState<T>) -> bool {
    state.is_blocked(p)
}

/// `Some(true)` if `bx` is covered by translates of `D` around packed
/// centers, `Some(false)` if a vacant point provably remains, `None` when
/// there are too many blockers (or a solid without the union test).
pub fn box_coverage<T: Scalar>(state: &PackingState<T>, bx: &crate::geometry::Aabb<T>, scratch: &mut Vec<u32>) -> Option<bool> {
    let solid = state.solid();
    state.blockers_near_box(bx, scratch);
    if scratch.iter().any(|&e| solid.difference_contains_box(state.entry_position(e), bx)) {
        return Some(true);
    }
    let refs: Vec<&[T]> = scratch.iter().map(|&e| state.entry_position(e)).collect();
    cover::union_covers(solid, bx, &refs)
}

/// Whether every point of `bx` is adjacent to a packed center. Undecided
/// boxes are bisected down to `max_depth` levels; an undecided box at the
/// bottom counts as not covered.
pub fn fully_covered<T: Scalar>(state: &PackingState<T>, bx: &crate::geometry::Aabb<T>, max_depth: u32) -> bool {
    let mut scratch = Vec::new();
    let mut stack = vec![(bx.clone(), 0u32)];
    while let Some((b, depth)) = stack.pop() {
        match box_coverage(state, &b, &mut scratch) {
            Some(true) => {}
            Some(false) => return false,
            None if depth >= max_depth => return false,
            None => stack.extend(b.split().into_iter().map(|c| (c, depth + 1))),
        }
    }
    true
}

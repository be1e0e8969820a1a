//! Arrivals, the packing rule, and the saturation drivers.

pub mod pack;
pub mod points;
mod record;
mod state;

pub use pack::{
    pack_finite_input, pack_rejection, pack_sequence, pack_to_saturation, pack_with_boundary,
    saturate, saturate_with_boundary, SaturationOptions, SaturationRun, DEFAULT_EPSILON,
};
pub use points::{poisson_spacetime, sort_arrivals, uniform_in, SpaceTimePoint};
pub use record::{replicate, RunRecord};
pub use state::{check_admissible, PackingState};

//! Spatial localization of the packing: radii of stabilization and their
//! tail, causal clusters, and local strong saturation times.

mod causal;
mod lazy;
mod perturb;
mod tail;

pub use causal::{
    calibrate_t_star, causal_cluster, cube, cube_of, cube_plus, cubes_diameter, estimate_radius_causal,
    local_saturation_time, saturation_map, CausalCluster, LocalSaturation,
};
pub use lazy::{pack_lazy, LazyInput, LazyRun, Resample};
pub use perturb::{
    comparison_window, estimate_radius_perturbation, tail_table, PerturbationOptions, RadiusMethod,
    StabilizationSample,
};
pub use tail::{fit_tail, TailFit};

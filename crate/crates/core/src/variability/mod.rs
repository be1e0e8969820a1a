//! Jamming variability: periodic packed sets, the counting inequality,
//! first-arrival races, and conditional variances given a boundary.

mod conditional;
mod counts;
mod lattice;
mod pipeline;
mod race;

pub use conditional::{
    bootstrap_variance, conditional_variance_experiment, eta_design, reflect_design, EtaDesign, EtaPreset,
    VarianceRow,
};
pub use counts::{auto_delta, check_delta, counts_n1_n2_n3, delta_upper, find_l0, Counts};
pub use lattice::{build_periodic_packed_set, PeriodicPackedSet};
pub use pipeline::{run_pipeline, VariabilityOptions, VariabilityReport};
pub use race::{estimate_event_probabilities, race, race_log_probability, wilson, RaceEstimate};

//! Monte Carlo estimators for the limit statements: jamming limit,
//! variance limit, normality, covariance kernel, and convergence rate.

mod covariance;
mod ks;
mod rate;
mod sweep;

pub use covariance::{
    covariance_entry, covariance_experiment, integrals, variance_share_check, CovarianceResult,
    MeasureKind,
};
pub use ks::{ks_normal, normal_cdf, standardize};
pub use rate::{linear_fit, rate_fit, RateFit, RateVerdict};
pub use sweep::{sweep_jamming, sweep_tag, SweepPoint, SweepResult};

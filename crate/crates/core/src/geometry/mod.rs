//! The solid `S`, its difference body `D = S ⊕ (−S)`, the gauge norm of
//! `D`, and clipped volumes.

mod aabb;
pub mod polygon;
mod solid;
mod volume;

pub use aabb::{Aabb, Coords};
pub use solid::{unit_ball_volume, ConvexSolid, DifferenceBody, GaugeBall, Shape};
pub use volume::{clipped_volume, dyadic_clipped_volume};
pub(crate) use volume::solid_may_meet_box;

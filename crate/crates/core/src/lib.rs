//! Cooperative multi-UAV search and tracking of drifting castaways.
//!
//! Targets drift on a superposition of decaying surface waves. Each UAV runs
//! a constant-velocity Kalman filter per target, estimates are fused across
//! the fleet, targets are clustered by predicted motion, and every UAV picks
//! its next forces by a short-horizon search over a control lattice that
//! minimises the predicted covariance of its assigned cluster.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod coordination;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod planner;
pub mod sea;
pub mod sensing;
pub mod vehicle;

pub use error::{Error, FieldError, Result};

//! Requirements engineering for upper-limb prostheses from recorded
//! activities of daily living (ADL).
//!
//! The crate turns joint-angle trajectories into design numbers:
//!
//! * [`chain`] describes the seven-joint arm and the stack of single-body
//!   dynamic models (cylinders on the humerus or ulna, scaled hands).
//! * [`trajectory`] loads, filters, differentiates, screens and slows down
//!   joint trajectories, and summarizes functional kinematics.
//! * [`dynamics`] runs recursive Newton–Euler inverse dynamics for limb
//!   models and computes the wrench needed to carry objects.
//! * [`regression`] fits through-origin slopes of percentile torques against
//!   mass (or mass × CoM distance) and predicts composite peak torques.
//! * [`wrist`] optimizes the orientation of the two wrist actuation axes for
//!   serial and differential drivetrains.
//!
//! Angles at the API boundary are degrees and angular velocities are °/s;
//! everything inside the dynamics is SI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod dynamics;
mod error;
pub(crate) mod interp;
pub mod regression;
pub mod stats;
pub mod trajectory;
pub mod wrist;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Standard gravity, m/s². Acts along −Z of the base frame.
pub const GRAVITY: f64 = 9.80665;

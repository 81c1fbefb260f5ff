//! Guide listings, compiled and run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/arm-models.md")]
pub mod arm_models {}

#[doc = include_str!("../../../book/src/trajectories.md")]
pub mod trajectories {}

#[doc = include_str!("../../../book/src/inverse-dynamics.md")]
pub mod inverse_dynamics {}

#[doc = include_str!("../../../book/src/regression.md")]
pub mod regression {}

#[doc = include_str!("../../../book/src/wrist-axes.md")]
pub mod wrist_axes {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}

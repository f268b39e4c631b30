//! Heights, flows, Diophantine machinery, and point counting for indefinite
//! ternary quadratic forms on the space of unimodular lattices.
//!
//! Layout:
//! - [`scalar`], [`mat3`], [`geom`]: exact Q(√d) arithmetic and 3D linear algebra
//! - [`forms`]: quadratic forms, duals, transforms
//! - [`lattice`]: unimodular lattices, enumeration, the α height
//! - [`heights`]: κ/ρ profiles, φ_δ, the modified height family, exceptional sets
//! - [`flows`]: a_t/u_r/K, orbit integrals, inequality verifiers, schedules
//! - [`dioph`]: integral-form constructor and Diophantine-type estimation
//! - [`count`]: N_Q(a,b,T), censuses, I_Q and C_Q
//! - [`battery`]: the canned experiment battery used by tests and the CLI

pub mod error;
pub mod scalar;
pub mod geom;
pub mod mat3;
pub mod forms;
pub mod lattice;
pub mod siegel;
pub mod heights;
pub mod quad;
pub mod flows;
pub mod dioph;
pub mod count;
pub mod config;
pub mod battery;

pub use error::{Error, Result};

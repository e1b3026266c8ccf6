//! Numerical verification of quaternionic geometry on ℍPⁿ.
//!
//! The crate builds quaternionic connections, twistor functions and their
//! μ-connections on explicit charts, and checks the identities that relate
//! them: fixed-point structure of circle actions, the Swann-bundle lift of a
//! twistor function, hyperkähler-quotient examples and first Chern class
//! pairings over fixed-point components.
//!
//! Everything numeric is generic over [`scalar::Scalar`], so the same field
//! code runs at `f64` and at nested dual numbers.

// Index loops mirror the tensor notation in the numerics.
#![allow(clippy::needless_range_loop)]

pub mod chern;
pub mod config;
pub mod error;
pub mod hpn;
pub mod linalg;
pub mod quat;
pub mod quaternionic;
pub mod quotient;
pub mod report;
pub mod scalar;
pub mod suites;
pub mod swann;
pub mod tensor;

pub use error::{GeomError, Result};

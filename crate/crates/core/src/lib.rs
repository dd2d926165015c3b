//! Matrix convex sets at desk scale: joint numerical ranges, matrix ranges,
//! minimal and maximal matrix convex sets over a convex body, scaling
//! constants, matrix-extremality tests, spectral models of commuting normal
//! tuples and compact (Smith-Ward) perturbations of diagonal models.
//!
//! Every membership question is reduced to a certified semidefinite
//! feasibility problem ([`sdp`]); answers are tri-state and carry either a
//! witness or a separating pencil.

pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod models;
pub mod random;
pub mod ranges;
pub mod sdp;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, OperatorTuple, UnitaryCertificate, C64};

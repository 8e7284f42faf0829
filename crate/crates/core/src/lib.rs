//! Bohmian dynamics on multiply-connected configuration spaces.
//!
//! Wave functions live on the universal covering space and satisfy a
//! periodicity condition with a topological factor (a character of the deck
//! group, a unitary representation, or a holonomy-twisted periodicity
//! section). The crate provides the exemplar geometries, the exact algebra
//! of the factors, a norm-preserving twisted evolution scheme, Bohmian
//! trajectory integration with winding bookkeeping, and an ensemble
//! equivariance test bench.

pub mod algebra;
pub mod bohm;
pub mod equivariance;
pub mod error;
pub mod evolution;
pub mod factor;
pub mod geometry;
pub mod io;
pub mod sparse;

pub use error::{Error, Result};
pub use factor::TopologicalFactor;

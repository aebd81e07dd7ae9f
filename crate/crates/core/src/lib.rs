//! Spectral laboratory for surfaces with an attached truncated hyperbolic cusp.
//!
//! A base surface (flat torus or round sphere) loses a small ball around a
//! marked point and receives a thin hyperbolic cylinder or cross cap in its
//! place. The crate provides closed-form cusp spectra, meshing of the glued
//! surface, conforming P1 finite elements with a shift-invert Lanczos solver,
//! quasimode constructions and parameter sweeps over the cusp scale.

pub mod cusp;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod quasimode;
pub mod sweep;

pub use cusp::{Attachment, CuspGeometry, CuspMode, CuspParams};
pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

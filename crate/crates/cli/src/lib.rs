//! Command-line orchestration for cusp spectra experiments: configuration,
//! CSV tables with a generated schema, SVG plots and run manifests.

pub mod commands;
pub mod config;
pub mod svg;
pub mod tables;

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "CUSP_SPECTRA_THREADS";

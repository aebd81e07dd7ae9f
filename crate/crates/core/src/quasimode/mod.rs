//! Quasimodes of the glued surface: extensions of base eigenfunctions and
//! Green's-function extensions of cusp modes, with their measured defects.

pub mod construct;
pub mod cutoff;
pub mod green;
pub mod hlambda;
pub mod problem;

pub use construct::{
    cusp_quasimode, cutoff_radii, discrete_cusp_mode, surface_extension, surface_quasimode, CuspQuasimodeInputs, Quasimode,
    QuasimodeKind,
};
pub use cutoff::{log_cutoff, log_cutoff_field, ramp, ramp_cutoff, ramp_width};
pub use green::{green_function, green_function_at, log_kernel, GreenData, SplitCutoff};
pub use hlambda::{first_eigenspace, h_lambda, FirstEigenspace, HLambda, WINDOW_MARGIN};
pub use problem::{GluedProblem, GluedVertex, MeshSpec};

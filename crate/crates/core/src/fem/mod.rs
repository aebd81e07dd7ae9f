//! P1 finite elements on charted meshes and the generalized eigenproblem.

pub mod assemble;
pub mod factor;
pub mod lanczos;
pub mod minres;
pub mod neumann;
pub mod residual;
pub mod sparse;

pub use assemble::{assemble, assemble_with, BoundaryCondition, DiscreteOperator, MassKind};
pub use factor::Factorization;
pub use lanczos::{solve, solve_pencil, SolverOptions, SpectralResult};
pub use minres::{minres, MinresReport};
pub use neumann::{loglog_slope, neumann_deficit, NeumannDeficit, NeumannMesh};
pub use residual::{dual_residual, eigenpairs_in_window, projection_checks, spectral_tail_w12, DualNorm, ProjectionCheck, PROJECTION_CONSTANT};
pub use sparse::{axpy, dot, CsrMatrix};

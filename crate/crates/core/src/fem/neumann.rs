use super::assemble::{assemble, BoundaryCondition};
use super::lanczos::{solve, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{build_filled_mesh, punch_holes, BaseMeshOptions, BaseSurface, Hole, LoopTag};

/// First nonzero Neumann eigenvalue of the base surface minus a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannDeficit {
    pub radius: f64,
    /// `μ₁` of the closed surface on the same mesh with the ball filled in.
    pub mu1_closed: f64,
    pub mu1_holed: f64,
}

impl NeumannDeficit {
    pub fn deficit(&self) -> f64 {
        self.mu1_closed - self.mu1_holed
    }
}

/// Mesh resolution of the Neumann study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannMesh {
    pub h: f64,
    pub n_theta: usize,
}

impl Default for NeumannMesh {
    fn default() -> Self {
        Self { h: 0.02, n_theta: 32 }
    }
}

/// For each radius, `μ₁(Σ)` and `μ₁(Σ \ B_r(x₀))` computed on a filled mesh
/// and its punched copy, so both share every triangle outside the ball.
pub fn neumann_deficit(base: &BaseSurface, radii: &[f64], mesh: NeumannMesh, seed: u64) -> Result<Vec<NeumannDeficit>> {
    radii
        .iter()
        .map(|&radius| {
            if !(radius > 0.0 && radius < 0.5) {
                return Err(Error::Domain(format!("ball radius {radius} must lie in (0, 1/2)")));
            }
            let opts = BaseMeshOptions::new(mesh.h, mesh.n_theta, radius);
            let filled = build_filled_mesh(base, &opts)?;
            let (holed, _) = punch_holes(&filled, base, &[Hole { marked: 0, radius }])?;
            let first = |m, bc| -> Result<f64> {
                let op = assemble(m, &bc)?;
                Ok(solve(&op, &SolverOptions::new(2).with_seed(seed))?.eigenvalues[1])
            };
            Ok(NeumannDeficit {
                radius,
                mu1_closed: first(&filled, BoundaryCondition::Closed)?,
                mu1_holed: first(&holed, BoundaryCondition::NeumannOn(vec![LoopTag::RemovedBall]))?,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

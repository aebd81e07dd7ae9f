use super::assemble::DiscreteOperator;
use super::factor::Factorization;
use super::lanczos::{solve, SolverOptions, SpectralResult};
use super::sparse::{axpy, dot};
use crate::error::Result;

/// Dual `W^{1,2}` norms on a discrete operator, backed by one factorization of `K + M`.
pub struct DualNorm<'a> {
    op: &'a DiscreteOperator,
    fact: Factorization,
}

impl<'a> DualNorm<'a> {
    pub fn new(op: &'a DiscreteOperator) -> Result<Self> {
        let fact = Factorization::cholesky(&op.stiffness.lin_comb(1.0, &op.mass, 1.0))?;
        Ok(Self { op, fact })
    }

    /// `sup_φ |rᵀφ| / ‖φ‖_{W^{1,2}} = sqrt(rᵀ (K + M)⁻¹ r)`.
    pub fn norm_of_functional(&self, r: &[f64]) -> f64 {
        let z = self.fact.solve(r);
        dot(r, &z).max(0.0).sqrt()
    }

    /// `(K − λM) v`.
    pub fn defect(&self, v: &[f64], lambda: f64) -> Vec<f64> {
        let mut r = self.op.stiffness.mul(v);
        axpy(-lambda, &self.op.mass.mul(v), &mut r);
        r
    }

    /// Weak eigen-defect `δ` of `v` at `λ`.
    pub fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        self.norm_of_functional(&self.defect(v, lambda))
    }

    /// `‖v‖²_{W^{1,2}} = vᵀ (K + M) v`.
    pub fn w12_norm_sq(&self, v: &[f64]) -> f64 {
        self.op.stiffness.bilinear(v, v) + self.op.mass.bilinear(v, v)
    }
}

/// Weak eigen-defect of `v` at `λ` in the dual of `W^{1,2}`.
pub fn dual_residual(op: &DiscreteOperator, v: &[f64], lambda: f64) -> Result<f64> {
    Ok(DualNorm::new(op)?.residual(v, lambda))
}

/// Residual tolerance of window solves; interior shifts on strongly graded
/// meshes stall slightly above the default.
const WINDOW_TOL: f64 = 1e-8;

/// All eigenpairs with `|λ_l − center| ≤ radius`, found by shift-invert with
/// a growing number of requested pairs. The shift sits slightly off `center`
/// so that a target equal to an eigenvalue does not make the pencil singular.
pub fn eigenpairs_in_window(op: &DiscreteOperator, center: f64, radius: f64, seed: u64) -> Result<SpectralResult> {
    let offset = 1e-3 * radius;
    let shift = center + offset;
    let mut nev = 4.min(op.dim());
    loop {
        let res = solve(op, &SolverOptions::new(nev).with_shift(shift).with_seed(seed).with_tol(WINDOW_TOL))?;
        let far = res.eigenvalues.iter().map(|l| (l - shift).abs()).fold(0.0, f64::max);
        if far > radius + offset || nev == op.dim() {
            let keep: Vec<usize> = (0..res.len()).filter(|&i| (res.eigenvalues[i] - center).abs() <= radius).collect();
            return Ok(SpectralResult {
                eigenvalues: keep.iter().map(|&i| res.eigenvalues[i]).collect(),
                eigenvectors: keep.iter().map(|&i| res.eigenvectors[i].clone()).collect(),
                residuals: keep.iter().map(|&i| res.residuals[i]).collect(),
                region_masses: keep.iter().map(|&i| res.region_masses[i]).collect(),
                iterations: res.iterations,
            });
        }
        nev = (2 * nev).min(op.dim());
    }
}

/// `‖g‖²_{W^{1,2}}` of the part `g` of `f` spectrally outside `(λ − s, λ + s)`,
/// given every eigenpair inside that window.
pub fn spectral_tail_w12(norms: &DualNorm, f: &[f64], window: &SpectralResult) -> f64 {
    let mut g = f.to_vec();
    for u in &window.eigenvectors {
        let c = norms.op.mass.bilinear(u, f);
        axpy(-c, u, &mut g);
    }
    norms.w12_norm_sq(&g)
}

/// Constant `C` of the projection bound `‖g‖²_{W^{1,2}} ≤ C δ²/s²`.
pub const PROJECTION_CONSTANT: f64 = 8.0;

/// Spectral projection of a normalized test function away from `λ` at one
/// window half-width `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionCheck {
    pub s: f64,
    /// Eigenpairs with `|λ_l − λ| ≤ s`.
    pub inside: usize,
    /// `‖g‖²_{W^{1,2}}` of the part outside the window.
    pub tail_w12_sq: f64,
    /// `C δ²/s²`.
    pub bound: f64,
    /// `((1 + λ + s)/s)² δ²`, which dominates `‖g‖²` for every `s`.
    pub spectral_bound: f64,
}

impl ProjectionCheck {
    pub fn holds(&self) -> bool {
        self.tail_w12_sq <= self.bound
    }
}

/// Normalizes `f`, measures its defect `δ` at `λ` and checks the projection
/// bound at `s = c·δ` for each multiple `c`. Half-widths `s ≥ 1` lie outside
/// the bound's hypothesis and are left out.
pub fn projection_checks(op: &DiscreteOperator, f: &[f64], lambda: f64, multiples: &[f64], seed: u64) -> Result<(f64, Vec<ProjectionCheck>)> {
    let norms = DualNorm::new(op)?;
    let scale = op.mass_norm(f);
    let f: Vec<f64> = f.iter().map(|x| x / scale).collect();
    let delta = norms.residual(&f, lambda);
    let mut checks = Vec::new();
    for &c in multiples {
        let s = c * delta;
        if !(s > 0.0 && s < 1.0) {
            continue;
        }
        let window = eigenpairs_in_window(op, lambda, s, seed)?;
        checks.push(ProjectionCheck {
            s,
            inside: window.len(),
            tail_w12_sq: spectral_tail_w12(&norms, &f, &window),
            bound: PROJECTION_CONSTANT * delta * delta / (s * s),
            spectral_bound: ((1.0 + lambda + s) / s).powi(2) * delta * delta,
        });
    }
    Ok((delta, checks))
}

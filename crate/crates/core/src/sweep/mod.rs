//! Sweeps over the curvature scale `κ` at fixed `ε`: mass decomposition of
//! the first two eigenfunctions, avoided-crossing detection, the `κ_ε`
//! locator, the Neumann test-function inequality and the monotonicity report.

mod limits;
mod monotonicity;

pub use limits::{DecompositionIdentities, EndpointCheck, LimitReport, IDENTITY_TOL, LIMIT_TOL};
pub use monotonicity::{monotonicity_report, monotonicity_row, MonotonicityReport, MonotonicityRow, RefinementStep};

use crate::cusp::{kappa_for_eigenvalue, neumann_eigenvalue, Attachment, CuspMode, CuspParams};
use crate::error::{Error, Result};
use crate::fem::{assemble, dot, solve, BoundaryCondition, DiscreteOperator, SolverOptions, SpectralResult};
use crate::geometry::{vertex_at, BaseSurface, LoopTag};
use crate::quasimode::{first_eigenspace, GluedProblem, GluedVertex, MeshSpec};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default exponent slack `τ` of the interaction-regime test.
pub const DEFAULT_TAU: f64 = 0.25;
/// Tolerance on `|n₁/m₁ − ρ*|` at which the locator stops.
pub const LOCATOR_TOL: f64 = 0.02;
/// Relative slack allowed in the Neumann test-function inequality.
pub const NEUMANN_SLACK: f64 = 0.05;

/// Fixed data of a sweep: base surface, cusp exponents and resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSetup {
    pub surface: BaseSurface,
    pub alpha: f64,
    pub k: u32,
    pub attachment: Attachment,
    pub mesh: MeshSpec,
    pub tau: f64,
    pub seed: u64,
}

impl SweepSetup {
    pub fn new(surface: BaseSurface, alpha: f64, k: u32, attachment: Attachment, mesh: MeshSpec) -> Self {
        Self { surface, alpha, k, attachment, mesh, tau: DEFAULT_TAU, seed: 0 }
    }

    pub fn params(&self, epsilon: f64, kappa: f64) -> Result<CuspParams> {
        CuspParams::new(epsilon, kappa, self.alpha, self.k, self.attachment)
    }
}

/// Seed of the solver start block for one grid point.
pub fn point_seed(base: u64, epsilon: f64, kappa: f64) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    mix(mix(mix(base) ^ epsilon.to_bits()) ^ kappa.to_bits())
}

/// Everything shared by the grid points of one `ε`.
#[derive(Clone, Debug)]
pub struct EpsilonContext {
    pub setup: SweepSetup,
    pub epsilon: f64,
    /// Glued problem at the crossing scale; other `κ` reuse its base meshes.
    pub problem: GluedProblem,
    /// `φ₀` on the filled base mesh: unit mass, nonnegative at `x₀`, and the
    /// only vector of the first eigenspace that is nonzero there.
    pub phi0: Vec<f64>,
    pub phi0_pole: f64,
    /// Rayleigh quotient of `φ₀` on the filled mesh, the discrete `λ₁(Σ)`.
    pub lambda1_base: f64,
    /// Discrete `λ₁(Σ)` times the discrete area of the filled mesh.
    pub normalized_base: f64,
    /// `μ₁(Σ \ B_{ε^k})` on the holed base mesh.
    pub mu1_neumann: f64,
    /// `κ` at which `λ₀(C_{ε,κ}) = λ₁(Σ)`.
    pub kappa_cross: f64,
}

impl EpsilonContext {
    pub fn new(setup: &SweepSetup, epsilon: f64) -> Result<Self> {
        let surface = setup.surface.clone();
        let l = epsilon.powf(-setup.alpha);
        let exact = surface.first_eigenvalue();
        let guess = kappa_for_eigenvalue(epsilon, l, setup.attachment, 0, exact);
        let problem = GluedProblem::build(setup.params(epsilon, guess)?, surface.clone(), setup.mesh)?;
        let pole = vertex_at(&problem.filled, surface.marked_points[0])
            .ok_or_else(|| Error::Domain("x₀ is not a vertex of the filled mesh".into()))?;
        let pole_dof = problem.filled_dof(pole);
        let space = first_eigenspace(&problem.filled_op, &surface, pole_dof, point_seed(setup.seed, epsilon, 0.0))?;
        if space.pole_values[0] <= 0.0 {
            return Err(Error::Domain("every first eigenfunction vanishes at x₀".into()));
        }
        let lambda1_base = space.basis_eigenvalues[0];
        let area: f64 = problem.filled_op.mass.mul(&vec![1.0; problem.filled_op.dim()]).iter().sum();
        let mu1_neumann = {
            let op = assemble(&problem.holed, &BoundaryCondition::NeumannOn(vec![LoopTag::RemovedBall]))?;
            solve(&op, &SolverOptions::new(2).with_seed(point_seed(setup.seed, epsilon, -1.0)))?.eigenvalues[1]
        };
        let kappa_cross = kappa_for_eigenvalue(epsilon, l, setup.attachment, 0, lambda1_base);
        let problem = problem.with_kappa(kappa_cross)?;
        Ok(Self {
            setup: setup.clone(),
            epsilon,
            problem,
            phi0: space.basis[0].clone(),
            phi0_pole: space.pole_values[0],
            lambda1_base,
            normalized_base: lambda1_base * area,
            mu1_neumann,
            kappa_cross,
        })
    }

    pub fn log_length(&self) -> f64 {
        self.problem.params.log_length()
    }

    /// `λ₀(C_{ε,κ})` from the closed form.
    pub fn lambda0_cusp(&self, kappa: f64) -> Result<f64> {
        Ok(CuspMode::for_attachment(&self.setup.params(self.epsilon, kappa)?.geometry(), self.setup.attachment, 0).eigenvalue)
    }

    /// `[0.7 κ_c, max(1.3 κ_c, 2.2 √λ₁(Σ))]`: straddles the crossing and
    /// reaches `κ²/4 > λ₁(Σ)` at the upper end.
    pub fn auto_window(&self) -> (f64, f64) {
        let lo = 0.7 * self.kappa_cross;
        let hi = (1.3 * self.kappa_cross).max(2.2 * self.lambda1_base.sqrt());
        (lo, hi)
    }

    /// Checks that `λ₀(C)` crosses `λ₁(Σ)` inside the window.
    pub fn check_window(&self, lo: f64, hi: f64) -> Result<()> {
        let (l_lo, l_hi) = (self.lambda0_cusp(lo)?, self.lambda0_cusp(hi)?);
        if !(lo < hi && l_lo < self.lambda1_base && self.lambda1_base < l_hi) {
            let (a, b) = self.auto_window();
            return Err(Error::Config(format!(
                "κ window [{lo}, {hi}] does not bracket the crossing at ε = {}: λ₀(C) runs from {l_lo} to {l_hi} \
                 but λ₁(Σ) = {}; try [{a:.4}, {b:.4}]",
                self.epsilon, self.lambda1_base
            )));
        }
        Ok(())
    }

    /// `φ₀` as a glued dof vector (zero on the cusp).
    pub fn phi0_on(&self, problem: &GluedProblem) -> Vec<f64> {
        problem.field(|_, gv| match gv {
            GluedVertex::Base { filled } => self.phi0[problem.filled_dof(filled)],
            GluedVertex::Cusp { .. } => 0.0,
        })
    }

    /// Normalized cusp ground state `ψ₀ ≥ 0` as a glued dof vector (zero on the base).
    pub fn psi0_on(&self, problem: &GluedProblem) -> Vec<f64> {
        let mode = CuspMode::for_attachment(&problem.params.geometry(), problem.params.attachment, 0);
        problem.field(|_, gv| match gv {
            GluedVertex::Base { .. } => 0.0,
            GluedVertex::Cusp { y } => mode.value(y, true).unwrap_or(0.0),
        })
    }
}

/// The pairings `m_i = ∫_{Σ∖B} u_i φ₀`, `n_i = ∫_C u_i ψ₀` of the first two
/// eigenfunctions, signed so that `n₁, n₂ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassDecomposition {
    pub m1: f64,
    pub n1: f64,
    pub m2: f64,
    pub n2: f64,
    /// Whether `u₁` and `u₂` were negated.
    pub flipped: [bool; 2],
}

/// Mass decomposition of the pairs `1` and `2` of `result` (pair `0` is the
/// constant). Fails when `λ₂` and `λ₃` agree to `tol·(λ₂ + 1)`.
pub fn mass_decomposition(
    op: &DiscreteOperator,
    result: &SpectralResult,
    phi0: &[f64],
    psi0: &[f64],
    tol: f64,
) -> Result<MassDecomposition> {
    if result.len() < 4 {
        return Err(Error::Domain("the mass decomposition needs the four lowest eigenpairs".into()));
    }
    let (l2, l3) = (result.eigenvalues[2], result.eigenvalues[3]);
    if (l3 - l2).abs() <= tol * (l2 + 1.0) {
        return Err(Error::Multiplicity(format!("λ₂ = {l2} and λ₃ = {l3} coincide; the first two eigenfunctions are not isolated")));
    }
    let base_phi: Vec<f64> = {
        let full = op.mass.mul(phi0);
        let cusp = op.mass_cusp.mul(phi0);
        full.iter().zip(&cusp).map(|(a, b)| a - b).collect()
    };
    let cusp_psi = op.mass_cusp.mul(psi0);
    let pair = |u: &Vec<f64>| {
        let (m, n) = (dot(u, &base_phi), dot(u, &cusp_psi));
        if n < 0.0 {
            (-m, -n, true)
        } else {
            (m, n, false)
        }
    };
    let (m1, n1, f1) = pair(&result.eigenvectors[1]);
    let (m2, n2, f2) = pair(&result.eigenvectors[2]);
    Ok(MassDecomposition { m1, n1, m2, n2, flipped: [f1, f2] })
}

/// One grid point of a `κ` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub kappa: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub masses: Option<MassDecomposition>,
    /// Closed-form flux `a_{ε,κ,0}`.
    pub a0: f64,
    pub lambda0_cusp: f64,
    /// `μ₁(C_{ε,κ})` from the closed form.
    pub mu1_cusp: f64,
    pub area_total: f64,
    /// `β` with `∫_C (u + βv) = 0`, when `∫_C v ≠ 0`.
    pub beta: Option<f64>,
    pub mu1_neumann: f64,
    pub lambda1_base: f64,
    /// `∫_C u₁` and `∫_C u₁²` with the sign of the mass decomposition.
    pub cusp_integral1: f64,
    pub cusp_mass1: f64,
    pub cusp_mass2: f64,
    /// Gap `ε^{k/4}` below `λ₁(Σ)` and exponent slack `τ` of the regime test.
    pub gap: f64,
    pub tau: f64,
    /// Whether `λ₂ ≤ min(λ₀(C) + ε^{3α/2+1/2−τ}, λ₁(Σ) − gap)`.
    pub interaction: bool,
    pub seed: u64,
    pub worst_residual: f64,
}

impl SweepRecord {
    pub fn ratio(&self) -> Option<f64> {
        self.masses.map(|m| m.n1 / m.m1)
    }
}

/// Solves the glued surface at one `κ` and fills a record.
pub fn sweep_point(ctx: &EpsilonContext, kappa: f64) -> Result<SweepRecord> {
    let problem = ctx.problem.with_kappa(kappa)?;
    let seed = point_seed(ctx.setup.seed, ctx.epsilon, kappa);
    let opts = SolverOptions::new(4).with_seed(seed);
    let res = solve(&problem.op, &opts)?;
    let phi0 = ctx.phi0_on(&problem);
    let psi0 = ctx.psi0_on(&problem);
    let masses = match mass_decomposition(&problem.op, &res, &phi0, &psi0, opts.tol) {
        Ok(m) => Some(m),
        Err(Error::Multiplicity(_)) => None,
        Err(e) => return Err(e),
    };
    let sign = |i: usize| if masses.is_some_and(|m| m.flipped[i]) { -1.0 } else { 1.0 };
    let (_, cu) = problem.op.integrals(&res.eigenvectors[1]);
    let (_, cv) = problem.op.integrals(&res.eigenvectors[2]);
    let (cu, cv) = (sign(0) * cu, sign(1) * cv);
    let params = problem.params;
    let g = params.geometry();
    let mode = CuspMode::for_attachment(&g, params.attachment, 0);
    let (lambda1, lambda2, lambda3) = (res.eigenvalues[1], res.eigenvalues[2], res.eigenvalues[3]);
    let eps = ctx.epsilon;
    let gap = eps.powf(params.k as f64 / 4.0);
    let threshold = (mode.eigenvalue + eps.powf(params.flux_exponent() - ctx.setup.tau)).min(ctx.lambda1_base - gap);
    Ok(SweepRecord {
        epsilon: eps,
        kappa,
        lambda1,
        lambda2,
        lambda3,
        masses,
        a0: mode.flux_long,
        lambda0_cusp: mode.eigenvalue,
        mu1_cusp: neumann_eigenvalue(&g, 1),
        area_total: problem.op.integrals(&vec![1.0; problem.op.dim()]).0,
        beta: (cv.abs() > 1e-14).then(|| -cu / cv),
        mu1_neumann: ctx.mu1_neumann,
        lambda1_base: ctx.lambda1_base,
        cusp_integral1: cu,
        cusp_mass1: res.region_masses[1].1,
        cusp_mass2: res.region_masses[2].1,
        gap,
        tau: ctx.setup.tau,
        interaction: lambda2 <= threshold,
        seed,
        worst_residual: res.residuals.iter().copied().fold(0.0, f64::max),
    })
}

/// `n` equally spaced values from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Records for every `κ` in ascending order, computed in parallel and
/// returned in grid order.
pub fn kappa_sweep(ctx: &EpsilonContext, kappas: &[f64]) -> Result<Vec<SweepRecord>> {
    if kappas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("κ grid must be strictly increasing".into()));
    }
    if let (Some(&lo), Some(&hi)) = (kappas.first(), kappas.last()) {
        ctx.check_window(lo, hi)?;
    }
    #[cfg(feature = "parallel")]
    let records: Vec<Result<SweepRecord>> = kappas.par_iter().map(|&k| sweep_point(ctx, k)).collect();
    #[cfg(not(feature = "parallel"))]
    let records: Vec<Result<SweepRecord>> = kappas.iter().map(|&k| sweep_point(ctx, k)).collect();
    let records: Vec<SweepRecord> = records.into_iter().collect::<Result<_>>()?;
    if records.windows(2).any(|w| w[1].lambda0_cusp <= w[0].lambda0_cusp) {
        return Err(Error::Domain("λ₀(C) is not increasing along the κ grid".into()));
    }
    Ok(records)
}

/// One bisection step of the locator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub kappa: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct LocatedKappa {
    pub kappa: f64,
    pub record: SweepRecord,
    pub transcript: Vec<BisectionStep>,
}

/// `n₁ − ρ* m₁`, positive while the cusp dominates `u₁`.
fn locator_value(r: &SweepRecord, rho: f64) -> Option<f64> {
    r.masses.map(|m| m.n1 - rho * m.m1)
}

/// Adjacent grid points of a sweep between which `n₁/m₁` crosses `rho`.
pub fn locator_bracket(records: &[SweepRecord], rho: f64) -> Result<(f64, f64)> {
    for w in records.windows(2) {
        if let (Some(a), Some(b)) = (locator_value(&w[0], rho), locator_value(&w[1], rho)) {
            if a >= 0.0 && b <= 0.0 {
                return Ok((w[0].kappa, w[1].kappa));
            }
        }
    }
    let (lo, hi) = (records.first().map_or(0.0, |r| r.kappa), records.last().map_or(0.0, |r| r.kappa));
    Err(Error::Locator(format!("n₁/m₁ does not cross {rho} on the window [{lo}, {hi}]")))
}

/// Bisection on `κ ∈ [lo, hi]` until `|n₁/m₁ − ρ*| ≤ 0.02`.
pub fn locate_kappa_eps(ctx: &EpsilonContext, lo: f64, hi: f64, rho: f64) -> Result<LocatedKappa> {
    let eval = |k: f64| -> Result<(SweepRecord, f64)> {
        let r = sweep_point(ctx, k)?;
        let v = locator_value(&r, rho).ok_or_else(|| Error::Locator(format!("first two eigenvalues not isolated at κ = {k}")))?;
        Ok((r, v))
    };
    let (lo_rec, f_lo) = eval(lo)?;
    let (hi_rec, f_hi) = eval(hi)?;
    let all_zero = [&lo_rec, &hi_rec].iter().all(|r| r.masses.is_some_and(|m| m.m1.abs() < 1e-12));
    if all_zero {
        return Err(Error::Locator(format!("m₁ vanishes on the window [{lo}, {hi}]")));
    }
    if !(f_lo >= 0.0 && f_hi <= 0.0) {
        return Err(Error::Locator(format!(
            "n₁/m₁ does not straddle {rho} on [{lo}, {hi}] (ratios {:?} and {:?})",
            lo_rec.ratio(),
            hi_rec.ratio()
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut transcript = Vec::new();
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let (rec, f) = eval(mid)?;
        let ratio = rec.ratio().unwrap_or(f64::NAN);
        transcript.push(BisectionStep { lo: a, hi: b, kappa: mid, ratio });
        if (ratio - rho).abs() <= LOCATOR_TOL {
            return Ok(LocatedKappa { kappa: mid, record: rec, transcript });
        }
        if f > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::Locator(format!("bisection on [{lo}, {hi}] did not reach |n₁/m₁ − {rho}| ≤ {LOCATOR_TOL}")))
}

/// Both sides of the Neumann test-function bound at one record.
#[derive(Clone, Debug, PartialEq)]
pub enum NeumannTest {
    Evaluated { lhs: f64, rhs: f64, holds: bool },
    Skipped(String),
}

/// `μ₁(Σ∖B) ≤ (λ₁ + β²λ₂)/(1 + β²) + (λ₁ + β²λ₂ − (1 + β²)μ₁(C)) λ₂ / (μ₁(C)(m₁ + βm₂)²)`,
/// checked with 5% slack. Skipped outside its hypotheses `λ₂ ≤ λ₁(Σ) − gap` and
/// `n₁² ≤ 1 − ε^τ`, or when the denominator is numerically zero.
pub fn neumann_test_inequality(r: &SweepRecord) -> NeumannTest {
    let (Some(m), Some(beta)) = (r.masses, r.beta) else {
        return NeumannTest::Skipped("β or the mass decomposition is undefined".into());
    };
    if r.lambda2 > r.lambda1_base - r.gap {
        return NeumannTest::Skipped(format!("λ₂ = {:.6} exceeds λ₁(Σ) − gap = {:.6}", r.lambda2, r.lambda1_base - r.gap));
    }
    if m.n1 * m.n1 > 1.0 - r.epsilon.powf(r.tau) {
        return NeumannTest::Skipped(format!("n₁² = {:.4} exceeds 1 − ε^τ", m.n1 * m.n1));
    }
    let b2 = beta * beta;
    let denom = r.mu1_cusp * (m.m1 + beta * m.m2).powi(2);
    if denom < 1e-8 {
        return NeumannTest::Skipped(format!("denominator μ₁(C)(m₁ + βm₂)² = {denom:.3e} is below 1e-8"));
    }
    let top = r.lambda1 + b2 * r.lambda2;
    let rhs = top / (1.0 + b2) + (top - (1.0 + b2) * r.mu1_cusp) / denom * r.lambda2;
    let lhs = r.mu1_neumann;
    NeumannTest::Evaluated { lhs, rhs, holds: lhs <= rhs + NEUMANN_SLACK * rhs.abs() }
}

use super::{kappa_sweep, linspace, locate_kappa_eps, locator_bracket, EpsilonContext, LocatedKappa, SweepSetup};
use crate::error::{Error, Result};
use crate::quasimode::MeshSpec;
use std::f64::consts::PI;

/// One `ε` of the monotonicity table, at the located `κ_ε`.
#[derive(Clone, Debug)]
pub struct MonotonicityRow {
    pub epsilon: f64,
    pub kappa_eps: f64,
    pub lambda1: f64,
    pub lambda1_base: f64,
    pub area: f64,
    pub area_base: f64,
    /// `λ₁ · area` of the glued surface.
    pub product: f64,
    /// `λ₁·area − λ₁(Σ)·area(Σ)`, both on the same base mesh.
    pub delta: f64,
    /// `(λ₁(Σ) − λ₁)/ε`.
    pub deficit_ratio: f64,
    /// `area − area(Σ)` and its reference `2πε/κ_ε²`.
    pub area_surplus: f64,
    pub surplus_reference: f64,
    pub located: LocatedKappa,
}

/// `Δ` at the smallest `ε` on one mesh level of the extrapolation study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementStep {
    pub h: f64,
    pub n_theta: usize,
    pub n_log: usize,
    pub kappa_eps: f64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
    pub deficit_ratio_decreasing: bool,
    /// `area − area(Σ) ≥ 0.8 · 2πε/κ_ε²` at every `ε`.
    pub surplus_ok: bool,
    /// Mesh levels at the smallest `ε` and the Richardson value of `Δ`.
    pub refinement: Vec<RefinementStep>,
    pub delta_extrapolated: Option<f64>,
}

impl MonotonicityReport {
    /// `Δ > 0` at the smallest `ε`, or its extrapolated value is positive.
    pub fn delta_positive(&self) -> bool {
        let direct = self.rows.last().is_some_and(|r| r.delta > 0.0);
        direct || self.delta_extrapolated.is_some_and(|d| d > 0.0)
    }
}

fn locate(ctx: &EpsilonContext, grid_points: usize) -> Result<LocatedKappa> {
    let (lo, hi) = ctx.auto_window();
    let records = kappa_sweep(ctx, &linspace(lo, hi, grid_points))?;
    let (a, b) = locator_bracket(&records, 1.0)?;
    locate_kappa_eps(ctx, a, b, 1.0)
}

/// Tabulates the normalized first eigenvalue at a located `κ_ε`.
pub fn monotonicity_row(ctx: &EpsilonContext, located: LocatedKappa) -> MonotonicityRow {
    let r = &located.record;
    let area_base = ctx.normalized_base / ctx.lambda1_base;
    let product = r.lambda1 * r.area_total;
    MonotonicityRow {
        epsilon: ctx.epsilon,
        kappa_eps: located.kappa,
        lambda1: r.lambda1,
        lambda1_base: ctx.lambda1_base,
        area: r.area_total,
        area_base,
        product,
        delta: product - ctx.normalized_base,
        deficit_ratio: (ctx.lambda1_base - r.lambda1) / ctx.epsilon,
        area_surplus: r.area_total - area_base,
        surplus_reference: 2.0 * PI * ctx.epsilon / (located.kappa * located.kappa),
        located,
    }
}

/// Locates `κ_ε` with `n₁/m₁ = 1` for every `ε` (descending) and tabulates
/// the normalized first eigenvalue. With `refine`, `Δ` at the smallest `ε`
/// is recomputed on a mesh with halved `h` and doubled angular and radial
/// counts, and Richardson-extrapolated assuming second order.
pub fn monotonicity_report(setup: &SweepSetup, epsilons: &[f64], grid_points: usize, refine: bool) -> Result<MonotonicityReport> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("ε list must be nonempty and strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let ctx = EpsilonContext::new(setup, eps)?;
        let located = locate(&ctx, grid_points)?;
        rows.push(monotonicity_row(&ctx, located));
    }
    let deficit_ratio_decreasing = rows.windows(2).all(|w| w[1].deficit_ratio < w[0].deficit_ratio);
    let surplus_ok = rows.iter().all(|r| r.area_surplus >= 0.8 * r.surplus_reference);
    let last = rows.last().expect("nonempty");
    let step = |mesh: &MeshSpec, row: &MonotonicityRow| RefinementStep {
        h: mesh.h,
        n_theta: mesh.n_theta,
        n_log: mesh.n_log,
        kappa_eps: row.kappa_eps,
        delta: row.delta,
    };
    let mut refinement = vec![step(&setup.mesh, last)];
    let mut delta_extrapolated = None;
    if refine {
        let mesh = MeshSpec { h: 0.5 * setup.mesh.h, n_theta: 2 * setup.mesh.n_theta, n_log: 2 * setup.mesh.n_log, ..setup.mesh };
        let fine_setup = SweepSetup { mesh, ..setup.clone() };
        let ctx = EpsilonContext::new(&fine_setup, last.epsilon)?;
        let k = last.kappa_eps;
        let located = locate_kappa_eps(&ctx, 0.9 * k, 1.1 * k, 1.0).or_else(|_| locate(&ctx, grid_points))?;
        let fine = monotonicity_row(&ctx, located);
        refinement.push(step(&mesh, &fine));
        delta_extrapolated = Some(fine.delta + (fine.delta - last.delta) / 3.0);
    }
    Ok(MonotonicityReport { rows, deficit_ratio_decreasing, surplus_ok, refinement, delta_extrapolated })
}

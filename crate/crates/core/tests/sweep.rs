use cusp_spectra::cusp::{neumann_eigenvalue, Attachment, CuspGeometry, CuspMode};
use cusp_spectra::error::Error;
use cusp_spectra::fem::SpectralResult;
use cusp_spectra::geometry::BaseSurface;
use cusp_spectra::quasimode::MeshSpec;
use cusp_spectra::sweep::*;

const MESH: MeshSpec = MeshSpec { h: 0.04, n_theta: 16, n_log: 8, quality_rows: true };

fn setup() -> SweepSetup {
    let s = BaseSurface::flat_torus(1.0, 1.5, Attachment::CrossCap).unwrap();
    SweepSetup::new(s, 0.4, 2, Attachment::CrossCap, MESH)
}

fn context(eps: f64) -> EpsilonContext {
    EpsilonContext::new(&setup(), eps).unwrap()
}

#[test]
fn point_seeds_are_reproducible_and_distinct() {
    assert_eq!(point_seed(7, 0.1, 4.0), point_seed(7, 0.1, 4.0));
    assert_ne!(point_seed(7, 0.1, 4.0), point_seed(7, 0.1, 4.5));
    assert_ne!(point_seed(7, 0.1, 4.0), point_seed(7, 0.05, 4.0));
    assert_ne!(point_seed(7, 0.1, 4.0), point_seed(8, 0.1, 4.0));
}

#[test]
fn linspace_hits_both_ends() {
    let v = linspace(1.0, 2.0, 5);
    assert_eq!(v, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    assert!(linspace(1.0, 2.0, 0).is_empty());
}

#[test]
fn window_must_bracket_the_crossing() {
    let ctx = context(0.1);
    let (lo, hi) = ctx.auto_window();
    assert!(ctx.lambda0_cusp(lo).unwrap() < ctx.lambda1_base);
    assert!(ctx.lambda0_cusp(hi).unwrap() > ctx.lambda1_base);
    assert!(hi * hi / 4.0 > ctx.lambda1_base);
    match kappa_sweep(&ctx, &[1.0, 1.5]) {
        Err(Error::Config(msg)) => assert!(msg.contains("try"), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(matches!(kappa_sweep(&ctx, &[hi, lo]), Err(Error::Config(_))));
}

#[test]
fn sweep_records_satisfy_the_spectral_bounds() {
    let ctx = context(0.1);
    let (lo, hi) = ctx.auto_window();
    let records = kappa_sweep(&ctx, &linspace(lo, hi, 9)).unwrap();
    assert_eq!(records.len(), 9);
    for r in &records {
        assert!(r.lambda1 <= r.lambda0_cusp, "κ {}: λ₁ {} > λ₀(C) {}", r.kappa, r.lambda1, r.lambda0_cusp);
        assert!(r.lambda2 - r.lambda1 > 1e-6, "κ {}: gap {}", r.kappa, r.lambda2 - r.lambda1);
        assert!(r.lambda0_cusp <= r.mu1_cusp);
        let m = r.masses.unwrap();
        assert!(m.n1 >= 0.0 && m.n2 >= 0.0);
        assert!(m.m1 * m.m1 + m.n1 * m.n1 <= 1.0 + 1e-6);
        assert!(m.m2 * m.m2 + m.n2 * m.n2 <= 1.0 + 1e-6);
        assert!(r.worst_residual < 1e-6);
    }
    // The cusp ground state carries u₁ at κ_lo and has left it at κ_hi.
    let (first, last) = (&records[0], &records[8]);
    assert!(first.cusp_mass1 > 0.9 && first.masses.unwrap().n1 > 0.9);
    assert!(last.cusp_mass1 < 0.1 && last.masses.unwrap().m1 * last.masses.unwrap().m1 >= 0.75);
    // Far below the crossing u₁, u₂ are the two interacting branches.
    assert!(DecompositionIdentities::new(first).unwrap().holds());
    let report = LimitReport::new(&[records]);
    assert!(report.worst_upper_excess <= 0.0);
    assert!(report.log_bound_constant > 0.0);
}

#[test]
fn sweeps_are_deterministic() {
    let ctx = context(0.1);
    let a = sweep_point(&ctx, 4.4).unwrap();
    let b = sweep_point(&ctx, 4.4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn locator_balances_the_masses() {
    let ctx = context(0.1);
    let (lo, hi) = ctx.auto_window();
    let records = kappa_sweep(&ctx, &linspace(lo, hi, 9)).unwrap();
    let (a, b) = locator_bracket(&records, 1.0).unwrap();
    let located = locate_kappa_eps(&ctx, a, b, 1.0).unwrap();
    let m = located.record.masses.unwrap();
    assert!((m.n1 / m.m1 - 1.0).abs() <= LOCATOR_TOL);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((m.m1 - s).abs() < 0.1 && (m.n1 - s).abs() < 0.1, "{m:?}");
    for w in located.transcript.windows(2) {
        let (w0, w1) = (w[0].hi - w[0].lo, w[1].hi - w[1].lo);
        assert!((w1 - 0.5 * w0).abs() < 1e-12 * w0);
    }
    assert!(matches!(locator_bracket(&records[..2], 1.0), Err(Error::Locator(_))));
    assert!(matches!(locate_kappa_eps(&ctx, lo, records[1].kappa, 1.0), Err(Error::Locator(_))));
}

fn synthetic(lambda: [f64; 4]) -> SpectralResult {
    let e = |i: usize| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
    SpectralResult {
        eigenvalues: lambda.to_vec(),
        eigenvectors: (0..4).map(e).collect(),
        residuals: vec![0.0; 4],
        region_masses: vec![(1.0, 0.0); 4],
        iterations: 1,
    }
}

#[test]
fn mass_decomposition_rejects_a_double_second_eigenvalue() {
    let ctx = context(0.1);
    let op = &ctx.problem.op;
    let zeros = vec![0.0; op.dim()];
    let r = synthetic([0.0, 1.0, 2.0, 2.0]);
    assert!(matches!(mass_decomposition(op, &r, &zeros, &zeros, 1e-10), Err(Error::Multiplicity(_))));
}

fn record(lambda1: f64, lambda2: f64, m: [f64; 4], beta: f64, mu1_cusp: f64, mu1_neumann: f64) -> SweepRecord {
    SweepRecord {
        epsilon: 0.01,
        kappa: 4.0,
        lambda1,
        lambda2,
        lambda3: lambda2 + 1.0,
        masses: Some(MassDecomposition { m1: m[0], n1: m[1], m2: m[2], n2: m[3], flipped: [false; 2] }),
        a0: 0.0,
        lambda0_cusp: lambda1,
        mu1_cusp,
        area_total: 1.0,
        beta: Some(beta),
        mu1_neumann,
        lambda1_base: 20.0,
        cusp_integral1: 0.0,
        cusp_mass1: 0.5,
        cusp_mass2: 0.5,
        gap: 0.1,
        tau: 0.25,
        interaction: true,
        seed: 0,
        worst_residual: 0.0,
    }
}

#[test]
fn neumann_inequality_evaluates_the_explicit_right_hand_side() {
    let r = record(10.0, 12.0, [0.6, 0.7, -0.7, 0.6], 0.5, 40.0, 15.0);
    let top: f64 = 10.0 + 0.25 * 12.0;
    let expected = top / 1.25 + (top - 1.25 * 40.0) / (40.0 * (0.6f64 - 0.35).powi(2)) * 12.0;
    match neumann_test_inequality(&r) {
        NeumannTest::Evaluated { lhs, rhs, holds } => {
            assert_eq!(lhs, 15.0);
            assert!((rhs - expected).abs() < 1e-12);
            assert_eq!(holds, lhs <= rhs * (1.0 + NEUMANN_SLACK));
        }
        other => panic!("{other:?}"),
    }
    // m₁ + βm₂ = 0 is the proviso.
    let r = record(10.0, 12.0, [0.5, 0.7, -1.0, 0.6], 0.5, 40.0, 15.0);
    assert!(matches!(neumann_test_inequality(&r), NeumannTest::Skipped(_)));
    // Outside the hypotheses: λ₂ above λ₁(Σ) − gap, or u₁ almost all in the cusp.
    let r = record(10.0, 19.95, [0.6, 0.7, -0.7, 0.6], 0.5, 40.0, 15.0);
    assert!(matches!(neumann_test_inequality(&r), NeumannTest::Skipped(_)));
    let r = record(10.0, 12.0, [0.05, 0.999, -0.7, 0.6], 0.5, 40.0, 15.0);
    assert!(matches!(neumann_test_inequality(&r), NeumannTest::Skipped(_)));
}

#[test]
fn cusp_dirichlet_ground_state_lies_below_the_first_neumann_value() {
    for (eps, kappa) in [(0.1, 3.0), (0.05, 5.0), (0.025, 8.0)] {
        let g = CuspGeometry::new(eps, kappa, f64::powf(eps, -0.4));
        let d = CuspMode::for_attachment(&g, Attachment::CrossCap, 0).eigenvalue;
        assert!(d <= neumann_eigenvalue(&g, 1));
    }
}

#[test]
fn monotonicity_report_rejects_unsorted_epsilons() {
    assert!(matches!(monotonicity_report(&setup(), &[0.05, 0.1], 5, false), Err(Error::Config(_))));
    assert!(matches!(monotonicity_report(&setup(), &[], 5, false), Err(Error::Config(_))));
}

#[test]
fn monotonicity_row_is_consistent() {
    let rep = monotonicity_report(&setup(), &[0.1], 9, false).unwrap();
    let r = &rep.rows[0];
    assert!((r.product - r.lambda1 * r.area).abs() < 1e-12);
    assert!((r.delta - (r.product - r.lambda1_base * r.area_base)).abs() < 1e-9);
    assert!(r.area_surplus >= 0.8 * r.surplus_reference);
    assert!((r.located.record.ratio().unwrap() - 1.0).abs() <= LOCATOR_TOL);
    assert_eq!(rep.refinement.len(), 1);
    assert!(rep.delta_extrapolated.is_none());
}

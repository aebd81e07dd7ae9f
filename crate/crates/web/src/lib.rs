//! Browser demo: closed-form cusp spectra, small κ sweeps and eigenfunction
//! views of the glued surface. Every operation returns a serializable view;
//! on `wasm32` each is exported as a function returning JSON.

use cusp_spectra::cusp::{Attachment, CuspGeometry, CuspMode, CuspParams};
use cusp_spectra::fem::{solve, SolverOptions};
use cusp_spectra::geometry::{BaseSurface, Region};
use cusp_spectra::quasimode::{GluedProblem, MeshSpec};
use cusp_spectra::sweep::{kappa_sweep, linspace, EpsilonContext, SweepSetup};
use cusp_spectra::Result;
use serde::Serialize;

/// Coarse mesh that keeps each solve well under a second in the browser.
pub const DEMO_MESH: MeshSpec = MeshSpec { h: 0.06, n_theta: 12, n_log: 6, quality_rows: true };
pub const DEMO_ALPHA: f64 = 0.4;
pub const DEMO_K: u32 = 2;
/// Samples per mode profile.
pub const PROFILE_SAMPLES: usize = 129;

fn torus(attachment: Attachment) -> Result<BaseSurface> {
    BaseSurface::flat_torus(1.0, 1.5, attachment)
}

fn setup(attachment: Attachment) -> Result<SweepSetup> {
    Ok(SweepSetup::new(torus(attachment)?, DEMO_ALPHA, DEMO_K, attachment, DEMO_MESH))
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeView {
    pub l: usize,
    pub t: f64,
    pub lambda: f64,
    pub flux_long: f64,
    pub flux_short: Option<f64>,
    /// Normalized mode at `log y` on the grid of [`CuspSpectrumView::log_y`].
    pub profile: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CuspSpectrumView {
    pub log_length: f64,
    /// Bottom `κ²/4` of the continuous spectrum of the infinite cusp.
    pub floor: f64,
    /// Lower bound for modes that are not rotationally symmetric.
    pub nonsymmetric_floor: f64,
    pub log_y: Vec<f64>,
    pub modes: Vec<ModeView>,
}

/// Closed-form rotationally symmetric modes `0..count` with their profiles.
pub fn cusp_spectrum(epsilon: f64, kappa: f64, alpha: f64, attachment: Attachment, count: usize) -> Result<CuspSpectrumView> {
    let g: CuspGeometry = CuspParams::new(epsilon, kappa, alpha, DEMO_K, attachment)?.geometry();
    let log_y = linspace(0.0, g.log_length, PROFILE_SAMPLES);
    let modes = (0..count)
        .map(|l| {
            let m = CuspMode::for_attachment(&g, attachment, l);
            ModeView {
                l,
                t: m.frequency,
                lambda: m.eigenvalue,
                flux_long: m.flux_long,
                flux_short: m.flux_short,
                profile: log_y.iter().map(|&s| m.value_at_log(s, true)).collect(),
            }
        })
        .collect();
    Ok(CuspSpectrumView { log_length: g.log_length, floor: g.spectral_floor(), nonsymmetric_floor: g.nonsymmetric_floor(), log_y, modes })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPointView {
    pub kappa: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda0_cusp: f64,
    pub cusp_mass1: f64,
    pub cusp_mass2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepView {
    pub epsilon: f64,
    pub lambda1_base: f64,
    pub kappa_cross: f64,
    pub points: Vec<SweepPointView>,
}

/// `λ₁..λ₃` and cusp masses across the automatic κ window on the demo mesh.
pub fn sweep(epsilon: f64, points: usize, attachment: Attachment) -> Result<SweepView> {
    let ctx = EpsilonContext::new(&setup(attachment)?, epsilon)?;
    let (lo, hi) = ctx.auto_window();
    let records = kappa_sweep(&ctx, &linspace(lo, hi, points))?;
    Ok(SweepView {
        epsilon,
        lambda1_base: ctx.lambda1_base,
        kappa_cross: ctx.kappa_cross,
        points: records
            .iter()
            .map(|r| SweepPointView {
                kappa: r.kappa,
                lambda1: r.lambda1,
                lambda2: r.lambda2,
                lambda3: r.lambda3,
                lambda0_cusp: r.lambda0_cusp,
                cusp_mass1: r.cusp_mass1,
                cusp_mass2: r.cusp_mass2,
            })
            .collect(),
    })
}

/// Triangles of one chart: three `(x, y)` corners and three nodal values each.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PatchView {
    pub xy: Vec<f64>,
    pub values: Vec<f64>,
}

impl PatchView {
    pub fn triangles(&self) -> usize {
        self.values.len() / 3
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenfunctionView {
    pub index: usize,
    pub lambda: f64,
    pub mass_base: f64,
    pub mass_cusp: f64,
    /// Torus chart `[0, 1] × [0, 1.5]`.
    pub base: PatchView,
    /// Cusp strip with `x = θ/2π` and `y = log y / log R`.
    pub cusp: PatchView,
    /// Lowest eigenvalues up to `index`.
    pub spectrum: Vec<f64>,
}

/// The `index`-th eigenfunction of the glued demo surface.
pub fn eigenfunction(epsilon: f64, kappa: f64, index: usize, attachment: Attachment) -> Result<EigenfunctionView> {
    let params = CuspParams::new(epsilon, kappa, DEMO_ALPHA, DEMO_K, attachment)?;
    let problem = GluedProblem::build(params, torus(attachment)?, DEMO_MESH)?;
    let res = solve(&problem.op, &SolverOptions::new(index + 1))?;
    let values = problem.op.to_vertices(&res.eigenvectors[index]);
    let mesh = &problem.glued;
    let (width, log_length) = (2.0 * std::f64::consts::PI * epsilon, params.log_length());
    let (mut base, mut cusp) = (PatchView::default(), PatchView::default());
    for t in &mesh.triangles {
        let (patch, cusp_region) = if t.region == Region::Cusp { (&mut cusp, true) } else { (&mut base, false) };
        for v in t.vertices {
            let p = mesh.vertices[v];
            let (x, y) = if cusp_region { (p.u / width, p.v.ln() / log_length) } else { (p.u, p.v) };
            patch.xy.extend([x, y]);
            patch.values.push(values[v]);
        }
    }
    let (mass_base, mass_cusp) = res.region_masses[index];
    Ok(EigenfunctionView { index, lambda: res.eigenvalues[index], mass_base, mass_cusp, base, cusp, spectrum: res.eigenvalues })
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use super::*;
    use wasm_bindgen::prelude::*;

    fn json<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
        let v = r.map_err(|e| JsError::new(&e.to_string()))?;
        serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
    }

    fn attachment(name: &str) -> std::result::Result<Attachment, JsError> {
        name.parse().map_err(|e: cusp_spectra::Error| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen]
    pub fn cusp_spectrum_json(epsilon: f64, kappa: f64, alpha: f64, attachment_name: &str, count: usize) -> std::result::Result<String, JsError> {
        json(cusp_spectrum(epsilon, kappa, alpha, attachment(attachment_name)?, count))
    }

    #[wasm_bindgen]
    pub fn sweep_json(epsilon: f64, points: usize, attachment_name: &str) -> std::result::Result<String, JsError> {
        json(sweep(epsilon, points, attachment(attachment_name)?))
    }

    #[wasm_bindgen]
    pub fn eigenfunction_json(epsilon: f64, kappa: f64, index: usize, attachment_name: &str) -> std::result::Result<String, JsError> {
        json(eigenfunction(epsilon, kappa, index, attachment(attachment_name)?))
    }
}

//! Subcommand implementations.

use crate::config::{Experiment, RunConfig, ValidConfig};
use crate::svg::{LinePlot, Series};
use crate::tables::{self, CuspSpecRow, QuasimodeRow, RecordRow, SpectrumRow, SummaryRow};
use anyhow::{anyhow, bail, Context, Result};
use cusp_spectra::cusp::{kappa_for_eigenvalue, Attachment, CuspGeometry, CuspMode, CuspParams};
use cusp_spectra::fem::{assemble, solve, BoundaryCondition, SolverOptions, SpectralResult};
use cusp_spectra::geometry::io::write_mesh;
use cusp_spectra::geometry::{BaseSurface, ChartedMesh};
use cusp_spectra::quasimode::{
    cusp_quasimode, first_eigenspace, green_function, surface_quasimode, CuspQuasimodeInputs, GluedProblem, MeshSpec, Quasimode,
};
use cusp_spectra::sweep::{
    kappa_sweep, linspace, locate_kappa_eps, locator_bracket, monotonicity_row, EndpointCheck, EpsilonContext, LimitReport,
    LocatedKappa, SweepRecord,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Closed-form rotationally symmetric modes `0..count` of the cusp.
pub fn cusp_spec_rows(g: &CuspGeometry, attachment: Attachment, count: usize) -> Vec<CuspSpecRow> {
    (0..count)
        .map(|l| {
            let m = CuspMode::for_attachment(g, attachment, l);
            CuspSpecRow { l, t: m.frequency, lambda: m.eigenvalue, l2_norm_sq: m.l2_norm_sq, flux_long: m.flux_long, flux_short: m.flux_short }
        })
        .collect()
}

/// `torus:a,b` or `sphere:r`.
pub fn parse_surface(spec: &str, attachment: Attachment) -> Result<BaseSurface> {
    let (kind, dims) = spec.split_once(':').ok_or_else(|| anyhow!("surface '{spec}' is not torus:a,b or sphere:r"))?;
    let dims: Vec<f64> = dims.split(',').map(|d| d.trim().parse::<f64>()).collect::<Result<_, _>>().with_context(|| format!("surface '{spec}'"))?;
    Ok(match (kind, dims.as_slice()) {
        ("torus", &[a, b]) => BaseSurface::flat_torus(a, b, attachment)?,
        ("sphere", &[r]) => BaseSurface::round_sphere(r, attachment)?,
        _ => bail!("surface '{spec}' is not torus:a,b or sphere:r"),
    })
}

/// Which mesh of a glued problem to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MeshPart {
    /// Base with the cusp attached.
    Glued,
    /// Closed base surface.
    Filled,
    /// Base with the balls removed.
    Holed,
    /// Cusp alone.
    Cusp,
}

pub fn mesh_part(problem: &GluedProblem, part: MeshPart) -> &ChartedMesh {
    match part {
        MeshPart::Glued => &problem.glued,
        MeshPart::Filled => &problem.filled,
        MeshPart::Holed => &problem.holed,
        MeshPart::Cusp => &problem.cusp,
    }
}

/// One line per mesh statistic.
pub fn mesh_summary(mesh: &ChartedMesh) -> String {
    format!(
        "vertices {}\ntriangles {}\neuler_characteristic {}\norientable {}\ncomponents {}\narea {}\nmin_angle_deg {:.2}\n",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.euler_characteristic(),
        mesh.is_orientable(),
        mesh.component_count(),
        mesh.area(),
        mesh.min_angle_deg(|_| true),
    )
}

pub fn spectrum_rows(res: &SpectralResult) -> Vec<SpectrumRow> {
    (0..res.len())
        .map(|i| SpectrumRow {
            index: i,
            lambda: res.eigenvalues[i],
            residual: res.residuals[i],
            mass_base: res.region_masses[i].0,
            mass_cusp: res.region_masses[i].1,
        })
        .collect()
}

pub fn solve_mesh(mesh: &ChartedMesh, bc: &BoundaryCondition, opts: &SolverOptions) -> Result<Vec<SpectrumRow>> {
    let op = assemble(mesh, bc)?;
    Ok(spectrum_rows(&solve(&op, opts)?))
}

fn quasimode_row(q: &Quasimode, p: &CuspParams) -> QuasimodeRow {
    QuasimodeRow {
        kind: q.kind.name().into(),
        l: q.kind.index(),
        epsilon: p.epsilon,
        kappa: p.kappa,
        target_lambda: q.target_lambda,
        delta: q.delta,
        a: q.a,
        e_lambda: q.e_lambda,
        e_eps_lambda: q.e_eps_lambda,
    }
}

/// Surface quasimodes of the first base eigenspace and the first cusp
/// quasimodes at one `ε`, with `κ` chosen so that `λ₀(C)` hits the
/// configured target.
pub fn quasimode_rows(cfg: &ValidConfig, epsilon: f64) -> Result<Vec<QuasimodeRow>> {
    let c = &cfg.raw.cusp;
    let x = &cfg.raw.experiments;
    let kappa = kappa_for_eigenvalue(epsilon, epsilon.powf(-c.alpha), cfg.attachment, 0, x.quasimode_lambda);
    let params = CuspParams::new(epsilon, kappa, c.alpha, c.k, cfg.attachment)?;
    let problem = GluedProblem::build(params, cfg.surface()?, cfg.mesh_spec())?;
    let seed = cfg.raw.solver.seed;
    let green = green_function(&problem.filled, &problem.filled_op, &problem.surface, 0)?;
    let space = first_eigenspace(&problem.filled_op, &problem.surface, green.pole_dof, seed)?;
    let mut rows = Vec::new();
    for i in 0..space.multiplicity() {
        rows.push(quasimode_row(&surface_quasimode(&problem, &space, i)?, &params));
    }
    let inputs = CuspQuasimodeInputs { green: &green, space: &space, seed };
    for l in 0..x.cusp_modes {
        let (q, _) = cusp_quasimode(&problem, &inputs, l)?;
        rows.push(quasimode_row(&q, &params));
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamsEntry {
    pub epsilon: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub k: u32,
    pub attachment: &'static str,
    pub log_length: f64,
    pub hole_radius: f64,
}

impl From<&CuspParams> for ParamsEntry {
    fn from(p: &CuspParams) -> Self {
        Self {
            epsilon: p.epsilon,
            kappa: p.kappa,
            alpha: p.alpha,
            k: p.k,
            attachment: p.attachment.name(),
            log_length: p.log_length(),
            hole_radius: p.hole_radius(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowEntry {
    pub lo: f64,
    pub hi: f64,
    pub source: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocatorEntry {
    pub located: bool,
    pub kappa_eps: Option<f64>,
    pub bisection_steps: usize,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonEntry {
    pub epsilon: f64,
    /// Parameters at the crossing scale `κ_c`.
    pub cusp_params: ParamsEntry,
    pub lambda1_base: f64,
    pub mu1_neumann: f64,
    pub kappa_cross: f64,
    pub kappa_window: Option<WindowEntry>,
    pub point_seeds: Vec<u64>,
    pub locator: Option<LocatorEntry>,
    pub setup_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentEntry {
    pub name: &'static str,
    pub status: &'static str,
    pub failures: Vec<String>,
    pub artifacts: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub threads: usize,
    pub config_path: Option<PathBuf>,
    pub config: RunConfig,
    pub epsilons: Vec<EpsilonEntry>,
    pub experiments: Vec<ExperimentEntry>,
    pub total_wall_seconds: f64,
}

/// Outcome of a full run; the manifest is already written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub failed: Vec<&'static str>,
}

/// File stem for one `ε`.
pub fn eps_stem(epsilon: f64) -> String {
    format!("eps_{epsilon}")
}

fn rel(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

struct Step {
    artifacts: Vec<String>,
    failures: Vec<String>,
}

impl Step {
    fn new() -> Self {
        Self { artifacts: Vec::new(), failures: Vec::new() }
    }
}

fn sweep_epsilon(ctx: &EpsilonContext, cfg: &ValidConfig, entry: &mut EpsilonEntry) -> Result<(Vec<SweepRecord>, SummaryRow)> {
    let (lo, hi) = cfg.kappa_window.unwrap_or_else(|| ctx.auto_window());
    entry.kappa_window = Some(WindowEntry { lo, hi, source: if cfg.kappa_window.is_some() { "config" } else { "auto" } });
    let records = kappa_sweep(ctx, &linspace(lo, hi, cfg.raw.cusp.kappa_points))?;
    entry.point_seeds = records.iter().map(|r| r.seed).collect();
    let ends = EndpointCheck::new(&records).expect("at least two points");
    let report = LimitReport::new(std::slice::from_ref(&records));
    let mut summary = SummaryRow {
        epsilon: ctx.epsilon,
        kappa_lo: lo,
        kappa_hi: hi,
        points: records.len(),
        kappa_cross: ctx.kappa_cross,
        lambda1_base: ctx.lambda1_base,
        mu1_neumann: ctx.mu1_neumann,
        rel_lo: ends.rel_lo,
        rel_hi: ends.rel_hi,
        cusp_mass_lo: ends.cusp_mass_lo,
        cusp_mass_hi: ends.cusp_mass_hi,
        min_gap: report.min_gap,
        interaction_points: report.interaction_points,
        kappa_eps: None,
        lambda1_at_kappa_eps: None,
        deficit_ratio: None,
        delta: None,
        area_surplus: None,
        surplus_reference: None,
    };
    if cfg.raw.experiments.locate {
        let located: cusp_spectra::Result<LocatedKappa> =
            locator_bracket(&records, 1.0).and_then(|(a, b)| locate_kappa_eps(ctx, a, b, 1.0));
        entry.locator = Some(match located {
            Ok(l) => {
                let steps = l.transcript.len();
                let kappa = l.kappa;
                summary.set_located(&monotonicity_row(ctx, l));
                LocatorEntry { located: true, kappa_eps: Some(kappa), bisection_steps: steps, reason: None }
            }
            Err(e) => LocatorEntry { located: false, kappa_eps: None, bisection_steps: 0, reason: Some(e.to_string()) },
        });
    }
    Ok((records, summary))
}

/// Runs every selected experiment and writes the artifact tree under `out`:
/// `schema.md`, `manifest.json`, `meshes/`, `spectra/`, `sweep/`,
/// `quasimodes/` and `report/`.
pub fn run(cfg: &ValidConfig, out: &Path, config_path: Option<&Path>) -> Result<RunOutcome> {
    let start = Instant::now();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("schema.md"), tables::schema_markdown())?;
    let epsilons = cfg.raw.cusp.epsilons.clone();
    let mut experiments = Vec::new();
    let mut entries: Vec<EpsilonEntry> = Vec::new();

    let needs_context = [Experiment::Meshes, Experiment::Spectra, Experiment::Sweep].iter().any(|&e| cfg.runs(e));
    let mut contexts: BTreeMap<usize, EpsilonContext> = BTreeMap::new();
    let mut context_failures = Vec::new();
    if needs_context {
        let setup = cfg.sweep_setup()?;
        for (i, &eps) in epsilons.iter().enumerate() {
            let t = Instant::now();
            match EpsilonContext::new(&setup, eps) {
                Ok(ctx) => {
                    entries.push(EpsilonEntry {
                        epsilon: eps,
                        cusp_params: (&ctx.problem.params).into(),
                        lambda1_base: ctx.lambda1_base,
                        mu1_neumann: ctx.mu1_neumann,
                        kappa_cross: ctx.kappa_cross,
                        kappa_window: None,
                        point_seeds: Vec::new(),
                        locator: None,
                        setup_seconds: t.elapsed().as_secs_f64(),
                    });
                    contexts.insert(i, ctx);
                }
                Err(e) => context_failures.push(format!("epsilon {eps}: setup failed: {e}")),
            }
        }
    }
    let entry_index = |eps: f64, entries: &[EpsilonEntry]| entries.iter().position(|e| e.epsilon == eps);

    let mut sweep_rows: Option<(Vec<RecordRow>, Vec<SummaryRow>)> = None;
    for exp in [Experiment::Meshes, Experiment::Spectra, Experiment::Sweep, Experiment::Quasimodes, Experiment::Report] {
        if !cfg.runs(exp) {
            continue;
        }
        let t = Instant::now();
        let mut step = Step::new();
        if exp != Experiment::Quasimodes && exp != Experiment::Report {
            step.failures.extend(context_failures.iter().cloned());
        }
        match exp {
            Experiment::Meshes => {
                let dir = out.join("meshes");
                std::fs::create_dir_all(&dir)?;
                for ctx in contexts.values() {
                    let p = dir.join(format!("{}.mesh", eps_stem(ctx.epsilon)));
                    std::fs::write(&p, write_mesh(&ctx.problem.glued))?;
                    step.artifacts.push(rel(out, &p));
                }
            }
            Experiment::Spectra => {
                let dir = out.join("spectra");
                std::fs::create_dir_all(&dir)?;
                let s = &cfg.raw.solver;
                for ctx in contexts.values() {
                    let opts = SolverOptions::new(s.nev).with_tol(s.tol).with_seed(s.seed);
                    match solve(&ctx.problem.op, &opts) {
                        Ok(res) => {
                            let p = dir.join(format!("{}.csv", eps_stem(ctx.epsilon)));
                            tables::write_csv(&p, &spectrum_rows(&res), &tables::SPECTRUM)?;
                            step.artifacts.push(rel(out, &p));
                        }
                        Err(e) => step.failures.push(format!("epsilon {}: {e}", ctx.epsilon)),
                    }
                }
            }
            Experiment::Sweep => {
                let dir = out.join("sweep");
                std::fs::create_dir_all(&dir)?;
                let (mut records, mut summary) = (Vec::new(), Vec::new());
                for ctx in contexts.values() {
                    let k = entry_index(ctx.epsilon, &entries).expect("entry per context");
                    match sweep_epsilon(ctx, cfg, &mut entries[k]) {
                        Ok((r, s)) => {
                            records.extend(r.iter().map(RecordRow::from));
                            summary.push(s);
                        }
                        Err(e) => step.failures.push(format!("epsilon {}: {e}", ctx.epsilon)),
                    }
                }
                let (pr, ps) = (dir.join("records.csv"), dir.join("summary.csv"));
                tables::write_csv(&pr, &records, &tables::RECORDS)?;
                tables::write_csv(&ps, &summary, &tables::SUMMARY)?;
                step.artifacts.extend([rel(out, &pr), rel(out, &ps)]);
                sweep_rows = Some((records, summary));
            }
            Experiment::Quasimodes => {
                let dir = out.join("quasimodes");
                std::fs::create_dir_all(&dir)?;
                let mut rows = Vec::new();
                for &eps in &epsilons {
                    match quasimode_rows(cfg, eps) {
                        Ok(r) => rows.extend(r),
                        Err(e) => step.failures.push(format!("epsilon {eps}: {e}")),
                    }
                }
                let p = dir.join("quasimodes.csv");
                tables::write_csv(&p, &rows, &tables::QUASIMODES)?;
                step.artifacts.push(rel(out, &p));
            }
            Experiment::Report => match &sweep_rows {
                Some((records, summary)) => {
                    let dir = out.join("report");
                    step.artifacts.extend(write_report(&dir, records, Some(summary))?.iter().map(|p| rel(out, p)));
                }
                None => step.failures.push("no sweep records to plot".into()),
            },
        }
        experiments.push(ExperimentEntry {
            name: exp.name(),
            status: if step.failures.is_empty() { "ok" } else { "failed" },
            failures: step.failures,
            artifacts: step.artifacts,
            wall_seconds: t.elapsed().as_secs_f64(),
        });
    }
    let failed = experiments.iter().filter(|e| e.status != "ok").map(|e| e.name).collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        core_version: cusp_spectra::VERSION,
        threads: rayon::current_num_threads(),
        config_path: config_path.map(Path::to_path_buf),
        config: cfg.raw.clone(),
        epsilons: entries,
        experiments,
        total_wall_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { manifest, failed })
}

/// Rows grouped by `ε` in order of first appearance.
fn by_epsilon(records: &[RecordRow]) -> Vec<(f64, Vec<&RecordRow>)> {
    let mut groups: Vec<(f64, Vec<&RecordRow>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(e, _)| *e == r.epsilon) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.epsilon, vec![r])),
        }
    }
    groups
}

/// `(ε, (λ₁(Σ) − λ₁)/ε)` at the located `κ_ε` when a summary is given,
/// otherwise at the grid point with `n₁/m₁` closest to 1.
pub fn deficit_points(records: &[RecordRow], summary: Option<&[SummaryRow]>) -> Vec<(f64, f64)> {
    if let Some(s) = summary {
        let pts: Vec<(f64, f64)> = s.iter().filter_map(|r| Some((r.epsilon, r.deficit_ratio?))).collect();
        if !pts.is_empty() {
            return pts;
        }
    }
    by_epsilon(records)
        .into_iter()
        .filter_map(|(eps, rows)| {
            let balance = |r: &&RecordRow| Some((r.n1? / r.m1? - 1.0).abs()).filter(|v| v.is_finite());
            let best = rows.iter().filter(|r| balance(r).is_some()).min_by(|a, b| balance(a).partial_cmp(&balance(b)).expect("finite"))?;
            Some((eps, (best.lambda1_base - best.lambda1) / eps))
        })
        .collect()
}

/// The three sweep plots.
pub fn report_plots(records: &[RecordRow], summary: Option<&[SummaryRow]>) -> Vec<(&'static str, LinePlot)> {
    let groups = by_epsilon(records);
    let series = |f: &dyn Fn(&RecordRow) -> f64, label: &str, dashed: bool| -> Vec<Series> {
        groups
            .iter()
            .map(|(eps, rows)| Series { name: format!("{label} ε={eps}"), points: rows.iter().map(|r| (r.kappa, f(r))).collect(), dashed })
            .collect()
    };
    let mut lambdas = series(&|r| r.lambda1, "λ₁", false);
    lambdas.extend(series(&|r| r.lambda2, "λ₂", true));
    let mut masses = series(&|r| r.cusp_mass1, "u₁", false);
    masses.extend(series(&|r| r.cusp_mass2, "u₂", true));
    vec![
        (
            "lambda_vs_kappa.svg",
            LinePlot { title: "λ₁, λ₂ against κ".into(), x_label: "κ".into(), y_label: "eigenvalue".into(), log_x: false, series: lambdas },
        ),
        (
            "masses_vs_kappa.svg",
            LinePlot { title: "Cusp mass of u₁, u₂ against κ".into(), x_label: "κ".into(), y_label: "∫_C u²".into(), log_x: false, series: masses },
        ),
        (
            "deficit_vs_epsilon.svg",
            LinePlot {
                title: "Deficit (λ₁(Σ) − λ₁)/ε at the balanced κ".into(),
                x_label: "ε".into(),
                y_label: "deficit / ε".into(),
                log_x: true,
                series: vec![Series { name: "deficit/ε".into(), points: deficit_points(records, summary), dashed: false }],
            },
        ),
    ]
}

pub fn write_report(dir: &Path, records: &[RecordRow], summary: Option<&[SummaryRow]>) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        bail!("no sweep records to plot");
    }
    std::fs::create_dir_all(dir)?;
    report_plots(records, summary)
        .into_iter()
        .map(|(name, plot)| {
            let p = dir.join(name);
            std::fs::write(&p, plot.render())?;
            Ok(p)
        })
        .collect()
}

/// Default mesh resolution of the `mesh` subcommand.
pub const DEFAULT_MESH: MeshSpec = MeshSpec { h: 0.04, n_theta: 16, n_log: 8, quality_rows: true };

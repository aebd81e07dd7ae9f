//! CSV rows of every emitted table and the generated column schema.

use anyhow::{Context, Result};
use cusp_spectra::sweep::{neumann_test_inequality, MonotonicityRow, NeumannTest, SweepRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// One rotationally symmetric cusp mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspSpecRow {
    pub l: usize,
    pub t: f64,
    pub lambda: f64,
    pub l2_norm_sq: f64,
    pub flux_long: f64,
    pub flux_short: Option<f64>,
}

/// One discrete eigenpair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub lambda: f64,
    pub residual: f64,
    pub mass_base: f64,
    pub mass_cusp: f64,
}

/// One quasimode and its measured defect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeRow {
    pub kind: String,
    pub l: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub target_lambda: f64,
    pub delta: f64,
    pub a: Option<f64>,
    pub e_lambda: Option<f64>,
    pub e_eps_lambda: Option<f64>,
}

/// One grid point of a κ sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub epsilon: f64,
    pub kappa: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub m1: Option<f64>,
    pub n1: Option<f64>,
    pub m2: Option<f64>,
    pub n2: Option<f64>,
    pub a0: f64,
    pub lambda0_cusp: f64,
    pub mu1_cusp: f64,
    pub area_total: f64,
    pub beta: Option<f64>,
    pub mu1_neumann: f64,
    pub lambda1_base: f64,
    pub cusp_integral1: f64,
    pub cusp_mass1: f64,
    pub cusp_mass2: f64,
    pub gap: f64,
    pub tau: f64,
    pub interaction: bool,
    pub neumann_status: String,
    pub neumann_lhs: Option<f64>,
    pub neumann_rhs: Option<f64>,
    pub seed: u64,
    pub worst_residual: f64,
}

impl From<&SweepRecord> for RecordRow {
    fn from(r: &SweepRecord) -> Self {
        let m = r.masses;
        let (neumann_status, neumann_lhs, neumann_rhs) = match neumann_test_inequality(r) {
            NeumannTest::Evaluated { lhs, rhs, holds } => ((if holds { "holds" } else { "fails" }).into(), Some(lhs), Some(rhs)),
            NeumannTest::Skipped(_) => ("skipped".into(), None, None),
        };
        Self {
            epsilon: r.epsilon,
            kappa: r.kappa,
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            lambda3: r.lambda3,
            m1: m.map(|m| m.m1),
            n1: m.map(|m| m.n1),
            m2: m.map(|m| m.m2),
            n2: m.map(|m| m.n2),
            a0: r.a0,
            lambda0_cusp: r.lambda0_cusp,
            mu1_cusp: r.mu1_cusp,
            area_total: r.area_total,
            beta: r.beta,
            mu1_neumann: r.mu1_neumann,
            lambda1_base: r.lambda1_base,
            cusp_integral1: r.cusp_integral1,
            cusp_mass1: r.cusp_mass1,
            cusp_mass2: r.cusp_mass2,
            gap: r.gap,
            tau: r.tau,
            interaction: r.interaction,
            neumann_status,
            neumann_lhs,
            neumann_rhs,
            seed: r.seed,
            worst_residual: r.worst_residual,
        }
    }
}

/// Per-ε summary of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub epsilon: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub points: usize,
    pub kappa_cross: f64,
    pub lambda1_base: f64,
    pub mu1_neumann: f64,
    pub rel_lo: f64,
    pub rel_hi: f64,
    pub cusp_mass_lo: f64,
    pub cusp_mass_hi: f64,
    pub min_gap: f64,
    pub interaction_points: usize,
    pub kappa_eps: Option<f64>,
    pub lambda1_at_kappa_eps: Option<f64>,
    pub deficit_ratio: Option<f64>,
    pub delta: Option<f64>,
    pub area_surplus: Option<f64>,
    pub surplus_reference: Option<f64>,
}

impl SummaryRow {
    pub fn set_located(&mut self, row: &MonotonicityRow) {
        self.kappa_eps = Some(row.kappa_eps);
        self.lambda1_at_kappa_eps = Some(row.lambda1);
        self.deficit_ratio = Some(row.deficit_ratio);
        self.delta = Some(row.delta);
        self.area_surplus = Some(row.area_surplus);
        self.surplus_reference = Some(row.surplus_reference);
    }
}

pub struct TableSchema {
    pub file: &'static str,
    pub about: &'static str,
    pub columns: &'static [(&'static str, &'static str)],
}

pub const CUSP_SPEC: TableSchema = TableSchema {
    file: "cusp-spec output",
    about: "Rotationally symmetric eigenmodes of the truncated cusp, from the closed forms.",
    columns: &[
        ("l", "mode index, from 0"),
        ("t", "frequency; the eigenvalue is kappa^2/4 + t^2"),
        ("lambda", "eigenvalue"),
        ("l2_norm_sq", "squared L2 norm of the unnormalized mode in the epsilon-scaled metric"),
        ("flux_long", "minus the integral of the outward normal derivative of the normalized mode over y = 1"),
        ("flux_short", "same over y = R; empty for a cross cap"),
    ],
};

pub const SPECTRUM: TableSchema = TableSchema {
    file: "solve output, spectra/eps_<epsilon>.csv",
    about: "Lowest (or nearest to a shift) discrete eigenpairs of the positive Laplacian.",
    columns: &[
        ("index", "position in ascending order, from 0"),
        ("lambda", "eigenvalue"),
        ("residual", "relative residual |Kx - lambda Mx| / (|lambda| + 1) in the inverse mass norm"),
        ("mass_base", "integral of u^2 over the base surface (mass-normalized u)"),
        ("mass_cusp", "integral of u^2 over the cusp"),
    ],
};

pub const QUASIMODES: TableSchema = TableSchema {
    file: "quasimode output, quasimodes/quasimodes.csv",
    about: "Quasimodes of the glued surface and their dual-norm eigen-defects.",
    columns: &[
        ("kind", "surface (extended base eigenfunction) or cusp (Green's-function extension of a cusp mode)"),
        ("l", "index within the first base eigenspace, or cusp mode index"),
        ("epsilon", "cusp thickness"),
        ("kappa", "curvature scale, chosen so that the ground cusp eigenvalue hits the configured target"),
        ("target_lambda", "eigenvalue the quasimode approximates"),
        ("delta", "dual W^{1,2} norm of (Laplacian - target_lambda) applied to the unit-mass quasimode"),
        ("a", "closed-form boundary flux of the cusp mode; empty for surface quasimodes"),
        ("e_lambda", "regular value of H_lambda at the pole: limit of H_lambda - log(1/r)/(2 pi); cusp rows only"),
        ("e_eps_lambda", "2 pi e_lambda / log(1/hole radius); cusp rows only"),
    ],
};

pub const RECORDS: TableSchema = TableSchema {
    file: "sweep/records.csv",
    about: "One row per (epsilon, kappa) grid point of the sweep. u1, u2 are the first two nonconstant eigenfunctions; phi0 is the first base eigenfunction nonzero at the attachment point, psi0 the normalized cusp ground state.",
    columns: &[
        ("epsilon", "cusp thickness"),
        ("kappa", "curvature scale"),
        ("lambda1", "first nonzero eigenvalue of the glued surface"),
        ("lambda2", "second nonzero eigenvalue"),
        ("lambda3", "third nonzero eigenvalue"),
        ("m1", "integral of u1 phi0 over the base; empty when lambda2 = lambda3"),
        ("n1", "integral of u1 psi0 over the cusp, made nonnegative by the sign of u1"),
        ("m2", "integral of u2 phi0 over the base"),
        ("n2", "integral of u2 psi0 over the cusp, nonnegative"),
        ("a0", "closed-form boundary flux of the cusp ground state"),
        ("lambda0_cusp", "closed-form Dirichlet ground eigenvalue of the cusp"),
        ("mu1_cusp", "closed-form first nonzero Neumann eigenvalue of the cusp"),
        ("area_total", "discrete area of the glued surface"),
        ("beta", "beta with integral over the cusp of u1 + beta u2 equal to zero; empty when undefined"),
        ("mu1_neumann", "first nonzero Neumann eigenvalue of the base minus the hole"),
        ("lambda1_base", "discrete first eigenvalue of the closed base surface"),
        ("cusp_integral1", "integral of u1 over the cusp"),
        ("cusp_mass1", "integral of u1^2 over the cusp"),
        ("cusp_mass2", "integral of u2^2 over the cusp"),
        ("gap", "epsilon^(k/4), the required distance of lambda2 below lambda1_base"),
        ("tau", "exponent slack of the interaction-regime test"),
        ("interaction", "whether lambda2 <= min(lambda0_cusp + epsilon^(3 alpha/2 + 1/2 - tau), lambda1_base - gap)"),
        ("neumann_status", "holds, fails or skipped: the Neumann test-function inequality at this point"),
        ("neumann_lhs", "mu1_neumann when evaluated"),
        ("neumann_rhs", "right-hand side of the inequality when evaluated"),
        ("seed", "eigensolver seed of this point"),
        ("worst_residual", "largest relative eigenpair residual of the solve"),
    ],
};

pub const SUMMARY: TableSchema = TableSchema {
    file: "sweep/summary.csv",
    about: "One row per epsilon of the sweep.",
    columns: &[
        ("epsilon", "cusp thickness"),
        ("kappa_lo", "lower end of the resolved kappa window"),
        ("kappa_hi", "upper end"),
        ("points", "grid points in the window"),
        ("kappa_cross", "kappa at which lambda0_cusp equals lambda1_base"),
        ("lambda1_base", "discrete first eigenvalue of the closed base surface"),
        ("mu1_neumann", "first nonzero Neumann eigenvalue of the base minus the hole"),
        ("rel_lo", "|lambda1 / lambda0_cusp - 1| at kappa_lo"),
        ("rel_hi", "|lambda1 / lambda1_base - 1| at kappa_hi"),
        ("cusp_mass_lo", "cusp mass of u1 at kappa_lo"),
        ("cusp_mass_hi", "cusp mass of u1 at kappa_hi"),
        ("min_gap", "smallest lambda2 - lambda1 over the grid"),
        ("interaction_points", "grid points inside the interaction regime"),
        ("kappa_eps", "kappa with n1 = m1, found by bisection; empty when not located"),
        ("lambda1_at_kappa_eps", "lambda1 at kappa_eps"),
        ("deficit_ratio", "(lambda1_base - lambda1) / epsilon at kappa_eps"),
        ("delta", "lambda1 area - lambda1_base area(base) at kappa_eps"),
        ("area_surplus", "area of the glued surface minus the base area"),
        ("surplus_reference", "2 pi epsilon / kappa_eps^2"),
    ],
};

pub const ALL: [&TableSchema; 5] = [&CUSP_SPEC, &SPECTRUM, &QUASIMODES, &RECORDS, &SUMMARY];

/// Markdown description of every table.
pub fn schema_markdown() -> String {
    let mut s = String::from("# CSV schema\n\nEmpty fields are undefined values. Floats use shortest round-trip formatting.\n");
    for t in ALL {
        s.push_str(&format!("\n## {}\n\n{}\n\n| column | meaning |\n|---|---|\n", t.file, t.about));
        for (c, d) in t.columns {
            s.push_str(&format!("| {c} | {d} |\n"));
        }
    }
    s
}

pub fn to_csv<T: Serialize>(rows: &[T], header: &[(&str, &str)]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header.iter().map(|(c, _)| *c))?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], schema: &TableSchema) -> Result<()> {
    let bytes = to_csv(rows, schema.columns)?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn emit_csv<T: Serialize>(out: Option<&Path>, rows: &[T], schema: &TableSchema) -> Result<()> {
    match out {
        Some(p) => write_csv(p, rows, schema),
        None => Ok(std::io::stdout().write_all(&to_csv(rows, schema.columns)?)?),
    }
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.with_context(|| format!("parsing {}", path.display()))).collect()
}

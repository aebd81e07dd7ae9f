//! Run configuration: a TOML file with sections `base`, `cusp`, `solver`,
//! `mesh`, `experiments` and `output`.

use cusp_spectra::cusp::{Attachment, ALPHA_MAX, ALPHA_MIN};
use cusp_spectra::geometry::BaseSurface;
use cusp_spectra::quasimode::MeshSpec;
use cusp_spectra::sweep::{SweepSetup, DEFAULT_TAU};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub base: BaseConfig,
    pub cusp: CuspConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub experiments: ExperimentsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Torus,
    Sphere,
}

/// Marked points are placed by the surface kind: the chart center for one
/// point, two points on the horizontal midline for a cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub kind: BaseKind,
    /// Torus side lengths.
    pub sides: Option<[f64; 2]>,
    /// Sphere radius.
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaWindow {
    Range([f64; 2]),
    Keyword(String),
}

impl Default for KappaWindow {
    fn default() -> Self {
        KappaWindow::Keyword("auto".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuspConfig {
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    pub attachment: String,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// `"auto"` or `[lo, hi]`.
    #[serde(default)]
    pub kappa_window: KappaWindow,
    #[serde(default = "default_kappa_points")]
    pub kappa_points: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_nev")]
    pub nev: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { nev: default_nev(), tol: default_tol(), seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_log")]
    pub n_log: usize,
    #[serde(default = "default_true")]
    pub quality_rows: bool,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { h: default_h(), n_theta: default_n_theta(), n_log: default_n_log(), quality_rows: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// κ sweep per ε: `sweep/records.csv`, `sweep/summary.csv`.
    Sweep,
    /// Lowest eigenpairs at the crossing scale: `spectra/eps_<ε>.csv`.
    Spectra,
    /// Quasimode defects: `quasimodes/quasimodes.csv`.
    Quasimodes,
    /// Glued meshes at the crossing scale: `meshes/eps_<ε>.mesh`.
    Meshes,
    /// SVG plots of the sweep: `report/*.svg`.
    Report,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sweep => "sweep",
            Experiment::Spectra => "spectra",
            Experiment::Quasimodes => "quasimodes",
            Experiment::Meshes => "meshes",
            Experiment::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentsConfig {
    #[serde(default = "default_run")]
    pub run: Vec<Experiment>,
    /// Bisect for the balanced `κ_ε` after each sweep.
    #[serde(default = "default_true")]
    pub locate: bool,
    /// Cusp eigenvalue `λ₀(C)` that fixes `κ` for the quasimode experiment.
    #[serde(default = "default_quasimode_lambda")]
    pub quasimode_lambda: f64,
    /// Number of rotationally symmetric cusp modes to extend.
    #[serde(default = "default_cusp_modes")]
    pub cusp_modes: usize,
}

impl Default for ExperimentsConfig {
    fn default() -> Self {
        Self { run: default_run(), locate: true, quasimode_lambda: default_quasimode_lambda(), cusp_modes: default_cusp_modes() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn default_k() -> u32 {
    2
}
fn default_kappa_points() -> usize {
    9
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_nev() -> usize {
    6
}
fn default_tol() -> f64 {
    1e-9
}
fn default_h() -> f64 {
    0.04
}
fn default_n_theta() -> usize {
    16
}
fn default_n_log() -> usize {
    8
}
fn default_true() -> bool {
    true
}
fn default_run() -> Vec<Experiment> {
    vec![Experiment::Sweep]
}
fn default_quasimode_lambda() -> f64 {
    10.0
}
fn default_cusp_modes() -> usize {
    1
}

/// One failed check, located by its dotted field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(String),
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ConfigError::Parse(e) => write!(f, "config does not parse: {e}"),
            ConfigError::Invalid(errors) => {
                write!(f, "invalid config:")?;
                for e in errors {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// A parsed configuration that passed validation.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidConfig {
    pub raw: RunConfig,
    pub attachment: Attachment,
    /// `None` for `"auto"`.
    pub kappa_window: Option<(f64, f64)>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<ValidConfig, ConfigError> {
        let raw: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        raw.validate()
    }

    pub fn load(path: &Path) -> Result<ValidConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn validate(self) -> Result<ValidConfig, ConfigError> {
        let mut errors = Vec::new();
        let mut fail = |path: &str, message: String| errors.push(FieldError { path: path.into(), message });
        match self.base.kind {
            BaseKind::Torus => match self.base.sides {
                Some([a, b]) if a > 0.0 && b > 0.0 => {}
                Some(s) => fail("base.sides", format!("torus sides must be positive, got {s:?}")),
                None => fail("base.sides", "a torus needs sides = [a, b]".into()),
            },
            BaseKind::Sphere => match self.base.radius {
                Some(r) if r > 0.0 => {}
                Some(r) => fail("base.radius", format!("sphere radius must be positive, got {r}")),
                None => fail("base.radius", "a sphere needs a radius".into()),
            },
        }
        let c = &self.cusp;
        if !(c.alpha > ALPHA_MIN && c.alpha < ALPHA_MAX) {
            fail("cusp.alpha", format!("alpha must lie in (1/3, 9/16), got {}", c.alpha));
        }
        if c.k < 2 {
            fail("cusp.k", format!("k must be at least 2, got {}", c.k));
        }
        let attachment = c.attachment.parse::<Attachment>();
        if attachment.is_err() {
            fail("cusp.attachment", format!("unknown attachment '{}'; expected cylinder or crosscap", c.attachment));
        }
        if c.epsilons.is_empty() {
            fail("cusp.epsilons", "at least one epsilon is required".into());
        }
        for (i, &e) in c.epsilons.iter().enumerate() {
            if !(e > 0.0 && e < 1.0) {
                fail(&format!("cusp.epsilons[{i}]"), format!("epsilon must lie in (0, 1), got {e}"));
            }
        }
        if let Some(i) = c.epsilons.windows(2).position(|w| w[1] >= w[0]) {
            fail(&format!("cusp.epsilons[{}]", i + 1), "epsilons must be strictly decreasing".into());
        }
        let kappa_window = match &c.kappa_window {
            KappaWindow::Keyword(k) if k == "auto" => None,
            KappaWindow::Keyword(k) => {
                fail("cusp.kappa_window", format!("expected \"auto\" or [lo, hi], got \"{k}\""));
                None
            }
            KappaWindow::Range([lo, hi]) => {
                if !(*lo > 0.0 && lo < hi && hi.is_finite()) {
                    fail("cusp.kappa_window", format!("need 0 < lo < hi, got [{lo}, {hi}]"));
                }
                Some((*lo, *hi))
            }
        };
        if c.kappa_points < 2 {
            fail("cusp.kappa_points", format!("need at least 2 grid points, got {}", c.kappa_points));
        }
        if !(c.tau > 0.0 && c.tau < 1.0) {
            fail("cusp.tau", format!("tau must lie in (0, 1), got {}", c.tau));
        }
        if self.solver.nev == 0 {
            fail("solver.nev", "nev must be positive".into());
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            fail("solver.tol", format!("tol must lie in (0, 1), got {}", self.solver.tol));
        }
        let m = &self.mesh;
        if !(m.h > 0.0 && m.h <= 0.5) {
            fail("mesh.h", format!("h must lie in (0, 0.5], got {}", m.h));
        }
        if m.n_theta < 8 {
            fail("mesh.n_theta", format!("n_theta must be at least 8, got {}", m.n_theta));
        }
        if m.n_log < 4 {
            fail("mesh.n_log", format!("n_log must be at least 4, got {}", m.n_log));
        }
        let x = &self.experiments;
        if x.run.is_empty() {
            fail("experiments.run", "select at least one experiment".into());
        }
        if x.run.contains(&Experiment::Report) && !x.run.contains(&Experiment::Sweep) {
            fail("experiments.run", "report needs the sweep experiment".into());
        }
        if !(x.quasimode_lambda > 0.0) {
            fail("experiments.quasimode_lambda", format!("must be positive, got {}", x.quasimode_lambda));
        }
        if x.cusp_modes == 0 {
            fail("experiments.cusp_modes", "must be positive".into());
        }
        match attachment {
            Ok(attachment) if errors.is_empty() => Ok(ValidConfig { raw: self, attachment, kappa_window }),
            _ => Err(ConfigError::Invalid(errors)),
        }
    }
}

impl ValidConfig {
    pub fn surface(&self) -> cusp_spectra::Result<BaseSurface> {
        match self.raw.base.kind {
            BaseKind::Torus => {
                let [a, b] = self.raw.base.sides.expect("validated");
                BaseSurface::flat_torus(a, b, self.attachment)
            }
            BaseKind::Sphere => BaseSurface::round_sphere(self.raw.base.radius.expect("validated"), self.attachment),
        }
    }

    pub fn mesh_spec(&self) -> MeshSpec {
        let m = &self.raw.mesh;
        MeshSpec { h: m.h, n_theta: m.n_theta, n_log: m.n_log, quality_rows: m.quality_rows }
    }

    pub fn sweep_setup(&self) -> cusp_spectra::Result<SweepSetup> {
        let c = &self.raw.cusp;
        let mut setup = SweepSetup::new(self.surface()?, c.alpha, c.k, self.attachment, self.mesh_spec());
        setup.tau = c.tau;
        setup.seed = self.raw.solver.seed;
        Ok(setup)
    }

    pub fn runs(&self, e: Experiment) -> bool {
        self.raw.experiments.run.contains(&e)
    }
}

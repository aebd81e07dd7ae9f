use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use cusp_cli::commands::{self, MeshPart, DEFAULT_MESH};
use cusp_cli::config::RunConfig;
use cusp_cli::tables::{self, RecordRow, SummaryRow};
use cusp_cli::THREADS_ENV;
use cusp_spectra::cusp::{kappa_for_eigenvalue, Attachment, CuspGeometry, CuspParams};
use cusp_spectra::fem::{BoundaryCondition, SolverOptions};
use cusp_spectra::geometry::io::{read_mesh, write_mesh};
use cusp_spectra::quasimode::{GluedProblem, MeshSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cusp-spectra", version, about = "Spectra of surfaces with an attached hyperbolic cusp")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate closed-form rotationally symmetric cusp modes.
    CuspSpec {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        kappa: f64,
        /// Truncation exponent; `log R = ε^{-alpha}`.
        #[arg(long, default_value_t = 0.4, conflicts_with = "log_length")]
        alpha: f64,
        /// `log R` directly, bypassing the exponent window.
        #[arg(long)]
        log_length: Option<f64>,
        #[arg(long, default_value = "crosscap")]
        attachment: Attachment,
        #[arg(long, default_value_t = 5)]
        modes: usize,
        /// CSV file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a glued mesh and print its statistics.
    Mesh {
        /// `torus:a,b` or `sphere:r`.
        #[arg(long, default_value = "torus:1,1.5")]
        surface: String,
        #[arg(long, default_value = "crosscap")]
        attachment: Attachment,
        #[arg(long)]
        epsilon: f64,
        /// Defaults to the scale where the cusp ground state meets the first base eigenvalue.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = DEFAULT_MESH.h)]
        h: f64,
        #[arg(long, default_value_t = DEFAULT_MESH.n_theta)]
        n_theta: usize,
        #[arg(long, default_value_t = DEFAULT_MESH.n_log)]
        n_log: usize,
        /// Keep log-uniform cusp rows only.
        #[arg(long)]
        log_uniform: bool,
        #[arg(long, value_enum, default_value_t = MeshPart::Glued)]
        part: MeshPart,
        /// Write the mesh in the plain-text format.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Lowest eigenpairs of a mesh file.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        /// `closed`, `dirichlet:<tags>` or `neumann:<tags>`; tags are comma separated.
        #[arg(long, default_value = "closed")]
        bc: BoundaryCondition,
        #[arg(long, default_value_t = 6)]
        nev: usize,
        /// Eigenvalues nearest this value instead of the lowest.
        #[arg(long)]
        shift: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quasimode defects for every epsilon of a run config.
    Quasimode {
        #[arg(long)]
        config: PathBuf,
        /// CSV file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiments of a config and write the artifact tree.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG plots from a records table.
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Per-epsilon summary with located scales, for the deficit plot.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::CuspSpec { epsilon, kappa, alpha, log_length, attachment, modes, out } => {
            let g = match log_length {
                Some(l) => {
                    if !(epsilon > 0.0 && kappa > 0.0 && l > 0.0) {
                        bail!("epsilon, kappa and log-length must be positive");
                    }
                    CuspGeometry::new(epsilon, kappa, l)
                }
                None => CuspParams::new(epsilon, kappa, alpha, 2, attachment)?.geometry(),
            };
            tables::emit_csv(out.as_deref(), &commands::cusp_spec_rows(&g, attachment, modes), &tables::CUSP_SPEC)?;
        }
        Command::Mesh { surface, attachment, epsilon, kappa, alpha, k, h, n_theta, n_log, log_uniform, part, export } => {
            let surface = commands::parse_surface(&surface, attachment)?;
            let kappa = kappa.unwrap_or_else(|| kappa_for_eigenvalue(epsilon, epsilon.powf(-alpha), attachment, 0, surface.first_eigenvalue()));
            let params = CuspParams::new(epsilon, kappa, alpha, k, attachment)?;
            let spec = MeshSpec { h, n_theta, n_log, quality_rows: !log_uniform };
            let problem = GluedProblem::build(params, surface, spec)?;
            let mesh = commands::mesh_part(&problem, part);
            print!("kappa {kappa}\n{}", commands::mesh_summary(mesh));
            if let Some(p) = export {
                std::fs::write(&p, write_mesh(mesh)).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Solve { mesh, bc, nev, shift, tol, seed, out } => {
            let text = std::fs::read_to_string(&mesh).with_context(|| format!("reading {}", mesh.display()))?;
            let mesh = read_mesh(&text)?;
            let mut opts = SolverOptions::new(nev).with_tol(tol).with_seed(seed);
            opts.shift = shift;
            tables::emit_csv(out.as_deref(), &commands::solve_mesh(&mesh, &bc, &opts)?, &tables::SPECTRUM)?;
        }
        Command::Quasimode { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let mut rows = Vec::new();
            for &eps in &cfg.raw.cusp.epsilons {
                rows.extend(commands::quasimode_rows(&cfg, eps).with_context(|| format!("epsilon {eps}"))?);
            }
            tables::emit_csv(out.as_deref(), &rows, &tables::QUASIMODES)?;
        }
        Command::Sweep { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let Some(out) = out.or_else(|| cfg.raw.output.dir.clone()) else {
                bail!("no output directory: pass --out or set output.dir");
            };
            let outcome = commands::run(&cfg, &out, Some(&config))?;
            for e in &outcome.manifest.experiments {
                eprintln!("{} {} ({:.1} s)", e.name, e.status, e.wall_seconds);
                for f in &e.failures {
                    eprintln!("  {f}");
                }
            }
            if !outcome.failed.is_empty() {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Report { records, summary, out } => {
            let rows: Vec<RecordRow> = tables::read_csv(&records)?;
            let summary: Option<Vec<SummaryRow>> = summary.map(|p| tables::read_csv(&p)).transpose()?;
            for p in commands::write_report(&out, &rows, summary.as_deref())? {
                println!("{}", p.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

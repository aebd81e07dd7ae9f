use cusp_cli::config::{ConfigError, RunConfig};
use cusp_cli::tables::{self, CuspSpecRow, QuasimodeRow, RecordRow, SpectrumRow, SummaryRow, TableSchema};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cusp-spectra");

fn minimal_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/minimal.toml")
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn sweep(config: &Path, out: &Path) -> Output {
    cli(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn with_alpha(alpha: &str) -> String {
    std::fs::read_to_string(minimal_config()).unwrap().replace("alpha = 0.4", &format!("alpha = {alpha}"))
}

#[test]
fn minimal_config_emits_one_record_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep(&minimal_config(), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let records: Vec<RecordRow> = tables::read_csv(&dir.path().join("sweep/records.csv")).unwrap();
    assert_eq!(records.len(), 5);
    assert!(records.windows(2).all(|w| w[1].kappa > w[0].kappa));
    let summary: Vec<SummaryRow> = tables::read_csv(&dir.path().join("sweep/summary.csv")).unwrap();
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0].points, 5);
    assert!(summary[0].kappa_eps.is_none());
    assert!(dir.path().join("schema.md").exists());
}

#[test]
fn rerun_with_the_same_seed_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(sweep(&minimal_config(), a.path()).status.success());
    let o = Command::new(BIN)
        .env(cusp_cli::THREADS_ENV, "2")
        .args(["sweep", "--config", minimal_config().to_str().unwrap(), "--out", b.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["sweep/records.csv", "sweep/summary.csv", "schema.md"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_alpha_is_rejected_with_its_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, with_alpha("0.2")).unwrap();
    let o = sweep(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("cusp.alpha: alpha must lie in (1/3, 9/16)"), "{err}");
    assert!(!dir.path().join("out").exists());
}

fn invalid_paths(text: &str) -> Vec<String> {
    match RunConfig::parse(text) {
        Err(ConfigError::Invalid(errors)) => errors.into_iter().map(|e| e.path).collect(),
        other => panic!("expected validation errors, got {other:?}"),
    }
}

#[test]
fn validation_reports_every_bad_field() {
    let base = std::fs::read_to_string(minimal_config()).unwrap();
    let text = base
        .replace("epsilons = [0.1]", "epsilons = [0.1, 0.2]")
        .replace("k = 2", "k = 1")
        .replace("kappa_window = \"auto\"", "kappa_window = \"wide\"")
        .replace("n_theta = 8", "n_theta = 4")
        .replace("run = [\"sweep\"]", "run = [\"report\"]");
    assert_eq!(
        invalid_paths(&text),
        ["cusp.k", "cusp.epsilons[1]", "cusp.kappa_window", "mesh.n_theta", "experiments.run"]
    );
    let text = base.replace("kind = \"torus\"\nsides = [1.0, 1.5]", "kind = \"sphere\"");
    assert_eq!(invalid_paths(&text), ["base.radius"]);
    let text = base.replace("attachment = \"crosscap\"", "attachment = \"mobius\"");
    assert_eq!(invalid_paths(&text), ["cusp.attachment"]);
    let text = base.replace("kappa_window = \"auto\"", "kappa_window = [5.0, 4.0]");
    assert_eq!(invalid_paths(&text), ["cusp.kappa_window"]);
}

#[test]
fn unknown_keys_do_not_parse() {
    let text = std::fs::read_to_string(minimal_config()).unwrap().replace("[solver]", "[solver]\nshift = 3.0");
    match RunConfig::parse(&text) {
        Err(ConfigError::Parse(msg)) => assert!(msg.contains("shift"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn defaults_fill_optional_sections() {
    let cfg = RunConfig::parse(
        "[base]\nkind = \"torus\"\nsides = [1.0, 1.0]\n[cusp]\nalpha = 0.5\nattachment = \"cylinder\"\nepsilons = [0.1, 0.05]\n",
    )
    .unwrap();
    assert_eq!(cfg.raw.cusp.k, 2);
    assert_eq!(cfg.raw.cusp.kappa_points, 9);
    assert!(cfg.kappa_window.is_none());
    assert_eq!(cfg.raw.solver.nev, 6);
    assert_eq!(cfg.mesh_spec().n_theta, 16);
    assert_eq!(cfg.sweep_setup().unwrap().surface.marked_points.len(), 2);
}

fn header<T: Serialize>(row: &T) -> Vec<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(row).unwrap();
    let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    text.lines().next().unwrap().split(',').map(String::from).collect()
}

fn columns(schema: &TableSchema) -> Vec<String> {
    schema.columns.iter().map(|(c, _)| c.to_string()).collect()
}

#[test]
fn schema_documents_every_column_in_order() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sweep(&minimal_config(), dir.path()).status.success());
    let records: Vec<RecordRow> = tables::read_csv(&dir.path().join("sweep/records.csv")).unwrap();
    let summary: Vec<SummaryRow> = tables::read_csv(&dir.path().join("sweep/summary.csv")).unwrap();
    assert_eq!(header(&records[0]), columns(&tables::RECORDS));
    assert_eq!(header(&summary[0]), columns(&tables::SUMMARY));
    let spec = CuspSpecRow { l: 0, t: 1.0, lambda: 2.0, l2_norm_sq: 3.0, flux_long: 4.0, flux_short: None };
    assert_eq!(header(&spec), columns(&tables::CUSP_SPEC));
    let s = SpectrumRow { index: 0, lambda: 0.0, residual: 0.0, mass_base: 1.0, mass_cusp: 0.0 };
    assert_eq!(header(&s), columns(&tables::SPECTRUM));
    let q = QuasimodeRow {
        kind: "cusp".into(),
        l: 0,
        epsilon: 0.1,
        kappa: 3.0,
        target_lambda: 10.0,
        delta: 0.5,
        a: Some(1.0),
        e_lambda: None,
        e_eps_lambda: None,
    };
    assert_eq!(header(&q), columns(&tables::QUASIMODES));
    let md = std::fs::read_to_string(dir.path().join("schema.md")).unwrap();
    for t in tables::ALL {
        for (c, _) in t.columns {
            assert!(md.contains(&format!("| {c} |")), "{c}");
        }
    }
}

#[test]
fn emitted_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sweep(&minimal_config(), dir.path()).status.success());
    let path = dir.path().join("sweep/records.csv");
    let records: Vec<RecordRow> = tables::read_csv(&path).unwrap();
    assert_eq!(tables::to_csv(&records, tables::RECORDS.columns).unwrap(), std::fs::read(&path).unwrap());
    let path = dir.path().join("sweep/summary.csv");
    let summary: Vec<SummaryRow> = tables::read_csv(&path).unwrap();
    assert_eq!(tables::to_csv(&summary, tables::SUMMARY.columns).unwrap(), std::fs::read(&path).unwrap());
}

#[test]
fn manifest_records_params_windows_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sweep(&minimal_config(), dir.path()).status.success());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let e = &m["epsilons"][0];
    assert_eq!(e["epsilon"], 0.1);
    assert_eq!(e["cusp_params"]["alpha"], 0.4);
    assert_eq!(e["kappa_window"]["source"], "auto");
    assert!(e["kappa_window"]["lo"].as_f64().unwrap() < e["kappa_cross"].as_f64().unwrap());
    let records: Vec<RecordRow> = tables::read_csv(&dir.path().join("sweep/records.csv")).unwrap();
    let seeds: Vec<u64> = e["point_seeds"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).collect();
    assert_eq!(seeds, records.iter().map(|r| r.seed).collect::<Vec<_>>());
    assert_eq!(m["config"]["solver"]["seed"], 7);
    assert_eq!(m["experiments"][0]["status"], "ok");
    assert!(m["experiments"][0]["wall_seconds"].as_f64().is_some());
}

#[test]
fn window_missing_the_crossing_fails_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("narrow.toml");
    let text = std::fs::read_to_string(minimal_config()).unwrap().replace("kappa_window = \"auto\"", "kappa_window = [1.0, 1.5]");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = sweep(&cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiments"][0]["status"], "failed");
    assert!(m["experiments"][0]["failures"][0].as_str().unwrap().contains("does not bracket"));
}

#[test]
fn report_renders_three_plots() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sweep(&minimal_config(), dir.path()).status.success());
    let rec = dir.path().join("sweep/records.csv");
    let out = dir.path().join("plots");
    let o = cli(&["report", "--records", rec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["lambda_vs_kappa.svg", "masses_vs_kappa.svg", "deficit_vs_epsilon.svg"] {
        let svg = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"), "{f}");
    }
}

#[test]
fn cusp_spec_prints_the_closed_forms() {
    let o = cli(&["cusp-spec", "--epsilon", "0.1", "--kappa", "3", "--modes", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<CuspSpecRow> = r.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert!((row.lambda - (2.25 + row.t * row.t)).abs() < 1e-12);
        assert!(row.flux_short.is_none());
    }
    let o = cli(&["cusp-spec", "--epsilon", "0.1", "--kappa", "3", "--attachment", "cylinder", "--log-length", "5"]);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<CuspSpecRow> = r.deserialize().collect::<Result<_, _>>().unwrap();
    assert!((rows[1].t - 2.0 * std::f64::consts::PI * 3.0 / 5.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.flux_short.is_some()));
}

#[test]
fn exported_mesh_solves_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("glued.mesh");
    let o = cli(&["mesh", "--epsilon", "0.1", "--h", "0.08", "--n-theta", "8", "--n-log", "4", "--export", mesh.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("euler_characteristic -1") && summary.contains("orientable false"), "{summary}");
    let csv = dir.path().join("spectrum.csv");
    let o = cli(&["solve", "--mesh", mesh.to_str().unwrap(), "--nev", "3", "--seed", "4", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<SpectrumRow> = tables::read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].lambda.abs() < 1e-8);
    for r in &rows {
        assert!((r.mass_base + r.mass_cusp - 1.0).abs() < 1e-8);
        assert!(r.residual < 1e-8);
    }
    let o = cli(&["solve", "--mesh", mesh.to_str().unwrap(), "--bc", "dirichlet:nowhere"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere"));
}

#[test]
fn cusp_dirichlet_spectrum_from_the_cli_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("cusp.mesh");
    let args = ["mesh", "--epsilon", "0.1", "--kappa", "3", "--n-theta", "16", "--n-log", "32", "--log-uniform", "--part", "cusp"];
    let o = cli(&[&args[..], &["--export", mesh.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cli(&["solve", "--mesh", mesh.to_str().unwrap(), "--bc", "dirichlet:glue_long", "--nev", "1"]);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<SpectrumRow> = r.deserialize().collect::<Result<_, _>>().unwrap();
    let o = cli(&["cusp-spec", "--epsilon", "0.1", "--kappa", "3", "--modes", "1"]);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let exact: Vec<CuspSpecRow> = r.deserialize().collect::<Result<_, _>>().unwrap();
    assert!((rows[0].lambda / exact[0].lambda - 1.0).abs() < 5e-3, "{} vs {}", rows[0].lambda, exact[0].lambda);
}

#[test]
fn bad_thread_count_is_an_error() {
    let o = Command::new(BIN).env(cusp_cli::THREADS_ENV, "many").args(["cusp-spec", "--epsilon", "0.1", "--kappa", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(cusp_cli::THREADS_ENV));
}

#[test]
fn quasimodes_cover_the_first_eigenspace_and_the_cusp_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = cli(&["quasimode", "--config", minimal_config().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<QuasimodeRow> = tables::read_csv(&out).unwrap();
    let kinds: Vec<(&str, usize)> = rows.iter().map(|r| (r.kind.as_str(), r.l)).collect();
    assert_eq!(kinds, [("surface", 0), ("surface", 1), ("cusp", 0)]);
    let cusp = &rows[2];
    assert!((cusp.target_lambda / 10.0 - 1.0).abs() < 0.01);
    assert!(cusp.a.is_some() && cusp.e_lambda.is_some() && cusp.e_eps_lambda.is_some());
    assert!(rows.iter().all(|r| r.delta > 0.0 && r.kappa == cusp.kappa));
}

use std::path::{Path, PathBuf};

use kscc::datagen::{canonical_for_family, generate, generate_two_view, Dataset, DatasetSpec, Family, TwoViewSpec};
use kscc::{misclassification_rate, run_benchmark, run_kscc, BenchmarkReport, KernelSpec, RunReport, SigmaChoice};
use serde::Serialize;

use crate::args::{BenchArgs, ClusterArgs, DataSource, EvaluateArgs, GenerateArgs};
use crate::error::{CliError, Result};
use crate::io::{self, coordinate_header, CORRESPONDENCE_COLUMNS};
use crate::settings::{validate_config, Settings};

/// Family name accepted by `--family` for two-view correspondences.
pub const TWO_VIEW_FAMILY: &str = "two_view";

const DEFAULT_RUNS: usize = 20;

fn load_dataset(source: &DataSource, seed: Option<u64>, noise: Option<f64>) -> Result<(Dataset, Vec<String>)> {
    if source.family.as_deref() == Some(TWO_VIEW_FAMILY) {
        let mut spec = TwoViewSpec::new(source.motions, source.n.unwrap_or(100), seed.unwrap_or(0));
        spec.noise_sigma = noise.unwrap_or(0.0);
        let (data, _) = generate_two_view(&spec)?;
        let header = CORRESPONDENCE_COLUMNS.iter().map(|s| s.to_string()).collect();
        return Ok((data, header));
    }
    let mut spec = match (&source.family, &source.manifest) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            DatasetSpec::from_toml(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        (Some(name), None) => {
            let family: Family = name.parse().map_err(|e: kscc::KsccError| CliError::Usage(e.to_string()))?;
            canonical_for_family(family)
        }
        (None, None) => return Err(CliError::Usage("give --family or --manifest".into())),
    };
    if let Some(n) = source.n {
        spec = spec.with_points_per_surface(n);
    }
    if let Some(sigma) = noise {
        spec = spec.with_noise(sigma);
    }
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    let data = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let header = coordinate_header(data.dim());
    Ok((data, header))
}

pub fn generate_cmd(args: &GenerateArgs, settings: &Settings) -> Result<()> {
    let seed = args.seed.or(settings.seed);
    let noise = args.source.noise.or(settings.noise);
    let (data, header) = load_dataset(&args.source, seed, noise)?;
    io::write_points(&args.out, &data.points, Some(&data.labels), &header)?;
    println!("N={} D={} K={}", data.n(), data.dim(), data.n_classes());
    Ok(())
}

/// Run report written next to the predicted labels.
#[derive(Debug, Serialize)]
struct ClusterReport {
    kernel: String,
    n: usize,
    dim: usize,
    ell: usize,
    k: usize,
    c: usize,
    seed: u64,
    iterations: usize,
    best_iteration: usize,
    kls: f64,
    kls_history: Vec<f64>,
    isolated: usize,
    wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_percent: Option<f64>,
    sigma: Vec<SigmaChoice>,
}

fn check_kernel_fits(kernel: KernelSpec, dim: usize) -> Result<()> {
    match kernel.input_dim() {
        Some(d) if d != dim => Err(CliError::Usage(format!(
            "kernel {kernel} needs {d}-dimensional points, the file has {dim} coordinates"
        ))),
        _ => Ok(()),
    }
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".report.toml");
    out.with_file_name(name)
}

pub fn cluster_cmd(args: &ClusterArgs, settings: &Settings) -> Result<()> {
    let settings = settings.clone().overlay(args.run.settings());
    let kernel = settings.require_kernel()?;
    let table = io::read_points(&args.input)?;
    if table.is_correspondence() && kernel != KernelSpec::TwoView {
        eprintln!("note: correspondence file clustered with the {kernel} kernel");
    }
    check_kernel_fits(kernel, table.dim())?;
    let cfg = settings.kscc_config(kernel, table.dim(), None)?;
    validate_config(&cfg, table.n())?;

    let report: RunReport = run_kscc(&table.points, kernel, &cfg)?;
    let labels = report.clustering.labels();
    io::write_labels(&args.out, labels)?;

    let error_percent = table.labels.as_deref().map(|t| misclassification_rate(labels, t)).transpose()?;
    let summary = ClusterReport {
        kernel: kernel.to_string(),
        n: table.n(),
        dim: table.dim(),
        ell: cfg.ell,
        k: cfg.k,
        c: cfg.c,
        seed: cfg.seed,
        iterations: report.iterations,
        best_iteration: report.best_iteration,
        kls: report.kls(),
        kls_history: report.kls_history.clone(),
        isolated: report.isolated.len(),
        wall_time: report.wall_time,
        error_percent,
        sigma: report.sigma_chosen.clone(),
    };
    let text = toml::to_string(&summary).map_err(|e| CliError::Numerical(format!("report: {e}")))?;
    let report_path = args.report.clone().unwrap_or_else(|| default_report_path(&args.out));
    io::write_text(&report_path, &text)?;

    print!(
        "N={} K={} ell={} iterations={} kls={:.6e} time={:.3}s",
        summary.n, summary.k, summary.ell, summary.iterations, summary.kls, summary.wall_time
    );
    match error_percent {
        Some(e) => println!(" error={e:.2}%"),
        None => println!(),
    }
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let pred = io::read_labels(&args.pred)?;
    let truth = io::read_labels(&args.truth)?;
    if pred.len() != truth.len() {
        return Err(CliError::Input(format!(
            "{} predicted labels against {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    println!("{:.2}%", misclassification_rate(&pred, &truth)?);
    Ok(())
}

pub fn bench_cmd(args: &BenchArgs, settings: &Settings) -> Result<()> {
    let settings = settings.clone().overlay(args.run.settings()).overlay(Settings {
        runs: args.runs,
        noise: args.source.noise,
        ..Settings::default()
    });
    let kernel = settings.require_kernel()?;
    let (data, name) = match &args.input {
        Some(path) => {
            let table = io::read_points(path)?;
            let labels = table.labels.ok_or_else(|| {
                CliError::Input(format!("{}: benchmarking needs a `label` column", path.display()))
            })?;
            (Dataset { points: table.points, labels }, path.display().to_string())
        }
        None => {
            // the run seed drives the algorithm; the data keeps its own seed
            let (data, _) = load_dataset(&args.source, None, settings.noise)?;
            let name = args
                .source
                .manifest
                .as_ref()
                .map(|p| p.display().to_string())
                .or_else(|| args.source.family.clone())
                .unwrap_or_default();
            (data, name)
        }
    };
    let name = args.name.clone().unwrap_or(name);
    check_kernel_fits(kernel, data.dim())?;
    let cfg = settings.kscc_config(kernel, data.dim(), Some(data.n_classes()))?;
    validate_config(&cfg, data.n())?;
    let runs = settings.runs.unwrap_or(DEFAULT_RUNS);
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }

    let row = run_benchmark(&name, &data, kernel, &cfg, runs)?;
    let report = BenchmarkReport { rows: vec![row] };
    if let Some(path) = &args.out {
        io::write_text(path, &report.to_csv())?;
    }
    if let Some(path) = &args.runs_out {
        io::write_text(path, &report.runs_csv())?;
    }
    print!("{}", report.to_text());
    Ok(())
}

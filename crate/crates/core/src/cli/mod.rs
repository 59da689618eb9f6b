//! The `mbmm` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 semantic errors
//! (dimension mismatch, too few points, missing labels).
//! Machine-readable results go to stdout as one JSON line; diagnostics go to
//! stderr.

pub mod model_file;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde_json::json;

use crate::datasets::{self, Dataset, GeneratorConfig, DATASET_NAMES};
use crate::error::Error;
use crate::metrics::{adjusted_mutual_information, adjusted_rand_index};
use crate::mixture::{fit, FitConfig, MixtureModel};
use model_file::ModelFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;

/// A failed command: message for stderr plus exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn semantic(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SEMANTIC,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. }
            | Error::TooFewPoints { .. }
            | Error::ConstantFeature(_)
            | Error::InitFailed { .. }
            | Error::NonFinite(_) => EXIT_SEMANTIC,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mbmm",
    version,
    about = "Multivariate beta mixture model clustering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotMode {
    Scatter,
    Pdf,
    Distance,
}

#[derive(Debug, clap::Args)]
pub struct CsvArgs {
    /// Column holding reference labels (defaults to `label` when present).
    #[arg(long)]
    pub label_column: Option<String>,
    /// Comma-separated columns to ignore (e.g. an ID column).
    #[arg(long, value_delimiter = ',')]
    pub drop_columns: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (scaled to the unit square) as CSV with labels.
    Generate {
        /// One of: blobs, unequal_variance, anisotropic, circles.
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file overriding generator constants.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Scale a CSV into the unit hypercube and fit a mixture by EM.
    Fit {
        data: PathBuf,
        #[arg(short = 'k', long, value_parser = clap::value_parser!(u64).range(1..))]
        clusters: u64,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        max_iter: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        n_init: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Assign points to clusters with a saved model.
    Predict {
        model: PathBuf,
        data: PathBuf,
        /// Write the full responsibility matrix instead of hard labels.
        #[arg(long)]
        proba: bool,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compare predicted clusters with the data's label column (ARI / AMI).
    Evaluate {
        data: PathBuf,
        /// Predict with this model.
        #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
        model: Option<PathBuf>,
        /// Or read predicted labels from a `predict` output CSV.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        csv: CsvArgs,
    },
    /// Render a 2D model and its data as SVG.
    Plot {
        model: PathBuf,
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotMode::Scatter)]
        mode: PlotMode,
        /// Row index of the reference point (distance mode).
        #[arg(long)]
        ref_point: Option<usize>,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: Command) -> CmdResult {
    match command {
        Command::Generate {
            name,
            seed,
            config,
            out,
        } => cmd_generate(&name, seed, config.as_deref(), &out),
        Command::Fit {
            data,
            clusters,
            max_iter,
            tol,
            n_init,
            seed,
            csv,
            out,
        } => {
            let config = FitConfig::new(clusters as usize)
                .with_max_iter(max_iter as usize)
                .with_tol(tol)
                .with_n_init(n_init as usize)
                .with_seed(seed);
            cmd_fit(&data, &config, &csv, &out)
        }
        Command::Predict {
            model,
            data,
            proba,
            csv,
            out,
        } => cmd_predict(&model, &data, proba, &csv, &out),
        Command::Evaluate {
            data,
            model,
            labels,
            csv,
        } => cmd_evaluate(model.as_deref(), labels.as_deref(), &data, &csv),
        Command::Plot {
            model,
            data,
            mode,
            ref_point,
            csv,
            out,
        } => cmd_plot(&model, &data, mode, ref_point, &csv, &out),
    }
}

fn emit(value: serde_json::Value) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{value}");
}

pub fn cmd_generate(name: &str, seed: u64, config: Option<&Path>, out: &Path) -> CmdResult {
    let config: GeneratorConfig = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => GeneratorConfig::default(),
    };
    let Some(dataset) = datasets::generate(name, seed, &config)? else {
        return Err(CliError::usage(format!(
            "unknown dataset {name:?}; valid names: {}",
            DATASET_NAMES.join(", ")
        )));
    };
    dataset.write_csv(out)?;
    emit(
        json!({"dataset": name, "seed": seed, "rows": dataset.n_points(), "out": out.display().to_string()}),
    );
    Ok(())
}

/// Reads a CSV, taking the label column from the flag or, failing that, a
/// column literally named `label`.
fn read_data(path: &Path, csv: &CsvArgs) -> std::result::Result<Dataset, CliError> {
    let label = match &csv.label_column {
        Some(l) => Some(l.clone()),
        None => {
            let mut reader = ::csv::Reader::from_path(path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            let headers = reader
                .headers()
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            headers
                .iter()
                .any(|h| h.trim() == "label")
                .then(|| "label".to_string())
        }
    };
    Ok(datasets::load_csv(
        path,
        label.as_deref(),
        &csv.drop_columns,
    )?)
}

fn load_model(path: &Path) -> std::result::Result<(ModelFile, MixtureModel), CliError> {
    let file =
        ModelFile::load(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let model = file
        .model()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok((file, model))
}

/// Applies the model's stored scaling (or checks the data already lies in
/// the unit hypercube when none is stored).
fn prepare_points(
    file: &ModelFile,
    model: &MixtureModel,
    data: &Dataset,
) -> std::result::Result<Array2<f64>, CliError> {
    if data.dim() != model.dim() {
        return Err(CliError::semantic(format!(
            "dimension mismatch: model has M = {}, data has M = {}",
            model.dim(),
            data.dim()
        )));
    }
    match file.scaling()? {
        Some(scaling) => Ok(scaling.apply(data.points.view())?),
        None => Ok(data.points.clone()),
    }
}

pub fn cmd_fit(data_path: &Path, config: &FitConfig, csv: &CsvArgs, out: &Path) -> CmdResult {
    let data = read_data(data_path, csv)?;
    if data.n_points() < config.n_clusters {
        return Err(Error::TooFewPoints {
            n_points: data.n_points(),
            n_clusters: config.n_clusters,
        }
        .into());
    }
    let data = data.scaled()?;
    let result = fit(data.points.view(), config)?;
    let report = &result.report;
    if !report.reinitialized_at.is_empty() {
        eprintln!(
            "warning: empty clusters reinitialized at iterations {:?}",
            report.reinitialized_at
        );
    }
    ModelFile::new(&result.model, Some(report), data.scaling.as_ref()).save(out)?;
    emit(json!({
        "log_likelihood": report.log_likelihood_trace.last(),
        "n_iter": report.n_iter,
        "converged": report.converged,
        "best_init_index": report.best_init_index,
        "seed": report.seed,
    }));
    Ok(())
}

pub fn cmd_predict(
    model_path: &Path,
    data_path: &Path,
    proba: bool,
    csv: &CsvArgs,
    out: &Path,
) -> CmdResult {
    let (file, model) = load_model(model_path)?;
    let data = read_data(data_path, csv)?;
    let points = prepare_points(&file, &model, &data)?;
    let resp = model.predict_proba(points.view())?;
    let io_err = |e: ::csv::Error| CliError::usage(format!("{}: {e}", out.display()));
    let mut writer = ::csv::Writer::from_path(out).map_err(io_err)?;
    if proba {
        let header: Vec<String> = (1..=model.n_clusters())
            .map(|c| format!("gamma_{c}"))
            .collect();
        writer.write_record(&header).map_err(io_err)?;
        for row in resp.matrix().rows() {
            writer
                .write_record(row.iter().map(|v| v.to_string()))
                .map_err(io_err)?;
        }
    } else {
        writer.write_record(["label"]).map_err(io_err)?;
        for label in resp.hard_labels() {
            writer.write_record([label.to_string()]).map_err(io_err)?;
        }
    }
    writer.flush().map_err(|e| CliError::usage(e.to_string()))?;
    emit(json!({"rows": data.n_points(), "out": out.display().to_string(), "proba": proba}));
    Ok(())
}

pub fn cmd_evaluate(
    model_path: Option<&Path>,
    labels_path: Option<&Path>,
    data_path: &Path,
    csv: &CsvArgs,
) -> CmdResult {
    let data = read_data(data_path, csv)?;
    let Some(reference) = data.labels.clone() else {
        return Err(CliError::semantic(format!(
            "{} has no label column to evaluate against",
            data_path.display()
        )));
    };
    let predicted: Vec<i64> = match (model_path, labels_path) {
        (Some(path), _) => {
            let (file, model) = load_model(path)?;
            let points = prepare_points(&file, &model, &data)?;
            model
                .predict(points.view())?
                .into_iter()
                .map(|l| l as i64)
                .collect()
        }
        (None, Some(path)) => {
            let pred = datasets::load_csv(path, Some("label"), &[])?;
            pred.labels.unwrap_or_default()
        }
        (None, None) => return Err(CliError::usage("either --model or --labels is required")),
    };
    if predicted.len() != reference.len() {
        return Err(CliError::semantic(format!(
            "{} predicted labels for {} reference labels",
            predicted.len(),
            reference.len()
        )));
    }
    let ari = adjusted_rand_index(&reference, &predicted)?;
    let ami = adjusted_mutual_information(&reference, &predicted)?;
    emit(json!({"ari": ari, "ami": ami}));
    Ok(())
}

pub fn cmd_plot(
    model_path: &Path,
    data_path: &Path,
    mode: PlotMode,
    ref_point: Option<usize>,
    csv: &CsvArgs,
    out: &Path,
) -> CmdResult {
    let (file, model) = load_model(model_path)?;
    if model.dim() != 2 {
        return Err(CliError::semantic(format!(
            "plots need M = 2, model has M = {}",
            model.dim()
        )));
    }
    let data = read_data(data_path, csv)?;
    let points = prepare_points(&file, &model, &data)?;
    let svg = match mode {
        PlotMode::Scatter => {
            let labels = model.predict(points.view())?;
            svg::scatter(points.view(), &labels, "Cluster assignments")
        }
        PlotMode::Pdf => svg::heatmap(&svg::pdf_grid(&model, 200)?, "Mixture density"),
        PlotMode::Distance => {
            let reference = ref_point
                .ok_or_else(|| CliError::usage("--ref-point is required for distance mode"))?;
            if reference >= points.nrows() {
                return Err(CliError::usage(format!(
                    "--ref-point {reference} out of range for {} points",
                    points.nrows()
                )));
            }
            let resp = model.predict_proba(points.view())?;
            let distances = (0..points.nrows())
                .map(|j| resp.kl_distance(reference, j))
                .collect::<crate::Result<Vec<_>>>()?;
            svg::distance_map(
                points.view(),
                &distances,
                reference,
                "KL distance from reference point",
            )
        }
    };
    std::fs::write(out, svg).map_err(|e| CliError::usage(format!("{}: {e}", out.display())))?;
    emit(json!({"mode": format!("{mode:?}").to_lowercase(), "out": out.display().to_string()}));
    Ok(())
}

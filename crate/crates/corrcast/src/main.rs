//! Command-line interface.
//!
//! Every subcommand reads its settings from an optional `--config` file
//! (flat `key = value` lines) plus repeatable `--set key=value` overrides,
//! writes its results as full-precision CSV files into the output directory,
//! and records a run manifest pinning input digests, the configuration hash,
//! and output digests. Reruns on identical inputs produce byte-identical
//! files.
//!
//! Exit codes: `0` success, `1` configuration or usage error, `2` data error
//! (unreadable or malformed inputs, or not enough data to compute the
//! requested report).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;

use corrcast::config::RunConfig;
use corrcast::demo;
use corrcast::eval::{
    acf, factor_grid_report, mean_error_series, method_comparison, HistOptions, MethodOptions,
};
use corrcast::gls::{hildreth_lu, DEFAULT_GRID_STEP};
use corrcast::ingest::{
    impute_forward, parse_spf_path, read_actuals_csv, read_panel_csv, select_forecasters,
    write_panel_csv,
};
use corrcast::report::{
    acf_csv, comparison_csv, comparison_text, demo_csv, demo_text, evaluation_csv,
    evaluation_text, fmt_full, weights_csv, Manifest,
};
use corrcast::series::{align, ActualSeries, ForecastPanel, PeriodMask, SeriesMap};
use corrcast::{Error, Result};

#[derive(Parser)]
#[command(
    name = "corrcast",
    version,
    about = "Forecast combination with serial-correlation corrections",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in worked example.
    #[command(subcommand)]
    Demo(DemoDataset),
    /// Normalize a raw survey CSV into the panel format.
    Ingest(ConfigArgs),
    /// Score a correction-factor grid over evaluation windows.
    Evaluate(ConfigArgs),
    /// Compare combination and correction methods at rolling origins.
    Compare(CompareArgs),
    /// Autocorrelations of the combined forecast-error stream.
    Acf(AcfArgs),
    /// Joint weights and correction factor on the full sample.
    Gls(ConfigArgs),
}

#[derive(Subcommand)]
enum DemoDataset {
    /// Classic 1953 two-forecaster monthly example.
    Bg1969(DemoArgs),
}

#[derive(Args)]
struct DemoArgs {
    /// Output directory for the CSV table and run manifest.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run-configuration file (flat `key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set horizon=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory, overriding the configuration's `out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Skip the rolling grid-search GLS row (the slowest method).
    #[arg(long)]
    no_gls: bool,
    /// Skip the per-forecaster rows.
    #[arg(long)]
    no_individuals: bool,
}

#[derive(Args)]
struct AcfArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Largest lag to report.
    #[arg(long, default_value_t = 8)]
    max_lag: usize,
    /// Correct the stream with this fixed factor before measuring.
    #[arg(long)]
    gamma: Option<f64>,
}

/// An error tagged with the process exit code it maps to.
struct AppError {
    code: u8,
    err: Error,
}

type AppResult<T> = std::result::Result<T, AppError>;

trait Classify<T> {
    /// Tags failures as configuration errors (exit 1).
    fn validation(self) -> AppResult<T>;
    /// Tags failures as data errors (exit 2).
    fn data(self) -> AppResult<T>;
}

impl<T> Classify<T> for Result<T> {
    fn validation(self) -> AppResult<T> {
        self.map_err(|err| AppError { code: 1, err })
    }
    fn data(self) -> AppResult<T> {
        self.map_err(|err| AppError { code: 2, err })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful terminations; every
            // other parse failure is a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError { code, err }) => {
            eprintln!("error: {err}");
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> AppResult<()> {
    match command {
        Command::Demo(DemoDataset::Bg1969(args)) => cmd_demo(&args),
        Command::Ingest(args) => cmd_ingest(&load_config(&args)?),
        Command::Evaluate(args) => cmd_evaluate(&load_config(&args)?),
        Command::Compare(args) => {
            let cfg = load_config(&args.config)?;
            cmd_compare(&cfg, !args.no_gls, !args.no_individuals)
        }
        Command::Acf(args) => {
            let cfg = load_config(&args.config)?;
            cmd_acf(&cfg, args.max_lag, args.gamma)
        }
        Command::Gls(args) => cmd_gls(&load_config(&args)?),
    }
}

/// Builds the effective configuration: file, then `--set` overrides.
fn load_config(args: &ConfigArgs) -> AppResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path).validation()?,
        None => RunConfig::default(),
    };
    for assignment in &args.set {
        let (key, value) = assignment.split_once('=').ok_or_else(|| AppError {
            code: 1,
            err: Error::Config(format!("--set {assignment:?}: expected key=value")),
        })?;
        cfg.apply(key.trim(), value.trim()).validation()?;
    }
    if let Some(dir) = &args.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn ensure_out_dir(dir: &std::path::Path) -> AppResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", dir.display())))
        .data()
}

/// Writes a report CSV and records it in the manifest.
fn emit(
    manifest: &mut Manifest,
    dir: &std::path::Path,
    name: &str,
    content: &str,
) -> AppResult<PathBuf> {
    let path = dir.join(name);
    corrcast::report::write_text_file(&path, content).data()?;
    let label = name.trim_end_matches(".csv").replace('.', "_");
    manifest.output(&label, &path).data()?;
    Ok(path)
}

fn finish(manifest: &Manifest, dir: &std::path::Path, name: &str) -> AppResult<()> {
    manifest.write(dir.join(name)).data()
}

fn cmd_demo(args: &DemoArgs) -> AppResult<()> {
    let table = demo::bg1969_table().data()?;
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = Manifest::new("demo bg1969");
    manifest.set("dataset", "bg1969");
    manifest.config("dataset = bg1969\n");
    let csv = demo_csv(&table).data()?;
    emit(&mut manifest, &args.out_dir, "demo_bg1969.csv", &csv)?;
    finish(&manifest, &args.out_dir, "demo_bg1969.manifest.txt")?;
    print!("{}", demo_text(&table));
    Ok(())
}

/// The span of all configured windows, used to count observations when
/// selecting forecasters (exclusions do not reduce availability counts).
fn sample_span(cfg: &RunConfig) -> Result<Option<PeriodMask>> {
    let Some(first) = cfg.periods.first() else { return Ok(None) };
    let start = cfg.periods.iter().map(|p| p.start).min().unwrap_or(first.start);
    let end = cfg.periods.iter().map(|p| p.end).max().unwrap_or(first.end);
    PeriodMask::new("sample", start, end).map(Some)
}

/// Runs the normalization pipeline on the raw survey file.
fn normalize(cfg: &RunConfig, manifest: &mut Manifest) -> AppResult<ForecastPanel> {
    let spf = cfg
        .spf_file
        .as_ref()
        .ok_or_else(|| AppError {
            code: 1,
            err: Error::Config("spf_file is required (set spf_file = <path>)".into()),
        })?
        .clone();
    manifest.input("spf", &spf).data()?;
    let column = cfg.resolved_column();
    if column.is_empty() {
        return Err(AppError {
            code: 1,
            err: Error::Config("set indicator or column to choose the variable".into()),
        });
    }
    manifest.set("column", &column);
    let (panel, stats) = parse_spf_path(&spf, &column, cfg.horizon).data()?;
    manifest.set("rows_read", stats.rows_read.to_string());
    manifest.set("forecasters_seen", stats.forecasters.to_string());
    manifest.set("entries", stats.entries.to_string());
    manifest.set("missing_cells", stats.missing.to_string());

    let span = sample_span(cfg).validation()?;
    let panel = select_forecasters(&panel, cfg.min_obs, span.as_ref()).data()?;
    manifest.set("forecasters_kept", panel.n_forecasters().to_string());

    let panel = if cfg.impute {
        let (filled, istats) = impute_forward(&panel).data()?;
        manifest.set("imputed_cells", istats.filled.to_string());
        manifest.set("leading_missing", istats.leading_missing.to_string());
        filled
    } else {
        panel
    };
    Ok(panel)
}

fn cmd_ingest(cfg: &RunConfig) -> AppResult<()> {
    ensure_out_dir(&cfg.out_dir)?;
    let mut manifest = Manifest::new("ingest");
    manifest.config(&cfg.canonical());
    let panel = normalize(cfg, &mut manifest)?;

    let mut buf = Vec::new();
    write_panel_csv(&panel, &mut buf).data()?;
    let csv = String::from_utf8(buf)
        .map_err(|e| Error::Data(format!("panel encoding: {e}")))
        .data()?;
    let path = emit(&mut manifest, &cfg.out_dir, "panel.csv", &csv)?;
    finish(&manifest, &cfg.out_dir, "ingest.manifest.txt")?;
    println!("forecasters = {}", panel.n_forecasters());
    println!("entries = {}", panel.n_entries());
    println!("imputed = {}", panel.n_imputed());
    println!("panel = {}", path.display());
    Ok(())
}

/// Loads the working panel: the normalized file when configured, otherwise
/// the raw survey file through the normalization pipeline.
fn load_panel(cfg: &RunConfig, manifest: &mut Manifest) -> AppResult<ForecastPanel> {
    if let Some(path) = &cfg.panel_file {
        manifest.input("panel", path).data()?;
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
            .data()?;
        return read_panel_csv(file).data();
    }
    if cfg.spf_file.is_some() {
        return normalize(cfg, manifest);
    }
    Err(AppError {
        code: 1,
        err: Error::Config("set panel_file or spf_file to choose the forecast input".into()),
    })
}

fn load_actuals(cfg: &RunConfig, manifest: &mut Manifest) -> AppResult<ActualSeries> {
    let path = cfg.actuals_file.as_ref().ok_or_else(|| AppError {
        code: 1,
        err: Error::Config("actuals_file is required (set actuals_file = <path>)".into()),
    })?;
    manifest.input("actuals", path).data()?;
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
        .data()?;
    read_actuals_csv(file, cfg.actuals_transform).data()
}

/// Evaluation windows: the configured ones, or one window spanning the data.
fn windows_or_full(cfg: &RunConfig, errors: &SeriesMap) -> AppResult<Vec<PeriodMask>> {
    let masks = cfg.masks().validation()?;
    if !masks.is_empty() {
        return Ok(masks);
    }
    let (Some(first), Some(last)) = (
        errors.keys().next().copied(),
        errors.keys().next_back().copied(),
    ) else {
        return Err(AppError { code: 2, err: Error::Empty });
    };
    PeriodMask::new("full", first, last).map(|m| vec![m]).data()
}

fn cmd_evaluate(cfg: &RunConfig) -> AppResult<()> {
    ensure_out_dir(&cfg.out_dir)?;
    let mut manifest = Manifest::new("evaluate");
    manifest.config(&cfg.canonical());
    let panel = load_panel(cfg, &mut manifest)?;
    let actuals = load_actuals(cfg, &mut manifest)?;

    let errors = mean_error_series(&panel, &actuals);
    let windows = windows_or_full(cfg, &errors)?;
    let hist_opts = HistOptions { t0: cfg.t0, exclusion: cfg.exclusion_mask() };
    let hist = cfg.hist.then_some(&hist_opts);
    let report =
        factor_grid_report(&errors, panel.horizon(), &cfg.factors, &windows, hist).data()?;

    let csv = evaluation_csv(&report).data()?;
    emit(&mut manifest, &cfg.out_dir, "evaluate.csv", &csv)?;
    finish(&manifest, &cfg.out_dir, "evaluate.manifest.txt")?;
    print!("{}", evaluation_text(&report));
    Ok(())
}

fn cmd_compare(cfg: &RunConfig, include_gls: bool, include_individuals: bool) -> AppResult<()> {
    ensure_out_dir(&cfg.out_dir)?;
    let mut manifest = Manifest::new("compare");
    manifest.config(&cfg.canonical());
    let panel = load_panel(cfg, &mut manifest)?;
    let actuals = load_actuals(cfg, &mut manifest)?;
    let sample = align(&panel, &actuals).data()?;

    let eval_start = cfg
        .eval_start
        .or_else(|| sample.targets.first().copied())
        .ok_or(AppError { code: 2, err: Error::Empty })?;
    let opts = MethodOptions {
        fixed_gamma: cfg.fixed_gamma,
        min_train: cfg.min_train,
        t0: cfg.t0,
        include_gls,
        include_individuals,
        exclusion: cfg.exclusion_mask(),
        ..MethodOptions::default()
    };
    let cmp = method_comparison(&sample, eval_start, &opts).data()?;

    manifest.set("eval_start", cmp.eval_start.to_string());
    manifest.set("n_eval", cmp.n_eval.to_string());
    let csv = comparison_csv(&cmp).data()?;
    emit(&mut manifest, &cfg.out_dir, "compare.csv", &csv)?;
    finish(&manifest, &cfg.out_dir, "compare.manifest.txt")?;
    println!("eval_start = {}   n_eval = {}", cmp.eval_start, cmp.n_eval);
    print!("{}", comparison_text(&cmp));
    Ok(())
}

fn cmd_acf(cfg: &RunConfig, max_lag: usize, gamma: Option<f64>) -> AppResult<()> {
    ensure_out_dir(&cfg.out_dir)?;
    let mut manifest = Manifest::new("acf");
    manifest.config(&cfg.canonical());
    let panel = load_panel(cfg, &mut manifest)?;
    let actuals = load_actuals(cfg, &mut manifest)?;

    let errors = mean_error_series(&panel, &actuals);
    let series: Vec<f64> = match gamma {
        None => errors.values().copied().collect(),
        Some(g) => {
            // Corrected stream: only targets whose lag-h error exists.
            let h = panel.horizon() as i64;
            errors
                .iter()
                .filter_map(|(q, e)| {
                    errors.get(&q.offset(-h)).map(|lag| e - g * lag)
                })
                .collect()
        }
    };
    let result = acf(&series, max_lag).data()?;

    manifest.set("n", result.n.to_string());
    if let Some(g) = gamma {
        manifest.set("gamma", fmt_full(g));
    }
    let csv = acf_csv(&result).data()?;
    emit(&mut manifest, &cfg.out_dir, "acf.csv", &csv)?;
    finish(&manifest, &cfg.out_dir, "acf.manifest.txt")?;
    for (k, rho) in result.rho.iter().enumerate() {
        println!("lag {k:>2}  rho {rho:>8.4}  band ±{:.4}", result.band);
    }
    Ok(())
}

fn cmd_gls(cfg: &RunConfig) -> AppResult<()> {
    ensure_out_dir(&cfg.out_dir)?;
    let mut manifest = Manifest::new("gls");
    manifest.config(&cfg.canonical());
    let panel = load_panel(cfg, &mut manifest)?;
    let actuals = load_actuals(cfg, &mut manifest)?;
    let sample = align(&panel, &actuals).data()?;
    if !sample.is_contiguous() {
        return Err(AppError { code: 2, err: Error::NonContiguousSample });
    }

    let y = Array1::from(sample.actuals.to_vec());
    let fit = hildreth_lu(&sample.forecasts, &y, sample.horizon, DEFAULT_GRID_STEP).data()?;
    let weights = fit.weights.clone().with_ids(sample.ids.clone()).data()?;

    manifest.set("n_obs", sample.len().to_string());
    manifest.set("gamma", fmt_full(fit.gamma));
    manifest.set("ssr", fmt_full(fit.ssr));
    let csv = weights_csv(
        weights.ids(),
        weights.weights().as_slice().expect("contiguous weights"),
        Some(fit.gamma),
    )
    .data()?;
    emit(&mut manifest, &cfg.out_dir, "gls.csv", &csv)?;
    finish(&manifest, &cfg.out_dir, "gls.manifest.txt")?;
    println!("gamma = {}", fmt_full(fit.gamma));
    for (id, w) in weights.ids().iter().zip(weights.weights()) {
        println!("w[{id}] = {}", fmt_full(*w));
    }
    Ok(())
}

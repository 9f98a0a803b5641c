//! `proxburden validate | compute | report | serve`
//!
//! Exit status: 0 success, 2 usage or configuration error, 3 the data failed
//! validation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use proxburden::classify::Method;
use proxburden::config::RunConfig;
use proxburden::engine::{LoadError, RunError};
use proxburden::ingest::{Issue, Scale, Severity, ValidationReport};
use proxburden::output::{burden_geojson, report_json, schools_csv, to_json};
use proxburden::{par, Dataset, Parallelism, RunRequest};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "proxburden", version, about = "Proximity burden of environmental hazards on school populations")]
struct Cli {
    /// Worker threads for the data-parallel stages (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check inputs and write validation.json.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score schools and zones; write scores.csv, burden.geojson and run.json.
    Compute(RunArgs),
    /// Write a cross-scale (maup) or class demographics report.
    Report {
        #[arg(long, value_enum)]
        kind: ReportKind,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Serve the HTTP API and dashboard.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    layer: String,
    /// Defaults to the config's radius (one mile unless set).
    #[arg(long)]
    radius_m: Option<f64>,
    #[arg(long, default_value = "community_area")]
    scale: Scale,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Maup,
    Demographics,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string() }
    }

    fn invalid(message: impl ToString) -> Self {
        Failure { code: 3, message: message.to_string() }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        if e.is_validation() { Failure::invalid(e) } else { Failure::usage(e) }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::usage(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate { config, out_dir } => validate(&config, out_dir),
        Command::Compute(args) => compute(&args, cli.threads),
        Command::Report { kind, run } => report(kind, &run, cli.threads),
        Command::Serve { config, port, host } => serve(&config, &host, port, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(Failure::usage)
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn summarize(report: &ValidationReport) {
    for issue in report.issues.iter().filter(|i| i.severity != Severity::Info) {
        eprintln!("{:?} {} {}: {}", issue.severity, issue.code, issue.subject, issue.message);
    }
    info!("{} error(s), {} warning(s)", report.errors, report.warnings);
}

fn validate(config: &Path, out_dir: Option<PathBuf>) -> Outcome {
    let cfg = load_config(config)?;
    let out_dir = out_dir.unwrap_or_else(|| cfg.output_dir.clone());
    let report = match Dataset::load(&cfg) {
        Ok(ds) => ds.validate(),
        // Data that parses but breaks an invariant still gets a report.
        Err(e) if e.is_validation() => ValidationReport {
            usable: false,
            errors: 1,
            warnings: 0,
            issues: vec![Issue { severity: Severity::Error, code: "invalid_input", subject: String::new(), message: e.to_string() }],
        },
        Err(e) => return Err(e.into()),
    };
    write(&out_dir, "validation.json", &to_json(&report))?;
    summarize(&report);
    if report.usable {
        Ok(())
    } else {
        Err(Failure::invalid(format!("{} validation error(s)", report.errors)))
    }
}

/// Loads and validates; an unusable dataset is exit 3.
fn load_usable(cfg: &RunConfig) -> Result<Dataset, Failure> {
    let ds = Dataset::load(cfg)?;
    let report = ds.validate();
    if !report.usable {
        summarize(&report);
        return Err(Failure::invalid(format!("{} validation error(s); run `validate` for details", report.errors)));
    }
    Ok(ds)
}

fn request(args: &RunArgs, ds: &Dataset) -> RunRequest {
    RunRequest {
        layer: args.layer.clone(),
        radius_m: args.radius_m.unwrap_or(ds.defaults.radius_m),
        scale: args.scale,
        method: args.method.unwrap_or(ds.defaults.method),
        k: args.k.unwrap_or(ds.defaults.k),
    }
}

#[derive(Serialize)]
struct InputDigest {
    role: String,
    /// Relative to the config file.
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    engine: &'static str,
    engine_version: &'static str,
    request: &'a RunRequest,
    n_schools: usize,
    n_schools_scored: usize,
    n_zones: usize,
    inputs: Vec<InputDigest>,
    outputs: [&'static str; 2],
}

fn digests(cfg: &RunConfig, config_path: &Path) -> Result<Vec<InputDigest>, Failure> {
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut files = vec![("config".to_owned(), config_path.to_owned()), ("schools".to_owned(), cfg.schools.path.clone())];
    files.extend(cfg.hazard_layers.iter().map(|l| (format!("hazard_layer:{}", l.id), l.path.clone())));
    files.extend(cfg.zone_sets.iter().map(|z| (format!("zone_set:{}", z.scale), z.path.clone())));
    files
        .into_iter()
        .map(|(role, path)| {
            let bytes = std::fs::read(&path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            let rel = path.strip_prefix(base).unwrap_or(&path);
            Ok(InputDigest {
                role,
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect()
}

fn compute(args: &RunArgs, threads: Option<usize>) -> Outcome {
    let cfg = load_config(&args.config)?;
    let ds = load_usable(&cfg)?;
    let req = request(args, &ds);
    let out = par::with_threads(threads, || ds.run(&req, Parallelism::Parallel))?;
    let meta = RunMetadata {
        engine: "proxburden",
        engine_version: proxburden::VERSION,
        request: &req,
        n_schools: out.records.len(),
        n_schools_scored: out.records.iter().filter(|r| !r.excluded).count(),
        n_zones: out.surface.zones.len(),
        inputs: digests(&cfg, &args.config)?,
        outputs: ["scores.csv", "burden.geojson"],
    };
    let dir = args.out_dir.clone().unwrap_or(cfg.output_dir);
    write(&dir, "scores.csv", &schools_csv(&out))?;
    write(&dir, "burden.geojson", &burden_geojson(&ds, &out))?;
    write(&dir, "run.json", &to_json(&meta))
}

fn report(kind: ReportKind, args: &RunArgs, threads: Option<usize>) -> Outcome {
    let cfg = load_config(&args.config)?;
    let ds = load_usable(&cfg)?;
    let req = request(args, &ds);
    let (name, body) = par::with_threads(threads, || -> Result<_, RunError> {
        Ok(match kind {
            ReportKind::Maup => ("maup.json", report_json("maup", &req, &ds.maup(&req, Parallelism::Parallel)?)),
            ReportKind::Demographics => {
                ("demographics.json", report_json("demographics", &req, &ds.demographics(&req, Parallelism::Parallel)?))
            }
        })
    })?;
    write(&args.out_dir.clone().unwrap_or(cfg.output_dir), name, &body)
}

fn serve(config: &Path, host: &str, port: u16, threads: Option<usize>) -> Outcome {
    let cfg = load_config(config)?;
    let ds = load_usable(&cfg)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::usage(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| Failure::usage(format!("cannot bind {host}:{port}: {e}")))?;
        let bound = listener.local_addr().map_err(Failure::usage)?;
        let state = Arc::new(proxburden_server::AppState::new(ds, cfg.static_dir.clone(), threads));
        // Scripts parse this line for the ephemeral port.
        println!("listening on http://{bound}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            info!("interrupt received, shutting down");
        };
        proxburden_server::serve(listener, proxburden_server::router(state), shutdown)
            .await
            .map_err(|e| Failure::usage(format!("server error: {e}")))
    })
}

//! Command-line front end. Subcommands share one flag grammar; a JSON
//! config file can set the same fields, with explicit flags taking
//! precedence over the file and the file over built-in defaults.
//!
//! Exit codes: 0 when every check passes, 1 when a mathematical check fails
//! (the failing row is printed), 2 for configuration or input errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::acceptance;
use crate::curvature::curvature_sample;
use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowSchedule};
use crate::geometry::{decay_report, distance_profile};
use crate::io::{
    decay_to_csv, decay_to_json, emit, flow_to_csv, flow_to_json, format_f64, kernel_report_to_csv,
    kernel_report_to_json, profile_to_csv, profile_to_json, scan_to_csv, scan_to_json, ScanRow,
};
use crate::kernels::{kernel_identity_report, MAX_ORDER};
use crate::soliton::{
    build_profile, build_profile_t, flat_profile, soliton_residual, RadialProfile, SolitonParams,
};

#[derive(Parser)]
#[command(
    name = "ksl",
    version,
    about = "Soliton profiles, curvature positivity, decay statistics, and flow runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derivative-chain identity report for the series kernels.
    Kernels(CommonArgs),
    /// Build a profile and write it as CSV or JSON.
    Build(CommonArgs),
    /// Scan curvature positivity over sampled radii.
    Verify(CommonArgs),
    /// Tabulate volume growth and curvature decay statistics.
    Decay(CommonArgs),
    /// Run the flow and report its diagnostics.
    Flow(CommonArgs),
    /// Run the full acceptance suite.
    All(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Complex dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Expansion-rate parameter, must exceed 1.
    #[arg(long)]
    lambda: Option<f64>,
    /// Lower edge of the phi window for profile builds.
    #[arg(long = "phi-min")]
    phi_min: Option<f64>,
    /// Upper edge of the phi window for profile builds.
    #[arg(long = "phi-max")]
    phi_max: Option<f64>,
    /// Node count of built profiles.
    #[arg(long)]
    nodes: Option<usize>,
    /// Lower edge of the t window for flat and flow profiles.
    #[arg(long = "t-min", allow_negative_numbers = true)]
    t_min: Option<f64>,
    /// Upper edge of the t window for flat and flow profiles.
    #[arg(long = "t-max", allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Flow horizon in self-similar time.
    #[arg(long = "s-end")]
    s_end: Option<f64>,
    /// Number of sampled radii for scans.
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads for scans (KSL_THREADS is the fallback).
    #[arg(long)]
    threads: Option<usize>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Use the flat model instead of a soliton.
    #[arg(long, conflicts_with = "soliton")]
    flat: bool,
    /// Use a soliton profile (the default).
    #[arg(long)]
    soliton: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    lambda: Option<f64>,
    phi_min: Option<f64>,
    phi_max: Option<f64>,
    nodes: Option<usize>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    s_end: Option<f64>,
    samples: Option<usize>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    flat: Option<bool>,
    soliton: Option<bool>,
    tolerances: Option<BTreeMap<String, f64>>,
}

/// The fully resolved settings a subcommand runs with.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub lambda: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub nodes: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub s_end: f64,
    pub samples: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormatKind,
    pub flat: bool,
    pub tolerances: BTreeMap<String, f64>,
}

/// Public mirror of the format flag so `RunConfig` can be inspected.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum OutputFormatKind {
    Csv,
    Json,
}

fn default_tolerances() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("kernel_identity".to_string(), 1e-5),
        ("soliton_residual".to_string(), 1e-8),
        ("flow_step".to_string(), 1e-8),
        ("flow_selfsim".to_string(), 1e-3),
        ("flow_flat_drift".to_string(), 1e-12),
    ])
}

fn resolve(args: &CommonArgs) -> Result<RunConfig> {
    let file: FileConfig = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => FileConfig::default(),
    };

    let mut tolerances = default_tolerances();
    if let Some(overrides) = file.tolerances {
        for (key, value) in overrides {
            if !tolerances.contains_key(&key) {
                return Err(Error::invalid(format!("unknown tolerance key: {key}")));
            }
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!(
                    "tolerance {key} must be positive, got {value}"
                )));
            }
            tolerances.insert(key, value);
        }
    }

    let format = match (&args.format, file.format.as_deref()) {
        (Some(OutputFormat::Csv), _) => OutputFormatKind::Csv,
        (Some(OutputFormat::Json), _) => OutputFormatKind::Json,
        (None, Some("csv")) => OutputFormatKind::Csv,
        (None, Some("json")) => OutputFormatKind::Json,
        (None, Some(other)) => {
            return Err(Error::invalid(format!(
                "format must be \"csv\" or \"json\", got {other:?}"
            )))
        }
        (None, None) => OutputFormatKind::Csv,
    };

    let flat = if args.flat {
        true
    } else if args.soliton {
        false
    } else if file.flat == Some(true) && file.soliton == Some(true) {
        return Err(Error::invalid("config sets both flat and soliton"));
    } else {
        file.flat.unwrap_or(false)
    };

    let threads = args
        .threads
        .or_else(|| {
            std::env::var("KSL_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .or(file.threads);

    let cfg = RunConfig {
        n: args.n.or(file.n).unwrap_or(2),
        lambda: args.lambda.or(file.lambda).unwrap_or(2.0),
        phi_min: args.phi_min.or(file.phi_min).unwrap_or(1e-6),
        phi_max: args.phi_max.or(file.phi_max).unwrap_or(1e6),
        nodes: args.nodes.or(file.nodes).unwrap_or(1024),
        t_min: args.t_min.or(file.t_min).unwrap_or(-12.0),
        t_max: args.t_max.or(file.t_max).unwrap_or(30.0),
        s_end: args.s_end.or(file.s_end).unwrap_or(1.0),
        samples: args.samples.or(file.samples).unwrap_or(1000),
        threads,
        out: args.out.clone().or(file.out),
        format,
        flat,
        tolerances,
    };

    if cfg.n == 0 || cfg.n > MAX_ORDER - 1 {
        return Err(Error::invalid(format!(
            "n must lie in 1..={}, got {}",
            MAX_ORDER - 1,
            cfg.n
        )));
    }
    if !cfg.flat && (!cfg.lambda.is_finite() || cfg.lambda <= 1.0) {
        return Err(Error::invalid(format!(
            "lambda must be finite and greater than 1, got {}",
            cfg.lambda
        )));
    }
    if cfg.samples < 2 {
        return Err(Error::invalid("samples must be at least 2"));
    }
    Ok(cfg)
}

fn tolerance(cfg: &RunConfig, key: &str) -> f64 {
    *cfg.tolerances
        .get(key)
        .unwrap_or_else(|| panic!("tolerance {key} missing from defaults"))
}

/// Parses arguments, dispatches, and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let (args, command): (&CommonArgs, fn(&RunConfig) -> Result<bool>) = match &cli.command {
        Command::Kernels(a) => (a, cmd_kernels),
        Command::Build(a) => (a, cmd_build),
        Command::Verify(a) => (a, cmd_verify),
        Command::Decay(a) => (a, cmd_decay),
        Command::Flow(a) => (a, cmd_flow),
        Command::All(a) => (a, cmd_all),
    };
    let cfg = resolve(args)?;
    if let Some(count) = cfg.threads {
        if count == 0 {
            return Err(Error::invalid("threads must be at least 1"));
        }
        // A second initialization in the same process is harmless; the
        // first pool wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global();
    }
    command(&cfg)
}

fn input_profile(cfg: &RunConfig) -> Result<RadialProfile> {
    if cfg.flat {
        flat_profile(cfg.n, cfg.t_min, cfg.t_max, cfg.nodes)
    } else {
        let params = SolitonParams::new(cfg.n, cfg.lambda)?;
        build_profile(params, cfg.phi_min, cfg.phi_max, cfg.nodes, 0.0)
    }
}

fn cmd_kernels(cfg: &RunConfig) -> Result<bool> {
    let grid: Vec<f64> = (0..200).map(|i| 50.0 * i as f64 / 199.0).collect();
    let mut reports = Vec::new();
    for n in 1..=cfg.n {
        reports.push(kernel_identity_report(n, &grid, 1e-3)?);
    }
    let text = match cfg.format {
        OutputFormatKind::Csv => kernel_report_to_csv(&reports),
        OutputFormatKind::Json => kernel_report_to_json(&reports)?,
    };
    emit(&text, cfg.out.as_deref())?;
    let tol = tolerance(cfg, "kernel_identity");
    for report in &reports {
        if report.max_residual() >= tol {
            println!(
                "identity check failed: n = {}, max residual {} >= {}",
                report.n,
                format_f64(report.max_residual()),
                format_f64(tol)
            );
            return Ok(false);
        }
    }
    Ok(true)
}

fn cmd_build(cfg: &RunConfig) -> Result<bool> {
    let profile = input_profile(cfg)?;
    let text = match cfg.format {
        OutputFormatKind::Csv => profile_to_csv(&profile, None)?,
        OutputFormatKind::Json => profile_to_json(&profile, None)?,
    };
    emit(&text, cfg.out.as_deref())?;
    if !cfg.flat {
        let residual = soliton_residual(&profile, cfg.lambda)?;
        let tol = tolerance(cfg, "soliton_residual");
        if residual >= tol {
            println!(
                "profile residual check failed: {} >= {}",
                format_f64(residual),
                format_f64(tol)
            );
            return Ok(false);
        }
    }
    Ok(true)
}

fn interpolate_distance(table: &[(f64, f64)], t: f64) -> f64 {
    let idx = table.partition_point(|&(ti, _)| ti < t);
    if idx == 0 {
        return table[0].1;
    }
    if idx >= table.len() {
        return table[table.len() - 1].1;
    }
    let (t0, d0) = table[idx - 1];
    let (t1, d1) = table[idx];
    d0 + (d1 - d0) * (t - t0) / (t1 - t0)
}

fn scan_row_csv(row: &ScanRow) -> String {
    let text = scan_to_csv(std::slice::from_ref(row));
    text.lines().nth(1).unwrap_or_default().to_string()
}

fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    let profile = input_profile(cfg)?;
    let d_table = distance_profile(&profile);
    let lo = profile.t[0];
    let hi = profile.t[profile.len() - 1];
    let ts: Vec<f64> = (0..cfg.samples)
        .map(|i| {
            if i == cfg.samples - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (cfg.samples - 1) as f64
            }
        })
        .collect();
    let rows: Vec<ScanRow> = ts
        .par_iter()
        .map(|&t| -> Result<ScanRow> {
            let cs = curvature_sample(&profile, t)?;
            Ok(ScanRow {
                t,
                d: interpolate_distance(&d_table, t),
                a: cs.a,
                b: cs.b,
                c: cs.c_curv,
                r: cs.scalar_r,
                min_eig: cs.min_eigenvalue,
                holds_a: cs.holds_a,
                holds_b: cs.holds_b,
                holds_c: cs.holds_c,
                holds_d: cs.holds_d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match cfg.format {
        OutputFormatKind::Csv => scan_to_csv(&rows),
        OutputFormatKind::Json => scan_to_json(&rows)?,
    };
    emit(&text, cfg.out.as_deref())?;
    for row in &rows {
        let strict = row.holds_a && row.holds_b && row.holds_c && row.holds_d && row.min_eig > 0.0;
        if !strict {
            println!("positivity failed at: {}", scan_row_csv(row));
            return Ok(false);
        }
    }
    Ok(true)
}

fn cmd_decay(cfg: &RunConfig) -> Result<bool> {
    let profile = input_profile(cfg)?;
    let report = decay_report(&profile)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let text = match cfg.format {
        OutputFormatKind::Csv => decay_to_csv(&report)?,
        OutputFormatKind::Json => decay_to_json(&report)?,
    };
    emit(&text, cfg.out.as_deref())?;
    Ok(true)
}

fn cmd_flow(cfg: &RunConfig) -> Result<bool> {
    let initial = if cfg.flat {
        flat_profile(cfg.n, cfg.t_min, cfg.t_max, cfg.nodes)?
    } else {
        let params = SolitonParams::new(cfg.n, cfg.lambda)?;
        build_profile_t(params, cfg.t_min, cfg.t_max, cfg.nodes)?
    };
    let mut schedule = FlowSchedule::with_defaults(cfg.s_end)?;
    schedule.tol = tolerance(cfg, "flow_step");
    let result = run_flow(&initial, &schedule)?;
    for warning in &result.summary.warnings {
        eprintln!("warning: {warning}");
    }
    let text = match cfg.format {
        OutputFormatKind::Csv => flow_to_csv(&result),
        OutputFormatKind::Json => flow_to_json(&result)?,
    };
    emit(&text, cfg.out.as_deref())?;

    if cfg.flat {
        let tol = tolerance(cfg, "flow_flat_drift") * cfg.s_end.max(1.0);
        let end = &result.snapshots.last().unwrap().profile;
        for i in 0..initial.len() {
            let drift = (end.phi[i] / initial.phi[i] - 1.0).abs();
            if drift > tol {
                println!(
                    "flat stationarity failed at t = {}: drift {}",
                    format_f64(initial.t[i]),
                    format_f64(drift)
                );
                return Ok(false);
            }
        }
    } else {
        let tol = tolerance(cfg, "flow_selfsim");
        for snap in &result.snapshots {
            if snap.selfsim_err.is_none_or(|e| e >= tol) {
                println!(
                    "self-similarity failed at s = {}: err {}",
                    format_f64(snap.s),
                    snap.selfsim_err
                        .map(format_f64)
                        .unwrap_or_else(|| "missing".into())
                );
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn cmd_all(cfg: &RunConfig) -> Result<bool> {
    let results = acceptance::run_all();
    let mut lines = String::new();
    for r in &results {
        println!("{}", r.line());
        lines.push_str(&r.line());
        lines.push('\n');
    }
    if cfg.out.is_some() {
        emit(&lines, cfg.out.as_deref())?;
    }
    Ok(results.iter().all(|r| r.passed))
}

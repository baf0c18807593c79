//! Command-line front end: channel generation, inspection, and
//! Monte Carlo SNR sweeps with CSV output.
//!
//! Exit codes are a stable contract: 0 success, 2 I/O failure, 64 usage
//! error, 65 invalid configuration or domain error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmfsec::{
    gen_synthetic_channel, load_channel, run_sweep_full, save_channel, ChannelMatrix, Error,
    Scheme, SeededRng, SweepConfig,
};

pub mod csv;
pub mod manifest;

use manifest::RunManifest;

pub const EXIT_IO: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_CONFIG: u8 = 65;

#[derive(Parser)]
#[command(
    name = "mmfsec",
    version,
    about = "Secrecy-rate simulator for multi-mode fiber wiretap channels with artificial noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic channel file with a controlled mode-gain spread.
    GenChannel(GenChannelArgs),
    /// Run a Monte Carlo SNR sweep and emit per-scheme CSV statistics.
    Sweep(SweepArgs),
    /// Print channel facts: size, singular values, dynamic range, digest.
    Inspect(InspectArgs),
}

#[derive(Args)]
pub struct GenChannelArgs {
    /// Number of fiber modes.
    #[arg(long)]
    pub modes: usize,
    /// Power-gain spread between strongest and weakest mode, in dB.
    #[arg(long, default_value_t = 0.0)]
    pub spread_db: f64,
    /// Master seed for the generator draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional label stored in the file.
    #[arg(long)]
    pub label: Option<String>,
    /// Output path for the channel JSON.
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
    /// Write the run manifest to this path instead of stderr.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Channel JSON file for the legitimate link.
    #[arg(long)]
    pub channel: PathBuf,
    /// SNR grid in dB: `start:stop:step` (inclusive) or a single value.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: String,
    /// Eavesdropper realizations per SNR point.
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
    /// Comma-separated schemes: waterfilling, svd-uniform, greedy-an,
    /// jensen-bound, lemma-bounds.
    #[arg(long, default_value = "waterfilling,svd-uniform,greedy-an,jensen-bound,lemma-bounds")]
    pub schemes: String,
    /// Master seed; equal seeds reproduce byte-identical output.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mode-dependent loss of the eavesdropper channel, in dB.
    #[arg(long, default_value_t = 20.0)]
    pub mdl_db: f64,
    /// Total transmit power (linear); SNR = power / noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Power-split grid step of the greedy search.
    #[arg(long, default_value_t = 0.05)]
    pub tau_step: f64,
    /// Frozen eavesdropper draws inside the greedy search.
    #[arg(long, default_value_t = 500)]
    pub eve_draws: usize,
    /// Also write one CSV row per realization to this path.
    #[arg(long)]
    pub dump_trials: Option<PathBuf>,
    /// Write the run manifest to this path instead of stderr.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Write the statistics CSV here instead of standard output.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    /// Run the reference single-threaded engine (same bytes, slower).
    #[arg(long)]
    pub serial: bool,
}

#[derive(Args)]
pub struct InspectArgs {
    /// Channel JSON file to describe.
    #[arg(long)]
    pub channel: PathBuf,
    /// Write the run manifest to this path instead of stderr.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// A failure plus the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: EXIT_USAGE }
    }

    fn io(context: &str, err: std::io::Error) -> Self {
        Self { message: format!("{context}: {err}"), code: EXIT_IO }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self { message: err.to_string(), code }
    }
}

pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(EXIT_USAGE)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenChannel(args) => cmd_gen_channel(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Inspect(args) => cmd_inspect(&args),
    }
}

fn cmd_gen_channel(args: &GenChannelArgs) -> Result<(), CliError> {
    let mut rng = SeededRng::new(args.seed, 0);
    let mut channel = gen_synthetic_channel(args.modes, args.spread_db, &mut rng)?;
    if let Some(label) = &args.label {
        channel = channel.with_label(label.clone());
    }
    save_channel(&channel, &args.output)?;
    let manifest = RunManifest::new("gen-channel")
        .with_seed(args.seed)
        .with_channel(&channel)
        .with_config(serde_json::json!({
            "modes": args.modes,
            "spread_db": args.spread_db,
            "seed": args.seed,
            "label": args.label,
            "output": args.output,
        }));
    manifest.emit(args.manifest.as_deref())?;
    Ok(())
}

fn parse_schemes(list: &str) -> Result<Vec<Scheme>, CliError> {
    let mut schemes = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let scheme = Scheme::parse(name).ok_or_else(|| {
            CliError::usage(format!(
                "unknown scheme `{name}`; expected one of {}",
                Scheme::ALL.map(|s| s.name()).join(", ")
            ))
        })?;
        if !schemes.contains(&scheme) {
            schemes.push(scheme);
        }
    }
    if schemes.is_empty() {
        return Err(CliError::usage("at least one scheme is required"));
    }
    Ok(schemes)
}

/// Parses `start:stop:step` (inclusive endpoints) or a single value.
fn parse_snr_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("invalid SNR value `{s}`")))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::usage(format!("SNR value `{s}` is not finite")))
                }
            })
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [start, stop, step] => {
            let start = parse(start)?;
            let stop = parse(stop)?;
            let step = parse(step)?;
            if step <= 0.0 {
                return Err(CliError::usage("SNR step must be positive"));
            }
            if stop < start {
                return Err(CliError::usage("SNR stop must not be below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(CliError::usage(format!(
            "invalid SNR range `{spec}`; expected `start:stop:step` or a single value"
        ))),
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let channel = load_channel(&args.channel)?;
    let config = SweepConfig {
        snr_db_points: parse_snr_grid(&args.snr)?,
        trials: args.trials,
        schemes: parse_schemes(&args.schemes)?,
        power: args.power,
        mdl_db: args.mdl_db,
        normalize_trace: true,
        master_seed: args.seed,
        tau_grid_step: args.tau_step,
        eve_draws: args.eve_draws,
    };
    config.validate()?;

    let output = run_sweep_full(&channel, &config, !args.serial, args.dump_trials.is_some())?;

    let stats_csv = csv::render_stats(&output.stats, config.master_seed);
    match &args.output {
        Some(path) => write_text(path, &stats_csv)?,
        None => print!("{stats_csv}"),
    }
    if let Some(path) = &args.dump_trials {
        let dump = output.trial_dump.as_deref().unwrap_or(&[]);
        write_text(path, &csv::render_trials(dump))?;
    }

    let manifest = RunManifest::new("sweep")
        .with_seed(config.master_seed)
        .with_channel(&channel)
        .with_config(serde_json::json!({
            "channel": args.channel,
            "snr": args.snr,
            "resolved": config,
            "serial": args.serial,
            "output": args.output,
            "dump_trials": args.dump_trials,
        }));
    manifest.emit(args.manifest.as_deref())?;
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<(), CliError> {
    let channel = load_channel(&args.channel)?;
    print!("{}", inspect_report(&channel));
    let manifest = RunManifest::new("inspect")
        .with_channel(&channel)
        .with_config(serde_json::json!({ "channel": args.channel }));
    manifest.emit(args.manifest.as_deref())?;
    Ok(())
}

/// Text report for `inspect`: size, label, total gain, spread, digest,
/// and the descending singular values.
pub fn inspect_report(channel: &ChannelMatrix) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "modes: {}", channel.n());
    if let Some(label) = channel.label() {
        let _ = writeln!(out, "label: {label}");
    }
    let _ = writeln!(out, "gram_trace: {}", channel.gram_trace());
    let _ = writeln!(out, "dynamic_range_db: {:.4}", channel.dynamic_range_db());
    let _ = writeln!(out, "digest: {}", manifest::format_digest(channel.digest()));
    let _ = writeln!(out, "singular_values:");
    for (i, d) in channel.singular_values().iter().enumerate() {
        let _ = writeln!(out, "  {} {d}", i + 1);
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(&path.display().to_string(), e))
}

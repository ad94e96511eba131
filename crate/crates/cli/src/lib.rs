//! Command-line front end for the shaken-trap library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod context;
pub mod error;
pub mod manifest;
pub mod output;
pub mod presets;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use shaken_trap::config::OutputFormat;

use commands::{GpeArgs, LambArgs, PowerArgs, PsdArgs, SweepArgs, SweepTarget, TfArgs};
use context::{env_overrides, Context, Sources};
use error::CliError;
use manifest::{config_hash, manifest_path, timestamp, RunManifest};
use sweep::{parse_range, Scale, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "shaken-trap", version, about = "Cold atoms and condensates in a shaken harmonic trap")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Noise seed, applied when the drive has a noise block.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// csv or json.
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<OutputFormat>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Named preset used as the base configuration.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    OutputFormat::parse(s).ok_or_else(|| format!("unknown format '{s}' (expected csv or json)"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy absorption rate of the shaken ensemble.
    Power {
        /// Log-spaced amplitudes lo:hi:n (m).
        #[arg(long)]
        sweep_amplitude: Option<String>,
        /// Log-spaced frequencies lo:hi:n (Hz).
        #[arg(long)]
        sweep_frequency: Option<String>,
        /// Amplitude in mm against power, for a log-log plot.
        #[arg(long)]
        fig3: bool,
    },
    /// Power spectral density of the drive signal.
    Psd {
        #[arg(long, allow_hyphen_values = true)]
        omega_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        omega_max: Option<f64>,
        #[arg(long)]
        omega_points: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long)]
        dt_s: Option<f64>,
    },
    /// Thomas-Fermi density ratio at a probe point.
    TfRatio {
        #[command(flatten)]
        tf: TfFlags,
    },
    /// Condensate ground state by imaginary-time relaxation.
    GpeGround {
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Real-time evolution of the condensate from its ground state.
    GpeEvolve {
        #[command(flatten)]
        solver: SolverFlags,
        /// Write a snapshot every k steps.
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// Record observables every k steps.
        #[arg(long)]
        observe_every: Option<usize>,
    },
    /// Gravitational self-energy shift of a split condensate.
    Lambshift {
        #[command(flatten)]
        lamb: LambFlags,
    },
    /// Runs another command over a range of one configuration value.
    Sweep {
        /// Dotted configuration path, e.g. drive.amplitude_m.
        #[arg(long)]
        param: String,
        /// lo:hi:n.
        #[arg(long)]
        range: String,
        #[arg(long, default_value = "linear")]
        scale: Scale,
        #[arg(long)]
        target: SweepTarget,
        #[command(flatten)]
        tf: TfFlags,
        #[command(flatten)]
        lamb: LambFlags,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct TfFlags {
    #[arg(long, allow_hyphen_values = true)]
    pub probe_z_m: Option<f64>,
    /// paper_prescription, standard_tf or explicit.
    #[arg(long)]
    pub mu_model: Option<String>,
    #[arg(long)]
    pub mu_j: Option<f64>,
    #[arg(long)]
    pub tc_k: Option<f64>,
    #[arg(long)]
    pub t_end_s: Option<f64>,
    #[arg(long)]
    pub dt_s: Option<f64>,
}

impl From<TfFlags> for TfArgs {
    fn from(f: TfFlags) -> Self {
        TfArgs {
            probe_z_m: f.probe_z_m,
            mu_model: f.mu_model,
            mu_j: f.mu_j,
            tc_k: f.tc_k,
            t_end_s: f.t_end_s,
            dt_s: f.dt_s,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct LambFlags {
    #[arg(long)]
    pub n_atoms: Option<f64>,
    #[arg(long)]
    pub omega_hz: Option<f64>,
    #[arg(long)]
    pub length_m: Option<f64>,
    #[arg(long)]
    pub target_ratio: Option<f64>,
}

impl From<LambFlags> for LambArgs {
    fn from(f: LambFlags) -> Self {
        LambArgs {
            n_atoms: f.n_atoms,
            omega_hz: f.omega_hz,
            length_m: f.length_m,
            target_ratio: f.target_ratio,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub halfwidth_m: Option<f64>,
    #[arg(long)]
    pub dt_s: Option<f64>,
    #[arg(long)]
    pub t_end_s: Option<f64>,
}

impl SolverFlags {
    fn overrides(&self) -> Vec<(String, Value)> {
        let mut o = Vec::new();
        if let Some(n) = self.grid_points {
            o.push(("solver.grid_points".into(), Value::from(n as u64)));
        }
        let floats = [
            ("solver.domain_halfwidth_m", self.halfwidth_m),
            ("solver.dt_s", self.dt_s),
            ("solver.t_end_s", self.t_end_s),
        ];
        for (path, v) in floats {
            if let Some(v) = v {
                o.push((path.into(), Value::from(v)));
            }
        }
        o
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Power { .. } => "power",
            Command::Psd { .. } => "psd",
            Command::TfRatio { .. } => "tf-ratio",
            Command::GpeGround { .. } => "gpe-ground",
            Command::GpeEvolve { .. } => "gpe-evolve",
            Command::Lambshift { .. } => "lambshift",
            Command::Sweep { .. } => "sweep",
        }
    }

    fn overrides(&self) -> Vec<(String, Value)> {
        match self {
            Command::GpeGround { solver } | Command::GpeEvolve { solver, .. } => solver.overrides(),
            _ => Vec::new(),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}

/// Parses `args` and runs the command with the given environment. Results
/// go to `stdout` unless `--out` is set; notes go to `stderr`.
pub fn run_with(
    cli: Cli,
    env: impl IntoIterator<Item = (String, String)>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let started = Utc::now();
    let command_name = cli.command.name();
    let sources = Sources {
        preset: cli.preset.as_deref(),
        config_path: cli.config.as_deref(),
        env: env_overrides(env),
        overrides: cli.command.overrides(),
        seed: cli.seed,
        format: cli.format,
    };
    // lambshift runs without any configuration
    let ctx: Option<Context> = match &cli.command {
        Command::Lambshift { .. } => match context::assemble(&sources)? {
            (_, None) => None,
            _ => Some(context::load(&sources)?),
        },
        _ => Some(context::load(&sources)?),
    };
    let format = ctx.as_ref().map_or(cli.format.unwrap_or_default(), |c| c.format);
    let out = cli.out.clone().or_else(|| {
        ctx.as_ref()
            .and_then(|c| c.config.output.path.clone())
            .map(PathBuf::from)
    });

    let mut written: Vec<PathBuf> = Vec::new();
    let result = dispatch(cli.command, ctx.as_ref(), out.as_deref(), &mut written, cli.jobs);
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            for path in &written {
                let _ = std::fs::remove_file(path);
            }
            return Err(e);
        }
    };
    for note in &report.notes {
        let _ = writeln!(stderr, "{note}");
    }
    let text = report.table.render(format);
    match &out {
        None => {
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            // artifacts have nowhere to go without --out
        }
        Some(path) => {
            write_file(path, text.as_bytes())?;
            let mut outputs = vec![path.display().to_string()];
            for a in &report.artifacts {
                let p = with_suffix(path, &a.suffix);
                write_file(&p, &a.bytes)?;
                outputs.push(p.display().to_string());
            }
            outputs.extend(written.iter().map(|p| p.display().to_string()));
            let manifest = RunManifest {
                command: command_name.to_string(),
                config_hash: ctx.as_ref().map(|c| config_hash(&c.canonical())),
                seed: ctx.as_ref().and_then(|c| c.config.drive.noise.map(|n| n.seed)),
                tool_version: manifest::TOOL_VERSION.to_string(),
                started: timestamp(started),
                finished: timestamp(Utc::now()),
                outputs,
            };
            manifest.write(&manifest_path(path))?;
        }
    }
    Ok(())
}

fn need(ctx: Option<&Context>) -> Result<&Context, CliError> {
    ctx.ok_or_else(|| CliError::config("no configuration given; use --config or --preset"))
}

fn dispatch(
    command: Command,
    ctx: Option<&Context>,
    out: Option<&Path>,
    written: &mut Vec<PathBuf>,
    jobs: Option<usize>,
) -> Result<commands::Report, CliError> {
    match command {
        Command::Power {
            sweep_amplitude,
            sweep_frequency,
            fig3,
        } => commands::power(
            need(ctx)?,
            &PowerArgs {
                sweep_amplitude,
                sweep_frequency,
                fig3,
            },
        ),
        Command::Psd {
            omega_min,
            omega_max,
            omega_points,
            realizations,
            duration_s,
            dt_s,
        } => commands::psd(
            need(ctx)?,
            &PsdArgs {
                omega_min,
                omega_max,
                omega_points,
                realizations,
                duration_s,
                dt_s,
            },
        ),
        Command::TfRatio { tf } => commands::tf_ratio(need(ctx)?, &tf.into()),
        Command::GpeGround { .. } => commands::gpe_ground(need(ctx)?),
        Command::GpeEvolve {
            snapshot_every,
            observe_every,
            ..
        } => {
            let args = GpeArgs {
                snapshot_every,
                observe_every,
            };
            let mut io_error = None;
            let report = commands::gpe_evolve(need(ctx)?, &args, |step, bytes| {
                let (Some(out), None) = (out, &io_error) else { return };
                if args.snapshot_every.is_none() {
                    return;
                }
                let path = commands::snapshot_path(out, step);
                match write_file(&path, &bytes) {
                    Ok(()) => written.push(path),
                    Err(e) => io_error = Some(e),
                }
            });
            if let Some(e) = io_error {
                return Err(e);
            }
            report
        }
        Command::Lambshift { lamb } => commands::lambshift(ctx, &lamb.into()),
        Command::Sweep {
            param,
            range,
            scale,
            target,
            tf,
            lamb,
        } => {
            let (lo, hi, n) = parse_range(&range).map_err(|e| CliError::config(format!("--range: {e}")))?;
            let args = SweepArgs {
                spec: SweepSpec::new(&param, scale, lo, hi, n)?,
                target,
                tf: tf.into(),
                lamb: lamb.into(),
            };
            let ctx = need(ctx)?;
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                if j == 0 {
                    return Err(CliError::config("--jobs must be >= 1"));
                }
                builder = builder.num_threads(j);
            }
            let pool = builder
                .build()
                .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
            pool.install(|| commands::sweep(ctx, &args))
        }
    }
}

/// Entry point used by the binary: parses, runs, and returns the exit code.
pub fn main_with<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    match run_with(cli, env, &mut stdout, &mut stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

//! Subcommand implementations. Each returns a [`Report`]; writing files is
//! left to the caller.

use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};
use shaken_trap::config::{get_path, set_path, validate_config, ExperimentConfig};
use shaken_trap::drive::{synth_signal, DriveSpec};
use shaken_trap::gpe::{
    evolve, grid_for, ground_state, write_snapshot, EvolveOptions, GpeSystem, Observables,
};
use shaken_trap::lamb_shift::{gravitational_lamb_shift, length_for_ratio};
use shaken_trap::perturbation::ensemble_averaged_power;
use shaken_trap::spectrum::psd_estimate;
use shaken_trap::thomas_fermi::{
    calibrate_ratio, chemical_potential, density_ratio_trace, tf_radius, MuModel, TfError,
};
use shaken_trap::units::{species_rb87, MassConvention};

use crate::context::Context;
use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::sweep::{parse_range, Scale, SweepSpec};

/// A file produced besides the main table.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub suffix: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub artifacts: Vec<Artifact>,
    /// Human-readable notes for stderr.
    pub notes: Vec<String>,
}

impl Report {
    fn table(table: Table) -> Self {
        Report {
            table,
            artifacts: Vec::new(),
            notes: Vec::new(),
        }
    }
}

fn range_arg(flag: &str, text: &str) -> Result<(f64, f64, usize), CliError> {
    parse_range(text).map_err(|e| CliError::config(format!("{flag}: {e}")))
}

fn log_sweep(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let (lo, hi, n) = range_arg(flag, text)?;
    Ok(SweepSpec::new(flag, Scale::Log, lo, hi, n)?.points())
}

// ---------------------------------------------------------------- power

#[derive(Debug, Clone, Default)]
pub struct PowerArgs {
    pub sweep_amplitude: Option<String>,
    /// Hz.
    pub sweep_frequency: Option<String>,
    /// Emit `a_mm,power_w` for a log-log amplitude plot.
    pub fig3: bool,
}

pub fn power(ctx: &Context, args: &PowerArgs) -> Result<Report, CliError> {
    let cfg = &ctx.config;
    let preset_default = |key: &str| {
        ctx.preset_section("power")
            .and_then(|s| s.get(key))
            .and_then(Value::as_str)
            .map(str::to_string)
    };
    let amp_spec = args.sweep_amplitude.clone().or_else(|| preset_default("sweep_amplitude"));
    let freq_spec = args.sweep_frequency.clone().or_else(|| preset_default("sweep_frequency"));
    let amplitudes = match &amp_spec {
        Some(s) => log_sweep("--sweep-amplitude", s)?,
        None => vec![cfg.drive.amplitude],
    };
    let frequencies = match &freq_spec {
        Some(s) => log_sweep("--sweep-frequency", s)?,
        None => vec![cfg.drive.frequency.hz()],
    };
    let mass = cfg.perturbation_mass(MassConvention::PerAtom);

    if args.fig3 {
        if frequencies.len() != 1 {
            return Err(CliError::config("--fig3 sweeps the amplitude only; drop --sweep-frequency"));
        }
        let omega = 2.0 * PI * frequencies[0];
        let mut t = Table::new(&["a_mm", "power_w"]);
        for a in &amplitudes {
            t.push(vec![Cell::Num(a * 1e3), Cell::Num(ensemble_averaged_power(mass, *a, omega))]);
        }
        return Ok(Report::table(t));
    }
    let mut t = Table::new(&["a_m", "omega_rad_s", "power_w"]);
    for a in &amplitudes {
        for f in &frequencies {
            let omega = 2.0 * PI * f;
            t.push(vec![
                Cell::Num(*a),
                Cell::Num(omega),
                Cell::Num(ensemble_averaged_power(mass, *a, omega)),
            ]);
        }
    }
    Ok(Report::table(t))
}

// ---------------------------------------------------------------- psd

#[derive(Debug, Clone, Default)]
pub struct PsdArgs {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: Option<usize>,
    pub realizations: Option<usize>,
    pub duration_s: Option<f64>,
    pub dt_s: Option<f64>,
}

pub fn psd(ctx: &Context, args: &PsdArgs) -> Result<Report, CliError> {
    let drive = &ctx.config.drive;
    let omega = drive.angular_frequency();
    let period = 2.0 * PI / omega;
    let lo = args.omega_min.unwrap_or(-2.0 * omega);
    let hi = args.omega_max.unwrap_or(2.0 * omega);
    let points = args.omega_points.unwrap_or(801);
    let realizations = args.realizations.unwrap_or(1);
    let duration = args.duration_s.unwrap_or(200.0 * period);
    let dt = args.dt_s.unwrap_or(period / 100.0);
    if realizations == 0 {
        return Err(CliError::config("--realizations must be >= 1"));
    }
    if !(duration > 0.0) {
        return Err(CliError::config("--duration-s must be > 0"));
    }
    let grid = SweepSpec::new("--omega-min/--omega-max", Scale::Linear, lo, hi, points)?.points();
    let n = (duration / dt).round() as usize + 1;
    let signals = (0..realizations)
        .map(|k| {
            let mut d: DriveSpec = *drive;
            if let Some(noise) = d.noise.as_mut() {
                noise.seed = noise.seed.wrapping_add(k as u64);
            }
            synth_signal(&d, dt, n).map_err(|e| CliError::config(format!("drive: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spectrum = psd_estimate(&signals, &grid).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut t = Table::new(&["omega_rad_s", "S_value"]);
    for (w, s) in spectrum.grid() {
        t.push(vec![Cell::Num(*w), Cell::Num(*s)]);
    }
    Ok(Report::table(t))
}

// ---------------------------------------------------------------- tf-ratio

#[derive(Debug, Clone, Default)]
pub struct TfArgs {
    pub probe_z_m: Option<f64>,
    pub mu_model: Option<String>,
    pub mu_j: Option<f64>,
    pub tc_k: Option<f64>,
    pub t_end_s: Option<f64>,
    pub dt_s: Option<f64>,
}

pub fn parse_mu_model(name: &str, mu_j: Option<f64>, tc_k: Option<f64>) -> Result<MuModel, CliError> {
    match name {
        "paper_prescription" => Ok(MuModel::PaperPrescription {
            critical_temperature: tc_k,
        }),
        "standard_tf" => Ok(MuModel::StandardTf),
        "explicit" => {
            let value_j = mu_j.ok_or_else(|| CliError::config("--mu-model explicit needs --mu-j"))?;
            Ok(MuModel::Explicit { value_j })
        }
        other => Err(CliError::config(format!(
            "--mu-model: unknown model '{other}' (expected paper_prescription, standard_tf or explicit)"
        ))),
    }
}

fn tf_error(e: TfError) -> CliError {
    match e {
        TfError::ProbeOutsideCloud(_) => CliError::config(format!("--probe-z-m: {e}")),
        TfError::UnderResolved { .. } => CliError::config(format!("--dt-s: {e}")),
        TfError::MissingTc => CliError::config(format!("--tc-k: {e}")),
        other => CliError::config(other.to_string()),
    }
}

fn tf_mu_model(ctx: &Context, args: &TfArgs) -> Result<MuModel, CliError> {
    let section = ctx.preset_section("tf_ratio");
    let name = args
        .mu_model
        .clone()
        .or_else(|| section.and_then(|s| s["mu_model"].as_str()).map(str::to_string))
        .unwrap_or_else(|| "standard_tf".to_string());
    parse_mu_model(&name, args.mu_j, args.tc_k)
}

/// Probe position from the flag, the preset's radius fraction, or the
/// preset's calibration, in that order.
fn tf_probe(ctx: &Context, args: &TfArgs, model: &MuModel) -> Result<(f64, Option<Value>), CliError> {
    if let Some(z) = args.probe_z_m {
        return Ok((z, None));
    }
    let cfg = &ctx.config;
    let section = ctx.preset_section("tf_ratio");
    if let Some(frac) = section.and_then(|s| s["probe_radius_fraction"].as_f64()) {
        let mu = chemical_potential(model, cfg.n_atoms, &cfg.trap, &cfg.species).map_err(tf_error)?;
        return Ok((frac * tf_radius(mu, cfg.species.atomic_mass, cfg.trap.omega_z()), None));
    }
    if let Some(cal) = section.and_then(|s| s.get("calibrate")) {
        let target = cal["target"].as_f64().unwrap_or(0.005);
        let predict = cal["predict_n_atoms"].as_f64().unwrap_or(1e6);
        let c = calibrate_ratio(cfg, model, target, predict).map_err(tf_error)?;
        let report = json!({
            "probe_z_m": c.probe_z,
            "n_atoms_calibrated": c.n_calibrated,
            "mu_calibrated_j": c.mu_calibrated,
            "peak_deviation_calibrated": c.peak_calibrated,
            "n_atoms_predicted": c.n_predicted,
            "mu_predicted_j": c.mu_predicted,
            "peak_deviation_predicted": c.peak_predicted,
            "reported_deviation_predicted": cal["reported_prediction"].clone(),
            "scaling_exponent": c.scaling_exponent,
        });
        return Ok((c.probe_z, Some(report)));
    }
    Err(CliError::config("tf-ratio needs a probe position; pass --probe-z-m"))
}

pub fn tf_ratio(ctx: &Context, args: &TfArgs) -> Result<Report, CliError> {
    let cfg = &ctx.config;
    let model = tf_mu_model(ctx, args)?;
    let (probe, calibration) = tf_probe(ctx, args, &model)?;
    let t_end = args.t_end_s.unwrap_or(cfg.solver.t_end);
    let dt = args.dt_s.unwrap_or(cfg.solver.dt);
    let trace = density_ratio_trace(cfg, probe, &model, t_end, dt).map_err(tf_error)?;
    let mut t = Table::new(&["t_s", "ratio", "beyond_tf"]);
    for k in 0..trace.len() {
        t.push(vec![
            Cell::Num(trace.times[k]),
            Cell::Num(trace.ratio[k]),
            Cell::Bool(trace.beyond_tf[k]),
        ]);
    }
    let mut report = Report::table(t);
    report.notes.push(format!(
        "probe z0 = {probe:e} m, peak |R-1| = {:e}, beyond-TF samples = {}",
        trace.peak_deviation(),
        trace.beyond_count()
    ));
    if let Some(mut cal) = calibration {
        cal["peak_deviation_trace"] = json!(trace.peak_deviation());
        report.notes.push(format!(
            "calibrated to {:e} at N0 = {}; predicted {:e} at N0 = {} (reported: {})",
            cal["peak_deviation_calibrated"].as_f64().unwrap_or(f64::NAN),
            cal["n_atoms_calibrated"],
            cal["peak_deviation_predicted"].as_f64().unwrap_or(f64::NAN),
            cal["n_atoms_predicted"],
            cal["reported_deviation_predicted"],
        ));
        let mut bytes = serde_json::to_vec_pretty(&cal).unwrap_or_default();
        bytes.push(b'\n');
        report.artifacts.push(Artifact {
            suffix: ".calibration.json".into(),
            bytes,
        });
    }
    Ok(report)
}

// ---------------------------------------------------------------- gpe

#[derive(Debug, Clone, Default)]
pub struct GpeArgs {
    pub snapshot_every: Option<usize>,
    pub observe_every: Option<usize>,
}

const OBSERVABLE_COLUMNS: [&str; 6] = ["t_s", "norm", "energy_j", "com_m", "peak_density", "width_m"];

fn observable_row(o: &Observables) -> Vec<Cell> {
    vec![
        Cell::Num(o.time),
        Cell::Num(o.norm),
        Cell::Num(o.energy),
        Cell::Num(o.com),
        Cell::Num(o.peak_density),
        Cell::Num(o.width),
    ]
}

fn snapshot_bytes(psi: &shaken_trap::gpe::WaveFunction) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, psi).expect("writing to memory cannot fail");
    bytes
}

pub fn gpe_ground(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.config;
    let grid = grid_for(cfg)?;
    let gs = ground_state(cfg, &grid)?;
    let system = GpeSystem::from_config(cfg);
    let obs = shaken_trap::gpe::observables(&gs.psi, &system);
    let mut t = Table::new(&OBSERVABLE_COLUMNS);
    t.push(observable_row(&obs));
    let mut report = Report::table(t);
    report.notes.push(format!(
        "ground state after {} imaginary-time steps: mu = {:e} J, E/N = {:e} J",
        gs.steps,
        gs.chemical_potential,
        obs.energy / obs.norm
    ));
    report.artifacts.push(Artifact {
        suffix: ".ground.bin".into(),
        bytes: snapshot_bytes(&gs.psi),
    });
    Ok(report)
}

/// `snapshot_sink` receives (step index, encoded snapshot) as they appear.
pub fn gpe_evolve(
    ctx: &Context,
    args: &GpeArgs,
    mut snapshot_sink: impl FnMut(usize, Vec<u8>),
) -> Result<Report, CliError> {
    let cfg = &ctx.config;
    let grid = grid_for(cfg)?;
    let gs = ground_state(cfg, &grid)?;
    let system = GpeSystem::from_config(cfg);
    let mut opts = EvolveOptions::from_config(cfg);
    if let Some(k) = args.observe_every {
        if k == 0 {
            return Err(CliError::config("--observe-every must be >= 1"));
        }
        opts.observe_every = k;
    }
    if args.snapshot_every == Some(0) {
        return Err(CliError::config("--snapshot-every must be >= 1"));
    }
    opts.snapshot_every = args.snapshot_every;
    let stride = args.snapshot_every.unwrap_or(1);
    let mut index = 0usize;
    let traj = evolve(&gs.psi, &system, &opts, |psi| {
        snapshot_sink(index * stride, snapshot_bytes(psi));
        index += 1;
    })?;
    let mut t = Table::new(&OBSERVABLE_COLUMNS);
    for o in &traj.observables {
        t.push(observable_row(o));
    }
    let mut report = Report::table(t);
    report.notes.push(format!("{} real-time steps", traj.steps));
    Ok(report)
}

// ---------------------------------------------------------------- lambshift

#[derive(Debug, Clone, Default)]
pub struct LambArgs {
    pub n_atoms: Option<f64>,
    pub omega_hz: Option<f64>,
    pub length_m: Option<f64>,
    pub target_ratio: Option<f64>,
}

pub fn lambshift(ctx: Option<&Context>, args: &LambArgs) -> Result<Report, CliError> {
    let section = ctx.and_then(|c| c.preset_section("lambshift"));
    let from_section = |key: &str| section.and_then(|s| s[key].as_f64());
    let mass = ctx.map_or(species_rb87().atomic_mass, |c| c.config.species.atomic_mass);
    let n_atoms = args
        .n_atoms
        .or(ctx.map(|c| c.config.n_atoms))
        .ok_or_else(|| CliError::config("lambshift needs --n-atoms (or a config)"))?;
    let omega_hz = args
        .omega_hz
        .or(ctx.map(|c| c.config.trap.z.hz()))
        .ok_or_else(|| CliError::config("lambshift needs --omega-hz (or a config)"))?;
    let length = args
        .length_m
        .or_else(|| from_section("length_m"))
        .ok_or_else(|| CliError::config("lambshift needs --length-m"))?;
    let target = args.target_ratio.or_else(|| from_section("target_ratio")).unwrap_or(0.005);
    for (key, v) in [("--n-atoms", n_atoms), ("--omega-hz", omega_hz), ("--target-ratio", target)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::config(format!("{key} must be > 0")));
        }
    }
    if !(length >= 0.0) || !length.is_finite() {
        return Err(CliError::config("--length-m must be >= 0"));
    }
    let omega = 2.0 * PI * omega_hz;
    let shift = gravitational_lamb_shift(mass, n_atoms, omega, length);
    let needed = length_for_ratio(mass, n_atoms, omega, target);
    let mut t = Table::new(&[
        "n_atoms",
        "omega_rad_s",
        "length_m",
        "delta_v_j",
        "ratio",
        "target_ratio",
        "length_for_target_m",
    ]);
    t.push(vec![
        Cell::Num(n_atoms),
        Cell::Num(omega),
        Cell::Num(length),
        Cell::Num(shift.delta_v),
        Cell::Num(shift.ratio),
        Cell::Num(target),
        Cell::Num(needed),
    ]);
    let mut report = Report::table(t);
    report.notes.push(format!(
        "delta V / hbar omega = {:e} at L = {length:e} m; {target} needs L = {needed:e} m",
        shift.ratio
    ));
    Ok(report)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Power,
    TfRatio,
    Lambshift,
    GpeGround,
}

impl std::str::FromStr for SweepTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "power" => Ok(SweepTarget::Power),
            "tf-ratio" => Ok(SweepTarget::TfRatio),
            "lambshift" => Ok(SweepTarget::Lambshift),
            "gpe-ground" => Ok(SweepTarget::GpeGround),
            other => Err(format!(
                "cannot sweep '{other}' (expected power, tf-ratio, lambshift or gpe-ground)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub spec: SweepSpec,
    pub target: SweepTarget,
    pub tf: TfArgs,
    pub lamb: LambArgs,
}

fn summary_columns(target: SweepTarget) -> &'static [&'static str] {
    match target {
        SweepTarget::Power => &["power_w"],
        SweepTarget::TfRatio => &["probe_z_m", "peak_deviation", "beyond_count"],
        SweepTarget::Lambshift => &["delta_v_j", "ratio"],
        SweepTarget::GpeGround => &["energy_j", "chemical_potential_j", "width_m", "peak_density"],
    }
}

fn summary(
    cfg: &ExperimentConfig,
    target: SweepTarget,
    args: &SweepArgs,
    model: &Option<MuModel>,
    probe: Option<f64>,
) -> Result<Vec<Cell>, CliError> {
    match target {
        SweepTarget::Power => {
            let mass = cfg.perturbation_mass(MassConvention::PerAtom);
            let p = ensemble_averaged_power(mass, cfg.drive.amplitude, cfg.drive.angular_frequency());
            Ok(vec![Cell::Num(p)])
        }
        SweepTarget::TfRatio => {
            let model = model.as_ref().expect("tf-ratio sweeps resolve a model");
            let z = probe.expect("tf-ratio sweeps resolve a probe");
            let t_end = args.tf.t_end_s.unwrap_or(cfg.solver.t_end);
            let dt = args.tf.dt_s.unwrap_or(cfg.solver.dt);
            let trace = density_ratio_trace(cfg, z, model, t_end, dt).map_err(tf_error)?;
            Ok(vec![
                Cell::Num(z),
                Cell::Num(trace.peak_deviation()),
                Cell::from(trace.beyond_count()),
            ])
        }
        SweepTarget::Lambshift => {
            let length = args
                .lamb
                .length_m
                .ok_or_else(|| CliError::config("sweeping lambshift needs --length-m"))?;
            let s = gravitational_lamb_shift(cfg.species.atomic_mass, cfg.n_atoms, cfg.trap.omega_z(), length);
            Ok(vec![Cell::Num(s.delta_v), Cell::Num(s.ratio)])
        }
        SweepTarget::GpeGround => {
            let grid = grid_for(cfg)?;
            let gs = ground_state(cfg, &grid)?;
            let o = shaken_trap::gpe::observables(&gs.psi, &GpeSystem::from_config(cfg));
            Ok(vec![
                Cell::Num(o.energy),
                Cell::Num(gs.chemical_potential),
                Cell::Num(o.width),
                Cell::Num(o.peak_density),
            ])
        }
    }
}

/// Runs the target at every sweep point (in parallel on the current rayon
/// pool) and returns rows ordered by parameter value.
pub fn sweep(ctx: &Context, args: &SweepArgs) -> Result<Report, CliError> {
    let base = ctx.canonical();
    let path = &args.spec.parameter;
    match get_path(&base, path) {
        Some(v) if v.is_number() => {}
        Some(_) => return Err(CliError::config(format!("sweep parameter {path} is not numeric"))),
        None => return Err(CliError::config(format!("unknown parameter path: {path}"))),
    }
    // probe and μ model are fixed once, from the unswept configuration
    let (model, probe) = if args.target == SweepTarget::TfRatio {
        let model = tf_mu_model(ctx, &args.tf)?;
        let (z, _) = tf_probe(ctx, &args.tf, &model)?;
        (Some(model), Some(z))
    } else {
        (None, None)
    };
    let points = args.spec.points();
    let rows: Vec<Result<Vec<Cell>, CliError>> = points
        .par_iter()
        .map(|&value| {
            let mut doc = base.clone();
            // integer-valued keys must stay integers
            let v = if path == "solver.grid_points" || path.ends_with(".seed") {
                Value::from(value.round() as u64)
            } else {
                json!(value)
            };
            set_path(&mut doc, path, v);
            let cfg = validate_config(&doc)?;
            let mut row = vec![Cell::Num(value)];
            row.extend(summary(&cfg, args.target, args, &model, probe)?);
            Ok(row)
        })
        .collect();
    let mut columns = vec![path.as_str()];
    columns.extend_from_slice(summary_columns(args.target));
    let mut t = Table::new(&columns);
    for row in rows {
        t.push(row?);
    }
    Ok(Report::table(t))
}

/// Paths for snapshot files next to `out`.
pub fn snapshot_path(out: &std::path::Path, step: usize) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".snap-{step:08}.bin"));
    out.with_file_name(name)
}

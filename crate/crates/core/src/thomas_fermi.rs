//! Thomas–Fermi density of the condensate in the shaken trap.
//!
//! The kinetic term is dropped, so the density follows the total potential
//! directly: `n = (μ − V)/g` where `μ > V`, and zero elsewhere. Points
//! where the drive pushes `V` above `μ` are flagged as beyond the
//! Thomas–Fermi regime rather than clamped silently.

use std::f64::consts::PI;

use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::drive::{acceleration, max_sampling_step, DriveSpec};
use crate::units::{AtomSpecies, MassConvention, TrapConfig, HBAR, K_BOLTZMANN};

/// The dimensionless value the paper prescription assigns to μ/(k_B T_c).
pub const PAPER_MU_OVER_KTC: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfError {
    #[error("the paper prescription for μ needs a critical temperature T_c")]
    MissingTc,
    #[error("explicit chemical potential must be > 0, got {0:e} J")]
    InvalidMu(f64),
    #[error("probe z = {0:e} m lies outside the unperturbed cloud")]
    ProbeOutsideCloud(f64),
    #[error("time step {dt:e} s under-resolves the drive; need dt <= {max_dt:e} s")]
    UnderResolved { dt: f64, max_dt: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Everything entering `V_T = ½m_a(ωx²x² + ωy²y² + ωz²z²) + m A(t) z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalPotentialParams {
    pub trap: TrapConfig,
    pub drive: DriveSpec,
    pub atomic_mass: f64,
    pub perturbation_mass: f64,
}

impl TotalPotentialParams {
    /// Uses the configured mass convention, total condensate mass if unset.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        TotalPotentialParams {
            trap: cfg.trap,
            drive: cfg.drive.deterministic(),
            atomic_mass: cfg.species.atomic_mass,
            perturbation_mass: cfg.perturbation_mass(MassConvention::TotalCondensate),
        }
    }
}

pub fn total_potential(p: &TotalPotentialParams, x: f64, y: f64, z: f64, t: f64) -> f64 {
    let (wx, wy, wz) = (p.trap.omega_x(), p.trap.omega_y(), p.trap.omega_z());
    let harmonic = 0.5 * p.atomic_mass * (wx * wx * x * x + wy * wy * y * y + wz * wz * z * z);
    harmonic + p.perturbation_mass * acceleration(&p.drive, t) * z
}

/// `g = 4πħ² a_s / m` (J·m³).
pub fn coupling_constant(species: &AtomSpecies, mass: f64) -> f64 {
    4.0 * PI * HBAR * HBAR * species.scattering_length / mass
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuModel {
    /// μ = 0.3 k_B T_c.
    PaperPrescription { critical_temperature: Option<f64> },
    /// μ = (ħω̄/2)(15 N a_s/ā)^{2/5}.
    StandardTf,
    Explicit { value_j: f64 },
}

pub fn chemical_potential(
    model: &MuModel,
    n_atoms: f64,
    trap: &TrapConfig,
    species: &AtomSpecies,
) -> Result<f64, TfError> {
    match *model {
        MuModel::PaperPrescription { critical_temperature } => {
            let tc = critical_temperature.ok_or(TfError::MissingTc)?;
            if !(tc > 0.0) {
                return Err(TfError::InvalidParameter(format!("T_c must be > 0, got {tc}")));
            }
            Ok(PAPER_MU_OVER_KTC * K_BOLTZMANN * tc)
        }
        MuModel::StandardTf => {
            if !(species.scattering_length > 0.0) {
                return Err(TfError::InvalidParameter(
                    "standard Thomas-Fermi μ needs a repulsive scattering length".into(),
                ));
            }
            let w = trap.omega_mean();
            let a_ho = (HBAR / (species.atomic_mass * w)).sqrt();
            Ok(0.5 * HBAR * w * (15.0 * n_atoms * species.scattering_length / a_ho).powf(0.4))
        }
        MuModel::Explicit { value_j } => {
            if value_j > 0.0 && value_j.is_finite() {
                Ok(value_j)
            } else {
                Err(TfError::InvalidMu(value_j))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfDensity {
    /// Density (1/m³ for the 3D coupling); zero when `beyond_tf`.
    pub density: f64,
    pub beyond_tf: bool,
}

/// `n = (μ − V)/g` for `μ ≥ V`; beyond the Thomas–Fermi regime otherwise.
pub fn tf_density(mu: f64, potential: f64, g: f64) -> TfDensity {
    if mu >= potential {
        TfDensity {
            density: (mu - potential) / g,
            beyond_tf: false,
        }
    } else {
        TfDensity {
            density: 0.0,
            beyond_tf: true,
        }
    }
}

/// Thomas–Fermi radius along z, `√(2μ / m_a ωz²)`.
pub fn tf_radius(mu: f64, atomic_mass: f64, omega_z: f64) -> f64 {
    (2.0 * mu / (atomic_mass * omega_z * omega_z)).sqrt()
}

/// Density ratio `R(t) = n_TF(z₀, t) / n_TF(z₀, 0)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrace {
    pub times: Vec<f64>,
    /// Zero wherever `beyond_tf` is set.
    pub ratio: Vec<f64>,
    pub beyond_tf: Vec<bool>,
}

impl DensityTrace {
    /// Largest `|R − 1|` over the points still inside the TF regime.
    pub fn peak_deviation(&self) -> f64 {
        self.ratio
            .iter()
            .zip(&self.beyond_tf)
            .filter(|(_, beyond)| !**beyond)
            .map(|(r, _)| (r - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn beyond_count(&self) -> usize {
        self.beyond_tf.iter().filter(|b| **b).count()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn density_ratio_trace(
    cfg: &ExperimentConfig,
    probe_z: f64,
    mu_model: &MuModel,
    t_end: f64,
    dt: f64,
) -> Result<DensityTrace, TfError> {
    let max_dt = max_sampling_step(cfg.drive.angular_frequency());
    if !(dt > 0.0) || dt > max_dt {
        return Err(TfError::UnderResolved { dt, max_dt });
    }
    if !(t_end >= 0.0) {
        return Err(TfError::InvalidParameter(format!("t_end must be >= 0, got {t_end}")));
    }
    let params = TotalPotentialParams::from_config(cfg);
    let mu = chemical_potential(mu_model, cfg.n_atoms, &cfg.trap, &cfg.species)?;
    let g = coupling_constant(&cfg.species, cfg.species.atomic_mass);
    let reference = tf_density(mu, total_potential(&params, 0.0, 0.0, probe_z, 0.0), g);
    if reference.beyond_tf || reference.density <= 0.0 {
        return Err(TfError::ProbeOutsideCloud(probe_z));
    }
    let steps = (t_end / dt + 1e-9).floor() as usize;
    let mut trace = DensityTrace {
        times: Vec::with_capacity(steps + 1),
        ratio: Vec::with_capacity(steps + 1),
        beyond_tf: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        let n = tf_density(mu, total_potential(&params, 0.0, 0.0, probe_z, t), g);
        trace.times.push(t);
        trace.ratio.push(if n.beyond_tf { 0.0 } else { n.density / reference.density });
        trace.beyond_tf.push(n.beyond_tf);
    }
    Ok(trace)
}

/// `n_TF` along the z axis (x = y = 0) at time `t`.
pub fn tf_profile(cfg: &ExperimentConfig, mu_model: &MuModel, t: f64, z_grid: &[f64]) -> Result<Vec<f64>, TfError> {
    let params = TotalPotentialParams::from_config(cfg);
    let mu = chemical_potential(mu_model, cfg.n_atoms, &cfg.trap, &cfg.species)?;
    let g = coupling_constant(&cfg.species, cfg.species.atomic_mass);
    Ok(z_grid
        .iter()
        .map(|&z| tf_density(mu, total_potential(&params, 0.0, 0.0, z, t), g).density)
        .collect())
}

/// Analytic peak of `|R − 1|` over one drive period at probe `z₀`.
///
/// Only the drive term varies in time, so
/// `R − 1 = −m [A(t) − A(0)] z₀ / (μ − V(z₀, 0))` and the extreme value of
/// `|A(t) − A(0)|` is `A₀ (1 + |sin φ|)`.
pub fn peak_ratio_deviation(cfg: &ExperimentConfig, probe_z: f64, mu: f64) -> f64 {
    let params = TotalPotentialParams::from_config(cfg);
    let swing = cfg.drive.peak_acceleration() * (1.0 + cfg.drive.phase.sin().abs());
    params.perturbation_mass * swing * probe_z.abs() / (mu - total_potential(&params, 0.0, 0.0, probe_z, 0.0))
}

/// Probe position `z₀ > 0` at which the peak `|R − 1|` equals `target`.
pub fn probe_for_peak_deviation(cfg: &ExperimentConfig, mu: f64, target: f64) -> f64 {
    let params = TotalPotentialParams::from_config(cfg);
    let wz = cfg.trap.omega_z();
    let spring = params.atomic_mass * wz * wz;
    let swing = cfg.drive.peak_acceleration() * (1.0 + cfg.drive.phase.sin().abs());
    let a0_now = acceleration(&params.drive, 0.0);
    // target (μ − ½ k z² − m A(0) z) = m swing z, solved for the positive root
    let quad = 0.5 * target * spring;
    let lin = params.perturbation_mass * (swing + target * a0_now);
    let c = target * mu;
    2.0 * c / (lin + (lin * lin + 4.0 * quad * c).sqrt())
}

/// Outcome of calibrating the probe to a reported density-ratio increase
/// at one atom number and predicting another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCalibration {
    pub probe_z: f64,
    pub n_calibrated: f64,
    pub mu_calibrated: f64,
    pub peak_calibrated: f64,
    pub n_predicted: f64,
    pub mu_predicted: f64,
    pub peak_predicted: f64,
    /// d ln(peak) / d ln(N₀) between the two atom numbers.
    pub scaling_exponent: f64,
}

/// Fixes z₀ so that `cfg` (at its own N₀) shows a peak `|R − 1|` of
/// `target`, then evaluates the same probe at `n_predicted` atoms.
pub fn calibrate_ratio(
    cfg: &ExperimentConfig,
    mu_model: &MuModel,
    target: f64,
    n_predicted: f64,
) -> Result<RatioCalibration, TfError> {
    let mu_cal = chemical_potential(mu_model, cfg.n_atoms, &cfg.trap, &cfg.species)?;
    let probe_z = probe_for_peak_deviation(cfg, mu_cal, target);
    let peak_cal = peak_ratio_deviation(cfg, probe_z, mu_cal);
    let mut other = cfg.clone();
    other.n_atoms = n_predicted;
    let mu_pred = chemical_potential(mu_model, n_predicted, &other.trap, &other.species)?;
    let peak_pred = peak_ratio_deviation(&other, probe_z, mu_pred);
    Ok(RatioCalibration {
        probe_z,
        n_calibrated: cfg.n_atoms,
        mu_calibrated: mu_cal,
        peak_calibrated: peak_cal,
        n_predicted,
        mu_predicted: mu_pred,
        peak_predicted: peak_pred,
        scaling_exponent: (peak_pred / peak_cal).ln() / (n_predicted / cfg.n_atoms).ln(),
    })
}

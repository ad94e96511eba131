//! One-dimensional Gross–Pitaevskii solver for the shaken trap.
//!
//! The condensate is reduced to the shaking axis with the quasi-1D
//! coupling `g₁D = g / (2π l⊥²) = 2ħω⊥ a_s`. Kinetic and interaction terms
//! use the atomic mass; the drive enters as the inertial potential
//! `m A(t) z` with `m` chosen by the mass convention (per atom by default,
//! which is what keeps the centre of mass on the classical trajectory).

mod com;
mod propagator;
mod snapshot;
mod solver;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::drive::{acceleration, DriveSpec};
use crate::numerics::compensated_sum;
use crate::thomas_fermi::{chemical_potential, coupling_constant, tf_density, tf_radius, MuModel};
use crate::units::{MassConvention, HBAR};

pub use com::{com_reference, com_reference_scaled, forced_oscillator_closed_form, resonant_closed_form};
pub use propagator::SplitStep;
pub use snapshot::{read_snapshot, write_snapshot};
pub use solver::{
    evolve, ground_state, ground_state_for_config, ground_state_from, max_time_step, observables,
    oscillator_populations, EvolveOptions, GroundState, ImagTimeOptions, Trajectory, DOMAIN_ESCAPE_LIMIT,
    NORM_DRIFT_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpeError {
    #[error("imaginary-time relaxation did not converge within {0} steps")]
    NoConvergence(usize),
    #[error("grid spacing {dz:e} m does not resolve the healing length; need dz <= {max_dz:e} m")]
    GridTooCoarse { dz: f64, max_dz: f64 },
    #[error("norm drifted by {relative:e} (relative) at t = {time:e} s")]
    NormDrift { time: f64, relative: f64 },
    #[error("density reached the domain boundary at t = {time:e} s ({fraction:e} of peak)")]
    DomainEscape { time: f64, fraction: f64 },
    #[error("time step {dt:e} s too large; need dt <= {max_dt:e} s")]
    TimeStepTooLarge { dt: f64, max_dt: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Periodic grid on [−L, L) with a power-of-two number of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    halfwidth: f64,
    dz: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, halfwidth: f64) -> Result<Self, GpeError> {
        if n_points < 64 || !n_points.is_power_of_two() {
            return Err(GpeError::InvalidGrid(format!(
                "need a power of two >= 64 points, got {n_points}"
            )));
        }
        if !(halfwidth > 0.0) || !halfwidth.is_finite() {
            return Err(GpeError::InvalidGrid(format!("halfwidth must be > 0, got {halfwidth}")));
        }
        Ok(Grid1D {
            n_points,
            halfwidth,
            dz: 2.0 * halfwidth / n_points as f64,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn z(&self, j: usize) -> f64 {
        -self.halfwidth + j as f64 * self.dz
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.z(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = PI / self.halfwidth;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }
}

/// Condensate wavefunction normalized so that `Σ|ψ|² dz = N₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WaveFunction {
    pub fn from_fn(grid: Grid1D, time: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points()).map(|j| f(grid.z(j))).collect();
        WaveFunction { grid, values, time }
    }

    pub fn norm(&self) -> f64 {
        compensated_sum(self.values.iter().map(|c| c.norm_sqr())) * self.grid.dz()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Rescales to the given atom number.
    pub fn normalize_to(&mut self, n_atoms: f64) {
        let scale = (n_atoms / self.norm()).sqrt();
        for v in &mut self.values {
            *v *= scale;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub time: f64,
    /// Σ|ψ|² dz, the atom number.
    pub norm: f64,
    /// Total energy (J), all atoms.
    pub energy: f64,
    /// ⟨z⟩ (m).
    pub com: f64,
    /// max |ψ|² (1/m).
    pub peak_density: f64,
    /// √⟨(z − ⟨z⟩)²⟩ (m).
    pub width: f64,
}

/// Physical parameters of the 1D problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpeSystem {
    pub atomic_mass: f64,
    pub omega_z: f64,
    /// Quasi-1D coupling g₁D (J·m).
    pub g1d: f64,
    pub n_atoms: f64,
    pub drive: DriveSpec,
    /// Mass multiplying `A(t) z` in the single-atom potential.
    pub drive_mass: f64,
}

impl GpeSystem {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let m = cfg.species.atomic_mass;
        let w_perp = cfg.trap.omega_perp();
        let l_perp_sq = HBAR / (m * w_perp);
        let g3d = coupling_constant(&cfg.species, m);
        GpeSystem {
            atomic_mass: m,
            omega_z: cfg.trap.omega_z(),
            g1d: g3d / (2.0 * PI * l_perp_sq),
            n_atoms: cfg.n_atoms,
            drive: cfg.drive.deterministic(),
            drive_mass: cfg.perturbation_mass(MassConvention::PerAtom),
        }
    }

    /// External potential felt by one atom at `z`, time `t`.
    pub fn external_potential(&self, z: f64, t: f64) -> f64 {
        0.5 * self.atomic_mass * self.omega_z * self.omega_z * z * z
            + self.drive_mass * acceleration(&self.drive, t) * z
    }

    /// Oscillator length √(ħ/m ωz).
    pub fn oscillator_length(&self) -> f64 {
        (HBAR / (self.atomic_mass * self.omega_z)).sqrt()
    }

    /// Chemical potential of the 1D Thomas–Fermi profile holding N₀ atoms.
    pub fn tf_chemical_potential_1d(&self) -> f64 {
        let m = self.atomic_mass;
        (3.0 * self.n_atoms * self.g1d * self.omega_z * m.sqrt() / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0)
    }

    pub fn tf_radius_1d(&self) -> f64 {
        tf_radius(self.tf_chemical_potential_1d(), self.atomic_mass, self.omega_z)
    }

    /// Static 1D Thomas–Fermi line density (1/m) on the grid.
    pub fn tf_profile_1d(&self, grid: &Grid1D) -> Vec<f64> {
        let mu = self.tf_chemical_potential_1d();
        (0..grid.n_points())
            .map(|j| {
                let z = grid.z(j);
                let v = 0.5 * self.atomic_mass * self.omega_z * self.omega_z * z * z;
                tf_density(mu, v, self.g1d).density
            })
            .collect()
    }

    /// Cloud extent: the larger of the TF radius and a few oscillator lengths.
    pub fn cloud_radius(&self) -> f64 {
        let r_tf = if self.g1d > 0.0 { self.tf_radius_1d() } else { 0.0 };
        r_tf.max(4.0 * self.oscillator_length())
    }

    /// Largest classical slosh of the centre of mass over [0, t_end].
    pub fn slosh_estimate(&self, t_end: f64) -> f64 {
        let a = self.drive.amplitude * self.drive_mass / self.atomic_mass;
        if a == 0.0 {
            return 0.0;
        }
        let big = self.drive.angular_frequency();
        let w = self.omega_z;
        if (big - w).abs() <= 1e-9 * w {
            0.5 * a * (1.0 + big * t_end)
        } else {
            (big * big * a / (w * w - big * big)).abs() * (1.0 + big / w)
        }
    }

    /// Default half-width, 4 (R + slosh).
    pub fn default_halfwidth(&self, t_end: f64) -> f64 {
        4.0 * (self.cloud_radius() + self.slosh_estimate(t_end))
    }
}

/// Grid from the solver settings, using the default half-width when unset.
pub fn grid_for(cfg: &ExperimentConfig) -> Result<Grid1D, GpeError> {
    let system = GpeSystem::from_config(cfg);
    let halfwidth = cfg
        .solver
        .domain_halfwidth
        .unwrap_or_else(|| system.default_halfwidth(cfg.solver.t_end));
    Grid1D::new(cfg.solver.grid_points, halfwidth)
}

/// Healing length `1/√(8π n₀ a_s)` at the 3D Thomas–Fermi peak density.
pub fn healing_length(cfg: &ExperimentConfig) -> Option<f64> {
    let a_s = cfg.species.scattering_length;
    if !(a_s > 0.0) {
        return None;
    }
    let mu = chemical_potential(&MuModel::StandardTf, cfg.n_atoms, &cfg.trap, &cfg.species).ok()?;
    let n0 = mu / coupling_constant(&cfg.species, cfg.species.atomic_mass);
    Some(1.0 / (8.0 * PI * n0 * a_s).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(63, 1.0).is_err());
        assert!(Grid1D::new(96, 1.0).is_err());
        assert!(Grid1D::new(64, 0.0).is_err());
        let g = Grid1D::new(64, 2.0).unwrap();
        assert_eq!(g.dz(), 4.0 / 64.0);
        assert_eq!(g.z(0), -2.0);
        assert_eq!(g.z(32), 0.0);
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[1], PI / 2.0);
        assert_eq!(k[63], -PI / 2.0);
        assert_eq!(k[32], -32.0 * PI / 2.0);
    }

    #[test]
    fn normalization() {
        let g = Grid1D::new(128, 10.0).unwrap();
        let mut psi = WaveFunction::from_fn(g, 0.0, |z| Complex64::new((-z * z).exp(), 0.0));
        psi.normalize_to(500.0);
        assert!((psi.norm() - 500.0).abs() < 1e-10);
    }
}

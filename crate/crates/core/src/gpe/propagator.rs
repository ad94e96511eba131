//! Strang split-step kernel shared by real- and imaginary-time stepping.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Grid1D, GpeSystem};
use crate::numerics::compensated_sum;
use crate::units::HBAR;

/// Spectral transforms and energy functional for one grid.
#[derive(Clone)]
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buffer: Vec<Complex64>,
    /// ħ²k²/2m per mode.
    kinetic: Vec<f64>,
}

impl Spectral {
    pub(crate) fn new(grid: &Grid1D, mass: f64) -> Self {
        let n = grid.n_points();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|k| HBAR * HBAR * k * k / (2.0 * mass))
            .collect();
        Spectral {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            buffer: vec![Complex64::new(0.0, 0.0); n],
            kinetic,
        }
    }

    pub(crate) fn kinetic_energies(&self) -> &[f64] {
        &self.kinetic
    }

    /// Applies `multiplier[k]` in momentum space.
    pub(crate) fn apply_in_k(&mut self, psi: &mut [Complex64], multiplier: &[Complex64]) {
        let n = psi.len() as f64;
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (c, m) in psi.iter_mut().zip(multiplier) {
            *c *= m / n;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }

    /// Kinetic energy Σ_k (ħ²k²/2m)|ψ̂_k|² dz/n.
    pub(crate) fn kinetic_energy(&mut self, psi: &[Complex64], dz: f64) -> f64 {
        self.buffer.copy_from_slice(psi);
        self.forward.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let n = psi.len() as f64;
        compensated_sum(self.buffer.iter().zip(&self.kinetic).map(|(c, e)| e * c.norm_sqr())) * dz / n
    }

    /// Total energy with the external potential `v` (per atom, J).
    pub(crate) fn energy(&mut self, psi: &[Complex64], v: &[f64], g: f64, dz: f64) -> EnergyParts {
        let kinetic = self.kinetic_energy(psi, dz);
        let potential = compensated_sum(psi.iter().zip(v).map(|(c, v)| v * c.norm_sqr())) * dz;
        let interaction = 0.5 * g * compensated_sum(psi.iter().map(|c| c.norm_sqr() * c.norm_sqr())) * dz;
        EnergyParts {
            kinetic,
            potential,
            interaction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
}

impl EnergyParts {
    pub(crate) fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }

    /// μN = T + V + g∫|ψ|⁴.
    pub(crate) fn mu_times_n(&self) -> f64 {
        self.kinetic + self.potential + 2.0 * self.interaction
    }
}

/// One Strang step: half potential, full kinetic, half potential, with the
/// potential sampled at the step midpoint.
#[derive(Clone)]
pub struct SplitStep {
    system: GpeSystem,
    grid: Grid1D,
    dt: f64,
    imaginary: bool,
    spectral: Spectral,
    kinetic_factor: Vec<Complex64>,
    trap: Vec<f64>,
    positions: Vec<f64>,
}

impl SplitStep {
    /// Real-time propagator with step `dt` (s).
    pub fn real_time(system: &GpeSystem, grid: &Grid1D, dt: f64) -> Self {
        Self::build(system, grid, dt, false)
    }

    /// Imaginary-time propagator with step `dτ` (s); the drive is ignored.
    pub fn imaginary_time(system: &GpeSystem, grid: &Grid1D, dtau: f64) -> Self {
        Self::build(system, grid, dtau, true)
    }

    fn build(system: &GpeSystem, grid: &Grid1D, dt: f64, imaginary: bool) -> Self {
        let spectral = Spectral::new(grid, system.atomic_mass);
        let positions = grid.positions();
        let w = system.omega_z;
        let trap = positions
            .iter()
            .map(|z| 0.5 * system.atomic_mass * w * w * z * z)
            .collect();
        let mut s = SplitStep {
            system: *system,
            grid: *grid,
            dt,
            imaginary,
            spectral,
            kinetic_factor: Vec::new(),
            trap,
            positions,
        };
        s.kinetic_factor = s.exponentials(dt);
        s
    }

    fn exponentials(&self, dt: f64) -> Vec<Complex64> {
        self.spectral
            .kinetic_energies()
            .iter()
            .map(|e| self.propagator_phase(*e, dt))
            .collect()
    }

    /// exp(−i E dt/ħ), or exp(−E dτ/ħ) in imaginary time.
    fn propagator_phase(&self, energy: f64, dt: f64) -> Complex64 {
        let x = energy * dt / HBAR;
        if self.imaginary {
            Complex64::new((-x).exp(), 0.0)
        } else {
            Complex64::from_polar(1.0, -x)
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
        self.kinetic_factor = self.exponentials(dt);
    }

    /// Kinetic part alone, exp(−iT dt/ħ).
    pub fn kinetic_step(&mut self, psi: &mut [Complex64]) {
        let factor = std::mem::take(&mut self.kinetic_factor);
        self.spectral.apply_in_k(psi, &factor);
        self.kinetic_factor = factor;
    }

    fn potential_half_step(&self, psi: &mut [Complex64], drive_force: f64) {
        let g = self.system.g1d;
        let half = 0.5 * self.dt;
        for ((c, v), z) in psi.iter_mut().zip(&self.trap).zip(&self.positions) {
            let energy = v + drive_force * z + g * c.norm_sqr();
            *c *= self.propagator_phase(energy, half);
        }
    }

    /// Advances `psi` from time `t` by one step.
    pub fn step(&mut self, psi: &mut [Complex64], t: f64) {
        let drive_force = if self.imaginary {
            0.0
        } else {
            self.system.drive_mass * crate::drive::acceleration(&self.system.drive, t + 0.5 * self.dt)
        };
        self.potential_half_step(psi, drive_force);
        self.kinetic_step(psi);
        self.potential_half_step(psi, drive_force);
    }

    /// External potential on the grid at time `t` (static trap in imaginary time).
    pub(crate) fn potential_at(&self, t: f64) -> Vec<f64> {
        if self.imaginary {
            return self.trap.clone();
        }
        let force = self.system.drive_mass * crate::drive::acceleration(&self.system.drive, t);
        self.trap
            .iter()
            .zip(&self.positions)
            .map(|(v, z)| v + force * z)
            .collect()
    }

    pub(crate) fn energy_parts(&mut self, psi: &[Complex64], t: f64) -> EnergyParts {
        let v = self.potential_at(t);
        self.spectral.energy(psi, &v, self.system.g1d, self.grid.dz())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DriveSpec;
    use crate::units::{species_rb87, Frequency};

    fn free_system() -> GpeSystem {
        GpeSystem {
            atomic_mass: species_rb87().atomic_mass,
            omega_z: 2.0 * std::f64::consts::PI * 50.0,
            g1d: 0.0,
            n_atoms: 1.0,
            drive: DriveSpec::sine(0.0, Frequency::from_hz(10.0)),
            drive_mass: species_rb87().atomic_mass,
        }
    }

    #[test]
    fn plane_wave_picks_up_exact_phase() {
        let sys = free_system();
        let grid = Grid1D::new(128, 2e-5).unwrap();
        let dt = 3.7e-5;
        let mut prop = SplitStep::real_time(&sys, &grid, dt);
        let n = grid.n_points() as i64;
        // e^{ikz_j} with the argument reduced exactly to [0, 2π)
        let wave = |mode: i64, j: usize| {
            let turns = (mode * (j as i64 - n / 2)).rem_euclid(n) as f64 / n as f64;
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns)
        };
        for mode in [1i64, 5, -17, 40] {
            let k = mode as f64 * std::f64::consts::PI / grid.halfwidth();
            let mut psi: Vec<Complex64> = (0..grid.n_points()).map(|j| wave(mode, j)).collect();
            prop.kinetic_step(&mut psi);
            let phase = Complex64::from_polar(1.0, -HBAR * k * k * dt / (2.0 * sys.atomic_mass));
            for (j, c) in psi.iter().enumerate() {
                let expect = wave(mode, j) * phase;
                assert!((c - expect).norm() < 1e-14, "mode {mode}: {}", (c - expect).norm());
            }
        }
    }

    #[test]
    fn real_step_preserves_norm() {
        let mut sys = free_system();
        sys.g1d = 1e-37;
        sys.n_atoms = 1000.0;
        let grid = Grid1D::new(256, 3e-5).unwrap();
        let mut prop = SplitStep::real_time(&sys, &grid, 1e-5);
        let mut psi: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|z| Complex64::new((-(z / 3e-6).powi(2)).exp(), 0.0))
            .collect();
        let before = compensated_sum(psi.iter().map(|c| c.norm_sqr()));
        for k in 0..100 {
            prop.step(&mut psi, k as f64 * 1e-5);
        }
        let after = compensated_sum(psi.iter().map(|c| c.norm_sqr()));
        assert!((after - before).abs() / before < 1e-13);
    }
}

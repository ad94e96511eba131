use num_complex::Complex64;

use super::propagator::{EnergyParts, Spectral, SplitStep};
use super::{grid_for, healing_length, GpeError, GpeSystem, Grid1D, Observables, WaveFunction};
use crate::config::ExperimentConfig;
use crate::numerics::compensated_sum;
use crate::units::HBAR;

/// Relative norm deviation that aborts a real-time run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Boundary-to-peak density ratio that aborts a real-time run.
pub const DOMAIN_ESCAPE_LIMIT: f64 = 1e-6;
/// Energy increases below this relative size are treated as roundoff.
const ROUNDOFF_FLOOR: f64 = 1e-14;
/// Accepted steps per convergence check.
const CHECK_BLOCK: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagTimeOptions {
    /// Initial imaginary-time step (s).
    pub dtau: f64,
    /// A stage has converged once the relative energy change per step,
    /// divided by `ω_max dτ`, falls below this.
    pub tol: f64,
    pub max_steps: usize,
    /// Final value of `ω_max dτ`, with ω_max the larger of ω_z and μ/ħ.
    pub refine_to: f64,
}

impl ImagTimeOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        ImagTimeOptions {
            dtau: cfg.solver.dt,
            tol: cfg.solver.imag_time_tol,
            max_steps: cfg.solver.max_imag_steps,
            refine_to: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub psi: WaveFunction,
    /// Total energy after every accepted step (J).
    pub energy_history: Vec<f64>,
    /// All attempted steps, accepted or not.
    pub steps: usize,
    pub final_dtau: f64,
    /// μ = (T + V + g∫|ψ|⁴)/N (J).
    pub chemical_potential: f64,
}

impl GroundState {
    pub fn energy(&self) -> f64 {
        self.energy_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Imaginary-time ground state of the static trap for `cfg`.
pub fn ground_state(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<GroundState, GpeError> {
    if let Some(xi) = healing_length(cfg) {
        let max_dz = xi / 4.0;
        if grid.dz() > max_dz {
            return Err(GpeError::GridTooCoarse { dz: grid.dz(), max_dz });
        }
    }
    let system = GpeSystem::from_config(cfg);
    ground_state_from(&system, grid, None, &ImagTimeOptions::from_config(cfg))
}

fn initial_guess(system: &GpeSystem, grid: &Grid1D) -> WaveFunction {
    let l = system.oscillator_length();
    let use_tf = system.g1d > 0.0 && system.tf_radius_1d() > 2.0 * l;
    let mut psi = if use_tf {
        let profile = system.tf_profile_1d(grid);
        let tail = 1e-3 * profile.iter().cloned().fold(0.0, f64::max);
        WaveFunction {
            grid: *grid,
            values: profile
                .iter()
                .zip(grid.positions())
                .map(|(n, z)| Complex64::new((n + tail * (-(z / l).powi(2)).exp()).sqrt(), 0.0))
                .collect(),
            time: 0.0,
        }
    } else {
        WaveFunction::from_fn(*grid, 0.0, |z| Complex64::new((-0.5 * (z / l).powi(2)).exp(), 0.0))
    };
    psi.normalize_to(system.n_atoms);
    psi
}

/// Imaginary-time relaxation from `initial` (or a Thomas–Fermi / Gaussian
/// guess). Steps that raise the energy are rejected and `dτ` halved, so the
/// recorded energies never increase. Once a stage converges, `dτ` is
/// reduced fourfold until `ω_max dτ ≤ refine_to`.
pub fn ground_state_from(
    system: &GpeSystem,
    grid: &Grid1D,
    initial: Option<WaveFunction>,
    opts: &ImagTimeOptions,
) -> Result<GroundState, GpeError> {
    if !(opts.dtau > 0.0) || !(opts.tol > 0.0) || !(opts.refine_to > 0.0) {
        return Err(GpeError::InvalidParameter(
            "dtau, tol and refine_to must be positive".into(),
        ));
    }
    let mut psi = initial.unwrap_or_else(|| initial_guess(system, grid));
    if psi.grid != *grid {
        return Err(GpeError::InvalidGrid("initial state lives on a different grid".into()));
    }
    psi.normalize_to(system.n_atoms);
    psi.time = 0.0;

    let mu_scale = if system.g1d > 0.0 {
        system.tf_chemical_potential_1d() / HBAR
    } else {
        0.0
    };
    let omega_max = system.omega_z.max(mu_scale);
    let target = opts.refine_to / omega_max;
    let mut dtau = opts.dtau.min(0.1 / omega_max).max(target);

    let mut prop = SplitStep::imaginary_time(system, grid, dtau);
    let mut energy = prop.energy_parts(&psi.values, 0.0).total();
    let mut history = vec![energy];
    let mut steps = 0usize;
    let mut trial = psi.values.clone();

    loop {
        let mut block_start = energy;
        let mut in_block = 0usize;
        loop {
            if steps >= opts.max_steps {
                return Err(GpeError::NoConvergence(opts.max_steps));
            }
            steps += 1;
            trial.copy_from_slice(&psi.values);
            prop.step(&mut trial, 0.0);
            let norm = compensated_sum(trial.iter().map(|c| c.norm_sqr())) * grid.dz();
            let scale = (system.n_atoms / norm).sqrt();
            for c in trial.iter_mut() {
                *c *= scale;
            }
            let e_new = prop.energy_parts(&trial, 0.0).total();
            if e_new > energy {
                if (e_new - energy) / energy.abs() <= ROUNDOFF_FLOOR {
                    break;
                }
                dtau *= 0.5;
                prop.set_dt(dtau);
                continue;
            }
            std::mem::swap(&mut psi.values, &mut trial);
            energy = e_new;
            history.push(energy);
            in_block += 1;
            if in_block == CHECK_BLOCK {
                let change = (block_start - energy) / (CHECK_BLOCK as f64 * energy.abs() * omega_max * dtau);
                if change < opts.tol {
                    break;
                }
                block_start = energy;
                in_block = 0;
            }
        }
        if dtau <= target * (1.0 + 1e-12) {
            break;
        }
        dtau = (0.25 * dtau).max(target);
        prop.set_dt(dtau);
    }

    let parts = prop.energy_parts(&psi.values, 0.0);
    Ok(GroundState {
        psi,
        energy_history: history,
        steps,
        final_dtau: dtau,
        chemical_potential: parts.mu_times_n() / system.n_atoms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Observables are recorded every this many steps (and at the end).
    pub observe_every: usize,
    /// Snapshot stride in steps; `None` disables snapshots.
    pub snapshot_every: Option<usize>,
}

impl EvolveOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let n_steps = (cfg.solver.t_end / cfg.solver.dt).round().max(1.0) as usize;
        EvolveOptions {
            dt: cfg.solver.dt,
            t_end: cfg.solver.t_end,
            observe_every: (n_steps / 1000).max(1),
            snapshot_every: None,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub observables: Vec<Observables>,
    pub final_state: WaveFunction,
    pub steps: usize,
}

/// Largest real-time step allowed for `psi0`: 0.1·min(2π/ω_z, 2π/Ω, ħ/μ).
/// With interactions the kinetic phase at the Nyquist wavenumber must also
/// stay below π, beyond which the split-step scheme is unstable.
pub fn max_time_step(system: &GpeSystem, psi0: &WaveFunction) -> f64 {
    let mut spectral = Spectral::new(&psi0.grid, system.atomic_mass);
    let parts = static_energy(&mut spectral, system, psi0);
    let mu = parts.mu_times_n() / psi0.norm();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut limit = (two_pi / system.omega_z).min(HBAR / mu);
    if system.drive.amplitude != 0.0 {
        limit = limit.min(two_pi / system.drive.angular_frequency());
    }
    let mut max_dt = 0.1 * limit;
    if system.g1d > 0.0 {
        let e_max = spectral.kinetic_energies().iter().cloned().fold(0.0, f64::max);
        max_dt = max_dt.min(std::f64::consts::PI * HBAR / e_max);
    }
    max_dt
}

fn static_energy(spectral: &mut Spectral, system: &GpeSystem, psi: &WaveFunction) -> EnergyParts {
    let w = system.omega_z;
    let v: Vec<f64> = psi
        .grid
        .positions()
        .iter()
        .map(|z| 0.5 * system.atomic_mass * w * w * z * z)
        .collect();
    spectral.energy(&psi.values, &v, system.g1d, psi.grid.dz())
}

/// Real-time driven evolution from `psi0`. `on_snapshot` receives the state
/// at t₀ and every `snapshot_every` steps.
pub fn evolve(
    psi0: &WaveFunction,
    system: &GpeSystem,
    opts: &EvolveOptions,
    mut on_snapshot: impl FnMut(&WaveFunction),
) -> Result<Trajectory, GpeError> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) || opts.observe_every == 0 {
        return Err(GpeError::InvalidParameter(
            "dt must be > 0, t_end >= 0 and observe_every >= 1".into(),
        ));
    }
    let max_dt = max_time_step(system, psi0);
    if opts.dt > max_dt {
        return Err(GpeError::TimeStepTooLarge { dt: opts.dt, max_dt });
    }
    let grid = psi0.grid;
    let n0 = psi0.norm();
    let t0 = psi0.time;
    let n_steps = opts.n_steps();
    let mut prop = SplitStep::real_time(system, &grid, opts.dt);
    let mut psi = psi0.clone();

    let mut records = vec![observe(&mut prop, &psi)];
    let snapshots = opts.snapshot_every.filter(|&s| s > 0);
    if snapshots.is_some() {
        on_snapshot(&psi);
    }
    let last = grid.n_points() - 1;
    for k in 0..n_steps {
        prop.step(&mut psi.values, t0 + k as f64 * opts.dt);
        psi.time = t0 + (k + 1) as f64 * opts.dt;

        let peak = psi.values.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        let edge = psi.values[0].norm_sqr().max(psi.values[last].norm_sqr());
        if edge > DOMAIN_ESCAPE_LIMIT * peak {
            return Err(GpeError::DomainEscape {
                time: psi.time,
                fraction: edge / peak,
            });
        }
        let done = k + 1 == n_steps;
        if (k + 1) % opts.observe_every == 0 || done {
            let obs = observe(&mut prop, &psi);
            let relative = (obs.norm - n0).abs() / n0;
            if relative > NORM_DRIFT_LIMIT {
                return Err(GpeError::NormDrift {
                    time: psi.time,
                    relative,
                });
            }
            records.push(obs);
        }
        if let Some(s) = snapshots {
            if (k + 1) % s == 0 {
                on_snapshot(&psi);
            }
        }
    }
    Ok(Trajectory {
        observables: records,
        final_state: psi,
        steps: n_steps,
    })
}

fn moments(psi: &WaveFunction, energy: f64) -> Observables {
    let dz = psi.grid.dz();
    let density = psi.density();
    let z = psi.grid.positions();
    let norm = compensated_sum(density.iter().cloned()) * dz;
    let com = compensated_sum(density.iter().zip(&z).map(|(n, z)| n * z)) * dz / norm;
    let var = compensated_sum(density.iter().zip(&z).map(|(n, z)| n * (z - com) * (z - com))) * dz / norm;
    Observables {
        time: psi.time,
        norm,
        energy,
        com,
        peak_density: density.iter().cloned().fold(0.0, f64::max),
        width: var.max(0.0).sqrt(),
    }
}

fn observe(prop: &mut SplitStep, psi: &WaveFunction) -> Observables {
    let energy = prop.energy_parts(&psi.values, psi.time).total();
    moments(psi, energy)
}

/// Norm, energy (including the drive potential at `psi.time`), centre of
/// mass, peak density and width.
pub fn observables(psi: &WaveFunction, system: &GpeSystem) -> Observables {
    let mut prop = SplitStep::real_time(system, &psi.grid, 0.0);
    observe(&mut prop, psi)
}

/// Populations |⟨n|ψ⟩|²/N of the trap oscillator levels n = 0..n_max.
pub fn oscillator_populations(psi: &WaveFunction, system: &GpeSystem, n_max: usize) -> Vec<f64> {
    let l = system.oscillator_length();
    let n_atoms = psi.norm();
    let dz = psi.grid.dz();
    let z = psi.grid.positions();
    let norm0 = (std::f64::consts::PI.sqrt() * l).sqrt().recip();
    let mut prev: Vec<f64> = vec![0.0; z.len()];
    let mut cur: Vec<f64> = z.iter().map(|z| norm0 * (-0.5 * (z / l).powi(2)).exp()).collect();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut re = crate::numerics::NeumaierSum::new();
        let mut im = crate::numerics::NeumaierSum::new();
        for (phi, c) in cur.iter().zip(&psi.values) {
            re.add(phi * c.re);
            im.add(phi * c.im);
        }
        let amp = Complex64::new(re.value(), im.value()) * dz;
        out.push(amp.norm_sqr() / n_atoms);
        let nf = n as f64;
        let next: Vec<f64> = z
            .iter()
            .zip(cur.iter().zip(&prev))
            .map(|(z, (c, p))| (2.0 / (nf + 1.0)).sqrt() * (z / l) * c - (nf / (nf + 1.0)).sqrt() * p)
            .collect();
        prev = std::mem::replace(&mut cur, next);
    }
    out
}

/// Ground state on the configured grid (default half-width if unset).
pub fn ground_state_for_config(cfg: &ExperimentConfig) -> Result<GroundState, GpeError> {
    let grid = grid_for(cfg)?;
    ground_state(cfg, &grid)
}

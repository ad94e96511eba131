use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use shaken_trap::config::{ExperimentConfig, OutputSpec, SolverParams};
use shaken_trap::drive::{acceleration, DriveSpec, SampledSignal};
use shaken_trap::gpe::*;
use shaken_trap::numerics::log_log_slope;
use shaken_trap::perturbation::exact_displaced_oscillator;
use shaken_trap::units::*;

const A_RB: f64 = 5.28e-9;

fn config(a_s: f64, n_atoms: f64) -> ExperimentConfig {
    let mut species = species_rb87();
    species.scattering_length = a_s;
    ExperimentConfig {
        species,
        trap: TrapConfig::from_hz(200.0, 200.0, 20.0),
        drive: DriveSpec::sine(0.0, Frequency::from_hz(10.0)),
        n_atoms,
        mass_convention: None,
        solver: SolverParams::default(),
        output: OutputSpec::default(),
    }
}

/// Interacting condensate on a coarse grid that keeps tests fast.
fn interacting() -> (GpeSystem, GroundState) {
    let mut cfg = config(A_RB, 1e4);
    cfg.solver.grid_points = 512;
    cfg.solver.domain_halfwidth = Some(3.5e-5);
    let system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let gs = ground_state_from(&system, &grid, None, &ImagTimeOptions::from_config(&cfg)).unwrap();
    (system, gs)
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn max_relative_energy_change(traj: &Trajectory) -> f64 {
    let e0 = traj.observables[0].energy;
    traj.observables
        .iter()
        .map(|o| ((o.energy - e0) / e0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn noninteracting_ground_state_is_the_oscillator_gaussian() {
    let cfg = config(0.0, 1000.0);
    let system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let l = system.oscillator_length();
    // lopsided, too wide start so the relaxation has real work to do
    let guess = WaveFunction::from_fn(grid, 0.0, |z| {
        Complex64::new((-0.5 * (z / (1.7 * l)).powi(2)).exp() * (1.0 + z / l), 0.0)
    });
    let gs = ground_state_from(&system, &grid, Some(guess), &ImagTimeOptions::from_config(&cfg)).unwrap();
    let exact: Vec<f64> = grid
        .positions()
        .iter()
        .map(|z| 1000.0 / (PI.sqrt() * l) * (-(z / l).powi(2)).exp())
        .collect();
    assert!(relative_l2(&gs.psi.density(), &exact) < 1e-6);

    let obs = observables(&gs.psi, &system);
    let zero_point = 0.5 * HBAR * system.omega_z;
    assert!((obs.energy / 1000.0 / zero_point - 1.0).abs() < 1e-6);
    assert!((obs.width / (l / 2f64.sqrt()) - 1.0).abs() < 1e-6);
    assert!((obs.norm - 1000.0).abs() < 1e-9 * 1000.0);
}

#[test]
fn imaginary_time_energy_never_increases() {
    let (_, gs) = interacting();
    assert!(gs.energy_history.len() > 100);
    assert!(gs.energy_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn strongly_interacting_ground_state_approaches_thomas_fermi() {
    let mut cfg = config(A_RB, 1e4);
    cfg.solver.domain_halfwidth = Some(3.5e-5);
    let system = GpeSystem::from_config(&cfg);
    assert!(system.tf_chemical_potential_1d() > 30.0 * HBAR * system.omega_z);
    let grid = grid_for(&cfg).unwrap();
    let gs = ground_state(&cfg, &grid).unwrap();
    let r = system.tf_radius_1d();
    let tf = system.tf_profile_1d(&grid);
    let (num, den): (Vec<f64>, Vec<f64>) = grid
        .positions()
        .iter()
        .zip(gs.psi.density())
        .zip(&tf)
        .filter(|((z, _), _)| z.abs() < 0.9 * r)
        .map(|((_, n), t)| (n, *t))
        .unzip();
    assert!(relative_l2(&num, &den) < 0.05);
    let mu_1d = system.tf_chemical_potential_1d();
    assert!((gs.chemical_potential - mu_1d).abs() / mu_1d < 0.02);
}

#[test]
fn coarse_grid_is_rejected() {
    let mut cfg = config(A_RB, 1e4);
    cfg.solver.grid_points = 64;
    let grid = grid_for(&cfg).unwrap();
    assert!(matches!(ground_state(&cfg, &grid), Err(GpeError::GridTooCoarse { .. })));
}

#[test]
fn step_budget_is_enforced() {
    let mut cfg = config(A_RB, 1e4);
    cfg.solver.grid_points = 512;
    cfg.solver.domain_halfwidth = Some(3.5e-5);
    cfg.solver.max_imag_steps = 50;
    let system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let err = ground_state_from(&system, &grid, None, &ImagTimeOptions::from_config(&cfg)).unwrap_err();
    assert_eq!(err, GpeError::NoConvergence(50));
}

#[test]
fn even_states_have_zero_centre_of_mass() {
    let cfg = config(0.0, 10.0);
    let system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let l = system.oscillator_length();
    let psi = WaveFunction::from_fn(grid, 0.0, |z| {
        Complex64::new((1.0 + (z / l).powi(2)) * (-(z / l).powi(2)).exp(), 0.3 * (-(z / (2.0 * l)).powi(2)).exp())
    });
    assert!(observables(&psi, &system).com.abs() < 1e-12 * l);
}

#[test]
fn stationary_state_stays_put() {
    let (system, gs) = interacting();
    let opts = EvolveOptions {
        dt: 1e-5,
        t_end: 0.1,
        observe_every: 100,
        snapshot_every: None,
    };
    let traj = evolve(&gs.psi, &system, &opts, |_| {}).unwrap();
    assert_eq!(traj.steps, 10_000);
    assert!(max_relative_energy_change(&traj) < 1e-8);
    let r = system.tf_radius_1d();
    assert!(traj.observables.iter().all(|o| o.com.abs() < 1e-12 * r));
    let n0 = traj.observables[0].norm;
    let drift = traj.observables.iter().map(|o| (o.norm - n0).abs() / n0).fold(0.0, f64::max);
    assert!(drift < 1e-10 * 10.0);
}

#[test]
fn energy_error_is_second_order_in_dt() {
    let (system, gs) = interacting();
    let mut psi = gs.psi.clone();
    psi.values.rotate_right(20);
    let dts = [1e-5, 5e-6, 2.5e-6];
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let opts = EvolveOptions {
                dt,
                t_end: 0.05,
                observe_every: 1,
                snapshot_every: None,
            };
            max_relative_energy_change(&evolve(&psi, &system, &opts, |_| {}).unwrap())
        })
        .collect();
    let slope = log_log_slope(&dts, &errors);
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}, errors {errors:?}");
}

#[test]
fn centre_of_mass_follows_the_classical_oscillator() {
    let (mut system, gs) = interacting();
    let a = 1e-6;
    system.drive = DriveSpec::sine(a, Frequency::from_hz(10.0));
    let opts = EvolveOptions {
        dt: 1e-5,
        t_end: 0.5,
        observe_every: 250,
        snapshot_every: None,
    };
    let traj = evolve(&gs.psi, &system, &opts, |_| {}).unwrap();
    let times: Vec<f64> = traj.observables.iter().map(|o| o.time).collect();
    let trap = TrapConfig::from_hz(200.0, 200.0, 20.0);
    let reference = com_reference(&trap, &system.drive, &times);
    let peak = reference.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    assert!(peak > 0.1 * a);
    for (o, z) in traj.observables.iter().zip(&reference) {
        assert!((o.com - z).abs() < 1e-4 * a, "t={}: {} vs {}", o.time, o.com, z);
    }
}

#[test]
fn weak_drive_populates_first_level_like_a_coherent_state() {
    let cfg = config(0.0, 1000.0);
    let mut system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let gs = ground_state(&cfg, &grid).unwrap();
    system.drive = DriveSpec::sine(1.5e-7, Frequency::from_hz(13.0));
    let (dt, t_end) = (1e-5, 0.3);
    let opts = EvolveOptions {
        dt,
        t_end,
        observe_every: 1000,
        snapshot_every: None,
    };
    let traj = evolve(&gs.psi, &system, &opts, |_| {}).unwrap();
    let populations = oscillator_populations(&traj.final_state, &system, 3);
    let n = (t_end / dt).round() as usize + 1;
    let signal = SampledSignal::from_fn(dt, n, |t| acceleration(&system.drive, t)).unwrap();
    let exact = exact_displaced_oscillator(system.atomic_mass, system.omega_z, &signal, t_end);
    assert!(exact[1] > 1e-4 && exact[1] < 1e-3);
    assert!((populations[1] / exact[1] - 1.0).abs() < 0.01);
}

#[test]
fn oversized_step_is_rejected() {
    let (system, gs) = interacting();
    let opts = EvolveOptions {
        dt: 1e-3,
        t_end: 0.01,
        observe_every: 1,
        snapshot_every: None,
    };
    assert!(matches!(
        evolve(&gs.psi, &system, &opts, |_| {}),
        Err(GpeError::TimeStepTooLarge { .. })
    ));
}

#[test]
fn cloud_pushed_into_the_boundary_is_caught() {
    let cfg = config(0.0, 100.0);
    let mut system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let gs = ground_state(&cfg, &grid).unwrap();
    system.drive = DriveSpec::sine(2e-4, Frequency::from_hz(10.0));
    let opts = EvolveOptions {
        dt: 1e-5,
        t_end: 0.2,
        observe_every: 100,
        snapshot_every: None,
    };
    assert!(matches!(
        evolve(&gs.psi, &system, &opts, |_| {}),
        Err(GpeError::DomainEscape { .. })
    ));
}

#[test]
fn snapshots_follow_the_stride() {
    let cfg = config(0.0, 100.0);
    let system = GpeSystem::from_config(&cfg);
    let grid = grid_for(&cfg).unwrap();
    let gs = ground_state(&cfg, &grid).unwrap();
    let opts = EvolveOptions {
        dt: 1e-5,
        t_end: 1e-3,
        observe_every: 10,
        snapshot_every: Some(25),
    };
    let mut times = Vec::new();
    let traj = evolve(&gs.psi, &system, &opts, |psi| times.push(psi.time)).unwrap();
    assert_eq!(times.len(), 5);
    assert_eq!(times[0], 0.0);
    assert!((times[4] - 1e-3).abs() < 1e-15);
    assert_eq!(traj.observables.len(), 11);
}

#[test]
fn snapshot_files_round_trip_through_disk() {
    let cfg = config(0.0, 100.0);
    let grid = grid_for(&cfg).unwrap();
    let gs = ground_state(&cfg, &grid).unwrap();
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &gs.psi).unwrap();
    let back = read_snapshot(bytes.as_slice()).unwrap();
    assert_eq!(back.values, gs.psi.values);
    assert_eq!(back.grid.n_points(), grid.n_points());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_preserves_atom_number(
        amplitude in 0.0f64..3e-7,
        hz in 2.0f64..60.0,
        shift in 0usize..16,
        n_atoms in 10.0f64..5e3,
    ) {
        let mut cfg = config(A_RB, n_atoms);
        cfg.solver.grid_points = 128;
        cfg.solver.domain_halfwidth = Some(3e-5);
        let mut system = GpeSystem::from_config(&cfg);
        let grid = grid_for(&cfg).unwrap();
        let l = system.oscillator_length();
        let mut psi = WaveFunction::from_fn(grid, 0.0, |z| Complex64::new((-0.5 * (z / l).powi(2)).exp(), 0.0));
        psi.values.rotate_right(shift);
        psi.normalize_to(n_atoms);
        system.drive = DriveSpec::sine(amplitude, Frequency::from_hz(hz));
        let opts = EvolveOptions { dt: 1e-6, t_end: 3e-4, observe_every: 10, snapshot_every: None };
        let traj = evolve(&psi, &system, &opts, |_| {}).unwrap();
        for o in &traj.observables {
            prop_assert!((o.norm - n_atoms).abs() <= 1e-9 * n_atoms);
            prop_assert!(o.width >= 0.0);
        }
    }
}

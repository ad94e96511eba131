//! Classical centre-of-mass reference for the driven trap.

use crate::drive::{acceleration, DriveSpec};
use crate::ode::{dopri5, Tolerance};
use crate::units::TrapConfig;

/// Solves `z̈ = −ω_z² z − r A(t)`, `z(0) = ż(0) = 0`, at each of `times`,
/// with `r = 1` (per-atom mass convention).
pub fn com_reference(trap: &TrapConfig, drive: &DriveSpec, times: &[f64]) -> Vec<f64> {
    com_reference_scaled(trap.omega_z(), drive, 1.0, times)
}

/// Same as [`com_reference`] with forcing ratio `r = m_drive / m_a`.
pub fn com_reference_scaled(omega_z: f64, drive: &DriveSpec, ratio: f64, times: &[f64]) -> Vec<f64> {
    if drive.amplitude == 0.0 || ratio == 0.0 {
        return vec![0.0; times.len()];
    }
    let drive = drive.deterministic();
    let w2 = omega_z * omega_z;
    let scale = (drive.amplitude * ratio).abs();
    let tol = Tolerance {
        relative: 1e-12,
        absolute: 1e-14 * scale,
    };
    let mut sorted: Vec<(usize, f64)> = times.iter().cloned().enumerate().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let outputs: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let states = dopri5(
        |t, y: &[f64; 2]| [y[1], -w2 * y[0] - ratio * acceleration(&drive, t)],
        0.0,
        [0.0, 0.0],
        &outputs,
        tol,
    );
    let mut out = vec![0.0; times.len()];
    for ((index, _), y) in sorted.iter().zip(states) {
        out[*index] = y[0];
    }
    out
}

/// `z(t) = [Ω²a/(ω²−Ω²)]·[sin Ωt − (Ω/ω) sin ωt]` for a zero-phase sine drive.
pub fn forced_oscillator_closed_form(amplitude: f64, omega_drive: f64, omega_z: f64, t: f64) -> f64 {
    let (big, w) = (omega_drive, omega_z);
    big * big * amplitude / (w * w - big * big) * ((big * t).sin() - big / w * (w * t).sin())
}

/// Resonant limit Ω = ω: `z(t) = (a/2)(sin Ωt − Ωt cos Ωt)`.
pub fn resonant_closed_form(amplitude: f64, omega: f64, t: f64) -> f64 {
    0.5 * amplitude * ((omega * t).sin() - omega * t * (omega * t).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;
    use crate::units::Frequency;

    #[test]
    fn zero_drive_is_identically_zero() {
        let trap = TrapConfig::from_hz(100.0, 100.0, 20.0);
        let drive = DriveSpec::sine(0.0, Frequency::from_hz(7.0));
        assert!(com_reference(&trap, &drive, &[0.0, 0.1, 1.0]).iter().all(|z| *z == 0.0));
    }

    #[test]
    fn off_resonant_matches_closed_form() {
        let trap = TrapConfig::from_hz(100.0, 100.0, 20.0);
        let drive = DriveSpec::sine(1e-6, Frequency::from_hz(13.0));
        let times = linspace(0.0, 1.0, 201);
        let z = com_reference(&trap, &drive, &times);
        let peak = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (t, z) in times.iter().zip(&z) {
            let exact = forced_oscillator_closed_form(1e-6, drive.angular_frequency(), trap.omega_z(), *t);
            assert!((z - exact).abs() <= 1e-10 * peak, "t={t}: {z} vs {exact}");
        }
    }

    #[test]
    fn resonance_grows_linearly() {
        let trap = TrapConfig::from_hz(100.0, 100.0, 20.0);
        let drive = DriveSpec::sine(1e-6, Frequency::from_hz(20.0));
        let times = linspace(0.0, 0.5, 101);
        let z = com_reference(&trap, &drive, &times);
        let peak = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (t, z) in times.iter().zip(&z) {
            let exact = resonant_closed_form(1e-6, trap.omega_z(), *t);
            assert!((z - exact).abs() <= 1e-8 * peak);
        }
        assert!(peak > 10.0 * 1e-6);
    }

    #[test]
    fn unsorted_times_are_returned_in_order() {
        let trap = TrapConfig::from_hz(100.0, 100.0, 20.0);
        let drive = DriveSpec::sine(1e-6, Frequency::from_hz(13.0));
        let a = com_reference(&trap, &drive, &[0.3, 0.1, 0.2]);
        let b = com_reference(&trap, &drive, &[0.1, 0.2, 0.3]);
        assert_eq!(a, vec![b[2], b[0], b[1]]);
    }
}

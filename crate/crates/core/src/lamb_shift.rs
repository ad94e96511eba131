//! Gravitational Lamb shift estimate for a displaced condensate,
//! `⟨ΔV⟩ ≈ (16/27π) (m³/m_P²) ω² L²` with `m = N m_a`, evaluated in SI.

use std::f64::consts::PI;

use crate::units::{HBAR, PLANCK_MASS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambShift {
    /// ⟨ΔV⟩ (J).
    pub delta_v: f64,
    /// ⟨ΔV⟩ / ħω.
    pub ratio: f64,
}

fn prefactor(atomic_mass: f64, n_atoms: f64, omega: f64) -> f64 {
    let m = n_atoms * atomic_mass;
    16.0 / (27.0 * PI) * (m * m * m) / (PLANCK_MASS * PLANCK_MASS) * omega * omega
}

pub fn gravitational_lamb_shift(atomic_mass: f64, n_atoms: f64, omega: f64, length: f64) -> LambShift {
    let delta_v = prefactor(atomic_mass, n_atoms, omega) * length * length;
    LambShift {
        delta_v,
        ratio: delta_v / (HBAR * omega),
    }
}

/// Vertical length L at which ⟨ΔV⟩/ħω reaches `target_ratio`.
pub fn length_for_ratio(atomic_mass: f64, n_atoms: f64, omega: f64, target_ratio: f64) -> f64 {
    (target_ratio * HBAR * omega / prefactor(atomic_mass, n_atoms, omega)).sqrt()
}

//! Physical constants, atomic species data and frequency units.
//!
//! Everything is SI. Configuration documents carry ordinary frequencies in
//! Hz; every computation works with angular frequencies `ω = 2πf`, which
//! [`Frequency`] converts on demand so that the Hz value read from a document
//! is kept bit-for-bit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Reduced Planck constant ħ (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant h = 2πħ (J·s).
pub const PLANCK_H: f64 = 2.0 * PI * HBAR;
/// Boltzmann constant (J/K), exact in the 2019 SI.
pub const K_BOLTZMANN: f64 = 1.380_649e-23;
/// Planck mass √(ħc/G) (kg), CODATA 2018.
pub const PLANCK_MASS: f64 = 2.176_434e-8;
/// Unified atomic mass unit (kg), CODATA 2018.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// The constants shared by every module, bundled as a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_boltzmann: f64,
    pub planck_h: f64,
    pub planck_mass: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_boltzmann: K_BOLTZMANN,
        planck_h: PLANCK_H,
        planck_mass: PLANCK_MASS,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// Atomic constants of a bosonic species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub name: String,
    /// Mass of a single atom (kg).
    pub atomic_mass: f64,
    /// s-wave scattering length (m); positive is repulsive.
    pub scattering_length: f64,
}

/// Rubidium-87 with the 5.28 nm scattering length.
pub fn species_rb87() -> AtomSpecies {
    AtomSpecies {
        name: "Rb87".to_string(),
        atomic_mass: 1.443_16e-25,
        scattering_length: 5.28e-9,
    }
}

/// Sodium-23, a = 52 a₀.
pub fn species_na23() -> AtomSpecies {
    AtomSpecies {
        name: "Na23".to_string(),
        atomic_mass: 22.989_769_28 * ATOMIC_MASS_UNIT,
        scattering_length: 2.75e-9,
    }
}

/// Looks up a built-in species by name (case-insensitive, `-` ignored).
pub fn builtin_species(name: &str) -> Option<AtomSpecies> {
    let key: String = name
        .chars()
        .filter(|c| *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect();
    match key.as_str() {
        "rb87" | "87rb" => Some(species_rb87()),
        "na23" | "23na" => Some(species_na23()),
        _ => None,
    }
}

/// An ordinary frequency, stored in Hz exactly as configured.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const fn from_hz(hz: f64) -> Self {
        Frequency(hz)
    }

    pub fn from_angular(omega: f64) -> Self {
        Frequency(omega / (2.0 * PI))
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    /// Angular frequency 2πf (rad/s).
    pub fn angular(self) -> f64 {
        2.0 * PI * self.0
    }

    pub fn period(self) -> f64 {
        1.0 / self.0
    }
}

/// Harmonic trap frequencies along the three axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub x: Frequency,
    pub y: Frequency,
    pub z: Frequency,
}

impl TrapConfig {
    pub fn from_hz(fx: f64, fy: f64, fz: f64) -> Self {
        TrapConfig {
            x: Frequency::from_hz(fx),
            y: Frequency::from_hz(fy),
            z: Frequency::from_hz(fz),
        }
    }

    pub fn omega_x(&self) -> f64 {
        self.x.angular()
    }

    pub fn omega_y(&self) -> f64 {
        self.y.angular()
    }

    pub fn omega_z(&self) -> f64 {
        self.z.angular()
    }

    /// Geometric mean ω̄ = (ωx ωy ωz)^{1/3}.
    pub fn omega_mean(&self) -> f64 {
        (self.omega_x() * self.omega_y() * self.omega_z()).cbrt()
    }

    /// Transverse frequency ω⊥ = √(ωx ωy) used by the quasi-1D reduction.
    pub fn omega_perp(&self) -> f64 {
        (self.omega_x() * self.omega_y()).sqrt()
    }
}

/// Which mass multiplies the inertial drive potential `m A(t) z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassConvention {
    /// m = m_a, a single atom.
    PerAtom,
    /// m = N₀ m_a, the whole condensate.
    TotalCondensate,
}

impl MassConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            MassConvention::PerAtom => "per_atom",
            MassConvention::TotalCondensate => "total_condensate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per_atom" => Some(MassConvention::PerAtom),
            "total_condensate" => Some(MassConvention::TotalCondensate),
            _ => None,
        }
    }

    /// Mass entering the drive potential.
    pub fn resolve(self, atomic_mass: f64, n_atoms: f64) -> f64 {
        match self {
            MassConvention::PerAtom => atomic_mass,
            MassConvention::TotalCondensate => n_atoms * atomic_mass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planck_over_hbar_is_two_pi() {
        let c = PhysicalConstants::SI;
        let ratio = c.planck_h / c.hbar;
        let ulp = f64::EPSILON * 2.0 * PI;
        assert!((ratio - 2.0 * PI).abs() <= ulp, "{ratio}");
        assert!(c.hbar > 0.0 && c.k_boltzmann > 0.0 && c.planck_h > 0.0 && c.planck_mass > 0.0);
    }

    #[test]
    fn rb87_defaults() {
        let rb = species_rb87();
        assert_eq!(rb.scattering_length, 5.28e-9);
        assert_ne!(rb.scattering_length, 5.0e-9);
        assert!((rb.atomic_mass - 86.909 * 1.66054e-27).abs() / rb.atomic_mass < 1e-5);
        assert_eq!(rb.atomic_mass, 1.44316e-25);
    }

    #[test]
    fn rb87_is_referentially_transparent() {
        let a = species_rb87();
        let b = species_rb87();
        assert_eq!(a.atomic_mass.to_bits(), b.atomic_mass.to_bits());
        assert_eq!(a.scattering_length.to_bits(), b.scattering_length.to_bits());
        assert_eq!(a.name, b.name);
    }

    #[test]
    fn builtin_lookup_is_forgiving() {
        assert_eq!(builtin_species("Rb-87"), Some(species_rb87()));
        assert_eq!(builtin_species("na23"), Some(species_na23()));
        assert!(builtin_species("Cs133").is_none());
    }

    #[test]
    fn angular_frequency() {
        let f = Frequency::from_hz(1000.0);
        assert_eq!(f.angular(), 2.0 * PI * 1000.0);
        assert_eq!(f.period(), 1e-3);
    }

    #[test]
    fn mass_convention_resolution() {
        assert_eq!(MassConvention::PerAtom.resolve(2.0, 10.0), 2.0);
        assert_eq!(MassConvention::TotalCondensate.resolve(2.0, 10.0), 20.0);
        assert_eq!(MassConvention::parse("per_atom"), Some(MassConvention::PerAtom));
        assert_eq!(MassConvention::parse("per-atom"), None);
    }
}

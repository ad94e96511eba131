//! First-order time-dependent perturbation theory for a harmonic oscillator
//! forced by `V(x, t) = m A(t) x`.
//!
//! Only nearest-neighbour Fock transitions couple (`⟨n|x|i⟩ ∝ δ_{n,i±1}`),
//! so a broadband drive with spectral density `S(ω)` moves population up at
//! rate `m S(ω)(i+1)/(2ħω)` and down at `m S(−ω) i/(2ħω)`. The net absorbed
//! power `ħω (up − down)` is `m S(ω)/2` for even `S`, whatever the level.

use num_complex::Complex64;
use thiserror::Error;

use crate::drive::SampledSignal;
use crate::numerics::compensated_sum;
use crate::spectrum::{analytic_psd_sine, windowed_fourier, SpectralDensity, SpectrumError};
use crate::units::{HBAR, K_BOLTZMANN, PLANCK_H};

/// Transition probabilities above this are flagged as outside first order.
pub const FIRST_ORDER_VALIDITY_LIMIT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbationError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A Fock level of the trap oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorState {
    pub index: u32,
    pub omega: f64,
    pub mass: f64,
}

impl OscillatorState {
    pub fn new(index: u32, omega: f64, mass: f64) -> Result<Self, PerturbationError> {
        if !(omega > 0.0) || !(mass > 0.0) {
            return Err(PerturbationError::InvalidParameter(
                "oscillator needs omega > 0 and mass > 0".into(),
            ));
        }
        Ok(OscillatorState { index, omega, mass })
    }

    pub fn energy(&self) -> f64 {
        HBAR * self.omega * (self.index as f64 + 0.5)
    }
}

/// Zero-point length `√(ħ/2mω)`.
pub fn zero_point_length(mass: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * mass * omega)).sqrt()
}

/// `⟨n|x|i⟩ = √(ħ/2mω) (√(i+1) δ_{n,i+1} + √i δ_{n,i−1})`.
pub fn position_matrix_element(i: u32, n: u32, mass: f64, omega: f64) -> f64 {
    let ladder = if n == i + 1 {
        (i as f64 + 1.0).sqrt()
    } else if i > 0 && n == i - 1 {
        (i as f64).sqrt()
    } else {
        return 0.0;
    };
    zero_point_length(mass, omega) * ladder
}

/// Transition frequency `ω_ni = (n − i) ω`.
pub fn transition_frequency(i: u32, n: u32, omega: f64) -> f64 {
    (n as f64 - i as f64) * omega
}

/// `c⁽¹⁾_ni(t) = −(i m/ħ) ⟨n|x|i⟩ Ã_t(ω_ni)`, using the signal up to `t`.
pub fn first_order_coeff(
    i: u32,
    n: u32,
    mass: f64,
    omega: f64,
    signal: &SampledSignal,
    t: f64,
) -> Complex64 {
    let element = position_matrix_element(i, n, mass, omega);
    if element == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let window = signal.truncated(t);
    let transform = windowed_fourier(&window, transition_frequency(i, n, omega));
    Complex64::new(0.0, -mass / HBAR * element) * transform
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionResult {
    pub from_index: u32,
    pub to_index: u32,
    pub amplitude: Complex64,
    pub probability: f64,
    /// False once the probability exceeds [`FIRST_ORDER_VALIDITY_LIMIT`].
    pub valid_first_order: bool,
}

/// First-order amplitude and probability of `i → n` over [0, t].
pub fn transition(i: u32, n: u32, mass: f64, omega: f64, signal: &SampledSignal, t: f64) -> TransitionResult {
    let amplitude = first_order_coeff(i, n, mass, omega, signal, t);
    let probability = amplitude.norm_sqr();
    TransitionResult {
        from_index: i,
        to_index: n,
        amplitude,
        probability,
        valid_first_order: probability <= FIRST_ORDER_VALIDITY_LIMIT,
    }
}

/// A rate or power that is either an ordinary number or the weight of a
/// δ-function in the trap frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRate {
    /// 1/s, or the δ-weight when `is_distributional`.
    pub rate: f64,
    pub is_distributional: bool,
}

/// `T_{i→n} = (m S(ω_ni) / 2ħω) [(i+1) δ_{n,i+1} + i δ_{n,i−1}]`.
pub fn transition_rate(
    i: u32,
    n: u32,
    mass: f64,
    omega: f64,
    spectrum: &SpectralDensity,
) -> Result<TransitionRate, PerturbationError> {
    let multiplicity = if n == i + 1 {
        i as f64 + 1.0
    } else if i > 0 && n == i - 1 {
        i as f64
    } else {
        return Ok(TransitionRate {
            rate: 0.0,
            is_distributional: false,
        });
    };
    let s = spectrum.evaluate(transition_frequency(i, n, omega))?;
    Ok(TransitionRate {
        rate: mass * s.magnitude() / (2.0 * HBAR * omega) * multiplicity,
        is_distributional: s.is_line(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    /// Absorbed power (W), or for a line spectrum the weight of δ(ω − Ω) in W·(rad/s).
    pub power: f64,
    pub is_distributional: bool,
}

/// Net power `ħω (T_{i→i+1} − T_{i→i−1})` absorbed from level `i`.
///
/// The level enters only through `(i+1) S(ω) − i S(−ω) = S(ω) + i [S(ω) − S(−ω)]`,
/// which is evaluated in that form so an even spectrum gives a result that is
/// bitwise independent of `i`.
pub fn absorbed_power_from_level(
    i: u32,
    mass: f64,
    omega: f64,
    spectrum: &SpectralDensity,
) -> Result<PowerResult, PerturbationError> {
    let up = spectrum.evaluate(omega)?;
    let down = if i == 0 {
        up
    } else {
        spectrum.evaluate(-omega)?
    };
    let bracket = up.magnitude() + i as f64 * (up.magnitude() - down.magnitude());
    let quantum = HBAR * omega;
    let per_rate = mass / (2.0 * HBAR * omega);
    let power = quantum * per_rate * bracket;
    Ok(PowerResult {
        power: power.max(0.0),
        is_distributional: up.is_line() || (i > 0 && down.is_line()),
    })
}

/// `𝒫 = m S(ω)/2`, the level-independent absorbed power.
pub fn absorbed_power(mass: f64, omega: f64, spectrum: &SpectralDensity) -> Result<PowerResult, PerturbationError> {
    absorbed_power_from_level(0, mass, omega, spectrum)
}

/// Uniform distribution of trap frequencies with constant density on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFrequencyDistribution {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

impl UniformFrequencyDistribution {
    /// ρ(ω) = 1/Ω on [Ω − Ω/2, Ω + Ω/2].
    pub fn around_drive(omega_drive: f64) -> Self {
        UniformFrequencyDistribution {
            lo: omega_drive - omega_drive / 2.0,
            hi: omega_drive + omega_drive / 2.0,
            density: 1.0 / omega_drive,
        }
    }

    pub fn density_at(&self, omega: f64) -> f64 {
        if omega >= self.lo && omega <= self.hi {
            self.density
        } else {
            0.0
        }
    }
}

/// `∫ w δ(ω − ω₀) ρ(ω) dω = w ρ(ω₀)`.
pub fn average_line(weight: f64, line_omega: f64, distribution: &UniformFrequencyDistribution) -> f64 {
    weight * distribution.density_at(line_omega)
}

/// Closed form `⟨𝒫⟩ = π m a² Ω³ / 4`.
pub fn ensemble_averaged_power(mass: f64, amplitude: f64, omega_drive: f64) -> f64 {
    std::f64::consts::PI * mass * amplitude * amplitude * omega_drive.powi(3) / 4.0
}

/// The same average built step by step: the tone's line spectrum, the
/// resonant power weight `π m A₀²/4`, then the δ-integral against
/// ρ(ω) = 1/Ω.
pub fn ensemble_averaged_power_symbolic(mass: f64, amplitude: f64, omega_drive: f64) -> Result<f64, PerturbationError> {
    let a0 = amplitude * omega_drive * omega_drive;
    let spectrum = analytic_psd_sine(a0, omega_drive);
    let resonant = absorbed_power(mass, omega_drive, &spectrum)?;
    debug_assert!(resonant.is_distributional || a0 == 0.0);
    Ok(average_line(
        resonant.power,
        omega_drive,
        &UniformFrequencyDistribution::around_drive(omega_drive),
    ))
}

/// Coherent-state amplitude `α(t) = −(i/ħ) √(ħ/2mω) m Ã_t(ω)` reached from
/// the ground state.
pub fn coherent_amplitude(mass: f64, omega: f64, signal: &SampledSignal, t: f64) -> Complex64 {
    let window = signal.truncated(t);
    let transform = windowed_fourier(&window, omega);
    Complex64::new(0.0, -zero_point_length(mass, omega) * mass / HBAR) * transform
}

/// Exact level populations of a linearly forced oscillator that starts in
/// `|0⟩`: Poissonian in `|α|²`, truncated once the tail is below 1e-12.
pub fn exact_displaced_oscillator(mass: f64, omega: f64, signal: &SampledSignal, t: f64) -> Vec<f64> {
    poisson_populations(coherent_amplitude(mass, omega, signal, t).norm_sqr())
}

/// `P_n = e^{−λ} λⁿ / n!` for n = 0, 1, ... until the sum reaches 1 − 1e-12.
pub fn poisson_populations(mean: f64) -> Vec<f64> {
    if mean == 0.0 {
        return vec![1.0, 0.0];
    }
    // unnormalized weights by recurrence outward from the mode
    let mode = mean.floor() as usize;
    let mut weights = vec![0.0; mode + 1];
    weights[mode] = 1.0;
    for n in (0..mode).rev() {
        weights[n] = weights[n + 1] * (n + 1) as f64 / mean;
    }
    let mut n = mode;
    loop {
        let next = weights[n] * mean / (n + 1) as f64;
        n += 1;
        weights.push(next);
        if next < 1e-18 || n > mode + 100_000 {
            break;
        }
    }
    let total = compensated_sum(weights.iter().cloned());
    weights.iter().map(|w| w / total).collect()
}

/// Absorbed energy compared with thermal and trap-quantum scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyScaleReport {
    pub absorbed_energy: f64,
    pub kbt: f64,
    pub hf: f64,
    pub absorbed_over_kbt: f64,
    pub absorbed_over_hf: f64,
    pub kbt_over_hf: f64,
}

pub fn energy_scale_report(power: f64, duration: f64, temperature: f64, trap_freq_hz: f64) -> EnergyScaleReport {
    let absorbed_energy = power * duration;
    let kbt = K_BOLTZMANN * temperature;
    let hf = PLANCK_H * trap_freq_hz;
    EnergyScaleReport {
        absorbed_energy,
        kbt,
        hf,
        absorbed_over_kbt: absorbed_energy / kbt,
        absorbed_over_hf: absorbed_energy / hf,
        kbt_over_hf: kbt / hf,
    }
}

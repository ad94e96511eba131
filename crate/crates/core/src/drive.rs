//! Shaking kinematics and seeded synthesis of sampled drive signals.
//!
//! The trap is displaced as `z(t) = a sin(Ωt + φ)`, so atoms in the
//! co-moving frame feel the acceleration `A(t) = −Ω² a sin(Ωt + φ)` and the
//! inertial potential `V(z, t) = m A(t) z`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::Frequency;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriveError {
    #[error("time step {dt:e} s under-resolves the drive; need dt <= {max_dt:e} s")]
    UnderResolved { dt: f64, max_dt: f64 },
    #[error("a sampled signal needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid drive parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Flat up to the Nyquist frequency of whatever grid it is sampled on.
    White,
    /// Flat inside `band`, zero outside.
    BandLimited,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::BandLimited => "band_limited",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "white" => Some(NoiseKind::White),
            "band_limited" => Some(NoiseKind::BandLimited),
            _ => None,
        }
    }
}

/// Stationary Gaussian acceleration noise added on top of the sine drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Two-sided acceleration PSD level, (m/s²)² per rad/s.
    pub accel_psd_level: f64,
    /// Pass band, only used by [`NoiseKind::BandLimited`].
    pub band: Option<(Frequency, Frequency)>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(accel_psd_level: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::White,
            accel_psd_level,
            band: None,
            seed,
        }
    }

    pub fn band_limited(accel_psd_level: f64, lo: Frequency, hi: Frequency, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::BandLimited,
            accel_psd_level,
            band: Some((lo, hi)),
            seed,
        }
    }

    /// Angular pass band; white noise passes everything.
    fn angular_band(&self) -> (f64, f64) {
        match (self.kind, self.band) {
            (NoiseKind::BandLimited, Some((lo, hi))) => (lo.angular(), hi.angular()),
            _ => (0.0, f64::INFINITY),
        }
    }
}

/// Vertical shaking of the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// Displacement amplitude a (m).
    pub amplitude: f64,
    pub frequency: Frequency,
    /// Phase φ (rad), zero unless configured.
    pub phase: f64,
    pub noise: Option<NoiseSpec>,
}

impl DriveSpec {
    /// Noise-free sine with zero phase.
    pub fn sine(amplitude: f64, frequency: Frequency) -> Self {
        DriveSpec {
            amplitude,
            frequency,
            phase: 0.0,
            noise: None,
        }
    }

    pub fn validate(&self) -> Result<(), DriveError> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(DriveError::InvalidParameter(format!(
                "amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.frequency.hz() > 0.0) || !self.frequency.hz().is_finite() {
            return Err(DriveError::InvalidParameter(format!(
                "frequency must be > 0, got {} Hz",
                self.frequency.hz()
            )));
        }
        if let Some(noise) = &self.noise {
            if !(noise.accel_psd_level >= 0.0) {
                return Err(DriveError::InvalidParameter(
                    "noise level must be >= 0".into(),
                ));
            }
            if noise.kind == NoiseKind::BandLimited {
                match noise.band {
                    Some((lo, hi)) if lo.hz() >= 0.0 && lo < hi => {}
                    _ => {
                        return Err(DriveError::InvalidParameter(
                            "band-limited noise needs 0 <= lo < hi".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    /// Ω (rad/s).
    pub fn angular_frequency(&self) -> f64 {
        self.frequency.angular()
    }

    /// Peak acceleration A₀ = aΩ².
    pub fn peak_acceleration(&self) -> f64 {
        let w = self.angular_frequency();
        self.amplitude * w * w
    }

    /// The same drive without its noise component.
    pub fn deterministic(&self) -> DriveSpec {
        DriveSpec {
            noise: None,
            ..*self
        }
    }
}

/// Trap displacement `a sin(Ωt + φ)` (m).
pub fn displacement(drive: &DriveSpec, t: f64) -> f64 {
    drive.amplitude * (drive.angular_frequency() * t + drive.phase).sin()
}

/// Deterministic acceleration `−Ω² a sin(Ωt + φ)` (m/s²).
///
/// Noise has no meaning at a single instant without a sampling grid, so it
/// only enters through [`synth_signal`].
pub fn acceleration(drive: &DriveSpec, t: f64) -> f64 {
    let w = drive.angular_frequency();
    -w * w * displacement(drive, t)
}

/// Inertial potential energy `m A(t) z` (J).
pub fn perturbation_potential(mass: f64, drive: &DriveSpec, z: f64, t: f64) -> f64 {
    mass * acceleration(drive, t) * z
}

/// Uniformly sampled real signal starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    dt: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self, DriveError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DriveError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(DriveError::TooFewSamples(samples.len()));
        }
        Ok(SampledSignal { dt, samples })
    }

    /// Samples `f(k dt)` for k in 0..n.
    pub fn from_fn(dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, DriveError> {
        let samples = (0..n).map(|k| f(k as f64 * dt)).collect();
        Self::new(dt, samples)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length of the window [0, t] covered by the samples.
    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    /// The leading part of the signal covering [0, t].
    ///
    /// `t` is snapped to the nearest sample; values past the end keep the
    /// whole signal.
    pub fn truncated(&self, t: f64) -> SampledSignal {
        let last = ((t / self.dt).round().max(1.0) as usize).min(self.samples.len() - 1);
        SampledSignal {
            dt: self.dt,
            samples: self.samples[..=last].to_vec(),
        }
    }

    pub fn scaled(&self, factor: f64) -> SampledSignal {
        SampledSignal {
            dt: self.dt,
            samples: self.samples.iter().map(|x| x * factor).collect(),
        }
    }
}

/// Largest time step accepted for sampling a drive at angular frequency Ω.
pub fn max_sampling_step(omega: f64) -> f64 {
    std::f64::consts::PI / (5.0 * omega)
}

/// Samples the drive acceleration at `t_k = k dt`, adding one seeded noise
/// realization when the drive carries a [`NoiseSpec`].
///
/// Noise is synthesized in frequency space: a white Gaussian sequence with
/// variance `S/dt` (whose two-sided PSD is `S` up to Nyquist) is transformed,
/// bins outside the pass band are zeroed symmetrically and the result is
/// transformed back. The same seed always yields the same samples.
pub fn synth_signal(drive: &DriveSpec, dt: f64, n: usize) -> Result<SampledSignal, DriveError> {
    drive.validate()?;
    let max_dt = max_sampling_step(drive.angular_frequency());
    if !(dt > 0.0) || dt > max_dt {
        return Err(DriveError::UnderResolved { dt, max_dt });
    }
    if n < 2 {
        return Err(DriveError::TooFewSamples(n));
    }
    let mut samples: Vec<f64> = (0..n).map(|k| acceleration(drive, k as f64 * dt)).collect();
    if let Some(noise) = &drive.noise {
        if noise.accel_psd_level > 0.0 {
            let realization = noise_realization(noise, dt, n);
            for (s, x) in samples.iter_mut().zip(realization) {
                *s += x;
            }
        }
    }
    SampledSignal::new(dt, samples)
}

fn noise_realization(noise: &NoiseSpec, dt: f64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let sigma = (noise.accel_psd_level / dt).sqrt();
    let white: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    let (lo, hi) = noise.angular_band();
    let nyquist = std::f64::consts::PI / dt;
    if lo <= 0.0 && hi >= nyquist {
        return white;
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = white.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut buf);
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    for (k, c) in buf.iter_mut().enumerate() {
        // bins k and n-k share |ω|, so the mask keeps the spectrum Hermitian
        let idx = k.min(n - k);
        let w = idx as f64 * d_omega;
        if w < lo || w > hi {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    inverse.process(&mut buf);
    let norm = 1.0 / n as f64;
    buf.iter().map(|c| c.re * norm).collect()
}

//! Windowed Fourier transforms and two-sided power spectral densities.
//!
//! Conventions: `Ã_t(ω) = ∫₀ᵗ e^{+iωt'} A(t') dt'` on the one-sided window
//! [0, t], and `S_t(ω) = ⟨|Ã_t(ω)|²⟩ / t`. With this normalization the mean
//! square of a stationary signal is `(1/2π) ∫ S(ω) dω`, and a pure tone
//! `A₀ sin(Ωt)` has `S(ω) = (πA₀²/2) [δ(ω−Ω) + δ(ω+Ω)]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::drive::SampledSignal;
use crate::numerics::{compensated_sum, trapezoid, ComplexNeumaierSum, NeumaierSum};

/// Relative tolerance used to decide that a frequency sits on a δ-line.
pub const LINE_MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("no realizations supplied")]
    NoRealizations,
    #[error("realization {index} has {found} samples, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("realization {index} has time step {found:e}, expected {expected:e}")]
    TimeStepMismatch {
        index: usize,
        expected: f64,
        found: f64,
    },
    #[error("spectral density has no support at ω = {0:e} rad/s")]
    SpectralValueUnavailable(f64),
    #[error("invalid spectral density: {0}")]
    Invalid(String),
}

/// A δ-function component `weight · δ(ω − omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaLine {
    pub omega: f64,
    pub weight: f64,
}

/// Value of a spectral density at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralValue {
    /// Ordinary density, (m/s²)² per rad/s.
    Density(f64),
    /// The frequency sits on a δ-line; this is its weight.
    Line(f64),
}

impl SpectralValue {
    pub fn magnitude(self) -> f64 {
        match self {
            SpectralValue::Density(v) | SpectralValue::Line(v) => v,
        }
    }

    pub fn is_line(self) -> bool {
        matches!(self, SpectralValue::Line(_))
    }
}

/// Two-sided power spectral density: sampled grid plus exact δ-lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralDensity {
    grid: Vec<(f64, f64)>,
    delta_lines: Vec<DeltaLine>,
}

impl SpectralDensity {
    pub fn new(mut grid: Vec<(f64, f64)>, delta_lines: Vec<DeltaLine>) -> Result<Self, SpectrumError> {
        if grid.iter().any(|(w, s)| !w.is_finite() || !(*s >= 0.0)) {
            return Err(SpectrumError::Invalid(
                "grid values must be finite and non-negative".into(),
            ));
        }
        if delta_lines.iter().any(|l| !l.omega.is_finite() || !(l.weight >= 0.0)) {
            return Err(SpectrumError::Invalid(
                "line weights must be non-negative".into(),
            ));
        }
        grid.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(SpectralDensity { grid, delta_lines })
    }

    /// Constant density `level` on [−omega_max, omega_max].
    pub fn flat(level: f64, omega_max: f64) -> Self {
        SpectralDensity {
            grid: vec![(-omega_max, level), (omega_max, level)],
            delta_lines: Vec::new(),
        }
    }

    pub fn grid(&self) -> &[(f64, f64)] {
        &self.grid
    }

    pub fn delta_lines(&self) -> &[DeltaLine] {
        &self.delta_lines
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.grid.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.grid.iter().map(|p| p.1).collect()
    }

    /// Looks up `S(ω)`.
    ///
    /// A δ-line within [`LINE_MATCH_TOLERANCE`] (relative) wins. Otherwise
    /// the grid is linearly interpolated inside its range. A pure line
    /// spectrum (empty grid) is zero away from its lines; anything else
    /// outside the grid has no value.
    pub fn evaluate(&self, omega: f64) -> Result<SpectralValue, SpectrumError> {
        if let Some(line) = self
            .delta_lines
            .iter()
            .find(|l| (omega - l.omega).abs() <= LINE_MATCH_TOLERANCE * l.omega.abs())
        {
            return Ok(SpectralValue::Line(line.weight));
        }
        if self.grid.is_empty() {
            return if self.delta_lines.is_empty() {
                Err(SpectrumError::SpectralValueUnavailable(omega))
            } else {
                Ok(SpectralValue::Density(0.0))
            };
        }
        let (first, last) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if omega < first.0 || omega > last.0 {
            return Err(SpectrumError::SpectralValueUnavailable(omega));
        }
        let upper = self.grid.partition_point(|p| p.0 < omega);
        if upper == 0 {
            return Ok(SpectralValue::Density(first.1));
        }
        let (w1, s1) = self.grid[upper];
        if w1 == omega {
            return Ok(SpectralValue::Density(s1));
        }
        let (w0, s0) = self.grid[upper - 1];
        let frac = (omega - w0) / (w1 - w0);
        Ok(SpectralValue::Density(s0 + frac * (s1 - s0)))
    }

    /// Mean square of the signal, `(1/2π) [∫ S dω + Σ weights]`, with the
    /// grid part integrated by the trapezoid rule.
    pub fn mean_square(&self) -> f64 {
        let continuous = if self.grid.len() >= 2 {
            trapezoid(&self.omegas(), &self.values())
        } else {
            0.0
        };
        let lines = compensated_sum(self.delta_lines.iter().map(|l| l.weight));
        (continuous + lines) / (2.0 * PI)
    }

    /// Largest relative asymmetry `|S(ω) − S(−ω)| / max` over grid points
    /// whose mirror image is also a grid point.
    pub fn evenness_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &(w, s) in &self.grid {
            if let Some(&(_, mirror)) = self.grid.iter().find(|p| p.0 == -w) {
                let scale = s.abs().max(mirror.abs());
                if scale > 0.0 {
                    worst = worst.max((s - mirror).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Trapezoidal `∫₀ᵗ e^{iωt'} A(t') dt'` over the whole signal.
///
/// Negative frequencies are computed as the conjugate of `|ω|`, so real
/// input gives `Ã(−ω) = Ã(ω)*` exactly.
pub fn windowed_fourier(signal: &SampledSignal, omega: f64) -> Complex64 {
    let value = windowed_fourier_nonneg(signal, omega.abs());
    if omega < 0.0 {
        value.conj()
    } else {
        value
    }
}

fn windowed_fourier_nonneg(signal: &SampledSignal, omega: f64) -> Complex64 {
    let dt = signal.dt();
    let samples = signal.samples();
    let last = samples.len() - 1;
    let mut acc = ComplexNeumaierSum::default();
    for (k, &a) in samples.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let weight = if k == 0 || k == last { 0.5 } else { 1.0 };
        let (s, c) = (omega * k as f64 * dt).sin_cos();
        acc.add(Complex64::new(c, s) * (weight * a));
    }
    acc.value() * dt
}

/// `S_t(ω) = (1/t) · mean_r |Ã_t^{(r)}(ω)|²` on the given frequency grid.
///
/// Grid points are evaluated in parallel; each point's average runs over
/// realizations in their given order with compensated summation, so the
/// result does not depend on the thread count.
pub fn psd_estimate(
    realizations: &[SampledSignal],
    omega_grid: &[f64],
) -> Result<SpectralDensity, SpectrumError> {
    let first = realizations.first().ok_or(SpectrumError::NoRealizations)?;
    for (index, r) in realizations.iter().enumerate() {
        if r.len() != first.len() {
            return Err(SpectrumError::LengthMismatch {
                index,
                expected: first.len(),
                found: r.len(),
            });
        }
        if r.dt() != first.dt() {
            return Err(SpectrumError::TimeStepMismatch {
                index,
                expected: first.dt(),
                found: r.dt(),
            });
        }
    }
    let duration = first.duration();
    let count = realizations.len() as f64;
    let grid: Vec<(f64, f64)> = omega_grid
        .par_iter()
        .map(|&omega| {
            let total: NeumaierSum = realizations
                .iter()
                .map(|r| windowed_fourier(r, omega).norm_sqr())
                .collect();
            (omega, total.value() / count / duration)
        })
        .collect();
    SpectralDensity::new(grid, Vec::new())
}

/// `S(ω) = (πA₀²/2) [δ(ω−Ω) + δ(ω+Ω)]` for a pure tone of amplitude A₀.
pub fn analytic_psd_sine(a0: f64, omega: f64) -> SpectralDensity {
    let weight = PI * a0 * a0 / 2.0;
    SpectralDensity {
        grid: Vec::new(),
        delta_lines: vec![
            DeltaLine { omega, weight },
            DeltaLine {
                omega: -omega,
                weight,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;

    fn sine(a0: f64, omega: f64, periods: usize, per_period: usize) -> SampledSignal {
        let dt = 2.0 * PI / omega / per_period as f64;
        SampledSignal::from_fn(dt, periods * per_period + 1, |t| a0 * (omega * t).sin()).unwrap()
    }

    #[test]
    fn zero_signal_transforms_to_zero() {
        let s = SampledSignal::new(1e-3, vec![0.0; 50]).unwrap();
        assert_eq!(windowed_fourier(&s, 12.0), Complex64::new(0.0, 0.0));
        let psd = psd_estimate(&[s.clone(), s], &[-3.0, 0.0, 3.0]).unwrap();
        assert!(psd.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn resonant_transform_magnitude() {
        // ∫₀ᵗ e^{iΩt'} sin(Ωt') dt' = i t/2 over whole periods
        let (a0, w) = (2.5, 2.0 * PI * 50.0);
        let s = sine(a0, w, 100, 64);
        let t = s.duration();
        let v = windowed_fourier(&s, w);
        assert!((v.norm() - a0 * t / 2.0).abs() / (a0 * t / 2.0) < 0.01);
        assert!(v.re.abs() < 1e-9 * v.norm());
        assert!(v.im > 0.0);
    }

    #[test]
    fn transform_is_linear() {
        let f = SampledSignal::from_fn(1e-3, 300, |t| (37.0 * t).sin() + 0.3).unwrap();
        let g = SampledSignal::from_fn(1e-3, 300, |t| (t * 5.0).cos() * t).unwrap();
        let (alpha, beta) = (1.7, -0.4);
        let combo = SampledSignal::new(
            1e-3,
            f.samples()
                .iter()
                .zip(g.samples())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
        .unwrap();
        for omega in [0.0, 3.0, 40.0, -17.0] {
            let lhs = windowed_fourier(&combo, omega);
            let rhs = windowed_fourier(&f, omega) * alpha + windowed_fourier(&g, omega) * beta;
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()));
        }
    }

    #[test]
    fn negative_frequency_is_conjugate() {
        let f = SampledSignal::from_fn(1e-3, 257, |t| (37.0 * t).sin() + t).unwrap();
        assert_eq!(windowed_fourier(&f, -21.0), windowed_fourier(&f, 21.0).conj());
    }

    #[test]
    fn single_sine_peak_value() {
        let (a0, w) = (1.0, 2.0 * PI * 10.0);
        let s = sine(a0, w, 200, 40);
        let t = s.duration();
        let psd = psd_estimate(std::slice::from_ref(&s), &[w]).unwrap();
        let expected = a0 * a0 * t / 4.0;
        assert!((psd.grid()[0].1 - expected).abs() / expected < 0.02);
    }

    #[test]
    fn mismatched_realizations_are_rejected() {
        let a = SampledSignal::new(1.0, vec![0.0; 4]).unwrap();
        let b = SampledSignal::new(1.0, vec![0.0; 5]).unwrap();
        assert!(matches!(
            psd_estimate(&[a.clone(), b], &[1.0]),
            Err(SpectrumError::LengthMismatch { index: 1, .. })
        ));
        let c = SampledSignal::new(2.0, vec![0.0; 4]).unwrap();
        assert!(matches!(
            psd_estimate(&[a, c], &[1.0]),
            Err(SpectrumError::TimeStepMismatch { .. })
        ));
        assert_eq!(psd_estimate(&[], &[1.0]), Err(SpectrumError::NoRealizations));
    }

    #[test]
    fn estimate_is_even_on_symmetric_grid() {
        let s = SampledSignal::from_fn(1e-3, 400, |t| (71.0 * t).sin() + 0.2 * (13.0 * t).cos()).unwrap();
        let grid = linspace(-200.0, 200.0, 81);
        let psd = psd_estimate(&[s], &grid).unwrap();
        assert!(psd.evenness_violation() < 1e-12);
    }

    #[test]
    fn analytic_lines() {
        let psd = analytic_psd_sine(0.0, 3.0);
        assert_eq!(psd.delta_lines().len(), 2);
        assert!(psd.delta_lines().iter().all(|l| l.weight == 0.0));

        let a0 = 0.01 * (2.0 * PI * 1000.0_f64).powi(2);
        let psd = analytic_psd_sine(a0, 2.0 * PI * 1000.0);
        let w = psd.delta_lines()[0].weight;
        assert!((w - 2.448157478282251e11).abs() / w < 1e-12);
        assert!((w - 2.4481e11).abs() / w < 1e-4);
        // Parseval for a pure tone
        assert!((psd.mean_square() - a0 * a0 / 2.0).abs() / (a0 * a0) < 1e-15);
    }

    #[test]
    fn evaluation_rules() {
        let lines = analytic_psd_sine(2.0, 10.0);
        assert_eq!(lines.evaluate(10.0).unwrap(), SpectralValue::Line(2.0 * PI));
        assert_eq!(lines.evaluate(10.0 * (1.0 + 5e-10)).unwrap(), SpectralValue::Line(2.0 * PI));
        assert_eq!(lines.evaluate(10.1).unwrap(), SpectralValue::Density(0.0));

        let flat = SpectralDensity::flat(3.0, 100.0);
        assert_eq!(flat.evaluate(42.0).unwrap(), SpectralValue::Density(3.0));
        assert!(matches!(
            flat.evaluate(101.0),
            Err(SpectrumError::SpectralValueUnavailable(_))
        ));
        assert!(SpectralDensity::default().evaluate(0.0).is_err());

        let ramp = SpectralDensity::new(vec![(0.0, 0.0), (2.0, 4.0)], vec![]).unwrap();
        assert_eq!(ramp.evaluate(0.5).unwrap(), SpectralValue::Density(1.0));
        assert!(SpectralDensity::new(vec![(0.0, -1.0)], vec![]).is_err());
    }
}

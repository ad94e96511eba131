//! One-dimensional parameter sweeps over a dotted config path.

use std::str::FromStr;

use shaken_trap::numerics::{linspace, logspace};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            other => Err(format!("unknown scale '{other}' (expected linear or log)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub scale: Scale,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Parses `lo:hi:n`.
pub fn parse_range(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:n, got '{text}'"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad lower bound '{}'", parts[0]))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad upper bound '{}'", parts[1]))?;
    let n: usize = parts[2].trim().parse().map_err(|_| format!("bad point count '{}'", parts[2]))?;
    Ok((lo, hi, n))
}

impl SweepSpec {
    pub fn new(parameter: &str, scale: Scale, lo: f64, hi: f64, n: usize) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::config(format!("sweep over {parameter}: {why}"));
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(bad("need lo < hi"));
        }
        if n < 2 {
            return Err(bad("need at least 2 points"));
        }
        if scale == Scale::Log && !(lo > 0.0) {
            return Err(bad("log scale needs lo > 0"));
        }
        Ok(SweepSpec {
            parameter: parameter.to_string(),
            scale,
            lo,
            hi,
            n,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => linspace(self.lo, self.hi, self.n),
            Scale::Log => logspace(self.lo, self.hi, self.n),
        }
    }
}

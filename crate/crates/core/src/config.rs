//! Experiment configuration: the JSON document schema, defaults and
//! validation.
//!
//! Validation walks the whole document and reports every problem it finds
//! in one pass instead of stopping at the first.

use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::drive::{DriveSpec, NoiseKind, NoiseSpec};
use crate::units::{builtin_species, species_rb87, AtomSpecies, Frequency, MassConvention, TrapConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("`{0}` must be a positive frequency")]
    NonPositiveFrequency(String),
    #[error("`{0}` must be a positive mass")]
    NonPositiveMass(String),
    #[error("`{key}`: unknown mass convention {value:?} (expected per_atom or total_condensate)")]
    UnknownMassConvention { key: String, value: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("`{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

impl ConfigError {
    /// The dotted key the error refers to.
    pub fn key(&self) -> &str {
        match self {
            ConfigError::MissingField(k)
            | ConfigError::NonPositiveFrequency(k)
            | ConfigError::NonPositiveMass(k)
            | ConfigError::UnknownField(k) => k,
            ConfigError::UnknownMassConvention { key, .. } | ConfigError::InvalidValue { key, .. } => key,
        }
    }
}

/// Every problem found while validating one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "invalid configuration: {}", msgs.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: Option<String>,
}

/// Numerical settings for the condensate solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub grid_points: usize,
    /// Half-width of the periodic box; chosen from the cloud size when unset.
    pub domain_halfwidth: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    /// Imaginary-time convergence threshold on the relative energy change per step.
    pub imag_time_tol: f64,
    pub max_imag_steps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            grid_points: 1024,
            domain_halfwidth: None,
            dt: 1e-5,
            t_end: 1e-2,
            imag_time_tol: 1e-12,
            max_imag_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub species: AtomSpecies,
    pub trap: TrapConfig,
    pub drive: DriveSpec,
    /// Condensate atom number N₀.
    pub n_atoms: f64,
    /// Unset means each analysis applies its own default.
    pub mass_convention: Option<MassConvention>,
    pub solver: SolverParams,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Mass multiplying the drive potential, falling back to `default`.
    pub fn perturbation_mass(&self, default: MassConvention) -> f64 {
        self.mass_convention
            .unwrap_or(default)
            .resolve(self.species.atomic_mass, self.n_atoms)
    }

    /// Serializes back into the document schema accepted by [`validate_config`].
    pub fn to_document(&self) -> Value {
        let mut drive = json!({
            "amplitude_m": self.drive.amplitude,
            "frequency_hz": self.drive.frequency.hz(),
            "phase_rad": self.drive.phase,
        });
        if let Some(noise) = &self.drive.noise {
            let mut n = json!({
                "kind": noise.kind.as_str(),
                "level": noise.accel_psd_level,
                "seed": noise.seed,
            });
            if let Some((lo, hi)) = noise.band {
                n["band_hz"] = json!([lo.hz(), hi.hz()]);
            }
            drive["noise"] = n;
        }
        let mut solver = json!({
            "grid_points": self.solver.grid_points,
            "dt_s": self.solver.dt,
            "t_end_s": self.solver.t_end,
            "imag_time_tol": self.solver.imag_time_tol,
        });
        if let Some(h) = self.solver.domain_halfwidth {
            solver["domain_halfwidth_m"] = json!(h);
        }
        let mut output = json!({ "format": self.output.format.as_str() });
        if let Some(p) = &self.output.path {
            output["path"] = json!(p);
        }
        let mut doc = json!({
            "species": {
                "name": self.species.name,
                "atomic_mass_kg": self.species.atomic_mass,
                "scattering_length_m": self.species.scattering_length,
            },
            "trap": {
                "omega_x_hz": self.trap.x.hz(),
                "omega_y_hz": self.trap.y.hz(),
                "omega_z_hz": self.trap.z.hz(),
            },
            "drive": drive,
            "n_atoms": self.n_atoms,
            "solver": solver,
            "output": output,
        });
        if let Some(mc) = self.mass_convention {
            doc["mass_convention"] = json!(mc.as_str());
        }
        doc
    }
}

/// Walks a document, collecting errors instead of failing fast.
struct Reader<'a> {
    root: &'a Value,
    errors: Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn lookup(&self, path: &str) -> Option<&'a Value> {
        let mut node = self.root;
        for part in path.split('.') {
            node = node.as_object()?.get(part)?;
        }
        if node.is_null() {
            None
        } else {
            Some(node)
        }
    }

    fn has(&self, path: &str) -> bool {
        self.lookup(path).is_some()
    }

    fn invalid(&mut self, key: &str, reason: impl Into<String>) {
        self.errors.push(ConfigError::InvalidValue {
            key: key.to_string(),
            reason: reason.into(),
        });
    }

    fn number(&mut self, path: &str) -> Option<Option<f64>> {
        match self.lookup(path) {
            None => Some(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(Some(x)),
                _ => {
                    self.invalid(path, "expected a finite number");
                    None
                }
            },
        }
    }

    fn required_number(&mut self, path: &str) -> Option<f64> {
        match self.number(path) {
            Some(Some(x)) => Some(x),
            Some(None) => {
                self.errors.push(ConfigError::MissingField(path.to_string()));
                None
            }
            None => None,
        }
    }

    fn optional_number(&mut self, path: &str, default: f64) -> Option<f64> {
        self.number(path).map(|x| x.unwrap_or(default))
    }

    fn string(&mut self, path: &str) -> Option<Option<&'a str>> {
        match self.lookup(path) {
            None => Some(None),
            Some(Value::String(s)) => Some(Some(s.as_str())),
            Some(_) => {
                self.invalid(path, "expected a string");
                None
            }
        }
    }

    fn frequency(&mut self, path: &str) -> Option<Frequency> {
        let hz = self.required_number(path)?;
        if hz > 0.0 {
            Some(Frequency::from_hz(hz))
        } else {
            self.errors.push(ConfigError::NonPositiveFrequency(path.to_string()));
            None
        }
    }

    fn positive(&mut self, path: &str, default: f64) -> Option<f64> {
        let x = self.optional_number(path, default)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.invalid(path, "must be > 0");
            None
        }
    }

    fn unsigned(&mut self, path: &str, default: u64) -> Option<u64> {
        match self.lookup(path) {
            None => Some(default),
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => match v.as_f64() {
                    Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Some(x as u64),
                    _ => {
                        self.invalid(path, "expected a non-negative integer");
                        None
                    }
                },
            },
        }
    }

    fn reject_unknown(&mut self, path: &str, allowed: &[&str]) {
        let node = if path.is_empty() {
            Some(self.root)
        } else {
            self.lookup(path)
        };
        match node {
            Some(Value::Object(map)) => {
                for key in map.keys() {
                    if !allowed.contains(&key.as_str()) {
                        let full = if path.is_empty() {
                            key.clone()
                        } else {
                            format!("{path}.{key}")
                        };
                        self.errors.push(ConfigError::UnknownField(full));
                    }
                }
            }
            Some(_) => self.invalid(if path.is_empty() { "<root>" } else { path }, "expected an object"),
            None => {}
        }
    }
}

/// Validates a configuration document and applies defaults.
pub fn validate_config(raw: &Value) -> Result<ExperimentConfig, ConfigErrors> {
    let mut r = Reader {
        root: raw,
        errors: Vec::new(),
    };
    r.reject_unknown(
        "",
        &["species", "trap", "drive", "n_atoms", "mass_convention", "solver", "output"],
    );
    r.reject_unknown("species", &["name", "atomic_mass_kg", "scattering_length_m"]);
    r.reject_unknown("trap", &["omega_x_hz", "omega_y_hz", "omega_z_hz"]);
    r.reject_unknown("drive", &["amplitude_m", "frequency_hz", "phase_rad", "noise"]);
    r.reject_unknown("drive.noise", &["kind", "level", "seed", "band_hz"]);
    r.reject_unknown(
        "solver",
        &["grid_points", "domain_halfwidth_m", "dt_s", "t_end_s", "imag_time_tol"],
    );
    r.reject_unknown("output", &["format", "path"]);

    let species = read_species(&mut r);

    let fx = r.frequency("trap.omega_x_hz");
    let fy = r.frequency("trap.omega_y_hz");
    let fz = r.frequency("trap.omega_z_hz");

    let amplitude = r.required_number("drive.amplitude_m").and_then(|a| {
        if a >= 0.0 {
            Some(a)
        } else {
            r.invalid("drive.amplitude_m", "must be >= 0");
            None
        }
    });
    let drive_freq = r.frequency("drive.frequency_hz");
    let phase = r.optional_number("drive.phase_rad", 0.0);
    let noise = read_noise(&mut r);

    let n_atoms = r.required_number("n_atoms").and_then(|n| {
        if n >= 1.0 {
            Some(n)
        } else {
            r.invalid("n_atoms", "must be >= 1");
            None
        }
    });

    let mass_convention = match r.string("mass_convention") {
        Some(Some(s)) => match MassConvention::parse(s) {
            Some(mc) => Some(Some(mc)),
            None => {
                r.errors.push(ConfigError::UnknownMassConvention {
                    key: "mass_convention".into(),
                    value: s.to_string(),
                });
                None
            }
        },
        Some(None) => Some(None),
        None => None,
    };

    let solver = read_solver(&mut r);

    let format = match r.string("output.format") {
        Some(Some(s)) => OutputFormat::parse(s).or_else(|| {
            r.invalid("output.format", format!("unknown format {s:?} (expected csv or json)"));
            None
        }),
        Some(None) => Some(OutputFormat::Csv),
        None => None,
    };
    let path = r.string("output.path");

    if !r.errors.is_empty() {
        return Err(ConfigErrors(r.errors));
    }
    // every None above pushed an error, so these unwraps cannot fire
    Ok(ExperimentConfig {
        species: species.unwrap(),
        trap: TrapConfig {
            x: fx.unwrap(),
            y: fy.unwrap(),
            z: fz.unwrap(),
        },
        drive: DriveSpec {
            amplitude: amplitude.unwrap(),
            frequency: drive_freq.unwrap(),
            phase: phase.unwrap(),
            noise: noise.unwrap(),
        },
        n_atoms: n_atoms.unwrap(),
        mass_convention: mass_convention.unwrap(),
        solver: solver.unwrap(),
        output: OutputSpec {
            format: format.unwrap(),
            path: path.unwrap().map(str::to_string),
        },
    })
}

fn read_species(r: &mut Reader<'_>) -> Option<AtomSpecies> {
    if !r.has("species") {
        return Some(species_rb87());
    }
    let name = r.string("species.name")?.unwrap_or("Rb87").to_string();
    let base = builtin_species(&name);
    let mass = match &base {
        Some(b) => r.optional_number("species.atomic_mass_kg", b.atomic_mass),
        None => r.required_number("species.atomic_mass_kg"),
    };
    let a_s = match &base {
        Some(b) => r.optional_number("species.scattering_length_m", b.scattering_length),
        None => r.required_number("species.scattering_length_m"),
    };
    let mass = mass.and_then(|m| {
        if m > 0.0 {
            Some(m)
        } else {
            r.errors
                .push(ConfigError::NonPositiveMass("species.atomic_mass_kg".into()));
            None
        }
    });
    Some(AtomSpecies {
        name,
        atomic_mass: mass?,
        scattering_length: a_s?,
    })
}

fn read_noise(r: &mut Reader<'_>) -> Option<Option<NoiseSpec>> {
    if !r.has("drive.noise") {
        return Some(None);
    }
    let kind = match r.string("drive.noise.kind")? {
        None => {
            r.errors.push(ConfigError::MissingField("drive.noise.kind".into()));
            return None;
        }
        Some(s) => match NoiseKind::parse(s) {
            Some(k) => k,
            None => {
                r.invalid("drive.noise.kind", format!("unknown noise kind {s:?}"));
                return None;
            }
        },
    };
    let level = r.required_number("drive.noise.level").and_then(|l| {
        if l >= 0.0 {
            Some(l)
        } else {
            r.invalid("drive.noise.level", "must be >= 0");
            None
        }
    });
    let seed = r.unsigned("drive.noise.seed", 0);
    let band = match (kind, r.lookup("drive.noise.band_hz")) {
        (NoiseKind::White, None) => Some(None),
        (NoiseKind::White, Some(_)) => {
            r.invalid("drive.noise.band_hz", "only valid for band_limited noise");
            None
        }
        (NoiseKind::BandLimited, None) => {
            r.errors.push(ConfigError::MissingField("drive.noise.band_hz".into()));
            None
        }
        (NoiseKind::BandLimited, Some(v)) => {
            let pair = v
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)));
            match pair {
                Some((lo, hi)) if lo >= 0.0 && lo < hi => {
                    Some(Some((Frequency::from_hz(lo), Frequency::from_hz(hi))))
                }
                _ => {
                    r.invalid("drive.noise.band_hz", "expected [lo, hi] with 0 <= lo < hi");
                    None
                }
            }
        }
    };
    Some(Some(NoiseSpec {
        kind,
        accel_psd_level: level?,
        band: band?,
        seed: seed?,
    }))
}

fn read_solver(r: &mut Reader<'_>) -> Option<SolverParams> {
    let d = SolverParams::default();
    let grid_points = r.unsigned("solver.grid_points", d.grid_points as u64).and_then(|n| {
        if n >= 64 && n.is_power_of_two() {
            Some(n as usize)
        } else {
            r.invalid("solver.grid_points", "must be a power of two >= 64");
            None
        }
    });
    let halfwidth = if r.has("solver.domain_halfwidth_m") {
        r.positive("solver.domain_halfwidth_m", 0.0).map(Some)
    } else {
        Some(None)
    };
    let dt = r.positive("solver.dt_s", d.dt);
    let t_end = r.positive("solver.t_end_s", d.t_end);
    let tol = r.positive("solver.imag_time_tol", d.imag_time_tol);
    Some(SolverParams {
        grid_points: grid_points?,
        domain_halfwidth: halfwidth?,
        dt: dt?,
        t_end: t_end?,
        imag_time_tol: tol?,
        max_imag_steps: d.max_imag_steps,
    })
}

/// Sets a dotted key inside a document, creating intermediate objects.
pub fn set_path(doc: &mut Value, path: &str, value: Value) {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("object ensured above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return;
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
}

/// Reads a dotted key from a document.
pub fn get_path<'a>(doc: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(doc, |node, part| node.as_object()?.get(part))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn complete() -> Value {
        json!({
            "trap": {"omega_x_hz": 100.0, "omega_y_hz": 100.0, "omega_z_hz": 10.0},
            "drive": {"amplitude_m": 0.01, "frequency_hz": 1000.0},
            "n_atoms": 1000,
        })
    }

    #[test]
    fn complete_document_validates() {
        let cfg = validate_config(&complete()).unwrap();
        assert_eq!(cfg.drive.angular_frequency(), 2.0 * PI * 1000.0);
        assert_eq!(cfg.drive.amplitude, 0.01);
        assert_eq!(cfg.drive.phase, 0.0);
        assert_eq!(cfg.species, species_rb87());
        assert_eq!(cfg.mass_convention, None);
        assert_eq!(cfg.solver, SolverParams::default());
    }

    #[test]
    fn negative_frequency_is_named() {
        let mut doc = complete();
        doc["drive"]["frequency_hz"] = json!(-5);
        let errs = validate_config(&doc).unwrap_err();
        assert_eq!(
            errs.0,
            vec![ConfigError::NonPositiveFrequency("drive.frequency_hz".into())]
        );
    }

    #[test]
    fn empty_document_reports_every_missing_key() {
        let errs = validate_config(&json!({})).unwrap_err();
        let missing: Vec<&str> = errs
            .0
            .iter()
            .map(|e| match e {
                ConfigError::MissingField(k) => k.as_str(),
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(
            missing,
            vec![
                "trap.omega_x_hz",
                "trap.omega_y_hz",
                "trap.omega_z_hz",
                "drive.amplitude_m",
                "drive.frequency_hz",
                "n_atoms"
            ]
        );
    }

    #[test]
    fn bad_values_are_all_reported() {
        let doc = json!({
            "species": {"name": "Cs133", "atomic_mass_kg": -1.0},
            "trap": {"omega_x_hz": 0, "omega_y_hz": 1, "omega_z_hz": 1},
            "drive": {"amplitude_m": 0.01, "frequency_hz": 10, "shape": "square"},
            "n_atoms": 1000,
            "mass_convention": "per_molecule",
            "solver": {"grid_points": 100},
        });
        let errs = validate_config(&doc).unwrap_err().0;
        assert!(errs.contains(&ConfigError::NonPositiveMass("species.atomic_mass_kg".into())));
        assert!(errs.contains(&ConfigError::MissingField("species.scattering_length_m".into())));
        assert!(errs.contains(&ConfigError::NonPositiveFrequency("trap.omega_x_hz".into())));
        assert!(errs.contains(&ConfigError::UnknownField("drive.shape".into())));
        assert!(errs.iter().any(|e| matches!(e, ConfigError::UnknownMassConvention { .. })));
        assert!(errs.iter().any(|e| e.key() == "solver.grid_points"));
    }

    #[test]
    fn scattering_length_override() {
        let mut doc = complete();
        doc["species"] = json!({"name": "Rb87", "scattering_length_m": 5e-9});
        let cfg = validate_config(&doc).unwrap();
        assert_eq!(cfg.species.scattering_length, 5e-9);
        assert_eq!(cfg.species.atomic_mass, 1.44316e-25);
    }

    #[test]
    fn noise_parsing() {
        let mut doc = complete();
        doc["drive"]["noise"] = json!({"kind": "band_limited", "level": 2.0, "seed": 9, "band_hz": [10, 20]});
        let cfg = validate_config(&doc).unwrap();
        let n = cfg.drive.noise.unwrap();
        assert_eq!(n.kind, NoiseKind::BandLimited);
        assert_eq!(n.seed, 9);
        doc["drive"]["noise"] = json!({"kind": "band_limited", "level": 2.0});
        let errs = validate_config(&doc).unwrap_err().0;
        assert_eq!(errs, vec![ConfigError::MissingField("drive.noise.band_hz".into())]);
    }

    #[test]
    fn perturbation_mass_defaults() {
        let cfg = validate_config(&complete()).unwrap();
        let m = cfg.species.atomic_mass;
        assert_eq!(cfg.perturbation_mass(MassConvention::PerAtom), m);
        assert_eq!(cfg.perturbation_mass(MassConvention::TotalCondensate), 1000.0 * m);
        let mut doc = complete();
        doc["mass_convention"] = json!("per_atom");
        let cfg = validate_config(&doc).unwrap();
        assert_eq!(cfg.perturbation_mass(MassConvention::TotalCondensate), m);
    }

    #[test]
    fn path_helpers() {
        let mut doc = json!({});
        set_path(&mut doc, "drive.noise.seed", json!(4));
        assert_eq!(get_path(&doc, "drive.noise.seed"), Some(&json!(4)));
        assert_eq!(get_path(&doc, "drive.phase_rad"), None);
    }

    fn arbitrary_document() -> impl Strategy<Value = Value> {
        (
            1e-3f64..1e4,
            1e-3f64..1e4,
            1e-3f64..1e4,
            0.0f64..0.1,
            1e-1f64..1e5,
            -3.0f64..3.0,
            1.0f64..1e7,
            proptest::option::of(prop_oneof![Just("per_atom"), Just("total_condensate")]),
            proptest::option::of((0.0f64..10.0, any::<u32>())),
            proptest::option::of(1e-9f64..1e-3),
        )
            .prop_map(|(fx, fy, fz, a, f, phase, n, mc, noise, dt)| {
                let mut doc = json!({
                    "trap": {"omega_x_hz": fx, "omega_y_hz": fy, "omega_z_hz": fz},
                    "drive": {"amplitude_m": a, "frequency_hz": f, "phase_rad": phase},
                    "n_atoms": n,
                });
                if let Some(mc) = mc {
                    doc["mass_convention"] = json!(mc);
                }
                if let Some((level, seed)) = noise {
                    doc["drive"]["noise"] = json!({"kind": "white", "level": level, "seed": seed});
                }
                if let Some(dt) = dt {
                    doc["solver"] = json!({"dt_s": dt});
                }
                doc
            })
    }

    proptest! {
        #[test]
        fn serialization_round_trips(doc in arbitrary_document()) {
            let cfg = validate_config(&doc).unwrap();
            let again = validate_config(&cfg.to_document()).unwrap();
            prop_assert_eq!(&cfg, &again);
            prop_assert_eq!(cfg.to_document(), again.to_document());
        }
    }
}

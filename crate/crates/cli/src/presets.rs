//! Experiment presets shipped inside the binary.

use serde_json::Value;

const SOURCES: [(&str, &str); 5] = [
    ("fig2-left", include_str!("../presets/fig2-left.json")),
    ("fig2-right", include_str!("../presets/fig2-right.json")),
    ("fig2-calibrated", include_str!("../presets/fig2-calibrated.json")),
    ("fig3-default", include_str!("../presets/fig3-default.json")),
    ("lambshift-sec2", include_str!("../presets/lambshift-sec2.json")),
];

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub version: u64,
    pub description: String,
    /// Configuration document in the usual schema.
    pub config: Value,
    /// Whole preset document, for subcommand-specific defaults.
    pub document: Value,
}

impl Preset {
    /// Subcommand-specific default, e.g. `section("tf_ratio")`.
    pub fn section(&self, name: &str) -> Option<&Value> {
        self.document.get(name)
    }
}

pub fn names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

pub fn preset(name: &str) -> Option<Preset> {
    let (_, text) = SOURCES.iter().find(|(n, _)| *n == name)?;
    let document: Value = serde_json::from_str(text).expect("embedded preset is valid JSON");
    Some(Preset {
        name: name.to_string(),
        version: document["version"].as_u64().unwrap_or(1),
        description: document["description"].as_str().unwrap_or_default().to_string(),
        config: document["config"].clone(),
        document,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use shaken_trap::config::validate_config;

    #[test]
    fn every_preset_validates() {
        for name in names() {
            let p = preset(name).unwrap();
            assert_eq!(p.name, name);
            assert!(!p.description.is_empty());
            validate_config(&p.config).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("fig4").is_none());
    }

    #[test]
    fn fig2_pair_differs_only_in_atom_number() {
        let mut left = preset("fig2-left").unwrap().config;
        let right = preset("fig2-right").unwrap().config;
        assert_eq!(left["n_atoms"], 1000.0);
        assert_eq!(right["n_atoms"], 1e6);
        left["n_atoms"] = right["n_atoms"].clone();
        assert_eq!(left, right);
    }
}

//! Built-in presets and JSON model files.
//!
//! A model file is a flat JSON object holding the network fields
//! (`epsilon`, `J`, `sink_site`, `sink_rate_per_ps`, `initial_site`, sites
//! 1-based), a `bath` object tagged by `type`, `temperature_K` and `t_eval_ps`.
//! `name` and `description` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::ExcitonNetwork;
use crate::spectral::{LorentzianBath, SpectralDensity};
use crate::{Error, Result};

pub const THREE_SITE: &str = "three-site";

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPreset {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub network: ExcitonNetwork,
    pub bath: SpectralDensity,
    pub temperature_K: f64,
    pub t_eval_ps: f64,
}

fn default_name() -> String {
    "custom".into()
}

impl ModelPreset {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.bath.validate().map_err(|e| prefix("bath", e))?;
        if !(self.temperature_K >= 0.0) || !self.temperature_K.is_finite() {
            return Err(Error::model("temperature_K", format!("must be a finite value ≥ 0, got {}", self.temperature_K)));
        }
        if !(self.t_eval_ps > 0.0) || !self.t_eval_ps.is_finite() {
            return Err(Error::model("t_eval_ps", format!("must be > 0, got {}", self.t_eval_ps)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialisation cannot fail")
    }

    /// Parses and validates a model from JSON text; `origin` labels errors.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let mut m: ModelPreset =
            serde_json::from_str(text).map_err(|source| Error::Json { path: origin.to_string(), source })?;
        m.validate()?;
        m.network.symmetrize();
        Ok(m)
    }
}

fn prefix(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } | Error::Model { path: name, reason } => {
            Error::model(format!("{field}.{name}"), reason)
        }
        other => other,
    }
}

/// Three sites: ε = (300, 300, 0), J12 = 100, J23 = 30, sink on site 3 at
/// 1 ps⁻¹, site 1 initially excited, Lorentzian bath (ω_H 200, Γ 60, λ 35), 4 K, 2 ps.
pub fn three_site_preset() -> ModelPreset {
    let network = ExcitonNetwork::new(
        vec![300.0, 300.0, 0.0],
        vec![vec![0.0, 100.0, 0.0], vec![100.0, 0.0, 30.0], vec![0.0, 30.0, 0.0]],
        2,
        1.0,
        0,
    )
    .expect("three-site preset is valid");
    let bath = LorentzianBath::new(200.0, 60.0, 35.0).expect("preset bath is valid");
    ModelPreset {
        name: THREE_SITE.into(),
        description: Some("three-site ladder feeding a sink from site 3".into()),
        network,
        bath: bath.into(),
        temperature_K: 4.0,
        t_eval_ps: 2.0,
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &[THREE_SITE]
}

pub fn preset(name: &str) -> Result<ModelPreset> {
    match name {
        THREE_SITE => Ok(three_site_preset()),
        other => Err(Error::model(
            "preset",
            format!("unknown preset `{other}` (available: {})", preset_names().join(", ")),
        )),
    }
}

pub fn load_network_file(path: impl AsRef<Path>) -> Result<ModelPreset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: shown.clone(), source })?;
    ModelPreset::from_json(&text, &shown)
}

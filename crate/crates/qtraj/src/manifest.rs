//! Run manifests: enough to replay a run exactly.

use std::path::Path;

use qtraj_core::models::ModelSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Units note attached to every output.
pub const UNITS: &str = "times in 1/Gamma; rates, frequencies and detunings in Gamma (hbar = 1)";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub config: RunConfig,
    pub derived: Map<String, Value>,
    pub units: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            derived: Map::new(),
            units: UNITS.to_string(),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
            failures: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        self.derived.insert(key.to_string(), json!(value));
    }

    /// Records the model-level derived quantities (λ, α, β, Γ_s, Γ_a).
    pub fn derive_model(&mut self, m: &ModelSpec) {
        self.derive("model_kind", m.kind.as_str());
        self.derive("basis", &m.basis);
        if m.kind.is_two_atom() {
            let (gs, ga) = m.params.channel_rates();
            self.derive("gamma_s", gs);
            self.derive("gamma_a", ga);
            self.derive("delta_total", m.params.delta_total);
        }
        if let Some(k) = m.eigen_coeffs {
            self.derive("lambda", k.lambda);
            self.derive("alpha", k.alpha);
            self.derive("beta", k.beta);
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        crate::io::write_json(&dir.join(MANIFEST_FILE), self)
    }
}

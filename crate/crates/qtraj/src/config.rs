//! Model definition files and run configuration.
//!
//! A model file is a flat JSON object:
//!
//! ```json
//! {
//!   "model": "two_atom_eigen",
//!   "gamma": 1.0, "omega_rabi": 5.0, "delta_total": "antisymmetric",
//!   "delta_diff": 2.0, "v": 10.0, "gamma12": 1.0
//! }
//! ```
//!
//! `model` is one of `relaxing`, `driven`, `two_atom_product`,
//! `two_atom_eigen`. `delta_total` is a number or `"antisymmetric"` /
//! `"symmetric"` for `Δ = ∓λ`. `v` and `gamma12` may be replaced by a
//! `geometry` block `{k0r12, mu1hat, mu2hat, r12hat}`; explicit values win.

use std::path::{Path, PathBuf};

use qtraj_core::linalg::CVector;
use qtraj_core::C64;
use qtraj_core::models::{AtomParams, DipoleGeometry, ModelKind, ModelSpec};
use qtraj_core::ode::Controls;
use qtraj_core::trajectory::Solver;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Total detuning: a value or a named resonance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Detuning {
    Value(f64),
    Named(String),
}

/// On-disk model definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_rabi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_total: Option<Detuning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma12: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_atom: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<DipoleGeometry>,
}

impl ModelFile {
    pub fn kind(&self) -> CliResult<ModelKind> {
        ModelKind::parse(&self.model).ok_or_else(|| CliError::config(format!("unknown model '{}'", self.model)))
    }

    /// Resolved parameters; geometry only fills `v`/`gamma12` when absent.
    pub fn params(&self) -> CliResult<AtomParams> {
        let d = AtomParams::default();
        let mut p = AtomParams {
            gamma: self.gamma.unwrap_or(d.gamma),
            omega_rabi: self.omega_rabi.unwrap_or(0.0),
            delta_total: 0.0,
            delta_diff: self.delta_diff.unwrap_or(0.0),
            v: self.v.unwrap_or(0.0),
            gamma12: self.gamma12.unwrap_or(0.0),
            omega_atom: self.omega_atom.unwrap_or(0.0),
        };
        if let Some(g) = &self.geometry {
            let (v, g12) = qtraj_core::models::compute_dipole_couplings(g, p.gamma)?;
            if self.v.is_none() {
                p.v = v;
            }
            if self.gamma12.is_none() {
                p.gamma12 = g12;
            }
        }
        p.delta_total = match &self.delta_total {
            None => 0.0,
            Some(Detuning::Value(x)) => *x,
            Some(Detuning::Named(n)) => {
                let lambda = (p.delta_diff * p.delta_diff / 4.0 + p.v * p.v).sqrt();
                match n.as_str() {
                    "antisymmetric" => -lambda,
                    "symmetric" => lambda,
                    other => return Err(CliError::config(format!("unknown delta_total '{other}'"))),
                }
            }
        };
        Ok(p)
    }

    pub fn build(&self) -> CliResult<ModelSpec> {
        Ok(ModelSpec::build(self.kind()?, self.params()?)?)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let num = || value.parse::<f64>().map_err(|_| CliError::config(format!("'{key}' needs a number, got '{value}'")));
        match key {
            "model" => self.model = value.to_string(),
            "gamma" => self.gamma = Some(num()?),
            "omega_rabi" => self.omega_rabi = Some(num()?),
            "delta_total" => {
                self.delta_total = Some(match value.parse::<f64>() {
                    Ok(x) => Detuning::Value(x),
                    Err(_) => Detuning::Named(value.to_string()),
                })
            }
            "delta_diff" => self.delta_diff = Some(num()?),
            "v" => self.v = Some(num()?),
            "gamma12" => self.gamma12 = Some(num()?),
            "omega_atom" => self.omega_atom = Some(num()?),
            _ => return Err(CliError::config(format!("unknown model parameter '{key}'"))),
        }
        Ok(())
    }
}

/// Inline model or a path to a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Inline(ModelFile),
    Path(PathBuf),
}

/// Initial state: a basis label or amplitudes (real, or `[re, im]` pairs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Label(String),
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

impl InitialState {
    /// Normalised state vector in the model basis.
    pub fn resolve(&self, m: &ModelSpec) -> CliResult<CVector> {
        let v = match self {
            InitialState::Label(l) => {
                let k = m
                    .basis
                    .iter()
                    .position(|b| b == l)
                    .ok_or_else(|| CliError::config(format!("'{l}' is not a basis label of {} ({:?})", m.kind, m.basis)))?;
                CVector::basis(m.dim(), k)
            }
            InitialState::Real(xs) => CVector::from_real(xs),
            InitialState::Complex(xs) => CVector(xs.iter().map(|p| C64::new(p[0], p[1])).collect()),
        };
        if v.dim() != m.dim() {
            return Err(CliError::config(format!("initial state has {} amplitudes, model has {}", v.dim(), m.dim())));
        }
        v.normalized().ok_or_else(|| CliError::config("initial state is zero"))
    }

    /// Excited state for a freely relaxing atom, ground state otherwise.
    pub fn default_for(kind: ModelKind) -> Self {
        InitialState::Label(
            match kind {
                ModelKind::Relaxing => "e",
                ModelKind::TwoAtomProduct => "00",
                _ => "g",
            }
            .into(),
        )
    }
}

/// Solver selection as written in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `molmer` or `norm_threshold`.
    pub kind: Option<String>,
    pub dt: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
}

impl SolverConfig {
    pub fn resolve(&self, default_kind: &str) -> CliResult<Solver> {
        let kind = self.kind.as_deref().unwrap_or(default_kind);
        match kind {
            "molmer" => Ok(Solver::Molmer { dt: self.dt.unwrap_or(1e-3) }),
            "norm_threshold" => {
                let d = Controls::default();
                let ctl = Controls {
                    rtol: self.rtol.unwrap_or(d.rtol),
                    atol: self.atol.unwrap_or(d.atol),
                    max_step: self.max_step.unwrap_or(d.max_step),
                };
                Ok(Solver::NormThreshold(ctl))
            }
            other => Err(CliError::config(format!("unknown solver '{other}' (molmer | norm_threshold)"))),
        }
    }

    pub fn from_solver(s: &Solver) -> Self {
        match *s {
            Solver::Molmer { dt } => SolverConfig { kind: Some("molmer".into()), dt: Some(dt), ..Default::default() },
            Solver::NormThreshold(c) => SolverConfig {
                kind: Some("norm_threshold".into()),
                dt: None,
                rtol: Some(c.rtol),
                atol: Some(c.atol),
                max_step: c.max_step.is_finite().then_some(c.max_step),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct G2Config {
    /// Detection window; defaults to 0.1 × mean photon spacing.
    pub dtd: Option<f64>,
    pub tau_max: Option<f64>,
    /// Newline-delimited timestamps; when absent the model is simulated.
    pub stream: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub delta_step: Option<f64>,
    /// `eigen` or `product`.
    pub basis: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub n_v: Option<usize>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub n_delta: Option<usize>,
    /// Logarithmic axis spacing.
    pub log_axes: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DarkConfig {
    pub t_apex_factor: Option<f64>,
    /// Simulate a photon stream of length `t_final` and classify it.
    pub simulate: Option<bool>,
}

/// Everything a run needs; every field may be overridden from the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSource>,
    pub solver: SolverConfig,
    pub t_final: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub initial_state: Option<InitialState>,
    /// Number of sample intervals on `[0, t_final]`.
    pub samples: Option<usize>,
    pub threads: Option<usize>,
    pub g2: G2Config,
    pub scan: ScanConfig,
    pub heatmap: HeatmapConfig,
    pub darkstats: DarkConfig,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Loads a config file, or the `config` field of a run manifest.
    pub fn load(path: &Path) -> CliResult<Self> {
        let value: serde_json::Value = read_json(path)?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("toolkit_version").is_some() => cfg.clone(),
            _ => value,
        };
        let mut cfg: RunConfig =
            serde_json::from_value(inner).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if let Some(ModelSource::Path(p)) = &cfg.model {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.model = Some(ModelSource::Path(dir.join(p)));
                }
            }
        }
        Ok(cfg)
    }

    /// The model file, reading it from disk if referenced by path.
    pub fn model_file(&self) -> CliResult<ModelFile> {
        match &self.model {
            None => Err(CliError::config("no model given (use --model or a config with a model)")),
            Some(ModelSource::Inline(m)) => Ok(m.clone()),
            Some(ModelSource::Path(p)) => read_json(p),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QpdError, Result};
use crate::pauli::PauliOperator;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ErrorScaling,
    SwapSweep,
    CoeffScan,
    Verify,
}

/// How a transfer is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The noisy channel used as is.
    Direct,
    /// Decomposition without twirling the noisy channel.
    NoTwirl,
    PauliMixing,
    TwoDesign,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::NoTwirl => "no_twirl",
            Method::PauliMixing => "pauli_mixing",
            Method::TwoDesign => "two_design",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the plan's fidelity comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    /// `chi_00` of the generated channel.
    #[default]
    Exact,
    /// Sampled calibration with the two-design ensemble.
    Calibrated,
}

fn default_n() -> usize {
    1
}
fn default_num_states() -> usize {
    100
}
fn default_observables() -> Vec<String> {
    vec!["X".into(), "Y".into(), "Z".into()]
}
fn default_methods() -> Vec<Method> {
    vec![Method::Direct, Method::NoTwirl, Method::PauliMixing, Method::TwoDesign]
}
fn default_calibration_shots() -> u64 {
    100_000
}
fn default_per_swap_noise() -> f64 {
    0.02
}
fn default_max_swaps() -> usize {
    60
}
fn default_coeff_points() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub fidelities: Vec<f64>,
    #[serde(default)]
    pub thetas: Vec<f64>,
    #[serde(default = "default_num_states")]
    pub num_states: usize,
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    /// Shot counts `N`, strictly increasing.
    #[serde(default)]
    pub shots: Vec<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_calibration_shots")]
    pub calibration_shots: u64,
    #[serde(default)]
    pub coefficient_source: CoefficientSource,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_per_swap_noise")]
    pub per_swap_noise: f64,
    #[serde(default = "default_max_swaps")]
    pub max_swaps: usize,
    #[serde(default = "default_coeff_points")]
    pub coeff_points: usize,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| QpdError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QpdError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(QpdError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.kind {
            ExperimentKind::ErrorScaling | ExperimentKind::CoeffScan => self.validate_cells(true)?,
            ExperimentKind::SwapSweep => {
                if !(0.0..=1.0).contains(&self.per_swap_noise) {
                    return Err(QpdError::Config(format!(
                        "per_swap_noise {} outside [0, 1]",
                        self.per_swap_noise
                    )));
                }
            }
            ExperimentKind::Verify => {}
        }
        if self.calibration_shots == 0 {
            return Err(QpdError::Config("calibration_shots must be positive".into()));
        }
        if self.kind == ExperimentKind::CoeffScan && self.coeff_points < 2 {
            return Err(QpdError::Config("coeff_points must be at least 2".into()));
        }
        Ok(())
    }

    /// Checks the fields that describe a grid of noisy-channel cells.
    pub fn validate_cells(&self, needs_shots: bool) -> Result<()> {
        if self.n != 1 {
            return Err(QpdError::Config(format!(
                "the noise model is single-qubit; n = {} is not supported",
                self.n
            )));
        }
        non_empty("fidelities", self.fidelities.len())?;
        non_empty("thetas", self.thetas.len())?;
        if self.fidelities.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(QpdError::Config("fidelities must lie in [0, 1]".into()));
        }
        if self.thetas.iter().any(|t| !t.is_finite()) {
            return Err(QpdError::Config("thetas must be finite".into()));
        }
        if needs_shots {
            non_empty("observables", self.observables.len())?;
            non_empty("shots", self.shots.len())?;
            non_empty("methods", self.methods.len())?;
            if self.num_states == 0 {
                return Err(QpdError::Config("num_states must be positive".into()));
            }
            if self.shots[0] == 0 || self.shots.windows(2).any(|w| w[0] >= w[1]) {
                return Err(QpdError::Config(
                    "shots must be positive and strictly increasing".into(),
                ));
            }
            self.parsed_observables()?;
        }
        Ok(())
    }

    pub fn parsed_observables(&self) -> Result<Vec<PauliOperator>> {
        self.observables
            .iter()
            .map(|label| {
                let p = PauliOperator::from_label(label)
                    .map_err(|e| QpdError::Config(format!("observable {label:?}: {e}")))?;
                if p.num_qubits() != self.n || !p.is_hermitian() || p.is_identity() {
                    return Err(QpdError::Config(format!(
                        "observable {label:?} must be a non-identity Hermitian Pauli on {} qubit(s)",
                        self.n
                    )));
                }
                Ok(p)
            })
            .collect()
    }

    /// `coeff_points` values evenly spaced on `[1, 2^n]`.
    pub fn coefficient_grid(&self) -> Vec<f64> {
        let hi = (1u64 << self.n) as f64;
        let m = self.coeff_points.max(2);
        (0..m).map(|i| 1.0 + (hi - 1.0) * i as f64 / (m - 1) as f64).collect()
    }
}

fn non_empty(field: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(QpdError::Config(format!("{field} must not be empty")));
    }
    Ok(())
}

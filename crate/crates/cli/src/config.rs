//! Run configuration: one JSON file, strict about unknown keys, every
//! default explicit. Command-line flags override file values.

use resjump::{
    benchmark_model, poly_coefficient, zero_perturbation, CoefficientFn, Domain, FrequencyProfile,
    HarmonicCoefficient, HarmonicModel, TauProfile,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A configuration problem: bad file, bad schema, bad values. Reported with
/// exit code 2, as opposed to runtime failures (exit code 1).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Slow-time integration window (τ₋, τ₊).
    pub window: (f64, f64),
    pub i_minus: f64,
    /// Used by predict and simulate.
    pub eps: f64,
    /// Used by sweep; `null` means the full reference ladder.
    pub eps_list: Option<Vec<f64>>,
    pub phi_minus: f64,
    /// Sweep phase-grid size.
    pub n_phi: usize,
    pub steps_per_period: f64,
    /// Overrides the automatic step policy when set.
    pub fixed_step: Option<f64>,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    /// Extra equally spaced trajectory samples; 0 keeps only entry,
    /// crossing, and exit.
    pub simulate_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSpec::Builtin("benchmark".into()),
            window: (0.0, 2.0),
            i_minus: 1.0,
            eps: 0.01,
            eps_list: None,
            phi_minus: 0.0,
            n_phi: 48,
            steps_per_period: 400.0,
            fixed_step: None,
            threads: None,
            out_dir: PathBuf::from("out"),
            simulate_samples: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn build_model(&self) -> Result<HarmonicModel, ConfigError> {
        self.model.build()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ModelSpec {
    /// "benchmark" or "zero-perturbation".
    Builtin(String),
    Custom(CustomModelSpec),
}

impl ModelSpec {
    pub fn build(&self) -> Result<HarmonicModel, ConfigError> {
        match self {
            ModelSpec::Builtin(name) => match name.as_str() {
                "benchmark" => Ok(benchmark_model()),
                "zero-perturbation" => Ok(zero_perturbation()),
                other => Err(ConfigError(format!(
                    "unknown builtin model {other:?}; expected \"benchmark\" or \"zero-perturbation\""
                ))),
            },
            ModelSpec::Custom(spec) => spec.build(),
        }
    }
}

/// Inline model: polynomial-in-I Fourier coefficients times a named slow
/// profile, plus a catalogued frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModelSpec {
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub mean: Option<CoeffSpec>,
    pub harmonics: Vec<HarmonicSpec>,
    pub domain: DomainSpec,
}

impl CustomModelSpec {
    fn build(&self) -> Result<HarmonicModel, ConfigError> {
        let harmonics = self
            .harmonics
            .iter()
            .map(|h| {
                HarmonicCoefficient::new(
                    h.index,
                    h.a.as_ref().map_or_else(CoefficientFn::zero, CoeffSpec::build),
                    h.b.as_ref().map_or_else(CoefficientFn::zero, CoeffSpec::build),
                )
            })
            .collect();
        let domain = Domain::new(
            self.domain.i_min,
            self.domain.i_max,
            self.domain.tau_min,
            self.domain.tau_max,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        HarmonicModel::new(
            self.frequency.build(),
            self.mean.as_ref().map_or_else(CoefficientFn::zero, CoeffSpec::build),
            harmonics,
            domain,
        )
        .map_err(|e| ConfigError(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum FrequencySpec {
    /// ω(τ) = e^{τ−1} − 1.
    ExpShift,
    /// ω(τ) = τ − center.
    Linear { center: f64 },
}

impl FrequencySpec {
    fn build(&self) -> FrequencyProfile {
        match self {
            FrequencySpec::ExpShift => FrequencyProfile::exp_shift(),
            FrequencySpec::Linear { center } => FrequencyProfile::linear(*center),
        }
    }
}

/// c(I, τ) = (Σ_j coeffs[j]·I^j) · profile(τ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub coeffs: Vec<f64>,
    pub profile: ProfileSpec,
}

impl CoeffSpec {
    fn build(&self) -> CoefficientFn {
        poly_coefficient(&self.coeffs, self.profile.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant,
    ExpShift,
    InvSqrtExp,
}

impl From<ProfileSpec> for TauProfile {
    fn from(p: ProfileSpec) -> TauProfile {
        match p {
            ProfileSpec::Constant => TauProfile::Constant,
            ProfileSpec::ExpShift => TauProfile::ExpShift,
            ProfileSpec::InvSqrtExp => TauProfile::InvSqrtExp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    pub index: u32,
    #[serde(default)]
    pub a: Option<CoeffSpec>,
    #[serde(default)]
    pub b: Option<CoeffSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub i_min: f64,
    pub i_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

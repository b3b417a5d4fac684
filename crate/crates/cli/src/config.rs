// Copyright 2026 The twotier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! JSON experiment configuration.
//!
//! The file is parsed into plain serde structs first, then validated into
//! domain objects. Syntax and type errors carry serde's line/column; semantic
//! errors carry the dotted path of the offending field.

use std::fmt;

use serde::{Deserialize, Serialize};
use twotier_core::model::{
    validate_union, BiasKind, BiasMeasure, Coupling, HalfAtom, MeasureSpec, UnionSpec,
    ValidatedUnion,
};

#[derive(Debug)]
pub enum ConfigError {
    Parse(serde_json::Error),
    Field { path: String, message: String },
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(e) => write!(f, "config parse error: {e}"),
            Self::Field { path, message } => write!(f, "config error at `{path}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub union: UnionSpec,
    pub measure: MeasureConfig,
    #[serde(default = "default_weights")]
    pub weights: WeightsField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_weight: Option<TotalWeightConfig>,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

fn default_weights() -> WeightsField {
    WeightsField::One(SchemeConfig::Named(NamedScheme::Optimal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    Independent,
    CollectiveBias {
        bias: BiasConfig,
        coupling: Coupling,
    },
    CurieWeiss {
        beta: f64,
    },
    Unanimity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BiasConfig {
    PointMass {
        location: f64,
    },
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
    },
    SymmetricAtoms {
        atoms: Vec<AtomConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedScheme {
    Optimal,
    Sqrt,
    Proportional,
    Equal,
    Asymptotic,
}

impl NamedScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Sqrt => "sqrt",
            Self::Proportional => "proportional",
            Self::Equal => "equal",
            Self::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeConfig {
    Named(NamedScheme),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsField {
    One(SchemeConfig),
    Many(Vec<SchemeConfig>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TotalWeightConfig {
    Value(f64),
    Named(TotalWeightName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalWeightName {
    /// `G = μ₁ N`, the optimal total under a global bias.
    Mu1N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Weights,
    Deficit,
    Validate,
    Sweep,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Weights => "weights",
            Self::Deficit => "deficit",
            Self::Validate => "validate",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub per_voter: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Grid values are total populations; states keep their proportions.
    Population,
    /// Grid values are Curie-Weiss inverse temperatures.
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

/// Council-weight choice after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    Named(NamedScheme),
    Explicit(Vec<f64>),
}

impl WeightScheme {
    pub fn label(&self) -> String {
        match self {
            Self::Named(n) => n.as_str().to_string(),
            Self::Explicit(_) => "explicit".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TotalWeight {
    Value(f64),
    Mu1N,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub union: ValidatedUnion,
    pub measure: MeasureSpec,
    pub schemes: Vec<WeightScheme>,
    pub total_weight: Option<TotalWeight>,
    pub kind: Option<ExperimentKind>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub per_voter: bool,
    pub sweep: Option<Sweep>,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    serde_json::from_str(text).map_err(ConfigError::Parse)
}

pub fn load(text: &str) -> Result<Experiment, ConfigError> {
    parse(text)?.validate()
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let union = validate_union(self.union.clone()).map_err(|e| {
            let idx = match &e {
                twotier_core::Error::EvenPopulation { state, .. }
                | twotier_core::Error::PopulationOutOfRange { state, .. } => {
                    self.union.states.iter().position(|s| &s.name == state)
                }
                _ => None,
            };
            match idx {
                Some(i) => {
                    ConfigError::field(format!("union.states[{i}].population"), e.to_string())
                }
                None => ConfigError::field("union.states", e.to_string()),
            }
        })?;
        let measure = self.measure.to_spec()?;

        let schemes: Vec<SchemeConfig> = match &self.weights {
            WeightsField::One(s) => vec![s.clone()],
            WeightsField::Many(v) => v.clone(),
        };
        if schemes.is_empty() {
            return Err(ConfigError::field(
                "weights",
                "at least one weight scheme is required",
            ));
        }
        let schemes = schemes
            .into_iter()
            .enumerate()
            .map(|(i, s)| match s {
                SchemeConfig::Named(n) => Ok(WeightScheme::Named(n)),
                SchemeConfig::Explicit(w) => {
                    let path = format!("weights[{i}]");
                    if w.len() != union.len() {
                        return Err(ConfigError::field(
                            path,
                            format!("expected {} weights, got {}", union.len(), w.len()),
                        ));
                    }
                    if let Some(j) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
                        return Err(ConfigError::field(
                            format!("{path}[{j}]"),
                            "weights must be finite and nonnegative",
                        ));
                    }
                    Ok(WeightScheme::Explicit(w))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let total_weight = match self.total_weight {
            None => None,
            Some(TotalWeightConfig::Value(v)) if v.is_finite() && v > 0.0 => {
                Some(TotalWeight::Value(v))
            }
            Some(TotalWeightConfig::Value(_)) => {
                return Err(ConfigError::field(
                    "total_weight",
                    "must be a positive number",
                ))
            }
            Some(TotalWeightConfig::Named(TotalWeightName::Mu1N)) => {
                if measure.as_bias_measure().is_none() {
                    return Err(ConfigError::field(
                        "total_weight",
                        "mu1_n needs a collective-bias measure",
                    ));
                }
                Some(TotalWeight::Mu1N)
            }
        };

        let exp = &self.experiment;
        if exp.n_samples == Some(0) {
            return Err(ConfigError::field(
                "experiment.n_samples",
                "must be positive",
            ));
        }
        let sweep = match &exp.sweep {
            None => None,
            Some(s) => {
                if s.grid.len() < 3 {
                    return Err(ConfigError::field(
                        "experiment.sweep.grid",
                        "a sweep needs at least 3 grid points",
                    ));
                }
                for (i, &v) in s.grid.iter().enumerate() {
                    let ok = match s.axis {
                        SweepAxis::Population => v.is_finite() && v >= 1.0,
                        SweepAxis::Beta => v.is_finite() && v >= 0.0,
                    };
                    if !ok {
                        return Err(ConfigError::field(
                            format!("experiment.sweep.grid[{i}]"),
                            format!("invalid grid value {v}"),
                        ));
                    }
                }
                if s.axis == SweepAxis::Beta && !matches!(measure, MeasureSpec::CurieWeiss { .. }) {
                    return Err(ConfigError::field(
                        "experiment.sweep.axis",
                        "a beta sweep needs a curie_weiss measure",
                    ));
                }
                Some(Sweep {
                    axis: s.axis,
                    grid: s.grid.clone(),
                })
            }
        };

        Ok(Experiment {
            union,
            measure,
            schemes,
            total_weight,
            kind: exp.kind,
            n_samples: exp.n_samples,
            seed: exp.seed,
            per_voter: exp.per_voter,
            sweep,
        })
    }
}

impl MeasureConfig {
    fn to_spec(&self) -> Result<MeasureSpec, ConfigError> {
        match self {
            Self::Independent => Ok(MeasureSpec::Independent),
            Self::Unanimity => Ok(MeasureSpec::Unanimity),
            Self::CurieWeiss { beta } => MeasureSpec::curie_weiss(*beta)
                .map_err(|e| ConfigError::field("measure.beta", e.to_string())),
            Self::CollectiveBias { bias, coupling } => {
                Ok(MeasureSpec::collective_bias(bias.to_measure()?, *coupling))
            }
        }
    }

    fn from_spec(spec: &MeasureSpec) -> Self {
        match spec {
            MeasureSpec::Independent => Self::Independent,
            MeasureSpec::Unanimity => Self::Unanimity,
            MeasureSpec::CurieWeiss { beta } => Self::CurieWeiss { beta: *beta },
            MeasureSpec::CollectiveBias { bias, coupling } => Self::CollectiveBias {
                bias: BiasConfig::from_measure(bias),
                coupling: *coupling,
            },
        }
    }
}

impl BiasConfig {
    fn to_measure(&self) -> Result<BiasMeasure, ConfigError> {
        let err = |e: twotier_core::Error| ConfigError::field("measure.bias", e.to_string());
        match self {
            Self::PointMass { location } => BiasMeasure::point_mass(*location).map_err(err),
            Self::Uniform { nodes: None } => Ok(BiasMeasure::uniform()),
            Self::Uniform { nodes: Some(n) } => BiasMeasure::uniform_with_nodes(*n).map_err(err),
            Self::SymmetricAtoms { atoms } => BiasMeasure::symmetric_atoms(
                atoms
                    .iter()
                    .map(|a| HalfAtom {
                        location: a.location,
                        weight: a.weight,
                    })
                    .collect(),
            )
            .map_err(err),
        }
    }

    fn from_measure(mu: &BiasMeasure) -> Self {
        match mu.kind() {
            BiasKind::PointMass => Self::PointMass { location: 0.0 },
            BiasKind::Uniform { nodes } => Self::Uniform {
                nodes: (nodes != twotier_core::quadrature::DEFAULT_NODES).then_some(nodes),
            },
            BiasKind::SymmetricAtoms(atoms) => Self::SymmetricAtoms {
                atoms: atoms
                    .iter()
                    .map(|a| AtomConfig {
                        location: a.location,
                        weight: a.weight,
                    })
                    .collect(),
            },
        }
    }
}

impl Experiment {
    /// Re-emits the experiment as a config document.
    pub fn to_config(&self) -> ExperimentConfig {
        let schemes: Vec<SchemeConfig> = self
            .schemes
            .iter()
            .map(|s| match s {
                WeightScheme::Named(n) => SchemeConfig::Named(*n),
                WeightScheme::Explicit(w) => SchemeConfig::Explicit(w.clone()),
            })
            .collect();
        let weights = if schemes.len() == 1 {
            WeightsField::One(schemes.into_iter().next().expect("one scheme"))
        } else {
            WeightsField::Many(schemes)
        };
        ExperimentConfig {
            union: self.union.to_spec(),
            measure: MeasureConfig::from_spec(&self.measure),
            weights,
            total_weight: self.total_weight.map(|t| match t {
                TotalWeight::Value(v) => TotalWeightConfig::Value(v),
                TotalWeight::Mu1N => TotalWeightConfig::Named(TotalWeightName::Mu1N),
            }),
            experiment: ExperimentSection {
                kind: self.kind,
                n_samples: self.n_samples,
                seed: self.seed,
                per_voter: self.per_voter,
                sweep: self.sweep.as_ref().map(|s| SweepConfig {
                    axis: s.axis,
                    grid: s.grid.clone(),
                }),
            },
        }
    }
}

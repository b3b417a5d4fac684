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

//! Expected squared democracy deficit `𝔻 = E(Δ²)`, `Δ = |C - P|`, with
//! council vote `C = Σ g_ν χ_ν` and popular vote `P = Σ S_ν`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{MeasureSpec, ValidatedUnion, WeightVector};
use crate::oracle::{self, MomentSet};
use crate::weights::QuadraticForm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeficitReport {
    /// `𝔻`, voters².
    pub dd: f64,
    /// `𝔻 / N²`.
    pub per_voter: f64,
    pub predicted_asymptote: Option<f64>,
    /// `|per_voter - predicted| / predicted`, when the prediction is nonzero.
    pub relative_gap: Option<f64>,
}

/// `Σ_ν (g_ν² - 2 g_ν E|S_ν| + E(S_ν²))` for independent states.
pub fn deficit_independent_states(g: &WeightVector, moments: &[MomentSet]) -> Result<f64> {
    if g.len() != moments.len() {
        return Err(Error::DimensionMismatch {
            expected: moments.len(),
            got: g.len(),
        });
    }
    Ok(g.as_slice()
        .iter()
        .zip(moments)
        .map(|(&w, m)| w * w - 2.0 * w * m.abs_mean + m.second_moment)
        .sum())
}

pub fn deficit_quadratic(g: &WeightVector, q: &QuadraticForm) -> Result<f64> {
    if g.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: g.len(),
        });
    }
    Ok(q.evaluate(g.as_slice()))
}

/// Large-population deficit under a global shared bias:
/// `G² - 2μ₁GN + μ₂N²`.
pub fn deficit_asymptotic_global_cbm(total_weight: f64, n: u64, mu1: f64, mu2: f64) -> f64 {
    let nf = n as f64;
    total_weight * total_weight - 2.0 * mu1 * total_weight * nf + mu2 * nf * nf
}

/// Exact `𝔻` for any supported measure.
pub fn exact_deficit(union: &ValidatedUnion, spec: &MeasureSpec, g: &WeightVector) -> Result<f64> {
    spec.validate()?;
    if spec.is_globally_coupled() {
        let mu = spec
            .as_bias_measure()
            .ok_or_else(|| Error::Unsupported("global coupling needs a bias measure".into()))?;
        oracle::exact_deficit_global_cbm(union, &mu, g)
    } else {
        deficit_independent_states(g, &oracle::state_moments(union, spec)?)
    }
}

/// Predicted `𝔻/N²` under optimal weights for `union` and `spec`.
///
/// For independent states this is `Σ 𝕍(|S_ν|) / N²` evaluated with the
/// leading-order variances, so it is `N`-dependent when the per-voter deficit
/// vanishes. `None` where no constant is known.
pub fn predicted_per_voter(union: &ValidatedUnion, spec: &MeasureSpec) -> Option<f64> {
    let n = union.total() as f64;
    if spec.is_globally_coupled() {
        let (mu1, mu2) = spec.as_bias_measure()?.moments();
        return Some(mu2 - mu1 * mu1);
    }
    let mut total = 0.0;
    for &pop in &union.populations() {
        total += oracle::asymptotic_predictions(spec, pop).abs_variance?;
    }
    Some(total / (n * n))
}

/// `(π - 2) / π`: limit of `𝕍(|S|)/N` for independent voters.
pub fn independent_variance_constant() -> f64 {
    (PI - 2.0) / PI
}

pub fn per_voter_report(
    dd: f64,
    union: &ValidatedUnion,
    predicted: Option<f64>,
) -> Result<DeficitReport> {
    if !dd.is_finite() {
        return Err(Error::NonFiniteInput("deficit".into()));
    }
    if dd < 0.0 {
        return Err(Error::InvalidWeights(format!("negative deficit {dd}")));
    }
    let n = union.total() as f64;
    let per_voter = dd / (n * n);
    let relative_gap = predicted
        .filter(|p| *p > 0.0)
        .map(|p| (per_voter - p).abs() / p);
    Ok(DeficitReport {
        dd,
        per_voter,
        predicted_asymptote: predicted,
        relative_gap,
    })
}

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

//! Exact (non-sampling) margin laws, moments and cross-moments.
//!
//! All binomial terms are evaluated in log space and normalized after a
//! max-shift, which keeps populations up to `10⁶` free of overflow. Mixtures
//! over the bias measure are evaluated on the half line and mirrored, so
//! every distribution produced here is exactly sign-symmetric.

mod asymptotic;
pub(crate) mod binomial;
mod cross;

pub use asymptotic::{asymptotic_predictions, curie_weiss_magnetization, PredictedValues};
pub use cross::{
    cross_moments, cross_moments_global_cbm, exact_deficit_global_cbm, CrossMomentSet,
};

use crate::error::{Error, Result};
use crate::model::{BiasKind, BiasMeasure, MeasureSpec, ValidatedUnion, MAX_POPULATION};
use binomial::{conditional_probs, ln_binomial_row, normalize_log_weights};

/// Exact law of a state margin `S = yes - no` over `{-N, -N+2, ..., N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginDistribution {
    population: u64,
    /// Indexed by yes-count `j`; margin is `2j - N`.
    probs: Vec<f64>,
}

impl MarginDistribution {
    fn from_yes_counts(population: u64, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len() as u64, population + 1);
        Self { population, probs }
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    /// Probabilities indexed by yes-count `j = (N + k) / 2`.
    pub fn yes_count_probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(S = margin)`; zero off the support.
    pub fn prob(&self, margin: i64) -> f64 {
        let n = self.population as i64;
        if margin.abs() > n || (margin + n) % 2 != 0 {
            return 0.0;
        }
        self.probs[((margin + n) / 2) as usize]
    }

    /// `(margin, probability)` pairs in increasing margin order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.population as i64;
        self.probs
            .iter()
            .enumerate()
            .map(move |(j, &p)| (2 * j as i64 - n, p))
    }

    /// Cumulative probabilities by yes-count, last entry forced to 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }

    pub fn moments(&self) -> MomentSet {
        moments(self)
    }
}

/// `E|S|`, `E(S²)` and `𝕍(|S|)` of one state margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub abs_mean: f64,
    pub second_moment: f64,
    pub abs_variance: f64,
}

impl MomentSet {
    pub fn new(abs_mean: f64, second_moment: f64) -> Self {
        Self {
            abs_mean,
            second_moment,
            abs_variance: (second_moment - abs_mean * abs_mean).max(0.0),
        }
    }
}

pub(crate) fn check_population(n: u64) -> Result<()> {
    if n == 0 || n > MAX_POPULATION {
        return Err(Error::PopulationOutOfRange {
            state: String::new(),
            population: n,
        });
    }
    if n.is_multiple_of(2) {
        return Err(Error::EvenPopulation {
            state: String::new(),
            population: n,
        });
    }
    Ok(())
}

fn check_bias(zeta: f64) -> Result<()> {
    if !zeta.is_finite() || zeta.abs() > 1.0 {
        return Err(Error::BiasOutOfRange(zeta));
    }
    Ok(())
}

/// Margin law of `n` voters that vote yes independently with probability
/// `(1 + zeta) / 2`.
pub fn margin_distribution_conditional(n: u64, zeta: f64) -> Result<MarginDistribution> {
    check_population(n)?;
    check_bias(zeta)?;
    let row = ln_binomial_row(n);
    Ok(MarginDistribution::from_yes_counts(
        n,
        conditional_probs(&row, zeta),
    ))
}

/// Margin law of the collective-bias model: the conditional law mixed over
/// the bias measure.
///
/// A uniform bias makes the yes-probability uniform on `[0, 1]`, and
/// `∫₀¹ C(N,j) p^j (1-p)^{N-j} dp = 1/(N+1)`, so that law is exact rather
/// than a quadrature; pointwise quadrature would need `O(√N)` nodes.
pub fn margin_distribution_cbm(n: u64, mu: &BiasMeasure) -> Result<MarginDistribution> {
    check_population(n)?;
    if let BiasKind::Uniform { .. } = mu.kind() {
        let len = n as usize + 1;
        return Ok(MarginDistribution::from_yes_counts(
            n,
            vec![1.0 / len as f64; len],
        ));
    }
    let row = ln_binomial_row(n);
    let len = n as usize + 1;
    let mut mix = vec![0.0; len];
    for node in mu.half_line_nodes() {
        let q = conditional_probs(&row, node.location);
        if node.location == 0.0 {
            for (m, v) in mix.iter_mut().zip(&q) {
                *m += node.weight * v;
            }
        } else {
            let half = 0.5 * node.weight;
            for j in 0..len {
                mix[j] += half * (q[j] + q[len - 1 - j]);
            }
        }
    }
    Ok(MarginDistribution::from_yes_counts(n, mix))
}

/// Curie-Weiss margin law: `P(S = k) ∝ C(N, (N+k)/2) · exp(β k² / (2N))`.
pub fn margin_distribution_cw(n: u64, beta: f64) -> Result<MarginDistribution> {
    check_population(n)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidMeasure(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let mut w = ln_binomial_row(n);
    let nf = n as f64;
    for (j, v) in w.iter_mut().enumerate() {
        let k = 2.0 * j as f64 - nf;
        *v += beta * k * k / (2.0 * nf);
    }
    normalize_log_weights(&mut w);
    Ok(MarginDistribution::from_yes_counts(n, w))
}

/// Margin law of a single state of population `n` under `spec`.
pub fn margin_distribution(n: u64, spec: &MeasureSpec) -> Result<MarginDistribution> {
    spec.validate()?;
    match spec {
        MeasureSpec::Independent => margin_distribution_conditional(n, 0.0),
        MeasureSpec::CollectiveBias { bias, .. } => margin_distribution_cbm(n, bias),
        MeasureSpec::CurieWeiss { beta } => margin_distribution_cw(n, *beta),
        MeasureSpec::Unanimity => margin_distribution_cbm(n, &BiasMeasure::unanimous()),
    }
}

pub fn moments(dist: &MarginDistribution) -> MomentSet {
    // Pair ±k so the sums run over |k| only.
    let p = &dist.probs;
    let len = p.len();
    let n = dist.population as f64;
    let mut abs_mean = 0.0;
    let mut second = 0.0;
    for j in (len / 2)..len {
        let k = 2.0 * j as f64 - n;
        let mass = p[j] + p[len - 1 - j];
        abs_mean += k * mass;
        second += k * k * mass;
    }
    MomentSet::new(abs_mean, second)
}

/// Exact per-state moments for every state of the union.
pub fn state_moments(union: &ValidatedUnion, spec: &MeasureSpec) -> Result<Vec<MomentSet>> {
    union
        .populations()
        .iter()
        .map(|&n| margin_distribution(n, spec).map(|d| moments(&d)))
        .collect()
}

/// `E_ζ(χ) = P_ζ(S > 0) - P_ζ(S < 0)`; odd in `zeta` by construction.
pub fn conditional_majority_bias(n: u64, zeta: f64) -> Result<f64> {
    check_population(n)?;
    check_bias(zeta)?;
    if zeta == 0.0 {
        return Ok(0.0);
    }
    let row = ln_binomial_row(n);
    let stats = binomial::conditional_stats(&row, zeta.abs());
    Ok(zeta.signum() * stats.chi_mean)
}

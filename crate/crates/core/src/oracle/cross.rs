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

//! Cross-state moments and the exact deficit under a shared bias.
//!
//! Given the bias `ζ`, states are independent binomial blocks. Every joint
//! expectation is therefore an integral over `ζ` of products of per-state
//! conditional expectations. The integrands used here are even in `ζ`, so the
//! half-line nodes of the bias measure suffice.

use nalgebra::DMatrix;

use super::binomial::{conditional_stats, ln_binomial_row, ConditionalStats};
use super::{margin_distribution, moments};
use crate::error::{Error, Result};
use crate::model::{BiasMeasure, MeasureSpec, ValidatedUnion, WeightVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossMomentSet {
    /// `A[ν][κ] = E(χ_ν χ_κ)`
    pub chi_chi: DMatrix<f64>,
    /// `E(χ_ν S_κ)`
    pub chi_s: DMatrix<f64>,
    /// `E(S_ν S_κ)`
    pub s_s: DMatrix<f64>,
}

/// Per-node, per-state conditional statistics: `stats[node][state]`.
fn node_stats(
    populations: &[u64],
    mu: &BiasMeasure,
) -> (Vec<(f64, f64)>, Vec<Vec<ConditionalStats>>) {
    let rows: Vec<Vec<f64>> = populations.iter().map(|&n| ln_binomial_row(n)).collect();
    let nodes: Vec<(f64, f64)> = mu
        .half_line_nodes()
        .into_iter()
        .map(|h| (h.location, h.weight))
        .collect();
    let stats = nodes
        .iter()
        .map(|&(zeta, _)| rows.iter().map(|r| conditional_stats(r, zeta)).collect())
        .collect();
    (nodes, stats)
}

/// Exact cross-moments when every voter of the union shares one bias drawn
/// from `mu`.
pub fn cross_moments_global_cbm(union: &ValidatedUnion, mu: &BiasMeasure) -> CrossMomentSet {
    let pops = union.populations();
    let m = pops.len();
    let (nodes, stats) = node_stats(&pops, mu);
    let (_, mu2) = mu.moments();

    let mut chi_chi = DMatrix::<f64>::identity(m, m);
    let mut chi_s = DMatrix::<f64>::zeros(m, m);
    let mut s_s = DMatrix::<f64>::zeros(m, m);
    for (&(zeta, w), st) in nodes.iter().zip(&stats) {
        for nu in 0..m {
            chi_s[(nu, nu)] += w * st[nu].abs_mean;
            s_s[(nu, nu)] += w * st[nu].second;
            for kappa in 0..m {
                if kappa == nu {
                    continue;
                }
                chi_s[(nu, kappa)] += w * st[nu].chi_mean * zeta * pops[kappa] as f64;
                if kappa > nu {
                    chi_chi[(nu, kappa)] += w * st[nu].chi_mean * st[kappa].chi_mean;
                }
            }
        }
    }
    for nu in 0..m {
        for kappa in 0..m {
            if kappa > nu {
                chi_chi[(kappa, nu)] = chi_chi[(nu, kappa)];
            }
            if kappa != nu {
                s_s[(nu, kappa)] = mu2 * pops[nu] as f64 * pops[kappa] as f64;
            }
        }
    }
    CrossMomentSet {
        chi_chi,
        chi_s,
        s_s,
    }
}

/// Cross-moments for any measure. States that do not share a bias are
/// independent with `E(χ) = E(S) = 0`, so all their off-diagonal terms vanish.
pub fn cross_moments(union: &ValidatedUnion, spec: &MeasureSpec) -> Result<CrossMomentSet> {
    spec.validate()?;
    if spec.is_globally_coupled() {
        let mu = spec
            .as_bias_measure()
            .ok_or_else(|| Error::Unsupported("global coupling needs a bias measure".into()))?;
        return Ok(cross_moments_global_cbm(union, &mu));
    }
    let m = union.len();
    let mut out = CrossMomentSet {
        chi_chi: DMatrix::identity(m, m),
        chi_s: DMatrix::zeros(m, m),
        s_s: DMatrix::zeros(m, m),
    };
    for (i, &n) in union.populations().iter().enumerate() {
        let ms = moments(&margin_distribution(n, spec)?);
        out.chi_s[(i, i)] = ms.abs_mean;
        out.s_s[(i, i)] = ms.second_moment;
    }
    Ok(out)
}

/// Exact `E(Δ²)` for council weights `g` when all voters share one bias.
///
/// Conditionally on `ζ` the per-state terms `g_ν χ_ν - S_ν` are independent,
/// so `E_ζ(Δ²) = Σ Var_ζ(g_ν χ_ν - S_ν) + (Σ E_ζ(g_ν χ_ν - S_ν))²`, using
/// `χ_ν S_ν = |S_ν|`.
pub fn exact_deficit_global_cbm(
    union: &ValidatedUnion,
    mu: &BiasMeasure,
    g: &WeightVector,
) -> Result<f64> {
    if g.len() != union.len() {
        return Err(Error::DimensionMismatch {
            expected: union.len(),
            got: g.len(),
        });
    }
    let pops = union.populations();
    let (nodes, stats) = node_stats(&pops, mu);
    let mut dd = 0.0;
    for (&(zeta, w), st) in nodes.iter().zip(&stats) {
        let mut var_sum = 0.0;
        let mut mean_sum = 0.0;
        for ((s, &gv), &n) in st.iter().zip(g.as_slice()).zip(&pops) {
            let mean = gv * s.chi_mean - zeta * n as f64;
            let raw = gv * gv - 2.0 * gv * s.abs_mean + s.second;
            var_sum += (raw - mean * mean).max(0.0);
            mean_sum += mean;
        }
        dd += w * (var_sum + mean_sum * mean_sum);
    }
    Ok(dd)
}

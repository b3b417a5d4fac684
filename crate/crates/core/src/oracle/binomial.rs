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

//! Log-space binomial weights.

use std::f64::consts::LN_2;

/// `ln C(n, j)` for `j = 0..=n`, exactly symmetric in `j <-> n - j`.
pub(crate) fn ln_binomial_row(n: u64) -> Vec<f64> {
    let n_us = n as usize;
    let mut row = vec![0.0; n_us + 1];
    let half = n_us / 2;
    let mut acc = 0.0;
    for (j, slot) in row.iter_mut().enumerate().take(half + 1).skip(1) {
        acc += ((n - j as u64 + 1) as f64).ln() - (j as f64).ln();
        *slot = acc;
    }
    for j in (half + 1)..=n_us {
        row[j] = row[n_us - j];
    }
    row
}

/// Normalizes log-weights into probabilities, shifting by the maximum first.
pub(crate) fn normalize_log_weights(log_w: &mut [f64]) {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in log_w.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in log_w.iter_mut() {
        *v /= total;
    }
}

/// Law of the yes-count `j` for `n` voters each voting yes with
/// probability `(1 + zeta) / 2`, indexed by `j`.
pub(crate) fn conditional_probs(ln_binom: &[f64], zeta: f64) -> Vec<f64> {
    let n = ln_binom.len() - 1;
    let mut out = vec![0.0; n + 1];
    if zeta >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    if zeta <= -1.0 {
        out[0] = 1.0;
        return out;
    }
    let ln_p = zeta.ln_1p() - LN_2;
    let ln_q = (-zeta).ln_1p() - LN_2;
    for (j, v) in out.iter_mut().enumerate() {
        *v = ln_binom[j] + j as f64 * ln_p + (n - j) as f64 * ln_q;
    }
    normalize_log_weights(&mut out);
    out
}

/// Summary statistics of the conditional margin law at bias `zeta >= 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConditionalStats {
    /// `E_ζ|S|`
    pub abs_mean: f64,
    /// `E_ζ χ = P_ζ(S > 0) - P_ζ(S < 0)`
    pub chi_mean: f64,
    /// `E_ζ S²`, analytic.
    pub second: f64,
}

pub(crate) fn conditional_stats(ln_binom: &[f64], zeta: f64) -> ConditionalStats {
    let n = ln_binom.len() - 1;
    let nf = n as f64;
    let probs = conditional_probs(ln_binom, zeta);
    let mut abs_mean = 0.0;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        let k = 2 * j as i64 - n as i64;
        abs_mean += k.unsigned_abs() as f64 * p;
        if k > 0 {
            pos += p;
        } else {
            neg += p;
        }
    }
    ConditionalStats {
        abs_mean,
        chi_mean: pos - neg,
        second: nf * (1.0 - zeta * zeta) + zeta * zeta * nf * nf,
    }
}

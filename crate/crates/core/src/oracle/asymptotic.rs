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

//! Large-population predictors.

use std::f64::consts::PI;

use crate::model::MeasureSpec;

/// Leading-order behaviour of a single state margin for large `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedValues {
    /// Predicted `E|S|` in voters; `None` when only the exponent is known.
    pub abs_mean: Option<f64>,
    /// Predicted `𝕍(|S|)` in voters².
    pub abs_variance: Option<f64>,
    /// `E|S|` grows like `N^exponent`.
    pub exponent: f64,
    /// Limit of `𝕍(|S|) / N²` under optimal weights.
    pub deficit_constant: f64,
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Largest solution `m` of `m = tanh(β m)`; 0 for `β <= 1`.
///
/// Damped fixed-point iteration from `m = 0.9`, stopped when successive
/// iterates agree to `1e-12`.
pub fn curie_weiss_magnetization(beta: f64) -> f64 {
    if beta <= 1.0 {
        return 0.0;
    }
    let damping = 0.5;
    let mut m = 0.9f64;
    for _ in 0..10_000_000 {
        let next = (1.0 - damping) * m + damping * (beta * m).tanh();
        if (next - m).abs() < 1e-12 {
            return next;
        }
        m = next;
    }
    m
}

pub fn asymptotic_predictions(spec: &MeasureSpec, n: u64) -> PredictedValues {
    let nf = n as f64;
    let clt_variance = (PI - 2.0) / PI;
    match spec {
        MeasureSpec::Independent => PredictedValues {
            abs_mean: Some(SQRT_2_OVER_PI * nf.sqrt()),
            abs_variance: Some(clt_variance * nf),
            exponent: 0.5,
            deficit_constant: 0.0,
        },
        MeasureSpec::CollectiveBias { bias, .. } if bias.is_dirac_zero() => {
            asymptotic_predictions(&MeasureSpec::Independent, n)
        }
        MeasureSpec::CollectiveBias { bias, .. } => {
            let (mu1, mu2) = bias.moments();
            PredictedValues {
                abs_mean: Some(mu1 * nf),
                abs_variance: Some((mu2 - mu1 * mu1) * nf * nf),
                exponent: 1.0,
                deficit_constant: mu2 - mu1 * mu1,
            }
        }
        MeasureSpec::CurieWeiss { beta } => {
            let beta = *beta;
            if beta < 1.0 {
                // S/√N is asymptotically normal with variance 1/(1-β).
                let scale = 1.0 / (1.0 - beta);
                PredictedValues {
                    abs_mean: Some(SQRT_2_OVER_PI * (nf * scale).sqrt()),
                    abs_variance: Some(clt_variance * nf * scale),
                    exponent: 0.5,
                    deficit_constant: 0.0,
                }
            } else if beta == 1.0 {
                PredictedValues {
                    abs_mean: None,
                    abs_variance: None,
                    exponent: 0.75,
                    deficit_constant: 0.0,
                }
            } else {
                PredictedValues {
                    abs_mean: Some(curie_weiss_magnetization(beta) * nf),
                    abs_variance: None,
                    exponent: 1.0,
                    deficit_constant: 0.0,
                }
            }
        }
        MeasureSpec::Unanimity => PredictedValues {
            abs_mean: Some(nf),
            abs_variance: Some(0.0),
            exponent: 1.0,
            deficit_constant: 0.0,
        },
    }
}

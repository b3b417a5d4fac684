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

//! Finite-N exact values approaching the large-population laws.

use twotier_core::deficit::exact_deficit;
use twotier_core::model::{BiasMeasure, Coupling, MeasureSpec, ValidatedUnion, WeightVector};
use twotier_core::oracle::{margin_distribution, state_moments};
use twotier_core::weights::{equal_weights, optimal_weights, sqrt_weights};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

fn odd(x: f64) -> u64 {
    let k = x.round() as u64;
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

#[test]
fn square_root_law_error_shrinks() {
    let errors: Vec<f64> = [101u64, 1001, 10001]
        .iter()
        .map(|&n| {
            let m = margin_distribution(n, &MeasureSpec::Independent)
                .unwrap()
                .moments();
            (m.abs_mean / (n as f64).sqrt() - SQRT_2_OVER_PI).abs()
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn non_optimal_weights_keep_deficit_of_same_order() {
    let spec = MeasureSpec::collective_bias(BiasMeasure::uniform(), Coupling::PerState);
    let alphas = [0.2, 0.3, 0.5];
    let mut optimal = Vec::new();
    let mut by_sqrt = Vec::new();
    let mut by_one = Vec::new();
    for total in [1_000.0, 10_000.0, 100_000.0] {
        let pops: Vec<u64> = alphas.iter().map(|a| odd(a * total)).collect();
        let union = ValidatedUnion::from_populations(&pops).unwrap();
        let n2 = (union.total() as f64).powi(2);
        let (g, _) = optimal_weights(&union, &spec).unwrap();
        optimal.push(exact_deficit(&union, &spec, &g).unwrap() / n2);
        by_sqrt.push(exact_deficit(&union, &spec, &sqrt_weights(&union)).unwrap() / n2);
        by_one.push(exact_deficit(&union, &spec, &equal_weights(&union)).unwrap() / n2);
    }
    let limit = (1.0 / 3.0 - 0.25) * alphas.iter().map(|a| a * a).sum::<f64>();
    for series in [&by_sqrt, &by_one] {
        for (v, o) in series.iter().zip(&optimal) {
            assert!(v >= o && *v > 0.0);
        }
        // Successive changes shrink: convergence to a finite constant.
        let d1 = (series[1] - series[0]).abs();
        let d2 = (series[2] - series[1]).abs();
        assert!(d2 < d1, "{series:?}");
        let gaps: Vec<f64> = series.iter().zip(&optimal).map(|(v, o)| v - o).collect();
        assert!(
            (gaps[2] - gaps[1]).abs() < (gaps[1] - gaps[0]).abs(),
            "{gaps:?}"
        );
    }
    assert!(
        (optimal[2] - limit).abs() / limit < 0.01,
        "{optimal:?} vs {limit}"
    );
}

#[test]
fn global_bias_makes_weight_split_irrelevant() {
    let spec = MeasureSpec::collective_bias(BiasMeasure::uniform(), Coupling::Global);
    let alphas = [0.1, 0.3, 0.6];
    let mut gaps = Vec::new();
    for total in [300.0, 3_000.0, 30_000.0] {
        let pops: Vec<u64> = alphas.iter().map(|a| odd(a * total)).collect();
        let union = ValidatedUnion::from_populations(&pops).unwrap();
        let g_total = 0.5 * union.total() as f64;
        let split_a = WeightVector::new(pops.iter().map(|&n| n as f64).collect())
            .unwrap()
            .rescaled_to_total(g_total)
            .unwrap();
        let split_b = equal_weights(&union).rescaled_to_total(g_total).unwrap();
        let a = exact_deficit(&union, &spec, &split_a).unwrap();
        let b = exact_deficit(&union, &spec, &split_b).unwrap();
        gaps.push((a - b).abs() / a.min(b));
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn curie_weiss_growth_laws() {
    let abs_mean = |beta: f64, n: u64| {
        margin_distribution(n, &MeasureSpec::curie_weiss(beta).unwrap())
            .unwrap()
            .moments()
            .abs_mean
    };
    // Subcritical: √N growth, supercritical: linear growth.
    let r = abs_mean(0.5, 40_001) / abs_mean(0.5, 10_001);
    assert!((r - 2.0).abs() < 0.01, "{r}");
    let r = abs_mean(2.0, 40_001) / abs_mean(2.0, 10_001);
    assert!((r - 4.0).abs() < 0.01, "{r}");
}

#[test]
fn independent_per_voter_deficit_vanishes_like_one_over_n() {
    let c = (std::f64::consts::PI - 2.0) / std::f64::consts::PI;
    for n in [1001u64, 10001, 100001] {
        let union = ValidatedUnion::from_populations(&[n]).unwrap();
        let ms = state_moments(&union, &MeasureSpec::Independent).unwrap();
        let per_voter = ms[0].abs_variance / (n as f64).powi(2);
        assert!((per_voter * n as f64 - c).abs() / c < 0.01);
    }
}

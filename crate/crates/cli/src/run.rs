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

//! Experiment runners behind the CLI subcommands.

use std::fmt;

use twotier_core::deficit::{
    deficit_asymptotic_global_cbm, exact_deficit, per_voter_report, predicted_per_voter,
};
use twotier_core::model::{MeasureSpec, ValidatedUnion, WeightVector};
use twotier_core::montecarlo::{
    estimate_deficit, estimate_moments, sample_margins_with, SamplerOptions,
};
use twotier_core::oracle::{asymptotic_predictions, state_moments};
use twotier_core::weights::{
    asymptotic_weights, equal_weights, optimal_weights, proportional_weights, sqrt_weights,
};

use crate::config::{
    ConfigError, Experiment, ExperimentKind, NamedScheme, SweepAxis, TotalWeight, WeightScheme,
};

/// z-score beyond which a validation quantity fails.
pub const GATE_Z: f64 = 4.0;

pub const DEFAULT_VALIDATE_SAMPLES: usize = 100_000;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Model(twotier_core::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => e.fmt(f),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<twotier_core::Error> for RunError {
    fn from(e: twotier_core::Error) -> Self {
        Self::Model(e)
    }
}

fn field_error(path: &str, message: &str) -> RunError {
    RunError::Config(ConfigError::Field {
        path: path.into(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn opt(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    /// Set when a validation quantity exceeded [`GATE_Z`].
    pub gate_failed: bool,
}

pub fn run(kind: ExperimentKind, exp: &Experiment) -> Result<Report, RunError> {
    if let Some(k) = exp.kind {
        if k != kind {
            return Err(field_error(
                "experiment.kind",
                &format!(
                    "config is for `{}` but `{}` was requested",
                    k.as_str(),
                    kind.as_str()
                ),
            ));
        }
    }
    match kind {
        ExperimentKind::Weights => run_weights(exp),
        ExperimentKind::Deficit => run_deficit(exp),
        ExperimentKind::Validate => run_validate(exp),
        ExperimentKind::Sweep => run_sweep(exp),
    }
}

/// Weights for one scheme, with the label recorded in the `method` column.
fn resolve_weights(
    exp: &Experiment,
    union: &ValidatedUnion,
    measure: &MeasureSpec,
    scheme: &WeightScheme,
) -> Result<(WeightVector, String), RunError> {
    let (g, method) = match scheme {
        WeightScheme::Named(NamedScheme::Optimal) => {
            let (g, m) = optimal_weights(union, measure)?;
            (g, m.as_str().to_string())
        }
        WeightScheme::Named(NamedScheme::Asymptotic) => (
            asymptotic_weights(union, measure)?,
            "asymptotic".to_string(),
        ),
        WeightScheme::Named(NamedScheme::Sqrt) => (sqrt_weights(union), "sqrt".into()),
        WeightScheme::Named(NamedScheme::Proportional) => {
            (proportional_weights(union), "proportional".into())
        }
        WeightScheme::Named(NamedScheme::Equal) => (equal_weights(union), "equal".into()),
        WeightScheme::Explicit(w) => (
            WeightVector::for_union(w.clone(), union)?,
            "explicit".into(),
        ),
    };
    let g = match exp.total_weight {
        None => g,
        Some(TotalWeight::Value(total)) => g.rescaled_to_total(total)?,
        Some(TotalWeight::Mu1N) => {
            let mu = measure.as_bias_measure().ok_or_else(|| {
                field_error("total_weight", "mu1_n needs a collective-bias measure")
            })?;
            let (mu1, _) = mu.moments();
            g.rescaled_to_total(mu1 * union.total() as f64)?
        }
    };
    Ok((g, method))
}

pub fn run_weights(exp: &Experiment) -> Result<Report, RunError> {
    let mut rows = Vec::new();
    for scheme in &exp.schemes {
        let (g, method) = resolve_weights(exp, &exp.union, &exp.measure, scheme)?;
        let normalized = g.normalized();
        for ((state, &raw), norm) in exp.union.states().iter().zip(g.as_slice()).zip(normalized) {
            rows.push(vec![
                Cell::from(state.name.as_str()),
                Cell::Int(state.population as i64),
                Cell::Num(raw),
                Cell::Num(norm),
                Cell::from(method.as_str()),
            ]);
        }
    }
    Ok(Report {
        table: Table {
            columns: vec![
                "state",
                "population",
                "weight_raw",
                "weight_normalized",
                "method",
            ],
            rows,
        },
        gate_failed: false,
    })
}

pub fn run_deficit(exp: &Experiment) -> Result<Report, RunError> {
    let union = &exp.union;
    let measure = &exp.measure;
    let n = union.total();
    let batch = match (exp.n_samples, exp.seed) {
        (Some(samples), Some(seed)) => Some(sample_margins_with(
            union,
            measure,
            seed,
            samples,
            &SamplerOptions {
                per_voter: exp.per_voter,
            },
        )?),
        (Some(_), None) => {
            return Err(field_error("experiment.seed", "sampling requires a seed"));
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for scheme in &exp.schemes {
        let (g, _) = resolve_weights(exp, union, measure, scheme)?;
        let dd = exact_deficit(union, measure, &g)?;
        let predicted = if measure.is_globally_coupled() {
            let (mu1, mu2) = measure
                .as_bias_measure()
                .expect("global coupling")
                .moments();
            Some(deficit_asymptotic_global_cbm(g.total(), n, mu1, mu2) / (n as f64).powi(2))
        } else if matches!(scheme, WeightScheme::Named(NamedScheme::Optimal)) {
            predicted_per_voter(union, measure)
        } else {
            None
        };
        let report = per_voter_report(dd.max(0.0), union, predicted)?;
        let (estimate, se) = match &batch {
            Some(b) => {
                let e = estimate_deficit(b, &g)?;
                (Cell::Num(e.value), Cell::Num(e.std_error))
            }
            None => (Cell::Empty, Cell::Empty),
        };
        rows.push(vec![
            Cell::from(scheme.label()),
            Cell::Num(g.total()),
            Cell::Num(report.dd),
            Cell::Num(report.per_voter),
            Cell::opt(report.predicted_asymptote),
            Cell::opt(report.relative_gap),
            estimate,
            se,
        ]);
    }
    Ok(Report {
        table: Table {
            columns: vec![
                "scheme",
                "total_weight",
                "dd",
                "per_voter",
                "predicted_asymptote",
                "relative_gap",
                "dd_estimate",
                "std_error",
            ],
            rows,
        },
        gate_failed: false,
    })
}

pub fn run_validate(exp: &Experiment) -> Result<Report, RunError> {
    let seed = exp
        .seed
        .ok_or_else(|| field_error("experiment.seed", "validation samples and needs a seed"))?;
    let samples = exp.n_samples.unwrap_or(DEFAULT_VALIDATE_SAMPLES);
    let union = &exp.union;
    let measure = &exp.measure;
    let batch = sample_margins_with(
        union,
        measure,
        seed,
        samples,
        &SamplerOptions {
            per_voter: exp.per_voter,
        },
    )?;
    let exact = state_moments(union, measure)?;
    let estimates = estimate_moments(&batch)?;

    let mut rows = Vec::new();
    let mut failed = false;
    let mut push =
        |quantity: &str, target: &str, est: twotier_core::montecarlo::Estimate, truth: f64| {
            let z = est.z_score(truth);
            let pass = z.abs() <= GATE_Z;
            failed |= !pass;
            rows.push(vec![
                Cell::from(quantity),
                Cell::from(target),
                Cell::Num(est.value),
                Cell::Num(est.std_error),
                Cell::Num(truth),
                Cell::Num(z),
                Cell::from(if pass { "pass" } else { "fail" }),
            ]);
        };
    for ((state, e), x) in union.states().iter().zip(&estimates).zip(&exact) {
        push("abs_mean", &state.name, e.abs_mean, x.abs_mean);
        push(
            "second_moment",
            &state.name,
            e.second_moment,
            x.second_moment,
        );
        push("abs_variance", &state.name, e.abs_variance, x.abs_variance);
    }
    for scheme in &exp.schemes {
        let (g, _) = resolve_weights(exp, union, measure, scheme)?;
        let truth = exact_deficit(union, measure, &g)?;
        push(
            "deficit",
            &scheme.label(),
            estimate_deficit(&batch, &g)?,
            truth,
        );
    }
    Ok(Report {
        table: Table {
            columns: vec![
                "quantity",
                "target",
                "estimate",
                "std_error",
                "exact",
                "z",
                "pass",
            ],
            rows,
        },
        gate_failed: failed,
    })
}

fn nearest_odd(x: f64) -> u64 {
    let k = x.round().max(1.0) as u64;
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

fn gap(value: f64, predicted: Option<f64>) -> Cell {
    match predicted {
        Some(p) if p != 0.0 => Cell::Num((value - p).abs() / p.abs()),
        _ => Cell::Empty,
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn run_sweep(exp: &Experiment) -> Result<Report, RunError> {
    let sweep = exp
        .sweep
        .as_ref()
        .ok_or_else(|| field_error("experiment.sweep", "sweep settings are required"))?;
    let base = &exp.union;
    let base_total = base.total() as f64;
    let names: Vec<String> = base.states().iter().map(|s| s.name.clone()).collect();
    let mut rows = Vec::new();
    let mut log_n: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut log_abs: Vec<Vec<f64>> = vec![Vec::new(); names.len()];

    for &value in &sweep.grid {
        let (union, measure) = match sweep.axis {
            SweepAxis::Population => {
                let pops: Vec<u64> = base
                    .populations()
                    .iter()
                    .map(|&n| nearest_odd(n as f64 / base_total * value))
                    .collect();
                let states = base
                    .states()
                    .iter()
                    .zip(pops)
                    .map(|(s, p)| twotier_core::model::StateSpec::new(s.name.clone(), p))
                    .collect();
                let union =
                    twotier_core::model::validate_union(twotier_core::model::UnionSpec { states })?;
                (union, exp.measure.clone())
            }
            SweepAxis::Beta => (base.clone(), MeasureSpec::curie_weiss(value)?),
        };
        let n = union.total() as f64;
        let moments = state_moments(&union, &measure)?;
        for (i, (m, &pop)) in moments.iter().zip(&union.populations()).enumerate() {
            let p = asymptotic_predictions(&measure, pop);
            let name = &names[i];
            rows.push(vec![
                Cell::Num(value),
                Cell::from(format!("abs_mean[{name}]")),
                Cell::Num(m.abs_mean),
                Cell::opt(p.abs_mean),
                gap(m.abs_mean, p.abs_mean),
            ]);
            rows.push(vec![
                Cell::Num(value),
                Cell::from(format!("abs_variance[{name}]")),
                Cell::Num(m.abs_variance),
                Cell::opt(p.abs_variance),
                gap(m.abs_variance, p.abs_variance),
            ]);
            let frac_pred = p.abs_mean.map(|a| a / pop as f64);
            rows.push(vec![
                Cell::Num(value),
                Cell::from(format!("abs_mean_over_n[{name}]")),
                Cell::Num(m.abs_mean / pop as f64),
                Cell::opt(frac_pred),
                gap(m.abs_mean / pop as f64, frac_pred),
            ]);
            log_n[i].push((pop as f64).ln());
            log_abs[i].push(m.abs_mean.ln());
        }
        let (g, _) = optimal_weights(&union, &measure)?;
        let per_voter = exact_deficit(&union, &measure, &g)?.max(0.0) / (n * n);
        let predicted = predicted_per_voter(&union, &measure);
        rows.push(vec![
            Cell::Num(value),
            Cell::from("per_voter_deficit"),
            Cell::Num(per_voter),
            Cell::opt(predicted),
            gap(per_voter, predicted),
        ]);
        rows.push(vec![
            Cell::Num(value),
            Cell::from("per_voter_deficit_times_n"),
            Cell::Num(per_voter * n),
            Cell::opt(predicted.map(|p| p * n)),
            gap(per_voter * n, predicted.map(|p| p * n)),
        ]);
    }
    if sweep.axis == SweepAxis::Population {
        for (i, name) in names.iter().enumerate() {
            let slope = fit_slope(&log_n[i], &log_abs[i]);
            let exponent = asymptotic_predictions(&exp.measure, 1).exponent;
            rows.push(vec![
                Cell::from("fit"),
                Cell::from(format!("loglog_slope_abs_mean[{name}]")),
                Cell::Num(slope),
                Cell::Num(exponent),
                gap(slope, Some(exponent)),
            ]);
        }
    }
    Ok(Report {
        table: Table {
            columns: vec![
                "axis_value",
                "quantity",
                "exact_or_estimate",
                "predicted",
                "relative_gap",
            ],
            rows,
        },
        gate_failed: false,
    })
}

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

//! Council weights minimizing the expected squared democracy deficit.
//!
//! The expected deficit is a quadratic form in the weights,
//! `𝔻(γ) = γᵀAγ - 2bᵀγ + c`, with `A = E(χχᵀ)`, `b_ν = Σ_κ E(χ_ν S_κ)` and
//! `c = Σ E(S_ν S_κ)`. Its minimizers solve `A g = b`. When states are
//! independent `A` is the identity and `g_ν = E|S_ν|`; under a shared bias
//! `A` approaches the all-ones matrix and the system degenerates, which is
//! handled by a minimum-norm eigen solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{MeasureSpec, ValidatedUnion, WeightVector};
use crate::oracle::{self, asymptotic_predictions, CrossMomentSet, MomentSet};

/// Relative eigenvalue cutoff separating dependent equations.
pub const EIGEN_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl QuadraticForm {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let m = b.len();
        if a.nrows() != m || a.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: a.nrows(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::NonFiniteInput("quadratic form".into()));
        }
        let scale = a.amax().max(1.0);
        for i in 0..m {
            if (a[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidWeights(format!(
                    "A[{i}][{i}] = {} but E(χ²) = 1",
                    a[(i, i)]
                )));
            }
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidWeights("A is not symmetric".into()));
                }
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn from_cross_moments(cm: &CrossMomentSet) -> Result<Self> {
        let m = cm.chi_chi.nrows();
        let b = DVector::from_iterator(m, (0..m).map(|nu| cm.chi_s.row(nu).sum()));
        Self::new(cm.chi_chi.clone(), b, cm.s_s.sum())
    }

    /// Quadratic form of the exact moments of `union` under `spec`.
    pub fn for_model(union: &ValidatedUnion, spec: &MeasureSpec) -> Result<Self> {
        Self::from_cross_moments(&oracle::cross_moments(union, spec)?)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `γᵀAγ - 2bᵀγ`, the weight-dependent part of the deficit.
    pub fn weight_terms(&self, gamma: &[f64]) -> f64 {
        let g = DVector::from_column_slice(gamma);
        (g.transpose() * &self.a * &g)[(0, 0)] - 2.0 * self.b.dot(&g)
    }

    /// `γᵀAγ - 2bᵀγ + c`.
    pub fn evaluate(&self, gamma: &[f64]) -> f64 {
        self.weight_terms(gamma) + self.c
    }
}

/// Outcome details of the general solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// Orthonormal directions along which the weights do not affect the
    /// deficit.
    pub irrelevant_directions: Vec<Vec<f64>>,
    /// Indices of negative solution entries (reported, not clamped).
    pub negative_entries: Vec<usize>,
}

/// How a weight vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMethod {
    ClosedForm,
    NormalEquations,
    Asymptotic,
}

impl WeightMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedForm => "closed-form",
            Self::NormalEquations => "normal-equations",
            Self::Asymptotic => "asymptotic",
        }
    }
}

/// `g_ν = E|S_ν|` for independent states.
pub fn optimal_weights_independent_states(moments: &[MomentSet]) -> WeightVector {
    WeightVector::from_solver(moments.iter().map(|m| m.abs_mean).collect())
}

/// Minimum-norm solution of `A g = b` by symmetric eigendecomposition.
pub fn optimal_weights_general(q: &QuadraticForm) -> Result<(WeightVector, SolveDiagnostics)> {
    optimal_weights_anchored(q, &vec![0.0; q.dim()])
}

/// Solution of `A g = b` closest to `anchor` in Euclidean norm. Every
/// solution attains the same deficit; the anchor only fixes the component
/// along irrelevant directions.
pub fn optimal_weights_anchored(
    q: &QuadraticForm,
    anchor: &[f64],
) -> Result<(WeightVector, SolveDiagnostics)> {
    let m = q.dim();
    if anchor.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: anchor.len(),
        });
    }
    let anchor = DVector::from_column_slice(anchor);
    let rhs = &q.b - &q.a * &anchor;
    let eig = SymmetricEigen::new(q.a.clone());
    let lambda_max = eig.eigenvalues.amax();
    if !lambda_max.is_finite() {
        return Err(Error::NonFiniteInput("eigenvalues of A".into()));
    }
    let cutoff = EIGEN_CUTOFF * lambda_max;
    let mut g = anchor.clone();
    let mut rank = 0;
    let mut irrelevant = Vec::new();
    for i in 0..m {
        let v = eig.eigenvectors.column(i);
        let lambda = eig.eigenvalues[i];
        if lambda > cutoff {
            rank += 1;
            g += v * (v.dot(&rhs) / lambda);
        } else {
            irrelevant.push(v.iter().copied().collect());
        }
    }
    let weights: Vec<f64> = g.iter().copied().collect();
    let negative_entries = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w < 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok((
        WeightVector::from_solver(weights),
        SolveDiagnostics {
            eigenvalues,
            rank,
            irrelevant_directions: irrelevant,
            negative_entries,
        },
    ))
}

/// Exact optimal weights for `union` under `spec`.
pub fn optimal_weights(
    union: &ValidatedUnion,
    spec: &MeasureSpec,
) -> Result<(WeightVector, WeightMethod)> {
    if spec.is_globally_coupled() {
        // Anchored at the per-state closed form so that, e.g., unanimous
        // voting yields weights proportional to population.
        let q = QuadraticForm::for_model(union, spec)?;
        let anchor: Vec<f64> = oracle::state_moments(union, spec)?
            .iter()
            .map(|m| m.abs_mean)
            .collect();
        let (g, _) = optimal_weights_anchored(&q, &anchor)?;
        Ok((g, WeightMethod::NormalEquations))
    } else {
        let ms = oracle::state_moments(union, spec)?;
        Ok((
            optimal_weights_independent_states(&ms),
            WeightMethod::ClosedForm,
        ))
    }
}

/// Leading-order optimal weights: `√N_ν` growth for independent voters and
/// subcritical Curie-Weiss, `N_ν^{3/4}` at the critical point, `N_ν` for a
/// non-degenerate collective bias or supercritical Curie-Weiss.
///
/// At the critical point only the exponent is known; the constant is 1.
pub fn asymptotic_weights(union: &ValidatedUnion, spec: &MeasureSpec) -> Result<WeightVector> {
    spec.validate()?;
    let weights = union
        .populations()
        .iter()
        .map(|&n| {
            let p = asymptotic_predictions(spec, n);
            p.abs_mean.unwrap_or_else(|| (n as f64).powf(p.exponent))
        })
        .collect();
    WeightVector::new(weights)
}

pub fn sqrt_weights(union: &ValidatedUnion) -> WeightVector {
    WeightVector::from_solver(
        union
            .populations()
            .iter()
            .map(|&n| (n as f64).sqrt())
            .collect(),
    )
}

pub fn proportional_weights(union: &ValidatedUnion) -> WeightVector {
    WeightVector::from_solver(union.populations().iter().map(|&n| n as f64).collect())
}

pub fn equal_weights(union: &ValidatedUnion) -> WeightVector {
    WeightVector::from_solver(vec![1.0; union.len()])
}

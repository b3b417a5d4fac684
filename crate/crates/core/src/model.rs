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

//! Federations, bias measures and voting-measure specifications.
//!
//! Everything here is immutable once constructed. Constructors validate, so a
//! value of any of these types always satisfies its invariants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Largest admissible state population.
pub const MAX_POPULATION: u64 = i32::MAX as u64;

const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpec {
    pub name: String,
    pub population: u64,
}

impl StateSpec {
    pub fn new(name: impl Into<String>, population: u64) -> Self {
        Self {
            name: name.into(),
            population,
        }
    }
}

/// Unvalidated list of member states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionSpec {
    pub states: Vec<StateSpec>,
}

/// A union whose populations are all odd, so no state vote can tie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedUnion {
    states: Vec<StateSpec>,
    total: u64,
}

pub fn validate_union(spec: UnionSpec) -> Result<ValidatedUnion> {
    if spec.states.is_empty() {
        return Err(Error::EmptyUnion);
    }
    let mut total = 0u64;
    for s in &spec.states {
        if s.population == 0 || s.population > MAX_POPULATION {
            return Err(Error::PopulationOutOfRange {
                state: s.name.clone(),
                population: s.population,
            });
        }
        if s.population % 2 == 0 {
            return Err(Error::EvenPopulation {
                state: s.name.clone(),
                population: s.population,
            });
        }
        total += s.population;
    }
    Ok(ValidatedUnion {
        states: spec.states,
        total,
    })
}

impl ValidatedUnion {
    /// Builds a union with states named `S1`, `S2`, ...
    pub fn from_populations(populations: &[u64]) -> Result<Self> {
        let states = populations
            .iter()
            .enumerate()
            .map(|(i, &p)| StateSpec::new(format!("S{}", i + 1), p))
            .collect();
        validate_union(UnionSpec { states })
    }

    pub fn states(&self) -> &[StateSpec] {
        &self.states
    }

    pub fn populations(&self) -> Vec<u64> {
        self.states.iter().map(|s| s.population).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Total number of voters `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn to_spec(&self) -> UnionSpec {
        UnionSpec {
            states: self.states.clone(),
        }
    }
}

/// One point of the half-line representation of a symmetric measure: mass
/// `weight / 2` at `+location` and at `-location` (full mass at 0 when the
/// location is 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfAtom {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum BiasRepr {
    Dirac,
    Uniform { nodes: usize },
    Atoms(Vec<HalfAtom>),
}

/// Symmetric law of the shared bias `ζ` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasMeasure(BiasRepr);

/// Read-only view of a [`BiasMeasure`], for serialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasKind<'a> {
    PointMass,
    Uniform { nodes: usize },
    SymmetricAtoms(&'a [HalfAtom]),
}

impl BiasMeasure {
    /// Point mass at `location`. Only `0` gives a sign-symmetric measure.
    pub fn point_mass(location: f64) -> Result<Self> {
        if location == 0.0 {
            Ok(Self(BiasRepr::Dirac))
        } else {
            Err(Error::InvalidBiasMeasure(format!(
                "point mass at {location} is not symmetric; only 0 is allowed"
            )))
        }
    }

    /// `δ₀`: voters are independent fair coins.
    pub fn dirac_zero() -> Self {
        Self(BiasRepr::Dirac)
    }

    /// Uniform law on `[-1, 1]`, integrated with the default rule.
    pub fn uniform() -> Self {
        Self(BiasRepr::Uniform {
            nodes: quadrature::DEFAULT_NODES,
        })
    }

    /// Uniform law integrated with an `nodes`-point Gauss-Legendre rule on
    /// each half of `[-1, 1]`.
    pub fn uniform_with_nodes(nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidBiasMeasure(
                "quadrature needs at least one node".into(),
            ));
        }
        Ok(Self(BiasRepr::Uniform { nodes }))
    }

    /// Symmetric atoms given on the half-line `[0, 1]`.
    pub fn symmetric_atoms(atoms: Vec<HalfAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidBiasMeasure("no atoms".into()));
        }
        let mut total = 0.0;
        for a in &atoms {
            if !a.location.is_finite() || !(0.0..=1.0).contains(&a.location) {
                return Err(Error::InvalidBiasMeasure(format!(
                    "atom location {} outside [0, 1]",
                    a.location
                )));
            }
            if !a.weight.is_finite() || a.weight < 0.0 {
                return Err(Error::InvalidBiasMeasure(format!(
                    "atom weight {} must be finite and nonnegative",
                    a.weight
                )));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidBiasMeasure(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(Self(BiasRepr::Atoms(atoms)))
    }

    /// Mass `½` at each of `±location`.
    pub fn two_point(location: f64) -> Result<Self> {
        Self::symmetric_atoms(vec![HalfAtom {
            location,
            weight: 1.0,
        }])
    }

    /// Mass `½` at each of `±1`: every state votes unanimously.
    pub fn unanimous() -> Self {
        Self(BiasRepr::Atoms(vec![HalfAtom {
            location: 1.0,
            weight: 1.0,
        }]))
    }

    /// Builds a measure from atoms on the whole line `[-1, 1]`, rejecting it
    /// unless it is invariant under `ζ -> -ζ`.
    pub fn from_signed_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut sorted: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.1 != 0.0).collect();
        for &(z, w) in &sorted {
            if !z.is_finite() || z.abs() > 1.0 || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidBiasMeasure(format!("bad atom ({z}, {w})")));
            }
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Merge duplicate locations.
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (z, w) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == z => last.1 += w,
                _ => merged.push((z, w)),
            }
        }
        let mut half = Vec::new();
        for &(z, w) in &merged {
            if z < 0.0 {
                continue;
            }
            if z == 0.0 {
                half.push(HalfAtom {
                    location: 0.0,
                    weight: w,
                });
                continue;
            }
            let mirror = merged
                .iter()
                .find(|m| m.0 == -z)
                .map(|m| m.1)
                .unwrap_or(0.0);
            if (mirror - w).abs() > MASS_TOLERANCE {
                return Err(Error::InvalidBiasMeasure(format!(
                    "mass {w} at {z} but {mirror} at {}",
                    -z
                )));
            }
            half.push(HalfAtom {
                location: z,
                weight: 2.0 * w,
            });
        }
        let neg_without_mirror = merged
            .iter()
            .any(|&(z, _)| z < 0.0 && !merged.iter().any(|m| m.0 == -z));
        if neg_without_mirror {
            return Err(Error::InvalidBiasMeasure(
                "negative atom without a positive mirror".into(),
            ));
        }
        if half.len() == 1 && half[0].location == 0.0 {
            return Self::symmetric_atoms(half).map(|_| Self::dirac_zero());
        }
        Self::symmetric_atoms(half)
    }

    pub fn kind(&self) -> BiasKind<'_> {
        match &self.0 {
            BiasRepr::Dirac => BiasKind::PointMass,
            BiasRepr::Uniform { nodes } => BiasKind::Uniform { nodes: *nodes },
            BiasRepr::Atoms(a) => BiasKind::SymmetricAtoms(a),
        }
    }

    pub fn is_dirac_zero(&self) -> bool {
        match &self.0 {
            BiasRepr::Dirac => true,
            BiasRepr::Atoms(a) => a.iter().all(|h| h.location == 0.0 || h.weight == 0.0),
            BiasRepr::Uniform { .. } => false,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.0, BiasRepr::Uniform { .. })
    }

    /// Half-line discretization used by every integral against this measure.
    /// Exact for atoms; Gauss-Legendre on `[0, 1]` for the uniform law,
    /// mirrored onto `[-1, 0]`, so the kink of `|ζ|` at 0 is never straddled.
    pub fn half_line_nodes(&self) -> Vec<HalfAtom> {
        match &self.0 {
            BiasRepr::Dirac => vec![HalfAtom {
                location: 0.0,
                weight: 1.0,
            }],
            BiasRepr::Uniform { nodes } => {
                let (x, w) = quadrature::gauss_legendre_unit(*nodes);
                x.into_iter()
                    .zip(w)
                    .map(|(location, weight)| HalfAtom { location, weight })
                    .collect()
            }
            BiasRepr::Atoms(a) => a.iter().copied().filter(|h| h.weight > 0.0).collect(),
        }
    }

    /// `(μ₁, μ₂) = (∫|ζ| dμ, ∫ζ² dμ)`.
    pub fn moments(&self) -> (f64, f64) {
        bias_moments(self)
    }
}

pub fn bias_moments(mu: &BiasMeasure) -> (f64, f64) {
    mu.half_line_nodes().iter().fold((0.0, 0.0), |(m1, m2), h| {
        (
            m1 + h.weight * h.location,
            m2 + h.weight * h.location * h.location,
        )
    })
}

/// How the bias is shared among states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// A fresh bias per state; states are independent.
    PerState,
    /// One bias for the whole union.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Independent,
    CollectiveBias {
        bias: BiasMeasure,
        coupling: Coupling,
    },
    /// Curie-Weiss model inside each state, states independent.
    CurieWeiss {
        beta: f64,
    },
    /// Every voter of the union votes the same way.
    Unanimity,
}

impl MeasureSpec {
    pub fn curie_weiss(beta: f64) -> Result<Self> {
        let spec = Self::CurieWeiss { beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn collective_bias(bias: BiasMeasure, coupling: Coupling) -> Self {
        Self::CollectiveBias { bias, coupling }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::CurieWeiss { beta } if !beta.is_finite() || *beta < 0.0 => Err(
                Error::InvalidMeasure(format!("beta must be finite and >= 0, got {beta}")),
            ),
            _ => Ok(()),
        }
    }

    /// True when the margins of different states are dependent.
    pub fn is_globally_coupled(&self) -> bool {
        match self {
            Self::CollectiveBias { bias, coupling } => {
                *coupling == Coupling::Global && !bias.is_dirac_zero()
            }
            Self::Unanimity => true,
            _ => false,
        }
    }

    /// The bias measure when this spec is a collective-bias model. Independent
    /// voters map to `δ₀` and unanimity to atoms at `±1`.
    pub fn as_bias_measure(&self) -> Option<BiasMeasure> {
        match self {
            Self::Independent => Some(BiasMeasure::dirac_zero()),
            Self::CollectiveBias { bias, .. } => Some(bias.clone()),
            Self::Unanimity => Some(BiasMeasure::unanimous()),
            Self::CurieWeiss { .. } => None,
        }
    }
}

/// Council weights `g_ν`, aligned with the union's state order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidWeights(format!("weight {i} is not finite")));
            }
            if w < 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "weight {i} is negative ({w})"
                )));
            }
        }
        Ok(Self(weights))
    }

    /// Unconstrained solver output; may hold negative entries.
    pub(crate) fn from_solver(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn for_union(weights: Vec<f64>, union: &ValidatedUnion) -> Result<Self> {
        if weights.len() != union.len() {
            return Err(Error::DimensionMismatch {
                expected: union.len(),
                got: weights.len(),
            });
        }
        Self::new(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `G = Σ g_ν`.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Weights rescaled so that `G = 1`. All zeros stay zero.
    pub fn normalized(&self) -> Vec<f64> {
        let g = self.total();
        if g == 0.0 {
            return self.0.clone();
        }
        self.0.iter().map(|w| w / g).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|w| w * factor).collect())
    }

    pub fn rescaled_to_total(&self, total: f64) -> Result<Self> {
        let g = self.total();
        if g <= 0.0 {
            return Err(Error::InvalidWeights("cannot rescale zero weights".into()));
        }
        Ok(self.scaled(total / g))
    }

    /// Council vote `C = Σ g_ν χ_ν` for the given delegate votes.
    pub fn council_vote(&self, chi: &[i8]) -> f64 {
        self.0.iter().zip(chi).map(|(g, &c)| g * c as f64).sum()
    }
}

/// Delegate vote `χ = sign(S)`; a margin of 0 counts as a no.
pub fn delegate_vote(margin: i64) -> i8 {
    if margin > 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_total_is_sum_of_populations() {
        let u = ValidatedUnion::from_populations(&[3, 5]).unwrap();
        assert_eq!(u.total(), 8);
        assert_eq!(u.len(), 2);
    }

    #[test]
    fn even_population_rejected() {
        let err = ValidatedUnion::from_populations(&[4]).unwrap_err();
        assert_eq!(
            err,
            Error::EvenPopulation {
                state: "S1".into(),
                population: 4
            }
        );
    }

    #[test]
    fn empty_union_rejected() {
        assert_eq!(
            validate_union(UnionSpec { states: vec![] }).unwrap_err(),
            Error::EmptyUnion
        );
    }

    #[test]
    fn oversized_population_rejected() {
        assert!(ValidatedUnion::from_populations(&[MAX_POPULATION + 2]).is_err());
        assert!(ValidatedUnion::from_populations(&[MAX_POPULATION]).is_ok());
    }

    #[test]
    fn bias_moment_examples() {
        assert_eq!(BiasMeasure::dirac_zero().moments(), (0.0, 0.0));
        let (m1, m2) = BiasMeasure::two_point(0.6).unwrap().moments();
        assert!((m1 - 0.6).abs() < 1e-15 && (m2 - 0.36).abs() < 1e-15);
    }

    #[test]
    fn uniform_moments_match_analytic_integrals() {
        // ∫_{-1}^{1} |ζ|/2 dζ = 1/2 and ∫ ζ²/2 dζ = 1/3.
        for nodes in [1, 2, 8, 64] {
            let (m1, m2) = BiasMeasure::uniform_with_nodes(nodes).unwrap().moments();
            assert!((m1 - 0.5).abs() < 1e-14, "nodes={nodes}");
            if nodes >= 2 {
                assert!((m2 - 1.0 / 3.0).abs() < 1e-14, "nodes={nodes}");
            }
            assert!(m2 >= m1 * m1);
        }
    }

    #[test]
    fn asymmetric_measures_rejected() {
        assert!(BiasMeasure::point_mass(0.3).is_err());
        assert!(BiasMeasure::point_mass(0.0).is_ok());
        assert!(BiasMeasure::from_signed_atoms(&[(0.5, 0.7), (-0.5, 0.3)]).is_err());
        assert!(BiasMeasure::from_signed_atoms(&[(-0.5, 1.0)]).is_err());
        let ok = BiasMeasure::from_signed_atoms(&[(0.5, 0.25), (-0.5, 0.25), (0.0, 0.5)]).unwrap();
        let (m1, m2) = ok.moments();
        assert!((m1 - 0.25).abs() < 1e-15 && (m2 - 0.125).abs() < 1e-15);
    }

    #[test]
    fn atoms_must_have_unit_mass() {
        let bad = BiasMeasure::symmetric_atoms(vec![HalfAtom {
            location: 0.5,
            weight: 0.9,
        }]);
        assert!(bad.is_err());
        assert!(BiasMeasure::symmetric_atoms(vec![HalfAtom {
            location: 1.5,
            weight: 1.0
        }])
        .is_err());
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(MeasureSpec::curie_weiss(-0.1).is_err());
        assert!(MeasureSpec::curie_weiss(f64::NAN).is_err());
        assert!(MeasureSpec::curie_weiss(0.0).is_ok());
    }

    #[test]
    fn coupling_classification() {
        assert!(MeasureSpec::Unanimity.is_globally_coupled());
        assert!(!MeasureSpec::Independent.is_globally_coupled());
        let g = MeasureSpec::collective_bias(BiasMeasure::dirac_zero(), Coupling::Global);
        assert!(!g.is_globally_coupled());
        let g = MeasureSpec::collective_bias(BiasMeasure::uniform(), Coupling::Global);
        assert!(g.is_globally_coupled());
    }

    #[test]
    fn weights_validated() {
        assert!(WeightVector::new(vec![1.0, -0.5]).is_err());
        assert!(WeightVector::new(vec![1.0, f64::INFINITY]).is_err());
        let u = ValidatedUnion::from_populations(&[3, 5]).unwrap();
        assert!(WeightVector::for_union(vec![1.0], &u).is_err());
        let w = WeightVector::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(w.total(), 4.0);
        assert_eq!(w.normalized(), vec![0.25, 0.75]);
    }

    #[test]
    fn delegate_vote_is_sign() {
        assert_eq!(delegate_vote(3), 1);
        assert_eq!(delegate_vote(-1), -1);
    }
}

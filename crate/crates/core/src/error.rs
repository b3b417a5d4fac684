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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("union has no states")]
    EmptyUnion,
    #[error("state `{state}` has even population {population}")]
    EvenPopulation { state: String, population: u64 },
    #[error("state `{state}` has population {population} outside 1..=2147483647")]
    PopulationOutOfRange { state: String, population: u64 },
    #[error("invalid bias measure: {0}")]
    InvalidBiasMeasure(String),
    #[error("invalid voting measure: {0}")]
    InvalidMeasure(String),
    #[error("bias {0} outside [-1, 1]")]
    BiasOutOfRange(f64),
    #[error("weights: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

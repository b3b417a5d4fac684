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

//! Two-tier voting systems: a union of states sends one delegate per state to
//! a council, and each delegate votes with the majority of their state. This
//! crate computes how well the weighted council vote tracks the popular vote
//! across the union.
//!
//! * [`model`] holds the federation, bias-measure and voting-measure types.
//! * [`oracle`] computes exact margin distributions, moments and
//!   cross-moments, plus the large-population predictor formulas.
//! * [`montecarlo`] draws reproducible margin samples and estimates moments
//!   and deficits with standard errors.
//! * [`weights`] finds council weights minimizing the expected squared gap.
//! * [`deficit`] evaluates that expected squared gap for arbitrary weights.

pub mod deficit;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod quadrature;
pub mod weights;

pub use error::{Error, Result};

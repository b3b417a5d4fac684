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

//! Configuration-driven experiments for two-tier voting systems.

pub mod config;
pub mod output;
pub mod run;

use config::ExperimentKind;
use output::{render, Format, Metadata};
use run::RunError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_GATE: i32 = 2;

/// Runs one subcommand on a config document and returns the rendered output
/// with its exit status.
pub fn execute(
    kind: ExperimentKind,
    config_text: &str,
    seed_override: Option<u64>,
    format: Format,
) -> Result<(String, i32), RunError> {
    let mut cfg = config::parse(config_text).map_err(RunError::Config)?;
    if let Some(seed) = seed_override {
        cfg.experiment.seed = Some(seed);
    }
    let exp = cfg.validate().map_err(RunError::Config)?;
    let canonical = exp.to_config().to_json();
    let report = run::run(kind, &exp)?;
    let meta = Metadata::new(kind.as_str(), &canonical, exp.seed);
    let status = if report.gate_failed {
        EXIT_GATE
    } else {
        EXIT_OK
    };
    Ok((render(&report, &meta, format), status))
}

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

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twotier::config::ExperimentKind;
use twotier::output::Format;
use twotier::{execute, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "twotier", version, about = "Two-tier voting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Council weights for every configured scheme.
    Weights(CommonArgs),
    /// Expected democracy deficit per weight scheme.
    Deficit(CommonArgs),
    /// Monte Carlo estimates against the exact oracle; exits 2 on a failed gate.
    Validate(CommonArgs),
    /// Exact quantities over a grid of populations or inverse temperatures.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Weights(a) => (ExperimentKind::Weights, a),
        Command::Deficit(a) => (ExperimentKind::Deficit, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        pool = pool.num_threads(w.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let result = pool.install(|| execute(kind, &text, args.seed, args.format));
    match result {
        Ok((rendered, status)) => {
            let written = match &args.out {
                Some(path) => std::fs::write(path, rendered),
                None => {
                    print!("{rendered}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("cannot write output: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            ExitCode::from(status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}

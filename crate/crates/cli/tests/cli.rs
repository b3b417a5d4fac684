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

//! End-to-end runs of the `twotier` binary and its library entry point.

use std::path::Path;
use std::process::{Command, Output};

use twotier::config::ExperimentKind;
use twotier::output::Format;

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn twotier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twotier"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_lib(kind: ExperimentKind, config: &str) -> (Vec<Vec<String>>, i32) {
    let (text, status) = twotier::execute(kind, config, None, Format::Csv).unwrap();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (rows, status)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

/// E|S| for independent fair voters: N·C(N−1, (N−1)/2)/2^(N−1).
fn independent_abs_mean(n: u64) -> f64 {
    let m = (n - 1) / 2;
    let central = (1..=m).fold(1.0, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64);
    n as f64 * central
}

fn two_states(measure: &str, rest: &str) -> String {
    format!(
        r#"{{"union": {{"states": [{{"name": "A", "population": 101}}, {{"name": "B", "population": 401}}]}},
            "measure": {measure}{rest}}}"#
    )
}

#[test]
fn independent_weights_follow_square_root_law() {
    let (rows, status) = run_lib(
        ExperimentKind::Weights,
        &two_states(r#"{"kind": "independent"}"#, ""),
    );
    assert_eq!(status, 0);
    assert_eq!(rows[0][4], "closed-form");
    let ratio = num(&rows[1][2]) / num(&rows[0][2]);
    let exact = independent_abs_mean(401) / independent_abs_mean(101);
    assert!((ratio - exact).abs() < 1e-10 * exact, "{ratio} vs {exact}");
    assert!((ratio - 1.993).abs() / 1.993 < 5e-3, "{ratio}");
    let normalized: f64 = rows.iter().map(|r| num(&r[3])).sum();
    assert!((normalized - 1.0).abs() < 1e-14);
}

#[test]
fn uniform_bias_weights_approach_proportionality() {
    let measure =
        r#"{"kind": "collective_bias", "bias": {"type": "uniform"}, "coupling": "per_state"}"#;
    let (rows, _) = run_lib(ExperimentKind::Weights, &two_states(measure, ""));
    let ratio = num(&rows[1][2]) / num(&rows[0][2]);
    // A uniform bias makes the yes-count uniform on {0..N}, so E|S| = (N+1)/2.
    assert!((ratio - 201.0 / 51.0).abs() < 1e-10, "{ratio}");
    assert!((ratio - 3.97).abs() / 3.97 < 1e-2);
}

#[test]
fn unanimity_weights_are_proportional() {
    let (rows, _) = run_lib(
        ExperimentKind::Weights,
        &two_states(r#"{"kind": "unanimity"}"#, ""),
    );
    let ratio = num(&rows[1][2]) / num(&rows[0][2]);
    assert!((ratio - 401.0 / 101.0).abs() < 1e-10, "{ratio}");
}

#[test]
fn global_bias_deficit_depends_only_on_total_weight() {
    let config = r#"{"union": {"states": [{"name": "A", "population": 10001}, {"name": "B", "population": 40001}]},
                     "measure": {"kind": "collective_bias", "bias": {"type": "uniform"}, "coupling": "global"},
                     "weights": [[1.0, 1.0], [1.0, 4.0]], "total_weight": "mu1_n"}"#;
    let (rows, _) = run_lib(ExperimentKind::Deficit, config);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((num(&r[1]) - 25001.0).abs() < 1e-9);
    }
    let (a, b) = (num(&rows[0][2]), num(&rows[1][2]));
    assert!((a - b).abs() / a < 1e-2, "{a} vs {b}");
}

#[test]
fn independent_optimal_per_voter_deficit() {
    let config = r#"{"union": {"states": [{"name": "A", "population": 1001}, {"name": "B", "population": 4001}]},
                     "measure": {"kind": "independent"}}"#;
    let (rows, _) = run_lib(ExperimentKind::Deficit, config);
    let n = 5002.0;
    let expected = (std::f64::consts::PI - 2.0) / std::f64::consts::PI / n;
    let per_voter = num(&rows[0][3]);
    assert!(
        (per_voter - expected).abs() / expected < 2e-2,
        "{per_voter}"
    );
    assert!(num(&rows[0][5]) < 2e-2);
}

#[test]
fn unanimity_with_proportional_weights_has_no_deficit() {
    let (rows, _) = run_lib(
        ExperimentKind::Deficit,
        &two_states(r#"{"kind": "unanimity"}"#, r#", "weights": "proportional""#),
    );
    assert_eq!(num(&rows[0][2]), 0.0);
}

#[test]
fn validate_independent_passes_gate() {
    let config = r#"{"union": {"states": [{"name": "A", "population": 101}]},
                     "measure": {"kind": "independent"},
                     "experiment": {"n_samples": 100000, "seed": 11}}"#;
    let (rows, status) = run_lib(ExperimentKind::Validate, config);
    assert_eq!(status, 0);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(num(&r[5]).abs() <= 4.0, "{r:?}");
        assert_eq!(r[6], "pass");
    }
}

#[test]
fn validate_unanimity_is_exact() {
    let config = two_states(
        r#"{"kind": "unanimity"}"#,
        r#", "weights": "proportional", "experiment": {"n_samples": 1000, "seed": 3}"#,
    );
    let (rows, status) = run_lib(ExperimentKind::Validate, &config);
    assert_eq!(status, 0);
    for r in &rows {
        assert_eq!(num(&r[3]), 0.0, "{r:?}");
        assert_eq!(num(&r[5]), 0.0, "{r:?}");
    }
}

#[test]
fn corrupted_weights_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (i, weights) in ["[-1.0, 2.0]", "[1.0]", "[1.0, 2.0, 3.0]", "\"bogus\""]
        .iter()
        .enumerate()
    {
        let cfg = write_config(
            dir.path(),
            &format!("bad{i}.json"),
            &two_states(
                r#"{"kind": "independent"}"#,
                &format!(r#", "weights": {weights}, "experiment": {{"seed": 1}}"#),
            ),
        );
        let out = twotier(&["validate", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "weights {weights}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn mismatched_deficit_trips_the_gate() {
    use twotier_core::deficit::exact_deficit;
    use twotier_core::model::{MeasureSpec, ValidatedUnion, WeightVector};
    use twotier_core::montecarlo::{estimate_deficit, sample_margins};

    let union = ValidatedUnion::from_populations(&[101, 401]).unwrap();
    let spec = MeasureSpec::Independent;
    let batch = sample_margins(&union, &spec, 5, 100_000).unwrap();
    let g = WeightVector::new(vec![8.0, 16.0]).unwrap();
    let corrupted = WeightVector::new(vec![16.0, 8.0]).unwrap();
    let truth = exact_deficit(&union, &spec, &g).unwrap();
    assert!(estimate_deficit(&batch, &g).unwrap().z_score(truth).abs() <= 4.0);
    assert!(
        estimate_deficit(&batch, &corrupted)
            .unwrap()
            .z_score(truth)
            .abs()
            > 4.0
    );
}

#[test]
fn gate_failure_exits_with_two() {
    // Two draws from a strongly ordered phase agree, so the standard error
    // vanishes while the exact mean differs.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cw.json",
        r#"{"union": {"states": [{"name": "A", "population": 101}]},
            "measure": {"kind": "curie_weiss", "beta": 8.0},
            "experiment": {"n_samples": 2, "seed": 1}}"#,
    );
    let out = twotier(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",fail"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{\"union\": ".to_string(), "line"),
        (
            "even.json",
            r#"{"union": {"states": [{"name": "A", "population": 100}]}, "measure": {"kind": "independent"}}"#
                .to_string(),
            "union.states[0].population",
        ),
        (
            "noseed.json",
            r#"{"union": {"states": [{"name": "A", "population": 5}]}, "measure": {"kind": "independent"}}"#
                .to_string(),
            "experiment.seed",
        ),
        (
            "kind.json",
            r#"{"union": {"states": [{"name": "A", "population": 5}]}, "measure": {"kind": "independent"},
                "experiment": {"kind": "weights", "seed": 1}}"#
                .to_string(),
            "experiment.kind",
        ),
    ];
    for (name, body, needle) in cases {
        let cfg = write_config(dir.path(), name, &body);
        let out = twotier(&["validate", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(needle), "{name}: {err}");
    }
    let out = twotier(&["weights", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_recovers_critical_exponent() {
    let config = r#"{"union": {"states": [{"name": "A", "population": 1001}]},
                     "measure": {"kind": "curie_weiss", "beta": 1.0},
                     "experiment": {"sweep": {"axis": "population", "grid": [1001, 10001, 100001]}}}"#;
    let (rows, _) = run_lib(ExperimentKind::Sweep, config);
    let fit = rows.iter().find(|r| r[0] == "fit").unwrap();
    assert!((num(&fit[2]) - 0.75).abs() <= 0.02, "{fit:?}");
}

#[test]
fn independent_sweep_per_voter_times_n_is_flat() {
    let config = r#"{"union": {"states": [{"name": "A", "population": 101}, {"name": "B", "population": 303}]},
                     "measure": {"kind": "independent"},
                     "experiment": {"sweep": {"axis": "population", "grid": [1000, 10000, 100000]}}}"#;
    let (rows, _) = run_lib(ExperimentKind::Sweep, config);
    let target = (std::f64::consts::PI - 2.0) / std::f64::consts::PI;
    let values: Vec<f64> = rows
        .iter()
        .filter(|r| r[1] == "per_voter_deficit_times_n")
        .map(|r| num(&r[2]))
        .collect();
    assert_eq!(values.len(), 3);
    for v in &values {
        assert!((v - target).abs() / target < 1e-2, "{v}");
    }
}

#[test]
fn uniform_bias_sweep_per_voter_tends_to_one_twelfth() {
    for coupling in ["per_state", "global"] {
        let config = format!(
            r#"{{"union": {{"states": [{{"name": "A", "population": 101}}]}},
                "measure": {{"kind": "collective_bias", "bias": {{"type": "uniform"}}, "coupling": "{coupling}"}},
                "experiment": {{"sweep": {{"axis": "population", "grid": [101, 1001, 10001]}}}}}}"#
        );
        let (rows, _) = run_lib(ExperimentKind::Sweep, &config);
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r[1] == "per_voter_deficit")
            .map(|r| (num(&r[2]) - 1.0 / 12.0).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{coupling}: {gaps:?}");
        assert!(gaps[2] * 12.0 < 1e-3, "{coupling}: {gaps:?}");
    }
}

#[test]
fn beta_sweep_tracks_magnetization() {
    let config = r#"{"union": {"states": [{"name": "A", "population": 10001}]},
                     "measure": {"kind": "curie_weiss", "beta": 2.0},
                     "experiment": {"sweep": {"axis": "beta", "grid": [1.5, 2.0, 4.0]}}}"#;
    let (rows, _) = run_lib(ExperimentKind::Sweep, config);
    let fractions: Vec<&Vec<String>> = rows
        .iter()
        .filter(|r| r[1] == "abs_mean_over_n[A]")
        .collect();
    assert_eq!(fractions.len(), 3);
    for r in fractions {
        assert!(num(&r[4]) < 2e-2, "{r:?}");
    }
}

#[test]
fn outputs_carry_provenance_and_respect_flags() {
    let dir = tempfile::tempdir().unwrap();
    let compact = r#"{"union":{"states":[{"name":"A","population":5}]},"measure":{"kind":"independent"},"experiment":{"seed":4}}"#;
    let spaced = "{\n  \"union\": {\"states\": [{\"name\": \"A\", \"population\": 5}]},\n  \"measure\": {\"kind\": \"independent\"},\n  \"experiment\": {\"seed\": 4}\n}\n";
    let a = write_config(dir.path(), "a.json", compact);
    let b = write_config(dir.path(), "b.json", spaced);
    let out_a = twotier(&["weights", "--config", a.to_str().unwrap()]);
    let out_b = twotier(&["weights", "--config", b.to_str().unwrap()]);
    assert_eq!(out_a.status.code(), Some(0));
    // The hash covers the canonical config, not its formatting.
    assert_eq!(out_a.stdout, out_b.stdout);
    let text = String::from_utf8(out_a.stdout).unwrap();
    assert!(text.starts_with(&format!("# tool: twotier {}\n", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("# config_sha256: "));
    assert!(text.contains("# seed: 4\n"));
    let row = text.lines().last().unwrap();
    assert!(row.starts_with("A,5,1.87500000000000"), "{row}");
    assert!(row.ends_with(",1.0000000000000000e0,closed-form"), "{row}");

    let json_path = dir.path().join("out.json");
    let out = twotier(&[
        "weights",
        "--config",
        a.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "9",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["seed"], 9);
    assert_eq!(doc["columns"][2], "weight_raw");
    assert!((doc["rows"][0][2].as_f64().unwrap() - 1.875).abs() < 1e-14);
}

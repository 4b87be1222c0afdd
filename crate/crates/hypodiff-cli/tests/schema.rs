//! Schema validation: bad configurations are rejected with located
//! error messages, good ones build the declared problem.

use std::io::Write;

use hypodiff_cli::{parse_config, CliError};

fn write_config(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn minimal_abs_config_parses() {
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "abs"}, "x0": [1.0], "seed": 1
        }"#,
    );
    let config = parse_config(f.path()).unwrap();
    assert_eq!(config.dimension, 1);
    let built = hypodiff_cli::build::build(&config.problem, "problem").unwrap();
    assert_eq!(built.dim(), 1);
}

#[test]
fn unknown_op_is_rejected_with_path() {
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "frobnicate"}, "x0": [1.0], "seed": 1
        }"#,
    );
    let config = parse_config(f.path()).unwrap();
    let err = hypodiff_cli::build::build(&config.problem, "problem").unwrap_err();
    match err {
        CliError::Schema(msgs) => {
            assert!(msgs[0].contains("problem/frobnicate"));
            assert!(msgs[0].contains("unknown op"));
        }
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn oversized_alpha_is_rejected_at_parse_time() {
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "abs"}, "x0": [1.0], "seed": 1,
            "constants": {"L": 1.0},
            "solver": {"method": "mhd_constant", "alpha": 3.0,
                       "stop": {"max_iters": 10}}
        }"#,
    );
    match parse_config(f.path()) {
        Err(CliError::Schema(msgs)) => {
            assert!(msgs.iter().any(|m| m.contains("alpha ≥ 2/L")), "{msgs:?}");
        }
        other => panic!("expected schema rejection, got {other:?}"),
    }
}

#[test]
fn dimension_mismatch_across_tree_is_rejected() {
    // conic combination of a 1-D atom with a 2-D atom
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "conic", "params": {"lambdas": [1.0, 1.0]},
                        "args": [{"op": "abs"},
                                 {"op": "dist_orthant", "params": {"dim": 2}}]},
            "x0": [1.0], "seed": 1
        }"#,
    );
    let config = parse_config(f.path()).unwrap();
    let err = hypodiff_cli::build::build(&config.problem, "problem").unwrap_err();
    assert!(matches!(err, CliError::Schema(_)), "{err:?}");
}

#[test]
fn x0_length_must_match_dimension() {
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 2,
            "problem": {"op": "abs"}, "x0": [1.0], "seed": 1
        }"#,
    );
    match parse_config(f.path()) {
        Err(CliError::Schema(msgs)) => {
            assert!(msgs.iter().any(|m| m.contains("x0")), "{msgs:?}");
        }
        other => panic!("expected schema rejection, got {other:?}"),
    }
}

#[test]
fn every_documented_op_builds() {
    let cases = [
        r#"{"op": "abs"}"#,
        r#"{"op": "polyhedral", "params": {"offsets": [0.0, -1.0], "slopes": [[1.0], [-2.0]]}}"#,
        r#"{"op": "sublinear", "params": {"slopes": [[1.0], [-1.0]]}}"#,
        r#"{"op": "norm_affine", "params": {"a": [[2.0]], "b": [0.5]}}"#,
        r#"{"op": "max_eigenvalue", "params": {"l": 2}}"#,
        r#"{"op": "dist_orthant", "params": {"dim": 1}}"#,
        r#"{"op": "quadratic", "params": {"q": [[2.0]], "c": [0.0], "r": 1.0}}"#,
        r#"{"op": "conic", "params": {"lambdas": [1.0, 0.5]},
            "args": [{"op": "abs"}, {"op": "abs"}]}"#,
        r#"{"op": "max", "args": [{"op": "abs"},
            {"op": "quadratic", "params": {"q": [[1.0]], "c": [0.0], "r": -0.5}}]}"#,
        r#"{"op": "affine", "params": {"a": [[2.0]], "b": [1.0]}, "args": [{"op": "abs"}]}"#,
        r#"{"op": "outer_sum", "args": [{"op": "abs"}, {"op": "abs"}]}"#,
        r#"{"op": "outer_exp", "args": [{"op": "abs"}]}"#,
        r#"{"op": "power", "params": {"p": 2.0}, "args": [{"op": "abs"}]}"#,
    ];
    for body in cases {
        let node: hypodiff_cli::config::ExprNode = serde_json::from_str(body).unwrap();
        let f = hypodiff_cli::build::build(&node, "problem")
            .unwrap_or_else(|e| panic!("{body}: {e}"));
        // the built function evaluates and produces a valid set
        let x = vec![0.7; f.dim()];
        let _ = f.value(&x);
        assert!(f.hypodifferential(&x).validate().valid, "{body}");
    }
}

#[test]
fn solver_failure_maps_to_exit_code_2() {
    // exact-step on a non-exact map is a solver failure, not a schema one
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "quadratic", "params": {"q": [[2.0]], "c": [0.0], "r": 0.0}},
            "x0": [1.0], "seed": 1,
            "solver": {"method": "mhd_exact_step", "stop": {"max_iters": 10}}
        }"#,
    );
    let config = parse_config(f.path()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = hypodiff_cli::run(
        &config,
        &hypodiff_cli::RunOptions {
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, CliError::Solver(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn verify_only_mode_skips_the_solver() {
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "abs"}, "x0": [1.0], "seed": 1,
            "solver": {"method": "mhd_exact_step", "stop": {"eps_dist": 1e-9, "max_iters": 10},
                       "tol_sub": 1e-11},
            "verify": {"checks": ["consistency"], "lower": [-2.0], "upper": [2.0],
                       "samples": 50}
        }"#,
    );
    let config = parse_config(f.path()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let outcome = hypodiff_cli::run(
        &config,
        &hypodiff_cli::RunOptions {
            out_dir: dir.path().to_path_buf(),
            verify_only: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(outcome.trace_path.is_none());
    assert!(outcome.summary.solver.is_none());
    assert_eq!(outcome.summary.checks.len(), 1);
    assert!(!outcome.certification_failed);
}

#[test]
fn unknown_check_name_is_rejected() {
    let f = write_config(
        r#"{
            "version": 1, "name": "t", "dimension": 1,
            "problem": {"op": "abs"}, "x0": [1.0], "seed": 1,
            "verify": {"checks": ["frob"], "lower": [-1.0], "upper": [1.0]}
        }"#,
    );
    match parse_config(f.path()) {
        Err(CliError::Schema(msgs)) => {
            assert!(msgs.iter().any(|m| m.contains("unknown check")), "{msgs:?}");
        }
        other => panic!("expected schema rejection, got {other:?}"),
    }
}

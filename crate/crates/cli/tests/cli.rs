use std::path::PathBuf;
use std::process::Command as Process;

use clap::Parser;
use forrelation_cli::{emit_scaling_table, run, Cli, Report, TableKind};
use serde_json::Value;

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("forr").chain(args.iter().copied())).expect("arguments parse")
}

fn report(args: &[&str]) -> Report {
    run(&cli(args)).expect("command runs")
}

fn schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.v1.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_RUNS: &[&[&str]] = &[
    &["gen-instance", "--n", "6", "--reveal"],
    &["verify-bent", "--n", "8", "--instances", "5"],
    &["forrelation", "--n", "6", "--instances", "4"],
    &["play-game", "--game", "2", "--n", "12", "--ell", "16", "--trials", "40"],
    &["play-game", "--game", "1", "--n", "4", "--ell", "32", "--adversary", "full-table", "--trials", "8"],
    &["collision-experiment", "--n", "12", "--ells", "4,8", "--trials", "30"],
    &["count", "--formula", "gaussian", "--n", "4", "--k", "2", "--p", "2"],
    &["count", "--formula", "eligible", "--m", "9", "--k", "3", "--ell", "4"],
    &["gsp-experiment", "--p", "2", "--n", "8,10", "--k", "1", "--trials", "30"],
];

#[test]
fn verify_bent_reports_every_instance_bent() {
    let r = report(&["verify-bent", "--n", "8", "--instances", "50", "--seed", "7"]);
    assert_eq!(r.results["passed"], 50);
    let items = r.results["items"].as_array().unwrap();
    assert_eq!(items.len(), 50);
    assert!(items.iter().all(|i| i["bent"] == true && i["max_abs_numerator"] == 16));
}

#[test]
fn same_seed_reproduces_result_fields() {
    for args in SMALL_RUNS {
        let mut with_seed = args.to_vec();
        with_seed.extend(["--seed", "11"]);
        let a = report(&with_seed).reproducible_fields().unwrap();
        let b = report(&with_seed).reproducible_fields().unwrap();
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn different_seeds_change_sampled_results() {
    let a = report(&["gen-instance", "--n", "8", "--seed", "1"]);
    let b = report(&["gen-instance", "--n", "8", "--seed", "2"]);
    assert_ne!(a.results, b.results);
}

#[test]
fn game_two_budget_above_bound_names_the_bound() {
    let err = run(&cli(&["play-game", "--game", "2", "--n", "12", "--ell", "17"])).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("ℓ < (2^m + 1)/4"), "{msg}");
    assert!(run(&cli(&[
        "play-game",
        "--game",
        "2",
        "--n",
        "12",
        "--ell",
        "17",
        "--allow-large-budget",
        "--trials",
        "5"
    ]))
    .is_ok());
}

#[test]
fn invalid_parameters_are_named() {
    let cases: &[(&[&str], &str)] = &[
        (&["verify-bent", "--n", "7"], "7"),
        (&["play-game", "--game", "5", "--n", "12", "--ell", "4"], "game must be"),
        (&["play-game", "--game", "2", "--n", "12", "--ell", "4", "--adversary", "nobody"], "nobody"),
        (&["count", "--formula", "ratio-r", "--m", "3"], "--t"),
        (&["count", "--formula", "gaussian", "--n", "4", "--k", "2", "--p", "4"], "not prime"),
        (&["gsp-experiment", "--p", "2", "--n", "8", "--k", "8"], "k"),
    ];
    for (args, needle) in cases {
        let err = format!("{:#}", run(&cli(args)).unwrap_err());
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn reports_validate_against_shipped_schema() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    for args in SMALL_RUNS {
        let v = serde_json::to_value(report(args)).unwrap();
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let mut broken = serde_json::to_value(report(SMALL_RUNS[0])).unwrap();
    broken.as_object_mut().unwrap().remove("seed_chain");
    assert!(!validator.is_valid(&broken));
}

#[test]
fn scaling_tables() {
    assert_eq!(emit_scaling_table(TableKind::GameSweep, &[]).unwrap(), "n,ell,win_rate,stderr,trials\n");
    assert_eq!(emit_scaling_table(TableKind::GspSweep, &[]).unwrap(), "p,n,k,median_queries,q25,q75\n");

    let sweep = report(&["collision-experiment", "--n", "12", "--ells", "4,8,16", "--trials", "20"]);
    let csv = emit_scaling_table(TableKind::GameSweep, std::slice::from_ref(&sweep)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("12,4,"));
    assert!(lines[3].starts_with("12,16,") && lines[3].ends_with(",20"));

    let gsp = report(&["gsp-experiment", "--n", "8,9", "--trials", "10"]);
    let csv = emit_scaling_table(TableKind::GspSweep, std::slice::from_ref(&gsp)).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("2,9,1,"));

    assert!(emit_scaling_table(TableKind::GameSweep, &[sweep, gsp]).is_err());
}

#[test]
fn binary_writes_to_output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_forr"))
        .args(["count", "--formula", "telescoping", "--m", "5", "--seed", "3"])
        .env("FORR_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("count-3.json"));
    let text = std::fs::read_to_string(dir.path().join("count-3.json")).unwrap();
    let r: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(r.results["result"]["product"], r.results["result"]["closed_form"]);
}

#[test]
fn binary_fails_with_diagnostic() {
    let out = Process::new(env!("CARGO_BIN_EXE_forr"))
        .args(["play-game", "--game", "2", "--n", "12", "--ell", "40"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ℓ < (2^m + 1)/4"));

    let out = Process::new(env!("CARGO_BIN_EXE_forr"))
        .args([
            "count",
            "--formula",
            "gaussian",
            "--n",
            "4",
            "--k",
            "2",
            "--p",
            "2",
            "--output",
            "/nonexistent/dir/r.json",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write report"));
}

#[test]
fn csv_is_refused_for_non_sweep_commands() {
    let out =
        Process::new(env!("CARGO_BIN_EXE_forr")).args(["verify-bent", "--n", "4", "--format", "csv"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("csv output"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bellmark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellmark")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bound_prints_both_bounds() {
    let out = bellmark(&["bound", "--n", "3", "--k", "2", "--m", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("quadratic 2 "), "{text}");
    assert!(text.contains("linear 1.41421356"), "{text}");
    let anti = stdout(&bellmark(&["bound", "--n", "3", "--k", "2", "--m", "1", "--anticommute"]));
    assert!(anti.contains("quadratic 1 (2^0)"), "{anti}");
    let lin = stdout(&bellmark(&["bound", "--n", "4", "--k", "4", "--m", "4", "--linear"]));
    assert_eq!(lin.trim(), "linear 1 (2^0)");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&bellmark(&["--help"])), 0);
    assert_eq!(code(&bellmark(&["--version"])), 0);
    assert_eq!(code(&bellmark(&["frobnicate"])), 64);
    assert_eq!(code(&bellmark(&["bound", "--n", "3"])), 64);
    assert_eq!(code(&bellmark(&["bound", "--n", "3", "--k", "2", "--m", "2"])), 2);
    let missing = bellmark(&[
        "verify",
        "tightness",
        "--n",
        "3",
        "--partition",
        r#"{"n":3,"blocks":[[1],[2]]}"#,
    ]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("blocks"), "{}", stderr(&missing));
    let bad_x = bellmark(&["witness", "eval", "--state", r#"{"ghz_noise":{"n":3,"x":2}}"#, "--setup", "optimal"]);
    assert_eq!(code(&bad_x), 2);
    assert!(stderr(&bad_x).contains("ghz_noise.x"));
    let no_file = bellmark(&["optimize", "--state", "/nonexistent/state.json"]);
    assert_eq!(code(&no_file), 2);
    assert!(stderr(&no_file).contains("state"));
}

#[test]
fn dim_cap_env_var() {
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_bellmark"))
            .args(["witness", "eval", "--state", r#"{"ghz":{"n":4}}"#, "--setup", "optimal"])
            .env("BELLMARK_DIM_CAP", cap)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("8")), 2);
    assert_eq!(code(&run("16")), 0);
    let bad = run("lots");
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("BELLMARK_DIM_CAP"));
}

#[test]
fn witness_eval_detects_noisy_ghz() {
    let out = bellmark(&["witness", "eval", "--state", r#"{"ghz_noise":{"n":3,"x":0.9}}"#, "--setup", "optimal"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("detected=true"));
    let weak = bellmark(&["witness", "eval", "--state", r#"{"ghz_noise":{"n":3,"x":0.6}}"#, "--setup", "optimal"]);
    assert!(stdout(&weak).contains("detected=false"));
    let anti = bellmark(&[
        "witness",
        "eval",
        "--state",
        r#"{"ghz_noise":{"n":3,"x":0.6}}"#,
        "--setup",
        "optimal",
        "--anticommute",
    ]);
    assert!(stdout(&anti).contains("detected=true"), "{}", stdout(&anti));
}

#[test]
fn anticommute_flag_rejects_commuting_setup() {
    let setup = r#"{"sites":[{"A":{"bloch":[1,0,0]},"Aprime":{"bloch":[1,0,0]}},{"A":{"bloch":[1,0,0]},"Aprime":{"bloch":[0,1,0]}}]}"#;
    let out = bellmark(&["witness", "eval", "--state", r#"{"ghz":{"n":2}}"#, "--setup", setup, "--anticommute"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sites[0]"), "{}", stderr(&out));
}

#[test]
fn pipeline_round_trips_and_writes_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let setup_path = dir.path().join("setup.json");
    fs::write(
        &setup_path,
        r#"{"sites":[
            {"dim":2,"A":{"bloch":[1,0,0]},"Aprime":{"bloch":[0,1,0]}},
            {"dim":2,"A":{"bloch":[1,0,0]},"Aprime":{"bloch":[0,1,0]}},
            {"dim":2,"A":{"bloch":[1,0,0]},"Aprime":{"bloch":[0,1,0]}}]}"#,
    )
    .unwrap();
    let setup = setup_path.to_str().unwrap();
    let pair_path = dir.path().join("pair.json");
    let out = bellmark(&["bell", "build", "--setup", setup, "--out", pair_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let pair = read_json(&pair_path);
    assert_eq!(pair["subset"], serde_json::json!([1, 2, 3]));
    assert_eq!(pair["coefficients"].as_array().unwrap().len(), 8);
    assert_eq!(pair["B"]["dim"], 8);
    bellmark::io::matrix_from_value(&pair["Bprime"], "Bprime").unwrap();

    let corr_path = dir.path().join("corr.json");
    let corr = corr_path.to_str().unwrap();
    let out = bellmark(&["simulate", "--state", r#"{"ghz":{"n":3}}"#, "--setup", setup, "--shots", "20000", "--seed", "3", "--out", corr]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = read_json(&dir.path().join("corr.json.manifest.json"));
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seeds"]["sampling"], 3);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["inputs"][1]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_time_secs"].as_f64().is_some());

    let verdict_path = dir.path().join("verdict.json");
    let out = bellmark(&["witness", "from-data", "--correlations", corr, "--out", verdict_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let verdict = read_json(&verdict_path);
    let lhs = verdict["lhs_quadratic"].as_f64().unwrap();
    let se = verdict["lhs_se"].as_f64().unwrap();
    assert!((lhs - 4.0).abs() <= 5.0 * se + 1e-9, "lhs {lhs} ± {se}");
    assert_eq!(verdict["full_entanglement_detected"], true);
}

#[test]
fn incomplete_record_names_missing_setting() {
    let out = bellmark(&["witness", "from-data", "--correlations", r#"{"n":2,"records":[{"s":"01","E":0.5}]}"#]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing setting string 00"), "{}", stderr(&out));
}

#[test]
fn verification_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("lemma.json");
    let out = bellmark(&["verify", "lemma", "--dims", "2,3", "--trials", "200", "--seed", "1", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS"));
    let report = read_json(&out_path);
    assert_eq!(report["violations"], 0);
    assert_eq!(report["reports"][0]["trials"], 200);
    let tight = bellmark(&["verify", "tightness", "--n", "4"]);
    assert_eq!(code(&tight), 0, "{}", stdout(&tight));
    let sep = bellmark(&[
        "verify",
        "separable-bound",
        "--n",
        "3",
        "--partition",
        r#"{"n":3,"blocks":[[1,3],[2]]}"#,
        "--trials",
        "200",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&sep), 0, "{}", stdout(&sep));
    assert_eq!(code(&bellmark(&["verify", "lemma", "--trials", "10"])), 64, "seed is mandatory");
}

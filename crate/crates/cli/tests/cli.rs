use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sfgap"));
    cmd.args(args).env_remove("SFGAP_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn refined_decomposition_of_a_square_edge() {
    let doc = json(&run(&["decompose", &fixture("square_edge.json"), "--refined"]));
    let d = &doc["result"]["decomposition"];
    assert_eq!(doc["result"]["face"]["dim"], 1);
    assert!(d["total"].as_u64().unwrap() <= 3);
    let nontrivial = d["cardinalities"].as_array().unwrap().iter().filter(|k| k.as_u64().unwrap() >= 2).count();
    assert!(nontrivial <= 1);
    assert!(d["residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn plain_and_epigraph_modes() {
    let doc = json(&run(&["decompose", &fixture("square_edge.json")]));
    assert!(doc["result"]["decomposition"]["total"].as_u64().unwrap() <= 4);
    assert!(doc["result"]["face"].is_null());

    // f1 peaks at 0.5 while its endpoints are 0; at prefix 1 the slice minimum is 1.
    let doc = json(&run(&["decompose", &fixture("bump_epigraph.json"), "--epigraph"]));
    let target = doc["result"]["decomposition"]["target"].as_array().unwrap();
    assert!((target[1].as_f64().unwrap() - 1.0).abs() <= 1e-9);
}

#[test]
fn singleton_sets_decompose_trivially() {
    let doc = json(&run(&["decompose", &fixture("singleton.json"), "--refined"]));
    assert_eq!(doc["result"]["decomposition"]["cardinalities"], serde_json::json!([1]));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    assert_eq!(code(&run(&["decompose", &fixture("malformed.json")])), 1);
    assert_eq!(code(&run(&["decompose", &fixture("missing.json")])), 1);
    assert_eq!(code(&run(&["bound", &fixture("table_bad.json"), "--m", "1"])), 1);
    assert_eq!(code(&run(&["rho", "h_sigma", "--k-max", "3", "--sigma", "1.5"])), 1);
    assert_eq!(code(&run(&["decompose", &fixture("outside.json")])), 2);
    assert_eq!(code(&run(&["decompose", &fixture("outside.json"), "--refined"])), 2);
    assert_eq!(code(&run_env(&["rho", "min_box", "--n", "2", "--k-max", "2"], &[("SFGAP_THREADS", "0")])), 1);
}

#[test]
fn caps_are_enforced_with_their_own_exit_code() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    write!(cfg, r#"{{"settings": {{"caps": {{"minkowski": 3}}}}}}"#).unwrap();
    let path = cfg.path().display().to_string();
    let out = run(&["--config", &path, "decompose", &fixture("square_edge.json"), "--refined"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds cap 3"));
}

#[test]
fn closed_form_tables() {
    let doc = json(&run(&["rho", "min_box", "--n", "3", "--k-max", "4"]));
    let values: Vec<f64> =
        doc["result"]["table"]["rows"][0]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(values, vec![0.0, 0.5, 2.0 / 3.0, 2.0 / 3.0]);

    let doc = json(&run(&["rho", "neglogmax", "--n", "2", "--k-max", "3"]));
    assert_eq!(doc["result"]["table"]["rows"][0]["values"][2].as_f64().unwrap(), 2f64.ln());

    let doc = json(&run(&["rho", "h_sigma", "--k-max", "2", "--sigma", "0.5"]));
    assert_eq!(doc["result"]["table"]["rows"][0]["flags"][1], "upper_bound");
}

#[test]
fn sampled_function_estimates_carry_witnesses() {
    let doc = json(&run(&["rho", "sampled", "--file", &fixture("sampled_bump.json"), "--k-max", "3"]));
    let values = doc["result"]["table"]["rows"][0]["values"].as_array().unwrap();
    assert_eq!(values[0].as_f64().unwrap(), 0.0);
    assert!(values[1].as_f64().unwrap() > 0.0);
    assert_eq!(doc["result"]["table"]["rows"][0]["flags"][1], "lower_bound");
    assert_eq!(doc["result"]["witnesses"].as_array().unwrap().len(), 3);
}

#[test]
fn bound_on_a_uniform_table() {
    let doc = json(&run(&["bound", &fixture("table_uniform.json"), "--m", "2"]));
    let r = &doc["result"];
    assert_eq!(r["B"].as_f64().unwrap(), 1.0);
    assert_eq!(r["bound_udell"].as_f64().unwrap(), 1.0);
    assert_eq!(r["bound_classic"].as_f64().unwrap(), 1.5);
    assert_eq!(r["ordering_holds"], true);

    let doc = json(&run(&["bound", &fixture("table_single.json"), "--m", "2"]));
    assert_eq!(doc["result"]["B"].as_f64().unwrap(), 0.3);
    assert_eq!(doc["result"]["b_flag"], "upper_bound");
}

#[test]
fn num_demo_reports_a_bounded_gap() {
    for utility in ["throughput", "log"] {
        let doc = json(&run(&["demo", "num", "--utility", utility]));
        let r = &doc["result"];
        assert!(r["gap"].as_f64().unwrap() <= r["bounds"]["B"].as_f64().unwrap() + 1e-6);
        assert_eq!(r["verdicts"]["weak_duality"], true);
        assert_eq!(doc["config"]["seed"], 7);
    }
}

#[test]
fn dsm_sweep_keeps_b_times_n_constant() {
    let out = run(&["--out", "csv", "demo", "dsm", "--tones", "2,4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "B_times_N").unwrap();
    let verdicts = header.iter().position(|h| h == "verdicts").unwrap();
    let recs: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 2);
    let scaled: Vec<f64> = recs.iter().map(|r| r[col].parse().unwrap()).collect();
    assert!((scaled[0] - scaled[1]).abs() <= 1e-12);
    assert!(recs.iter().all(|r| &r[verdicts] == "true"));
}

#[test]
fn output_is_reproducible_across_runs_and_thread_counts() {
    let args = ["--seed", "11", "demo", "num", "--links", "2", "--users", "3", "--paths", "2", "--utility", "log"];
    let a = run_env(&args, &[("SFGAP_THREADS", "1")]);
    let b = run_env(&args, &[("SFGAP_THREADS", "4")]);
    let c = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let args = ["rho", "sampled", "--file", &fixture("sampled_bump.json"), "--k-max", "2"];
    let args: Vec<&str> = args.to_vec();
    assert_eq!(run_env(&args, &[("SFGAP_THREADS", "1")]).stdout, run_env(&args, &[("SFGAP_THREADS", "4")]).stdout);
}

#[test]
fn config_file_and_flags_are_embedded() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    write!(cfg, r#"{{"seed": 3, "grid_step": 0.125, "settings": {{"tol": {{"lp": 1e-10}}}}}}"#).unwrap();
    let path = cfg.path().display().to_string();
    let doc = json(&run(&["--config", &path, "--seed", "5", "rho", "min_box", "--n", "2", "--k-max", "2"]));
    assert_eq!(doc["config"]["seed"], 5);
    assert_eq!(doc["config"]["grid_step"].as_f64().unwrap(), 0.125);
    assert_eq!(doc["config"]["settings"]["tol"]["lp"].as_f64().unwrap(), 1e-10);

    let out = run(&["--out", "pretty", "bound", &fixture("table_uniform.json"), "--m", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("config: {"));
    assert!(text.contains("B = "));
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    write!(cfg, r#"{{"grid_step": 0.0}}"#).unwrap();
    let path = cfg.path().display().to_string();
    assert_eq!(code(&run(&["--config", &path, "demo", "dsm", "--tones", "2"])), 1);
    assert_eq!(code(&run(&["--grid-step", "0.3", "demo", "dsm", "--tones", "2"])), 1);
}

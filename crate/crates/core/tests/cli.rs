use std::path::Path;
use std::process::{Command, Output};

use dqopt::handeye::HandEyeDataset;
use dqopt::solver::CSV_HEADER;
use serde_json::Value;

fn dqopt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqopt"))
        .args(args)
        .current_dir(dir)
        .env_remove("DQOPT_SEED")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = dqopt(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Report text with every `wall_time_ms` value blanked.
fn without_wall_time(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("\"wall_time_ms\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn noiseless_handeye_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-handeye", "--model", "axxb", "--motions", "5", "--noise-rot", "0", "--noise-trans", "0", "--seed", "7", "--out", "d.json"]);
    let out = ok(d, &["solve-handeye", "--in", "d.json", "--restarts", "8", "--out", "r.json", "--csv", "h.csv"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("solve-handeye config {\"restarts\":8"), "{stdout}");
    let r = json(&d.join("r.json"));
    assert!(r["report"]["errors"]["X"]["rotation"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["config"]["restarts"], 8);
    assert_eq!(r["report"]["converged"], true);
    let csv = std::fs::read_to_string(d.join("h.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == 6 && (r[1] == "1" || r[1] == "2")));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(dqopt(d, &["solve-pgo", "--in", "missing.txt"]).status.code(), Some(2));
    assert_eq!(dqopt(d, &["selftest", "--bogus"]).status.code(), Some(2));
    assert_eq!(dqopt(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(dqopt(d, &["gen-handeye", "--model", "axzb"]).status.code(), Some(2));
    std::fs::write(d.join("bad.txt"), "EDGE 1 2 1 0 0\n").unwrap();
    let out = dqopt(d, &["solve-pgo", "--in", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    std::fs::write(d.join("d.json"), "{\"model\": \"axxb\"}").unwrap();
    assert_eq!(dqopt(d, &["solve-handeye", "--in", "d.json"]).status.code(), Some(2));
    let out = ok(d, &["gen-pgo", "--out", "g.txt"]);
    assert!(!out.stdout.is_empty());
    assert_eq!(dqopt(d, &["solve-pgo", "--in", "g.txt", "--tol-grad", "-1"]).status.code(), Some(2));
    assert_eq!(dqopt(d, &["solve-pgo", "--in", "g.txt", "--mu-min", "0"]).status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-pgo", "--noise-rot", "0.05", "--noise-trans", "0.05", "--seed", "2", "--out", "g.txt"]);
    let out = dqopt(d, &["solve-pgo", "--in", "g.txt", "--restarts", "1", "--max-outer", "1", "--max-inner", "2", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    // A feasible but unconverged run still leaves its best point behind.
    if d.join("r.json").exists() {
        assert_eq!(json(&d.join("r.json"))["report"]["converged"], false);
    }
}

#[test]
fn reports_are_deterministic_modulo_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-pgo", "--noise-rot", "0.01", "--noise-trans", "0.01", "--seed", "5", "--out", "g.txt", "--truth", "t.txt"]);
    ok(d, &["gen-handeye", "--model", "axyb", "--motions", "6", "--noise-rot", "0.01", "--noise-trans", "0.01", "--seed", "5", "--out", "h.json"]);
    for (cmd, input, extra) in [("solve-pgo", "g.txt", vec!["--truth", "t.txt"]), ("solve-handeye", "h.json", vec![])] {
        let mut texts = Vec::new();
        for (k, threads) in ["1", "1", "3"].iter().enumerate() {
            let name = format!("r{k}.json");
            let mut args = vec![cmd, "--in", input, "--restarts", "4", "--seed", "11", "--threads", threads, "--out", &name];
            args.extend(&extra);
            dqopt(d, &args);
            texts.push(without_wall_time(&std::fs::read_to_string(d.join(&name)).unwrap()).replace("\"threads\": 3", "\"threads\": 1"));
        }
        assert_eq!(texts[0], texts[1]);
        assert_eq!(texts[0], texts[2]);
    }
}

#[test]
fn seed_environment_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |env: Option<&str>, seed: &str, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_dqopt"));
        c.args(["gen-handeye", "--model", "axxb", "--noise-rot", "0.01", "--seed", seed, "--out", out]).current_dir(d);
        match env {
            Some(v) => c.env("DQOPT_SEED", v),
            None => c.env_remove("DQOPT_SEED"),
        };
        c.output().unwrap().status.code()
    };
    assert_eq!(run(Some("9"), "1", "a.json"), Some(0));
    assert_eq!(run(None, "9", "b.json"), Some(0));
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(json(&d.join("a.json"))["generator"]["seed"], 9);
    assert_eq!(run(Some("nine"), "1", "c.json"), Some(2));
}

#[test]
fn generator_metadata_reproduces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-handeye", "--model", "axxb", "--motions", "6", "--noise-rot", "0.01", "--noise-trans", "0.02", "--seed", "4", "--out", "a.json"]);
    ok(d, &["solve-handeye", "--in", "a.json", "--restarts", "4", "--out", "ra.json"]);
    let data = HandEyeDataset::from_json(&std::fs::read_to_string(d.join("a.json")).unwrap()).unwrap();
    let g = data.generator.unwrap();
    let args = [
        "gen-handeye".to_string(),
        "--model".into(),
        "axxb".into(),
        "--motions".into(),
        g.motions.to_string(),
        "--noise-rot".into(),
        g.noise_rot.to_string(),
        "--noise-trans".into(),
        g.noise_trans.to_string(),
        "--seed".into(),
        g.seed.to_string(),
        "--out".into(),
        "b.json".into(),
    ];
    ok(d, &args.iter().map(String::as_str).collect::<Vec<_>>());
    ok(d, &["solve-handeye", "--in", "b.json", "--restarts", "4", "--out", "rb.json"]);
    let (a, b) = (json(&d.join("ra.json")), json(&d.join("rb.json")));
    assert_eq!(a["report"]["errors"], b["report"]["errors"]);
    assert_eq!(a["report"]["stage1_value"], b["report"]["stage1_value"]);
    assert_eq!(a["report"]["stage2_value"], b["report"]["stage2_value"]);

    // The pose-graph header carries the same information.
    ok(d, &["gen-pgo", "--vertices", "7", "--loop-closures", "2", "--noise-rot", "0.02", "--seed", "3", "--out", "g.txt"]);
    let text = std::fs::read_to_string(d.join("g.txt")).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# generator ")).unwrap();
    assert_eq!(header["vertices"], 7);
    assert_eq!(header["seed"], 3);
}

#[test]
fn pgo_truth_gives_vertex_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-pgo", "--seed", "1", "--out", "g.txt", "--truth", "t.txt"]);
    ok(d, &["solve-pgo", "--in", "g.txt", "--truth", "t.txt", "--restarts", "2", "--out", "r.json"]);
    let r = json(&d.join("r.json"));
    assert_eq!(r["report"]["vertex_errors"].as_array().unwrap().len(), 10);
    assert!(r["report"]["max_rotation_error"].as_f64().unwrap() <= 1e-5);
    let out = ok(d, &["report", "--in", "r.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("command solve-pgo") && text.contains("max_rotation_error"), "{text}");
    std::fs::write(d.join("short.txt"), "VERTEX 1 1 0 0 0 0 0 0\n").unwrap();
    assert_eq!(dqopt(d, &["solve-pgo", "--in", "g.txt", "--truth", "short.txt"]).status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["selftest"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for suite in ["algebra", "standardness", "gradient", "order"] {
        assert!(text.contains(&format!("{suite}: ")), "{text}");
    }
    assert!(text.contains(" 0 failed\n") && text.lines().last().unwrap().ends_with(" 0 failed"), "{text}");
}

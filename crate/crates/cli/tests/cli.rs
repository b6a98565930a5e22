use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn trcsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trcsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const K33: &str = "6 9\n0 3\n0 4\n0 5\n1 3\n1 4\n1 5\n2 3\n2 4\n2 5\n";
const C3: &str = "3 3\n0 1\n1 2\n0 2\n";
const SMALL_CSP: &str = r#"{"n":3,"q":2,"edges":[
  {"u":0,"v":1,"allowed":[[0,1],[1,0]]},
  {"u":1,"v":2,"allowed":[[0,0],[1,1]]}
]}"#;

#[test]
fn maxcut_k33_finds_optimum() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "k33.txt", K33);
    let out = dir.path().join("report.json");
    let o = trcsp(&["maxcut", "--graph", &g, "--eps", "0.1", "--oracle", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.starts_with("best=9 OPT=9 gap=0 "), "{summary}");
    assert!(summary.contains("k=1"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["best"]["value"].as_f64(), Some(9.0));
    assert_eq!(report["problem"].as_str(), Some("maxcut"));
}

#[test]
fn report_to_stdout_without_out() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", SMALL_CSP);
    let o = trcsp(&["solve", "--instance", &inst, "--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["best"]["value"].as_f64(), Some(2.0));
    assert!(stderr(&o).contains("best=2 OPT=2"));
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", SMALL_CSP);
    let a = trcsp(&["solve", "--instance", &inst, "--seed", "7", "--workers", "1"]);
    let b = trcsp(&["solve", "--instance", &inst, "--seed", "7", "--workers", "4"]);
    let c = trcsp(&["solve", "--instance", &inst, "--seed", "7", "--workers", "1"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert!(stdout(&a).ends_with('\n'));
}

#[test]
fn malformed_json_exits_1_with_location() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "bad.json", "{\"n\": 3,\n \"q\": 2,\n \"edges\": [}");
    let o = trcsp(&["solve", "--instance", &inst]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn invalid_instance_exits_1() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "bad.json", r#"{"n":2,"q":2,"edges":[{"u":0,"v":0,"allowed":[[0,1]]}]}"#);
    let o = trcsp(&["solve", "--instance", &inst]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn net_cap_refusal_exits_2() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", SMALL_CSP);
    let o = trcsp(&["solve", "--instance", &inst, "--net-cap", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cap of 1"), "{}", stderr(&o));
}

#[test]
fn missing_input_and_bad_flags_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    let o = trcsp(&["solve", "--instance", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let inst = write(&dir, "i.json", SMALL_CSP);
    let o = trcsp(&["solve", "--instance", &inst, "--eps", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--eps"));

    let bad_out = dir.path().join("no/such/dir/r.json");
    let o = trcsp(&["solve", "--instance", &inst, "--out", bad_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!bad_out.exists());
}

#[test]
fn rank_counts_c3() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "c3.txt", C3);
    let o = trcsp(&["rank", "--graph", &g, "--tau", "0.4", "--side", "neg"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "2");

    let o = trcsp(&["rank", "--graph", &g, "--tau", "0.4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pos"].as_u64(), Some(1));
    assert_eq!(v["neg"].as_u64(), Some(2));
    let ext = v["spectrum_extremes"].as_array().unwrap();
    assert!((ext[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((ext[1].as_f64().unwrap() + 0.5).abs() < 1e-9);
}

#[test]
fn rank_label_extended_instance() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", SMALL_CSP);
    let o = trcsp(&["rank", "--instance", &inst, "--label-extended", "--tau", "0.4", "--side", "pos"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let count: usize = stdout(&o).trim().parse().unwrap();
    assert!(count >= 1);
}

#[test]
fn gen_round_trips_through_solve() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("planted.json");
    let p = path.to_str().unwrap();
    let o = trcsp(&["gen", "--kind", "planted-assignment", "--n", "6", "--q", "3", "--m", "8", "--seed", "4", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("planted assignment"));
    let first = fs::read_to_string(&path).unwrap();

    let again = trcsp(&["gen", "--kind", "planted-assignment", "--n", "6", "--q", "3", "--m", "8", "--seed", "4"]);
    assert_eq!(stdout(&again), first);

    let o = trcsp(&["solve", "--instance", p, "--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("OPT=8"), "{}", stderr(&o));
}

#[test]
fn gen_graph_format_feeds_maxcut() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.txt");
    let p = path.to_str().unwrap();
    let o = trcsp(&[
        "gen", "--kind", "complete-bipartite-noise", "--a", "3", "--b", "4", "--rho", "0.0", "--graph-format", "--out", p,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(fs::read_to_string(&path).unwrap().starts_with("7 12\n"));
    let o = trcsp(&["maxcut", "--graph", p, "--eps", "0.1", "--oracle"]);
    assert!(stderr(&o).contains("best=12 OPT=12"), "{}", stderr(&o));
}

#[test]
fn gen_requires_kind_parameters() {
    let o = trcsp(&["gen", "--kind", "random-regular", "--n", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--d"));
}

#[test]
fn quadratic_solves_small_matrix() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", r#"{"matrix": [[0, -1, 0], [-1, 0, -1], [0, -1, 0]]}"#);
    let o = trcsp(&["quadratic", "--matrix", &m, "--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("best=4 OPT=4"), "{}", stderr(&o));
}

#[test]
fn verify_rank_bound_reports_no_violations() {
    let o = trcsp(&["verify-rank-bound", "--trials", "10", "--seed", "1", "--n-max", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violations: 0"));
}

#[test]
fn certify_from_file_and_random() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "c.json",
        r#"{"a": [[0, 1], [1, 0]], "b": [[0, 1], [1, 0]], "lambda": 1.0, "t": 1}"#,
    );
    let o = trcsp(&["certify", "--input", &input]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["trace"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["correlation"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert!(v["frobenius_sq"].as_f64().unwrap() <= 1.0 + 1e-9);

    let o = trcsp(&["certify", "--trials", "10", "--seed", "3", "--n-max", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violations: 0"));
}

#[test]
fn timings_only_with_flag() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", SMALL_CSP);
    let plain = stdout(&trcsp(&["solve", "--instance", &inst]));
    assert!(!plain.contains("spectral_ms"));
    let timed = stdout(&trcsp(&["solve", "--instance", &inst, "--timings"]));
    assert!(timed.contains("spectral_ms"));
    assert!(Path::new(&inst).exists());
}

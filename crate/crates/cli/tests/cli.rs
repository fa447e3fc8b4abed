use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_chevlink")).args(args).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(&out.stdout)));
    (out.status.code().unwrap(), v)
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn build_writes_identical_sms() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (p(d.path(), "a.sms"), p(d.path(), "b.sms"));
    let (code, v) = run(&["build", "--config", "a3", "--q", "2", "--out-tri", &a]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["result"]["tri_matrix"]["rows"], 64);
    assert_eq!(v["result"]["tri_matrix"]["cols"], 96);
    run(&["build", "--config", "a3", "--q", "2", "--out-tri", &b]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(std::fs::read_to_string(&a).unwrap().starts_with("64 96 M\n"));
}

#[test]
fn build_then_rank() {
    let d = tempfile::tempdir().unwrap();
    let (t, e) = (p(d.path(), "t.sms"), p(d.path(), "e.sms"));
    let (code, v) = run(&["build", "--config", "b3-large", "--q", "2", "--out-tri", &t, "--out-edge", &e]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["counts"]["triangles"], 512);
    assert_eq!(v["result"]["counts"]["edges"], 768);
    let (code, v) = run(&["rank", "--p", "2", "--in", &t]);
    assert_eq!(code, 0);
    assert_eq!((v["result"]["rows"].as_u64(), v["result"]["cols"].as_u64()), (Some(512), Some(768)));
    assert!(v["result"]["rank"].as_u64().unwrap() > 0);
    let (_, v) = run(&["rank", "--p", "2", "--in", &e]);
    assert_eq!(v["result"]["rank"], 223);
}

#[test]
fn rank_of_empty_matrix_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let z = p(d.path(), "z.sms");
    std::fs::write(&z, "3 4 M\n0 0 0\n").unwrap();
    let (code, v) = run(&["rank", "--p", "5", "--in", &z]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["rank"], 0);
}

#[test]
fn parse_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let bad = p(d.path(), "bad.sms");
    std::fs::write(&bad, "2 2 M\n1 3 1\n0 0 0\n").unwrap();
    let (code, v) = run(&["rank", "--p", "2", "--in", &bad]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().starts_with("line 2"));
}

#[test]
fn homology_small_q3() {
    let (code, v) = run(&["check-homology", "--config", "b3-small", "--q", "3", "--expect", "not-vanishing"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["rank_d2"], 1825);
    assert_eq!(v["result"]["needed"], 1837);
    assert_eq!(v["result"]["verdict"], "not vanishing");
    let (code, _) = run(&["check-homology", "--config", "b3-small", "--q", "3", "--expect", "vanishing"]);
    assert_eq!(code, 1);
}

#[test]
fn long_instances_need_flag() {
    let d = tempfile::tempdir().unwrap();
    let (code, v) = run(&["build", "--config", "b3-large", "--q", "5", "--out-tri", &p(d.path(), "x.sms")]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("--allow-long"));
}

#[test]
fn verify_suites() {
    let (code, v) = run(&["verify", "--suite", "filling-a3", "--q", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["triangles"].as_array().unwrap().len(), 20);
    let (code, _) = run(&["verify", "--suite", "filling-a3", "--q", "4"]);
    assert_eq!(code, 2);
    let (code, v) = run(&["verify", "--suite", "steinberg", "--system", "a3", "--q", "3"]);
    assert_eq!(code, 0, "{v}");
    let (code, v) = run(&["verify", "--suite", "relations", "--config", "a3", "--q", "5"]);
    assert_eq!(code, 0, "{v}");
    let (code, v) = run(&["verify", "--suite", "normal-form", "--config", "a3", "--q", "3"]);
    assert_eq!(code, 0, "{v}");
    let (code, v) = run(&["verify", "--suite", "lift", "--config", "b3-large", "--p", "3", "--specs", "2", "--pairs", "50", "--jobs", "2"]);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn report_file_matches_stdout() {
    let d = tempfile::tempdir().unwrap();
    let r = p(d.path(), "r.json");
    let (_, v) = run(&["verify", "--suite", "filling-a3", "--q", "3", "--report", &r]);
    let w: Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(v, w);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcp-forge")).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_the_cycle_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcp(&["gen", "e2lin-cycle", "--n", "8", "--pattern", "ones", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let f = dir.path().join("e2lin-cycle-8-ones.json");
    let inst = pcp_forge::csp::format::from_json(&std::fs::read_to_string(f).unwrap()).unwrap();
    assert_eq!(inst.num_vars(), 8);
    assert_eq!(inst.num_constraints(), 8);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(pcp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pcp(&["verify", "no-such-pass"]).status.code(), Some(2));
    assert_eq!(pcp(&["opt", "--input", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(pcp(&["gen", "e2lin-cycle", "--n", "8", "--pattern", "0101"]).status.code(), Some(2));
}

#[test]
fn verify_degree_reduce() {
    let o = pcp(&["verify", "degree-reduce", "--trials", "50", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["config"]["trials"], 50);
}

#[test]
fn opt_and_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    pcp(&["gen", "lemma41", "--n", "8", "--out", d]);
    let a = dir.path().join("lemma41-8-b.json");
    let o = pcp(&["opt", "--input", path(&a), "--out", d]);
    assert_eq!(o.status.code(), Some(0));
    let opt: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("opt.json")).unwrap()).unwrap();
    assert_eq!(opt["value"], "1");
    assert_eq!(opt["optima"], 2);
    let sigma = dir.path().join("sigma.json");
    std::fs::write(&sigma, opt["assignment"].to_string()).unwrap();
    let e = pcp(&["eval", "--input", path(&a), "--assignment", path(&sigma)]);
    assert_eq!(stdout_json(&e)["value"], "1");
}

#[test]
fn sensitivity_csv_and_swap_paths() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    pcp(&["gen", "e2lin-cycle", "--n", "6", "--out", d]);
    let f = dir.path().join("e2lin-cycle-6-ones.json");
    let o = pcp(&["sens", "--input", path(&f), "--algorithm", "constant", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("edge,policy,emd,coupling,samples"));
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.contains(",0,0,")));
    let o = pcp(&["sens", "--input", path(&f), "--algorithm", "greedy:2", "--samples", "4", "--swap-paths"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["holds"], Value::Bool(true));
}

#[test]
fn transform_lifts_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    pcp(&["gen", "label-cover", "--m", "4", "--out", d]);
    let inst = dir.path().join("label-cover-2-2-4-0.json");
    let wit = dir.path().join("label-cover-2-2-4-0.witness.json");
    for pass in ["degree-reduce", "e3sat"] {
        let o = pcp(&["transform", pass, "--input", path(&inst), "--witness", path(&wit), "--out", d]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let meta: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{pass}.meta.json"))).unwrap()).unwrap();
        assert_eq!(meta["witness_value"], "1");
    }
}

#[test]
fn nonsig_and_fglss() {
    let o = pcp(&["nonsig", "--rule", "local-max", "--t", "2", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["holds"], Value::Bool(true));
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    pcp(&["gen", "label-cover", "--m", "4", "--out", d]);
    let inst = dir.path().join("label-cover-2-2-4-0.json");
    let o = pcp(&["fglss", "--input", path(&inst)]);
    let v = stdout_json(&o);
    assert_eq!(v["clique"].as_array().unwrap().len(), 4);
    assert_eq!(v["satisfied"], 4);
    assert_eq!(pcp(&["fglss", "--input", path(&inst), "--clique", "0,1"]).status.code(), Some(1));
}

#[test]
fn pipeline_zero_rounds_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = pcp(&["pipeline", "--rounds", "0", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r = pcp(&["report", path(&out)]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(stdout_json(&r)["mismatched"], Value::Array(vec![]));
    std::fs::write(out.join("00-input.witness.json"), "[]").unwrap();
    assert_eq!(pcp(&["report", path(&out)]).status.code(), Some(1));
    assert_eq!(pcp(&["pipeline", "--rounds", "0"]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_pcp-forge"))
            .args(["nonsig", "--rule", "color-parity", "--t", "2", "--seed", "5"])
            .env("PCP_FORGE_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}

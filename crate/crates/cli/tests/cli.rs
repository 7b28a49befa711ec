use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn adlv(args: &[&str], cache: &PathBuf) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adlv"))
        .args(args)
        .env("ADLV_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adlv-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json_line(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("one JSON line")
}

#[test]
fn count_examples_and_cache() {
    let dir = tmp("count");
    let cache = dir.join("cache.jsonl");
    let out = adlv(&["count", "--kind", "zm1", "--q", "2", "--m", "1", "--s", "1"], &cache);
    assert_eq!(out.status.code(), Some(0));
    let v = json_line(&out);
    assert_eq!(v["count"], 8);
    assert_eq!(v["lefschetz"]["equal"], true);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("{\"params\":"));

    let out = adlv(&["count", "--kind", "yv0m", "--q", "2", "--m", "0", "--n", "2", "--s", "1"], &cache);
    assert_eq!(json_line(&out)["count"], 24);

    let cached = std::fs::read_to_string(&cache).unwrap();
    assert_eq!(cached.lines().count(), 2);
    let rec: Value = serde_json::from_str(cached.lines().next().unwrap()).unwrap();
    assert_eq!(rec["sys"], "zm1:q=2,m=1,n=2");
    assert_eq!(rec["count"], 8);

    // warm run is byte-identical and adds nothing
    let warm = adlv(&["count", "--kind", "zm1", "--q", "2", "--m", "1", "--s", "1"], &cache);
    let cold = adlv(&["count", "--kind", "zm1", "--q", "2", "--m", "1", "--s", "1"], &dir.join("other.jsonl"));
    assert_eq!(warm.stdout, cold.stdout);
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), 2);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exit_codes() {
    let dir = tmp("exit");
    let cache = dir.join("cache.jsonl");
    let bound = adlv(&["count", "--kind", "zm1", "--q", "7", "--m", "3", "--s", "1"], &cache);
    assert_eq!(bound.status.code(), Some(2));
    let bad_q = adlv(&["count", "--kind", "zm1", "--q", "6", "--m", "1"], &cache);
    assert_eq!(bad_q.status.code(), Some(3));
    let bad_n = adlv(&["count", "--kind", "yvm", "--q", "2", "--m", "2", "--n", "2"], &cache);
    assert_eq!(bad_n.status.code(), Some(3));
    let bad_kind = adlv(&["count", "--kind", "nope", "--q", "2", "--m", "1"], &cache);
    assert_eq!(bad_kind.status.code(), Some(3));
    let missing = adlv(&["count", "--kind", "zm1", "--q", "2"], &cache);
    assert_eq!(missing.status.code(), Some(3));
    let suite = adlv(&["verify", "--suite", "nope", "--q", "2", "--m", "1"], &cache);
    assert_eq!(suite.status.code(), Some(3));
    let chi = adlv(&["verify", "--suite", "torus", "--q", "2", "--m", "1", "--chi", "0:0"], &cache);
    assert_eq!(chi.status.code(), Some(3));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn verify_reports_are_stable() {
    let dir = tmp("verify");
    let cache = dir.join("cache.jsonl");
    let a = dir.join("a.jsonl");
    let b = dir.join("b.jsonl");
    let run = |out: &PathBuf, jobs: &str| {
        adlv(
            &["verify", "--suite", "all", "--q", "2", "--m", "1", "--jobs", jobs, "--out", out.to_str().unwrap()],
            &cache,
        )
    };
    assert_eq!(run(&a, "1").status.code(), Some(0));
    assert_eq!(run(&b, "4").status.code(), Some(0));
    let ra = std::fs::read(&a).unwrap();
    assert_eq!(ra, std::fs::read(&b).unwrap());
    for line in String::from_utf8(ra).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        assert_eq!(v["pass"], true, "{line}");
        assert!(line.starts_with("{\"name\":"));
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn named_suites() {
    let dir = tmp("suites");
    let cache = dir.join("cache.jsonl");
    let out = adlv(&["verify", "--suite", "unipotent", "--q", "2", "--m", "1", "--chi", "minimal"], &cache);
    assert_eq!(out.status.code(), Some(0));
    let out = adlv(&["verify", "--suite", "compare", "--q", "2", "--m", "1", "--chi", "minimal"], &cache);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"name\":\"trace character equals induced type\""));
    let out = adlv(&["verify", "--suite", "bh", "--q", "3", "--m", "1"], &cache);
    assert_eq!(out.status.code(), Some(0));
    let out = adlv(&["verify", "--suite", "bh", "--q", "2", "--m", "1", "--psi", "5"], &cache);
    assert_eq!(out.status.code(), Some(0));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exports() {
    let dir = tmp("export");
    let cache = dir.join("cache.jsonl");
    let st = json_line(&adlv(&["stratum", "--q", "2", "--m", "1", "--chi", "0:1"], &cache));
    assert_eq!(st["m"], 1);
    assert_eq!(st["simple"], true);
    assert!(st["alpha0"].is_u64());
    let trace = json_line(&adlv(&["table", "--q", "2", "--m", "1", "--chi", "0:1"], &cache));
    let ty = json_line(&adlv(&["table", "--q", "2", "--m", "1", "--chi", "0:1", "--source", "type"], &cache));
    assert_eq!(trace["group"], "K_1");
    let classes = trace["classes"].as_array().unwrap();
    let total: u64 = classes.iter().map(|c| c["size"].as_u64().unwrap()).sum();
    assert_eq!(total, 96);
    assert_eq!(trace["classes"].as_array().unwrap().len(), ty["classes"].as_array().unwrap().len());
    std::fs::remove_dir_all(dir).unwrap();
}

use std::process::{Command, Output};

use serde_json::Value;
use tracenorm::linearized::is_normal;
use tracenorm::{build_context, FieldSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tracenorm"));
    c.env_remove("TRACENORM_CONFIG").env_remove("TRACENORM_CENSUS_CAP");
    c
}

fn run(args: &[&str]) -> (i32, Value, Vec<u8>) {
    let out: Output = bin().args(args).output().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
    (out.status.code().unwrap(), v, out.stdout)
}

#[test]
fn count_normal_example() {
    let ctx = build_context(&FieldSpec::new(2, 1, 15)).unwrap();
    let beta = (1..ctx.size)
        .map(|e| ctx.decode(e).unwrap())
        .find(|b| is_normal(&ctx, b, 15).unwrap())
        .unwrap();
    let a1 = ctx.encode(&ctx.trace(&beta, 3).unwrap());
    let a2 = ctx.encode(&ctx.trace(&beta, 5).unwrap());
    let a = format!("{a1},{a2}");
    let (code, v, _) = run(&["count-normal", "--p", "2", "--m", "15", "--d", "3,5", "--a", &a]);
    assert_eq!(code, 0);
    assert_eq!(v["count"], "225");
}

#[test]
fn dispatch_example() {
    let (code, v, _) = run(&["dispatch", "--q", "1334", "--m", "210", "--d", "2,3,5,7"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "sufficient");
    assert_eq!(v["case"], "k=4");
}

#[test]
fn order_example() {
    let (code, v, _) = run(&["order", "--p", "2", "--m", "3", "--element", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["additive_order"], "x+1");
    assert_eq!(v["additive_order_coeffs"], serde_json::json!([1, 1]));
}

#[test]
fn check_bound_impossible() {
    let (code, v, _) = run(&["check-bound", "--q", "7", "--m", "30", "--d", "2,3,5"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "impossible_for_all_q");
    let (_, v, _) = run(&["check-bound", "--q", "1e24072856", "--m", "60", "--d", "3,4,5", "--mode", "log"]);
    assert_eq!(v["mode"], "log_space");
}

#[test]
fn validation_errors_exit_one() {
    let (code, v, _) = run(&["order", "--p", "4", "--m", "3", "--element", "1"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "invalid_field");
    let (code, v, _) = run(&["order", "--p", "2", "--m", "3", "--element", "8"]);
    assert_eq!(code, 1);
    assert!(v["error"]["message"].is_string());
    let (code, v, _) = run(&["no-such-command"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "usage");
    let (code, _, _) = run(&["census", "--p", "2", "--m", "6", "--d", "2,4"]);
    assert_eq!(code, 1);
}

#[test]
fn identical_requests_identical_bytes() {
    let args = ["census", "--p", "3", "--m", "4", "--d", "1,2"];
    let (_, _, a) = run(&["census", "--p", "3", "--m", "4", "--d", "1"]);
    let (_, _, b) = run(&["census", "--p", "3", "--m", "4", "--d", "1"]);
    assert_eq!(a, b);
    let (code, v, _) = run(&args);
    assert_eq!(code, 1, "{v}");
    let (_, _, c) = run(&["census", "--p", "2", "--m", "9", "--d", "3", "--workers", "3"]);
    let (_, _, d) = run(&["census", "--p", "2", "--m", "9", "--d", "3"]);
    let (mut c, mut d): (Value, Value) = (serde_json::from_slice(&c).unwrap(), serde_json::from_slice(&d).unwrap());
    c["workers"] = Value::Null;
    d["workers"] = Value::Null;
    assert_eq!(c, d);
}

#[test]
fn census_cap_from_env_and_out_file() {
    let out = bin()
        .args(["census", "--p", "2", "--m", "15", "--d", "3,5"])
        .env("TRACENORM_CENSUS_CAP", "1000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "cap_exceeded");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let (code, v, _) = run(&["census", "--p", "3", "--m", "4", "--d", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved, v);
    assert_eq!(saved["schema_version"], 1);
    assert_eq!(saved["totals"]["normal"], "32");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tracenorm.toml");
    std::fs::write(&path, "census_cap = 100\n\n[field]\np = 2\nm = 15\n").unwrap();
    let cfg = path.to_str().unwrap();
    let (code, v, _) = run(&["field-info", "--config", cfg]);
    assert_eq!(code, 0);
    assert_eq!(v["field"]["size"], "32768");
    assert_eq!(v["phi_xm1"], "10125");
    let (code, v, _) = run(&["field-info", "--config", cfg, "--m", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v["field"]["size"], "32");
    let (code, _, _) = run(&["census", "--config", cfg, "--d", "3,5"]);
    assert_eq!(code, 1);
    std::fs::write(&path, "bogus_key = 1\n").unwrap();
    let (code, v, _) = run(&["field-info", "--config", cfg]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "config");
}

#[test]
fn factor_and_solve() {
    let (code, v, _) = run(&["factor", "--p", "2", "--poly", "x^15+1"]);
    assert_eq!(code, 0);
    assert_eq!(v["factors"].as_array().unwrap().len(), 5);
    assert_eq!(v["phi"], "10125");
    let (_, w, _) = run(&["factor", "--p", "2", "--poly", "[1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1]"]);
    assert_eq!(v["factors"], w["factors"]);
    let (_, v, _) = run(&["factor", "--int", "32767"]);
    assert_eq!(v["w"], "8");
    let (code, v, _) = run(&["solve-traces", "--p", "2", "--m", "6", "--d", "2,3", "--a", "0,0"]);
    assert_eq!(code, 0);
    assert_eq!(v["solutions"], "4");
    assert_eq!(v["lambda"], 4);
    let (_, v, _) = run(&["trace", "--p", "2", "--m", "15", "--element", "1", "--d", "1"]);
    assert_eq!(v["trace"], 1);
}

#[test]
fn verify_and_constants() {
    let (code, v, _) = run(&["verify", "--p", "2", "--m", "15", "--d", "3,5"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().len() > 10);
    let (code, v, _) = run(&["constants", "--nu", "11,12"]);
    assert_eq!(code, 0);
    assert_eq!(v["constants"][0]["nu"], 11);
    let (code, v, _) = run(&["constants", "--nu", "31", "--source", "computed"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "cap_exceeded");
}

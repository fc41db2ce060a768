use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bhlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhlab"))
        .args(args)
        .env_remove("BHLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_spec(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

const PMOD_K4_T2: &str = r#"{"k":4,"t":2,"r":1,"w":3,"m":[8,8,8,8],"f":{"name":"partialmod","s":1}}"#;
const PMOD_K2_T1: &str = r#"{"k":2,"t":1,"r":1,"w":3,"m":[8,8],"f":{"name":"partialmod","s":1}}"#;
const XOR_K2_T1: &str = r#"{"k":2,"t":1,"r":1,"w":3,"m":[8,8],"f":{"name":"xor"}}"#;

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn run_qalg_a_is_optimal() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let json: serde_json::Value = serde_json::from_str(&stdout(&bhlab(&["run", "--spec", p(&spec), "--alg", "qalg-a"]))).unwrap();
    assert_eq!(json["cost"], 2.0);
    assert_eq!(json["ratio"], 1.0);
    assert_eq!(json["advice"].as_str().unwrap().len(), 1);
}

#[test]
fn run_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let args = ["run", "--spec", p(&spec), "--alg", "qalg-b", "--seed", "7"];
    assert_eq!(stdout(&bhlab(&args)), stdout(&bhlab(&args)));
}

#[test]
fn ibh_on_plain_spec_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    assert_eq!(bhlab(&["run", "--spec", p(&spec), "--alg", "ibh"]).status.code(), Some(2));
}

#[test]
fn malformed_inputs_and_promise_violations() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K2_T1);
    let bad = write_spec(&dir, "bad.json", r#"{"k":3,"t":2,"r":1,"w":3,"m":[1,1,1],"f":{"name":"xor"}}"#);
    assert_eq!(bhlab(&["run", "--spec", p(&bad), "--alg", "qalg-a"]).status.code(), Some(2));
    let off_promise = ["run", "--spec", p(&spec), "--alg", "qalg-a", "--input", "211100000211000000"];
    assert_eq!(bhlab(&off_promise).status.code(), Some(3));
    let short = ["run", "--spec", p(&spec), "--alg", "qalg-a", "--input", "2110"];
    assert_eq!(bhlab(&short).status.code(), Some(2));
}

#[test]
fn expect_closed_at_zero_noise_is_opt() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let out = stdout(&bhlab(&["expect", "--spec", p(&spec), "--alg", "ralg-a", "--eps", "0", "--method", "closed"]));
    let rows = csv_rows(&out);
    assert_eq!(rows[0].join(","), "spec_id,method,eps,b,value,stderr,trials,seed,branches");
    assert_eq!(rows[1][1], "closed");
    assert_eq!(rows[1][4].parse::<f64>().unwrap(), 2.0);
}

#[test]
fn expect_all_methods_agree() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let out = stdout(&bhlab(&[
        "expect", "--spec", p(&spec), "--alg", "ralg-a", "--eps", "0.1", "--method", "all", "--trials", "20000",
    ]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    let value = |i: usize| rows[i][4].parse::<f64>().unwrap();
    assert_eq!((rows[1][1].as_str(), rows[2][1].as_str(), rows[3][1].as_str()), ("closed", "exact", "mc"));
    assert!((value(1) - 2.724).abs() < 1e-9);
    assert!((value(1) - value(2)).abs() < 1e-9);
    let stderr: f64 = rows[3][5].parse().unwrap();
    assert!((value(3) - value(2)).abs() <= 4.0 * stderr);
    assert!(!out.contains('\r'));
}

#[test]
fn expect_mc_is_independent_of_jobs() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let run = |jobs: &str| {
        stdout(&bhlab(&[
            "--jobs", jobs, "expect", "--spec", p(&spec), "--alg", "qalg-b", "--method", "mc", "--trials", "3000", "--seed", "5",
        ]))
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn expect_error_codes() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let zero = ["expect", "--spec", p(&spec), "--alg", "qalg-b", "--method", "mc", "--trials", "0"];
    assert_eq!(bhlab(&zero).status.code(), Some(2));
    let limit = ["expect", "--spec", p(&spec), "--alg", "qalg-b", "--method", "exact", "--branch-limit", "1"];
    assert_eq!(bhlab(&limit).status.code(), Some(4));
}

#[test]
fn sweep_eps_gives_ten_nondecreasing_rows() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let out = stdout(&bhlab(&[
        "sweep", "--spec", p(&spec), "--alg", "ralg-a", "--eps", "0", "--axis", "eps", "--from", "0", "--to", "0.45",
        "--step", "0.05",
    ]));
    let rows = csv_rows(&out);
    assert_eq!(rows[0].join(","), "spec_id,axis,x,method,value,ratio,stderr,det_bound,rand_bound,reason");
    assert_eq!(rows.len(), 11);
    let ratios: Vec<f64> = rows[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{ratios:?}");
}

#[test]
fn sweep_b_bounds_end_at_one() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let out = stdout(&bhlab(&["sweep", "--spec", p(&spec), "--alg", "qalg-b", "--axis", "b", "--from", "0", "--to", "4"]));
    let rows = csv_rows(&out);
    let last = rows.last().unwrap();
    assert_eq!((last[7].as_str(), last[8].as_str()), ("1.0", "1.0"));
    let det: Vec<f64> = rows[1..].iter().map(|r| r[7].parse().unwrap()).collect();
    let rand: Vec<f64> = rows[1..].iter().map(|r| r[8].parse().unwrap()).collect();
    assert!(det.iter().zip(&rand).all(|(d, r)| d >= r && *r >= 1.0));
}

#[test]
fn sweep_t_rejects_non_divisors_per_row() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let out = stdout(&bhlab(&["sweep", "--spec", p(&spec), "--alg", "qalg-a", "--axis", "t", "--from", "1", "--to", "4"]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);
    assert!(rows[3][9].contains("not a multiple"));
    assert!(rows[3][4].is_empty());
    assert!(rows[2][9].is_empty() && rows[4][9].is_empty());
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let out = dir.path().join("out");
    stdout(&bhlab(&[
        "sweep", "--spec", p(&spec), "--alg", "ralg-a", "--eps", "0", "--axis", "eps", "--from", "0", "--to", "0.2",
        "--step", "0.1", "--method", "closed", "--out", p(&out), "--svg",
    ]));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let svg = std::fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn sweep_empty_range_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let args = ["sweep", "--spec", p(&spec), "--alg", "qalg-b", "--axis", "b", "--from", "3", "--to", "1"];
    assert_eq!(bhlab(&args).status.code(), Some(2));
}

#[test]
fn brute_partial_mod_reaches_w_over_r() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K2_T1);
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&bhlab(&["brute", "--spec", p(&spec), "-S", "2", "--b", "0"]))).unwrap();
    assert!(json["ratio"].as_f64().unwrap() >= 3.0);
    assert_eq!(json["lower_bound"], 3.0);
    assert_eq!(json["witness"][0]["S"], 2);
    assert!(json.get("elapsed_ms").is_none());
}

#[test]
fn brute_xor_reaches_one() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", XOR_K2_T1);
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&bhlab(&["brute", "--spec", p(&spec), "-S", "2", "--b", "0"]))).unwrap();
    assert_eq!(json["ratio"], 1.0);
}

#[test]
fn brute_five_states_is_too_large() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K2_T1);
    assert_eq!(bhlab(&["brute", "--spec", p(&spec), "-S", "5"]).status.code(), Some(5));
}

#[test]
fn config_precedence() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "s.json",
        r#"{"k":4,"t":2,"r":1,"w":3,"m":[8,8,8,8],"f":{"name":"partialmod","s":1},
            "experiment":{"alg":"ralg-a","eps":0.1,"method":"closed","seed":3}}"#,
    );
    let rows = csv_rows(&stdout(&bhlab(&["expect", "--spec", p(&spec)])));
    assert_eq!(rows[1][1], "closed");
    assert_eq!(rows[1][2], "0.1");
    let rows = csv_rows(&stdout(&bhlab(&["expect", "--spec", p(&spec), "--eps", "0.2", "--method", "exact"])));
    assert_eq!((rows[1][1].as_str(), rows[1][2].as_str()), ("exact", "0.2"));

    let gen = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bhlab"));
        cmd.args(["gen-input", "--spec", p(&spec)]).args(extra).env_remove("BHLAB_SEED");
        if let Some(seed) = env {
            cmd.env("BHLAB_SEED", seed);
        }
        stdout(&cmd.output().unwrap())
    };
    // file seed 3 beats the environment; the flag beats both
    assert_eq!(gen(&[], Some("99")), gen(&["--seed", "3"], None));
    assert_ne!(gen(&["--seed", "4"], Some("3")), gen(&["--seed", "3"], None));
}

#[test]
fn bhlab_seed_is_the_default_seed() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K4_T2);
    let with_env = Command::new(env!("CARGO_BIN_EXE_bhlab"))
        .args(["gen-input", "--spec", p(&spec), "--count", "3"])
        .env("BHLAB_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(stdout(&with_env), stdout(&bhlab(&["gen-input", "--spec", p(&spec), "--count", "3", "--seed", "11"])));
}

#[test]
fn table_algorithm_from_file() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "s.json", PMOD_K2_T1);
    let table = write_spec(&dir, "t.json", r#"{"S":1,"transitions":[[0,0,0]],"outputs":[[0,0,0]]}"#);
    let json: serde_json::Value = serde_json::from_str(&stdout(&bhlab(&[
        "run", "--spec", p(&spec), "--alg", "table", "--table", p(&table), "--input", "211110000211111100",
    ])))
    .unwrap();
    // f-values 0, 1 make the targets 1, 1
    assert_eq!(json["outputs"], "00");
    assert_eq!(json["cost"], 3.0);
    let broken = write_spec(&dir, "b.json", r#"{"S":1,"transitions":[[0,0]],"outputs":[[0,0,0]]}"#);
    let args = ["run", "--spec", p(&spec), "--alg", "table", "--table", p(&broken)];
    assert_eq!(bhlab(&args).status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l2field"))
}

fn run_config(dir: &Path, name: &str, config: &Value, extra: &[&str]) -> Output {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, config.to_string()).unwrap();
    bin().arg("--config").arg(&path).args(extra).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report JSON on stdout")
}

fn grid_space(n: usize) -> Value {
    json!({"grid": {"dim": 1, "n": n, "extent": 1.0}})
}

fn si2_config() -> Value {
    json!({
        "command": "verify-si2",
        "kernel": {"family": "l2fbm", "H": 0.3, "space": grid_space(8)},
        "pairs": [
            [{"func": [1, 0, 0, 1, 0, 2, 0, 1]}, {"func": [0, 1, 1, 0, 0, 0, 2, 1]}],
            [{"func": [1, 1, 1, 1, 0, 0, 0, 0]}, {"func": [0, 0, 0, 0, 1, 1, 1, 1]}]
        ],
        "seed": 5
    })
}

fn sample_config() -> Value {
    json!({
        "command": "sample",
        "kernel": {"family": "sheet", "Hvec": [0.3, 0.7]},
        "design": [[0.5, 0.5], [1.0, 0.2], [0.3, 1.5], [1.2, 1.1]],
        "n_paths": 500,
        "seed": 42
    })
}

#[test]
fn si2_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), "si2", &si2_config(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!(v["reports"][0]["max_abs_diff"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["seed"], 5);
}

#[test]
fn missing_hurst_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = si2_config();
    c["kernel"].as_object_mut().unwrap().remove("H");
    let o = run_config(dir.path(), "bad", &c, &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("H"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_command_and_malformed_json_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_config(dir.path(), "u", &json!({"command": "nope"}), &[])), 2);
    let p = dir.path().join("m.json");
    fs::write(&p, "{\"command\": ").unwrap();
    assert_eq!(code(&bin().arg("--config").arg(&p).output().unwrap()), 2);
    assert_eq!(code(&bin().arg("--config").arg(dir.path().join("absent.json")).output().unwrap()), 2);
    assert_eq!(code(&bin().output().unwrap()), 2);
}

#[test]
fn indefinite_custom_variogram_gram_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let design: Vec<Value> = (1..=8).map(|k| json!([k as f64 / 8.0])).collect();
    let c = json!({"command": "gram", "kernel": {"family": "custom_variogram", "alpha": 2.5}, "design": design});
    let o = run_config(dir.path(), "g", &c, &[]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o);
    assert!(v["reports"][0]["stats"]["min_eig"].as_f64().unwrap() < 0.0);
}

#[test]
fn identity_gram_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let c = json!({
        "command": "gram",
        "kernel": {"family": "l2fbm", "H": 0.5, "space": {"grid": {"dim": 1, "n": 2, "extent": 2.0}}},
        "design": [{"func": [1, 0]}, {"func": [0, 1]}]
    });
    let o = run_config(dir.path(), "id", &c, &["--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(out.join("gram.csv")).unwrap(), "c0,c1\n1,0\n0,1\n");
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_config(dir.path(), "s", &sample_config(), &["--quiet", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["paths.csv", "report.json", "reports.csv", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let paths = fs::read_to_string(a.join("paths.csv")).unwrap();
    assert!(paths.starts_with("path,p0,p1,p2,p3\n0,"));
    assert_eq!(paths.lines().count(), 501);
}

#[test]
fn replay_from_emitted_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run_config(dir.path(), "s", &sample_config(), &["--quiet", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = bin()
        .arg("--config")
        .arg(a.join("config.json"))
        .args(["--quiet", "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(fs::read(a.join("paths.csv")).unwrap(), fs::read(b.join("paths.csv")).unwrap());
}

#[test]
fn stochastic_command_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = sample_config();
    c.as_object_mut().unwrap().remove("seed");
    assert_eq!(code(&run_config(dir.path(), "s", &c, &[])), 2);
    let o = run_config(dir.path(), "s", &c, &["--seed", "9"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["config"]["seed"], 9);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = json!({
        "command": "takenaka", "d": 2, "H": 0.25, "n_samples": 20000, "seed": 3,
        "pairs": [[[0.5, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]], [[2.0, 0.0], [0.0, 0.0]]],
        "slope_tol": 0.2
    });
    let path = dir.path().join("t.json");
    fs::write(&path, c.to_string()).unwrap();
    let outs: Vec<Vec<u8>> = ["1", "4", "8"]
        .iter()
        .map(|n| {
            let o = bin().arg("--config").arg(&path).env("L2FIELD_THREADS", n).output().unwrap();
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            o.stdout
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[test]
fn characterize_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let phi = |f: &[f64]| -> f64 {
        let n2: f64 = f.iter().map(|x| x * x).sum::<f64>() / 4.0;
        n2.powf(0.4)
    };
    let funcs: Vec<Vec<f64>> = vec![
        vec![1.0, 0.0, 0.5, 0.0],
        vec![0.0, 2.0, 0.0, 1.0],
        vec![1.5, 1.5, -1.0, 0.0],
        vec![0.2, 0.1, 0.0, 0.3],
        vec![3.0, -1.0, 2.0, 2.0],
    ];
    let js = |f: &[f64]| json!({ "func": f }).to_string().replace('"', "\"\"");
    let mut phi_csv = String::from("index,value\n");
    for f in &funcs {
        phi_csv.push_str(&format!("\"{}\",{}\n", js(f), phi(f)));
    }
    let mut cov_csv = String::from("a,b,value\n");
    for a in &funcs {
        for b in &funcs {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let c = 0.5 * (phi(a) + phi(b) - phi(&d));
            cov_csv.push_str(&format!("\"{}\",\"{}\",{}\n", js(a), js(b), c));
        }
    }
    fs::write(dir.path().join("phi.csv"), &phi_csv).unwrap();
    fs::write(dir.path().join("cov.csv"), &cov_csv).unwrap();
    let config = |cov: &str| {
        json!({
            "command": "characterize", "mode": "P31",
            "space": {"grid": {"dim": 1, "n": 4, "extent": 1.0}},
            "phi_csv": dir.path().join("phi.csv"), "cov_csv": dir.path().join(cov)
        })
    };
    let o = run_config(dir.path(), "c", &config("cov.csv"), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["result"]["verdict"], "accept");
    assert!((v["result"]["kernel_H"].as_f64().unwrap() - 0.2).abs() < 1e-10);

    let perturbed = cov_csv.replacen(",0.", ",0.01", 1);
    assert_ne!(perturbed, cov_csv);
    fs::write(dir.path().join("bad.csv"), perturbed).unwrap();
    let o = run_config(dir.path(), "c2", &config("bad.csv"), &[]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["result"]["verdict"], "reject");

    let o = run_config(dir.path(), "c3", &config("missing.csv"), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sampling_an_indefinite_kernel_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let design: Vec<Value> = (1..=8).map(|k| json!([k as f64 / 8.0])).collect();
    let c = json!({
        "command": "sample", "kernel": {"family": "custom_variogram", "alpha": 2.5},
        "design": design, "n_paths": 200, "seed": 1
    });
    let o = run_config(dir.path(), "s", &c, &[]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["pass"], false);
}

#[test]
fn inconsistent_rkhs_target_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = json!({
        "command": "rkhs",
        "kernel": {"family": "l2fbm", "H": 0.5, "space": {"grid": {"dim": 1, "n": 2, "extent": 2.0}}},
        "design": [{"func": [1, 2]}, {"func": [2, 4]}],
        "coeffs": [[1, 0]],
        "targets": [[1, 0]]
    });
    assert_eq!(code(&run_config(dir.path(), "r", &c, &[])), 1);
    let mut ok = c.clone();
    ok["targets"] = json!([[5, 10]]);
    assert_eq!(code(&run_config(dir.path(), "r2", &ok, &[])), 0);
}

#[test]
fn assorted_commands_pass() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        json!({"command": "verify-sheet", "Hvec": [0.3, 0.6],
               "rects": [[[0.1, 0.2], [0.5, 0.9]], [[0.3, 0.0], [1.0, 0.4]]],
               "shifts": [[0.5, 0.5], [2.0, 0.1]]}),
        json!({"command": "verify-measure-si", "H": 0.3,
               "one_point": [[[0.2, 0.5], [0.6, 0.5], [0.4, 0.25]]]}),
        json!({"command": "verify-ss", "kernel": {"family": "mpfbm", "H": 0.3},
               "base": [[0.5, 0.7], [1.0, 1.2]], "family": "mp-dilation", "values": [0.5, 1.0, 2.0]}),
        json!({"command": "verify-si1", "kernel": {"family": "levy", "H": 0.4},
               "pairs": [[[0.1, 0.2], [1.0, 0.5]], [[0.3, 0.3], [0.0, 1.0]]], "seed": 4}),
        json!({"command": "verify-kernel", "kernel": {"family": "fbm1d", "H": 0.7},
               "design": {"grid": {"dim": 1, "n": 16, "lo": 0.1, "hi": 2.0}}}),
        json!({"command": "spectral-lk", "alpha": 1.0, "xi_list": [0.5, 2.0]}),
        json!({"command": "schoenberg", "alpha": 1.5, "design": [[0.0], [0.5], [1.3]], "t_list": [1.0]}),
        json!({"command": "chentsov", "d": 1, "pairs": [[[0.0], [2.5]]], "n_samples": 1000, "seed": 1}),
        json!({"command": "random-measure", "n_reps": 2000, "seed": 8,
               "cells": [{"lo": 0.0, "hi": 1.0, "mass": 0.5}, {"lo": 1.0, "hi": 2.0, "mass": 1.0},
                         {"lo": 2.0, "hi": 3.0, "mass": 0.25}]}),
    ];
    for (i, c) in configs.iter().enumerate() {
        let o = run_config(dir.path(), &format!("c{i}"), c, &["--quiet"]);
        assert_eq!(code(&o), 0, "{c}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn schoenberg_exponent_three_fails() {
    let dir = tempfile::tempdir().unwrap();
    let design: Vec<Value> = (0..12).map(|k| json!([k as f64 * 0.25])).collect();
    let c = json!({"command": "schoenberg", "alpha": 3.0, "design": design, "t_list": [1.0, 10.0]});
    assert_eq!(code(&run_config(dir.path(), "s", &c, &["--quiet"])), 1);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_stokes-eig");

fn run(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("STOKES_EIG_OUT");
    if let Some(p) = env_out {
        cmd.env("STOKES_EIG_OUT", p);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const ANNULUS: &str = r#"{
    "geometry": {"kind": "annulus", "r1": 1.0, "r2": 1.7, "n_inner_panels": 4},
    "formulation": "double_layer",
    "allow_double_layer_multiply_connected": true,
    "intervals": [[13.3, 13.7]],
    "seed": 0
}"#;

const CIRCLE: &str = r#"{
    "geometry": {"kind": "circle", "radius": 1.0, "panels": 4},
    "intervals": [[3.0, 3.5]]
}"#;

#[test]
fn annulus_sweep_and_eigenfield() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "annulus.json", ANNULUS);
    let out1 = tmp.path().join("run1");
    let o = run(&["sweep", &cfg, "--out", out1.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let roots: Value = serde_json::from_str(&fs::read_to_string(out1.join("roots.json")).unwrap()).unwrap();
    let accepted: Vec<f64> = roots["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "accepted")
        .map(|r| r["k_root"].as_f64().unwrap())
        .collect();
    let radial = accepted
        .iter()
        .position(|k| (k - 13.48025717955055).abs() <= 1e-8)
        .unwrap_or_else(|| panic!("no radial root in {accepted:?}"));
    assert_eq!(roots["num_nodes"], 16 * (4 + 8));
    assert!(out1.join("intervals/interval_000.json").exists());
    let summary = fs::read_to_string(out1.join("summary.csv")).unwrap();
    assert!(summary.starts_with("k_root,"));
    assert_eq!(summary.lines().count(), roots["reports"].as_array().unwrap().len() + 1);

    // determinism
    let out2 = tmp.path().join("run2");
    let o = run(&["sweep", &cfg, "--out", out2.to_str().unwrap()], None);
    assert!(o.status.success());
    assert_eq!(fs::read(out1.join("roots.json")).unwrap(), fs::read(out2.join("roots.json")).unwrap());

    let roots_path = out1.join("roots.json");
    let idx = radial.to_string();
    let o = run(
        &["eigenfield", roots_path.to_str().unwrap(), "--index", &idx, "--nx", "31", "--ny", "29"],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stem = format!("eigenfield_{radial:03}");
    let csv = fs::read_to_string(out1.join(format!("{stem}.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,mask,u1,u2,omega");
    assert_eq!(lines.len(), 31 * 29 + 1);
    let meta: Value = serde_json::from_str(&fs::read_to_string(out1.join(format!("{stem}.json"))).unwrap()).unwrap();
    let frac = meta["masked_fraction"].as_f64().unwrap();
    assert!(frac > 0.0 && frac < 1.0, "{frac}");
    // radial mode: u_r vanishes
    let mut umax: f64 = 0.0;
    let mut urmax: f64 = 0.0;
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        if v[2] == 1.0 {
            let r = v[0].hypot(v[1]);
            urmax = urmax.max(((v[3] * v[0] + v[4] * v[1]) / r).abs());
            umax = umax.max(v[3].hypot(v[4]));
        }
    }
    assert!(urmax <= 1e-6 * umax, "{urmax} vs {umax}");

    let o = run(&["eigenfield", roots_path.to_str().unwrap(), "--index", "99"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));
}

#[test]
fn invalid_config_exits_one_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{"intervals": [[1.0, 2.0]]}"#);
    let o = run(&["sweep", &cfg, "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry"));

    let cfg = write_config(
        tmp.path(),
        "eta.json",
        r#"{"geometry": {"kind": "circle", "radius": 1.0}, "intervals": [[1.0, 2.0]], "eta": "one"}"#,
    );
    let o = run(&["sweep", &cfg], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`eta`"));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let from_config = tmp.path().join("cfg_out");
    let body = CIRCLE.replacen('{', &format!("{{\"output_dir\": {:?},", from_config.to_str().unwrap()), 1);
    let cfg = write_config(tmp.path(), "circle.json", &body);

    let o = run(&["sweep", &cfg], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(from_config.join("roots.json").exists());

    let env_dir = tmp.path().join("env_out");
    assert!(run(&["sweep", &cfg], Some(&env_dir)).status.success());
    assert!(env_dir.join("roots.json").exists());

    let flag_dir = tmp.path().join("flag_out");
    assert!(run(&["sweep", &cfg, "--out", flag_dir.to_str().unwrap()], Some(&env_dir)).status.success());
    assert!(flag_dir.join("summary.csv").exists());
}

#[test]
fn fit_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let body = CIRCLE.replacen('{', r#"{"tolerances": {"initial_points": 4, "max_degree": 4},"#, 1);
    let cfg = write_config(tmp.path(), "tight.json", &body);
    let out = tmp.path().join("o");
    let o = run(&["sweep", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let d: Value = serde_json::from_str(&fs::read_to_string(out.join("intervals/interval_000.json")).unwrap()).unwrap();
    assert_eq!(d["converged"], false);
    assert_eq!(d["refine"], true);
}

#[test]
fn reference_tables() {
    let o = run(&["reference", "disk-neumann", "--kmin", "1", "--kmax", "15"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let ks: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let want = [5.135622301840683, 8.417244140399865, 11.61984117214906, 14.79595178235126];
    assert_eq!(ks.len(), 4);
    for (k, w) in ks.iter().zip(want) {
        assert!((k - w).abs() <= 1e-12 * w);
    }

    let o = run(&["reference", "annulus", "--kmin", "13", "--kmax", "14"], None);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.contains("13.48025717955")));

    let o = run(&["reference", "disk-neumann", "--kmin", "0", "--kmax", "3"], None);
    assert_eq!(o.status.code(), Some(1));
}

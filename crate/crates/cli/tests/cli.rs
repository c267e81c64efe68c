use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mdisp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdisp"))
        .args(args)
        .env_remove("MDISP_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn constant_impedance_is_m_dissipative() {
    let out = mdisp(&[
        "impedance",
        "classify",
        "--surface",
        "sphere",
        "--lmax",
        "4",
        "--z",
        "const:1.0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["passed"], true);
    assert_eq!(r["result"]["verdict"], "m-dissipative");
    assert!(r["result"]["margin"].as_f64().unwrap() >= 0.0);
    assert!(r["tolerances"]["margin"].as_f64().unwrap() > 0.0);
    assert!(r.get("timing").is_none());
}

#[test]
fn zero_graph_is_maximal_dissipative() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "gr0.json",
        r#"{"dim": 2, "basis": [
            {"f": [[1,0],[0,0]], "fp": [[0,0],[0,0]]},
            {"f": [[0,0],[1,0]], "fp": [[0,0],[0,0]]}]}"#,
    );
    let out = mdisp(&[
        "relation",
        "check",
        "--file",
        &f,
        "--require",
        "maximal-dissipative",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["verdict"]["maximal_dissipative"], true);
    assert_eq!(r["result"]["verdict"]["selfadjoint"], true);
}

#[test]
fn failed_requirement_exits_two() {
    let dir = TempDir::new().unwrap();
    // Graph of i·I: Im⟨h'|h⟩ = ‖h‖² > 0.
    let f = write(
        dir.path(),
        "gri.json",
        r#"{"dim": 1, "basis": [{"f": [[1,0]], "fp": [[0,1]]}]}"#,
    );
    let out = mdisp(&[
        "relation",
        "check",
        "--file",
        &f,
        "--require",
        "dissipative",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["passed"], false);
    assert_eq!(r["verdicts"]["require_dissipative"]["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("require_dissipative"));
}

#[test]
fn configuration_errors_exit_three() {
    let bad: &[&[&str]] = &[
        &[
            "impedance",
            "classify",
            "--lmax",
            "2",
            "--z",
            "const:1",
            "--tol",
            "margin=0",
        ],
        &[
            "impedance",
            "classify",
            "--lmax",
            "2",
            "--z",
            "const:1",
            "--tol",
            "margin=-1e-3",
        ],
        &[
            "impedance",
            "classify",
            "--lmax",
            "2",
            "--z",
            "const:1",
            "--tol",
            "bogus=1",
        ],
        &["impedance", "classify", "--lmax", "2", "--z", "const:-1"],
        &["impedance", "classify", "--lmax", "2", "--z", "f-dev:1+y"],
        &["impedance", "classify", "--lmax", "2", "--z", "wedge:a=1"],
        &[
            "impedance",
            "classify",
            "--surface",
            "klein",
            "--z",
            "const:1",
        ],
        &[
            "impedance",
            "extend",
            "--lmax",
            "2",
            "--z",
            "const:1+1i",
            "--method",
            "krein",
        ],
        &["relation", "check", "--file", "/nonexistent/rel.json"],
        &["maxwell1d", "evolve", "--n", "4"],
        &["maxwell1d", "evolve", "--pulse", "square:x0=1"],
        &["maxwell1d", "green", "--case", "nope"],
        &["suite", "nope"],
        &["frobnicate"],
    ];
    for args in bad {
        let out = mdisp(args);
        assert_eq!(
            out.status.code(),
            Some(3),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn non_contractive_k_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let k = write(dir.path(), "k.json", "[[2, 0], [0, 0]]");
    let out = mdisp(&["maxwell1d", "range", "--K", &k, "--n", "32"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_are_byte_identical() {
    let args = [
        "impedance",
        "classify",
        "--lmax",
        "3",
        "--z",
        "random:s=1.2,seed=11",
    ];
    let a = mdisp(&args);
    let b = mdisp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let ev = [
        "maxwell1d",
        "evolve",
        "--z0",
        "1",
        "--z1",
        "0.5",
        "--n",
        "64",
        "--steps",
        "50",
    ];
    let a = mdisp(&ev);
    let b = mdisp(&ev);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn config_file_mirrors_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"command": "impedance classify", "surface": "sphere", "lmax": 3,
            "z": "cap:theta0=0.5", "tol": ["margin=1e-9"], "matrices": false}"#,
    );
    let from_file = mdisp(&["--config", &cfg]);
    let from_flags = mdisp(&[
        "impedance",
        "classify",
        "--surface",
        "sphere",
        "--lmax",
        "3",
        "--z",
        "cap:theta0=0.5",
        "--tol",
        "margin=1e-9",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);
    assert_eq!(json(&from_file)["tolerances"]["margin"], 1e-9);

    let broken = write(dir.path(), "bad.json", r#"{"lmax": 3}"#);
    assert_eq!(mdisp(&["--config", &broken]).status.code(), Some(3));
}

#[test]
fn evolve_writes_csv_and_side_report() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("e.csv");
    let rep = dir.path().join("e.json");
    let out = mdisp(&[
        "maxwell1d",
        "evolve",
        "--z0",
        "1",
        "--z1",
        "0.5",
        "--n",
        "100",
        "--dt",
        "1e-3",
        "--steps",
        "200",
        "--pulse",
        "gaussian:x0=0.5,w=0.05,dir=right",
        "--output",
        csv.to_str().unwrap(),
        "--report",
        rep.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,t,energy,boundary_flux"));
    let energies: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(energies.len(), 201);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let r: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(r["seed"], 3);
    assert_eq!(r["passed"], true);
}

#[test]
fn range_accepts_nested_k() {
    let dir = TempDir::new().unwrap();
    let k = write(dir.path(), "k.json", "[[0.3, [0, 0.1]], [0, -0.5]]");
    let out = mdisp(&[
        "maxwell1d",
        "range",
        "--K",
        &k,
        "--n",
        "64",
        "--samples",
        "40",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert!(
        r["result"]["resolvent"]["max_scaled_resolvent"]
            .as_f64()
            .unwrap()
            <= 1.0 + 1e-8
    );
    assert_eq!(r["result"]["K"]["data"][1], serde_json::json!([0.0, 0.1]));
}

#[test]
fn green_and_surface_commands_pass() {
    let g = mdisp(&[
        "maxwell1d",
        "green",
        "--case",
        "trig2",
        "--eps",
        "1,4@0.3",
        "--n",
        "64",
    ]);
    assert_eq!(g.status.code(), Some(0));
    let s = mdisp(&[
        "surface", "info", "--model", "torus", "--kmax", "2", "--tables",
    ]);
    assert_eq!(s.status.code(), Some(0));
    let r = json(&s);
    assert_eq!(r["result"]["b1"], 2);
    let t = &r["result"]["tables"]["fields"];
    assert_eq!(
        t["data"].as_array().unwrap().len() as u64,
        t["rows"].as_u64().unwrap() * t["cols"].as_u64().unwrap()
    );
}

#[test]
fn suite_runs_and_timing_is_opt_in() {
    let out = Command::new(env!("CARGO_BIN_EXE_mdisp"))
        .args(["suite", "cayley", "--timing"])
        .env("MDISP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["timing"]["seconds"].as_f64().is_some());
    assert_eq!(r["result"]["total"], 2);
    let bad = Command::new(env!("CARGO_BIN_EXE_mdisp"))
        .args(["suite", "cayley"])
        .env("MDISP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(3));
}

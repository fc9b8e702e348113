use std::process::{Command, Output};

use serde_json::Value;

fn splitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitlab"))
        .args(args)
        .env_remove("SPLITLAB_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn inner_series_first_coefficients() {
    let o = splitlab(&["inner-series", "--n", "2"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["outputs"]["a"], serde_json::json!(["1", "-4", "64"]));
    assert_eq!(v["schema_version"], 1);

    let o = splitlab(&["inner-series", "-N", "2", "--format", "csv"]);
    assert_eq!(stdout(&o), "n,a_n\n0,1\n1,-4\n2,64\n");
}

#[test]
fn roots_six_to_ten() {
    let o = splitlab(&["roots", "--gamma", "-0.1", "--n-min", "6", "--n-max", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let roots = v["outputs"]["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 5);
    let alpha = v["outputs"]["alpha"].as_f64().unwrap();
    let mut last = f64::INFINITY;
    for r in roots {
        let n = r["n"].as_f64().unwrap();
        let e = r["eps_n"].as_f64().unwrap();
        let q = n * std::f64::consts::PI * e / alpha;
        assert!((0.96..=1.04).contains(&q), "n = {n}: {q}");
        assert!(e < last);
        last = e;
        assert_eq!(r["converged"], true);
    }
}

#[test]
fn portrait_separatrix_matches_the_soliton() {
    let o = splitlab(&["portrait", "--gamma", "-0.1", "--format", "csv", "--orbits", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("orbit,kind,t,u,w,status"));
    let beta = (1.0f64 - 0.9).sqrt();
    let mut seen = 0;
    for line in lines {
        let c: Vec<&str> = line.split(',').collect();
        if c[1] != "separatrix" {
            continue;
        }
        let t: f64 = c[2].parse().unwrap();
        let x = -8.0 + t;
        let d = beta * x.cosh() + 1.0;
        let (u, w) = (3.0 / d, -3.0 * beta * x.sinh() / (d * d));
        assert!((c[3].parse::<f64>().unwrap() - u).abs() <= 1e-10, "t = {t}");
        assert!((c[4].parse::<f64>().unwrap() - w).abs() <= 1e-10, "t = {t}");
        assert_eq!(c[5], "ok");
        seen += 1;
    }
    assert_eq!(seen, 321);
}

#[test]
fn portrait_loop_count_follows_gamma() {
    let count = |g: &str| {
        let o = splitlab(&["portrait", "--gamma", g, "--orbits", "2"]);
        assert!(o.status.success());
        json(&o)["outputs"]["separatrices"].as_u64().unwrap()
    };
    assert_eq!(count("1"), 2);
    assert_eq!(count("-0.1"), 1);
    let o = splitlab(&["portrait", "--gamma", "1", "--orbits", "2"]);
    let kinds: Vec<String> = json(&o)["outputs"]["fixed_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds, ["saddle", "center", "center"]);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let args = ["sweep", "--gamma", "-0.1", "--eps-min", "0.09", "--eps-max", "0.11", "--eps-steps", "9"];
    let a = splitlab(&args);
    let mut more = args.to_vec();
    more.extend(["--jobs", "1"]);
    let b = splitlab(&more);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# shot settings\ngamma = -0.05\neps = 0.1\nformat = json\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = json(&splitlab(&["shoot", "--config", c]));
    assert_eq!(from_file["config"]["gamma"], -0.05);
    assert_eq!(from_file["config"]["eps"], 0.1);
    let flagged = json(&splitlab(&["shoot", "--config", c, "--gamma", "-0.1"]));
    assert_eq!(flagged["config"]["gamma"], -0.1);

    std::fs::write(&cfg, "gamma -0.05\n").unwrap();
    assert_eq!(splitlab(&["shoot", "--config", c]).status.code(), Some(1));
}

#[test]
fn cache_hits_and_recovers_from_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_splitlab"))
            .args(["shoot", "--gamma", "-0.1", "--eps", "0.1"])
            .env("SPLITLAB_CACHE", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    assert_eq!(run().stdout, first.stdout);

    std::fs::write(&entries[0], "{ not json").unwrap();
    let again = run();
    assert!(again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("corrupt"));
    assert_eq!(again.stdout, first.stdout);
    // Rewritten intact.
    let stored: Value = serde_json::from_slice(&std::fs::read(&entries[0]).unwrap()).unwrap();
    assert_eq!(stored["output"].as_str().unwrap().as_bytes(), &first.stdout[..]);
}

#[test]
fn exit_codes() {
    assert_eq!(splitlab(&["shoot", "--gamma", "0.2", "--eps", "0.1"]).status.code(), Some(1));
    assert_eq!(splitlab(&["shoot", "--gamma", "-0.1"]).status.code(), Some(1));
    assert_eq!(splitlab(&["sweep", "--bogus"]).status.code(), Some(1));
    assert_eq!(splitlab(&["stokes", "--y", "10"]).status.code(), Some(1));
    assert_eq!(splitlab(&["--help"]).status.code(), Some(0));

    let o = splitlab(&["shoot", "--gamma", "-0.1", "--eps", "0.06", "--precision", "std"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--precision dd"));

    // A bracket of half-width 0.4/n around the zero still converges; one far
    // too narrow to contain a root exits with the no-convergence code.
    let o = splitlab(&["roots", "--n-min", "6", "--n-max", "6", "--half-width", "0.001"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn shoot_record_is_self_certifying() {
    let v = json(&splitlab(&["shoot", "--gamma", "-0.1", "--eps", "0.1", "--precision", "dd"]));
    assert_eq!(v["precision"], "dd");
    assert_eq!(v["audit"]["ok"], true);
    let s = v["outputs"]["shot"]["s_decimal"].as_str().unwrap();
    assert!(s.starts_with("1.66267044602309511454"), "{s}");
}

#[test]
fn verify_passes() {
    let o = splitlab(&["verify", "--format", "csv"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("true")), "{text}");
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nlz(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlz"))
        .current_dir(dir)
        .env_remove("NLZ_OUTDIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line:?}"))
        .parse()
        .unwrap()
}

#[test]
fn tunnel_prints_probability() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlz(dir.path(), &["tunnel", "--beta", "-2", "--v", "0.001"]);
    assert!(o.status.success());
    let p = value(stdout(&o).trim(), "p");
    assert!((p - 0.5).abs() < 0.01, "p = {p}");

    let o = nlz(dir.path(), &["--no-svg", "tunnel", "--beta", "0", "--v", "1,4"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        let v = value(l, "v");
        let lz = (-std::f64::consts::PI / v).exp();
        assert!((value(l, "p") - lz).abs() / lz < 0.02, "{l}");
    }
    let csv = fs::read_to_string(dir.path().join("out/tunnel/tunnel.csv")).unwrap();
    assert!(csv.starts_with("v,beta,p,p_lz,p_adiabatic\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("out/tunnel/manifest.json").is_file());
}

#[test]
fn fixed_points_report_hole_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlz(dir.path(), &["fixedpoints", "--beta", "-4", "--gamma", "0"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("branch,s"));
    let hole = out.lines().find(|l| l.starts_with("hole,")).expect("hole row");
    let s: f64 = hole[5..].parse().unwrap();
    assert!((s - 0.5).abs() < 1e-12, "s = {s}");

    let o = nlz(dir.path(), &["fixedpoints", "--beta", "1", "--gamma", "0.3"]);
    assert!(!stdout(&o).contains("hole"));
}

#[test]
fn spectrum_grid_and_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlz(dir.path(), &["spectrum", "--beta", "0", "--points", "5"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("out/spectrum/levels.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for pair in rows.chunks(2) {
        let g = pair[0][0];
        let e = (g * g + 1.0).sqrt();
        assert!((pair[0][1] + e).abs() < 1e-10 && (pair[1][1] - e).abs() < 1e-10);
    }

    let o = nlz(dir.path(), &["spectrum", "--beta", "-3"]);
    assert!(stdout(&o).contains("max_levels=4"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["spectrum", "--beta", "1", "--points", "0"][..],
        &["spectrum", "--beta", "1", "--gamma-min", "1", "--gamma-max", "-1"],
        &["tunnel", "--beta", "1", "--v", "-1"],
        &["--alpha", "0", "tunnel", "--beta", "1", "--v", "1"],
        &["repro", "fig9"],
        &["tunnel", "--beta", "1"],
        &[],
    ] {
        let o = nlz(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains("error"), "{args:?}: {err}");
    }
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown = 1\n").unwrap();
    let o = nlz(dir.path(), &["--config", bad.to_str().unwrap(), "--dump-config"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_precedence_env_file_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_nlz"));
        c.current_dir(dir.path()).env_remove("NLZ_OUTDIR").args(args);
        if let Some(e) = env {
            c.env("NLZ_OUTDIR", e);
        }
        stdout(&c.output().unwrap())
    };
    assert!(run(&["--dump-config"], None).contains("outdir = \"out\""));
    assert!(run(&["--dump-config"], Some("envdir")).contains("outdir = \"envdir\""));

    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "outdir = \"filedir\"\n[integrator]\nrel_tol = 1e-8\n").unwrap();
    let c = cfg.to_str().unwrap();
    let dump = run(&["--config", c, "--dump-config"], Some("envdir"));
    assert!(dump.contains("outdir = \"filedir\""));
    assert!(dump.contains("rel_tol = 0.00000001"));
    let dump = run(
        &[
            "--config",
            c,
            "--outdir",
            "flagdir",
            "--rel-tol",
            "1e-9",
            "--dump-config",
        ],
        Some("envdir"),
    );
    assert!(dump.contains("outdir = \"flagdir\""));
    assert!(dump.contains("rel_tol = 0.000000001"));

    run(&["tunnel", "--beta", "1", "--v", "2"], Some("envdir"));
    assert!(dir.path().join("envdir/tunnel/tunnel.csv").is_file());
}

#[test]
fn evolve_writes_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlz(
        dir.path(),
        &["--no-svg", "evolve", "--beta", "1", "--v", "1", "--initial", "b"],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(value(&out, "norm_drift") < 1e-8);
    let csv = fs::read_to_string(dir.path().join("out/evolve/sweep.csv")).unwrap();
    assert!(csv.starts_with("gamma,s,theta,energy,a_re,a_im,b_re,b_im,F_hole\n"));
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(first[0], -50.0);
    assert_eq!(first[1], 1.0);
}

#[test]
fn repro_fig1_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlz(dir.path(), &["--no-svg", "repro", "fig1"]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert!(out.lines().any(|l| l.trim_start().starts_with("PASS ")));
    assert!(!out.contains("FAIL"));
    assert!(dir.path().join("out/fig1/manifest.json").is_file());
}

#[test]
fn help_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["", "spectrum", "tunnel", "phase", "fixedpoints", "evolve", "repro"] {
        let mut args: Vec<&str> = if cmd.is_empty() { vec![] } else { vec![cmd] };
        args.push("--help");
        let o = nlz(dir.path(), &args);
        assert!(o.status.success());
        let name = if cmd.is_empty() { "nlz" } else { cmd };
        let path = golden.join(format!("{name}.txt"));
        let text = stdout(&o);
        if update {
            fs::write(&path, &text).unwrap();
        } else {
            let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
            assert_eq!(text, want, "help for {name} changed; rerun with UPDATE_GOLDEN=1");
        }
    }
}

//! End-to-end tests of the `nfield` binary: argument handling, exit codes,
//! file outputs and the output-directory override.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nfield(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nfield"));
    cmd.args(args);
    cmd.env_remove("NFIELD_OUT");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to spawn nfield")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.ini");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_subcommand_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            "[run]\nexperiment = dde-constant\n\n[time]\nstep = 0.25\n\n[model]\nt_final = 3\n\n[output]\ndir = {}\n",
            out.display()
        ),
    );
    let result = nfield(&["run", &cfg], &[]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    for name in ["snapshots.csv", "trace.csv", "stats.csv", "plot.gp"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("solved 12 slabs"), "{stdout}");
}

#[test]
fn env_var_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let override_dir = dir.path().join("elsewhere");
    let cfg = write_config(
        dir.path(),
        "[run]\nexperiment = dde-constant\n\n[time]\nstep = 0.5\n\n[model]\nt_final = 2\n",
    );
    let result = nfield(
        &["run", &cfg],
        &[("NFIELD_OUT", override_dir.to_str().unwrap())],
    );
    assert!(result.status.success());
    assert!(override_dir.join("snapshots.csv").exists());
}

#[test]
fn preset_render_round_trips() {
    let result = nfield(&["preset", "neural-hopf", "--render"], &[]);
    assert!(result.status.success());
    let text = String::from_utf8(result.stdout).unwrap();
    let cfg = nfield::parse_config(&text).unwrap();
    assert_eq!(cfg.experiment, nfield::Experiment::NeuralHopf);
}

#[test]
fn converge_subcommand_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let cfg = write_config(
        dir.path(),
        &format!(
            "[run]\nexperiment = integro-decay\n\n[mesh]\nelements = 8\n\n[time]\nstep = 0.1\n\n[model]\nt_final = 1\n\n[output]\ndir = {}\n",
            out.display()
        ),
    );
    let result = nfield(&["converge", &cfg, "--steps", "0.2,0.1,0.05"], &[]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(out.join("convergence.csv").exists());
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("key,value\nslope,"), "{report}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("fitted slope"), "{stdout}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[run]\nexperiment = dde-constant\n\n[time]\nstep = 0.25\n\n[model]\nt_final = 3\n",
    );
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    assert!(nfield(&["run", &cfg], &[("NFIELD_OUT", out1.to_str().unwrap())])
        .status
        .success());
    assert!(nfield(&["run", &cfg], &[("NFIELD_OUT", out2.to_str().unwrap())])
        .status
        .success());
    for name in ["snapshots.csv", "trace.csv", "stats.csv", "plot.gp"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn non_convergence_exits_with_code_two() {
    // zero-delay sigmoid needs at least two Newton iterations per slab;
    // max_iter = 1 forces a non-convergence error
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            "[mesh]\nelements = 4\n\n[time]\nstep = 0.5\n\n[model]\nt_final = 2\n\
             kernel = biexp 3.0 0.5 -5.5 1.0\nactivation = sigmoid 8\ndelay = zero\n\
             history = constant 0.4\n\n[newton]\nmax_iter = 1\n\n[output]\ndir = {}\n",
            out.display()
        ),
    );
    let result = nfield(&["run", &cfg], &[]);
    assert_eq!(result.status.code(), Some(2), "{}", String::from_utf8_lossy(&result.stderr));
    let err = String::from_utf8_lossy(&result.stderr);
    assert!(err.contains("did not converge"), "{err}");
}

#[test]
fn bad_usage_and_bad_configs_exit_nonzero() {
    let result = nfield(&[], &[]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("usage"));

    let result = nfield(&["preset", "nope"], &[]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("unknown preset"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nfoo = 1\n");
    let result = nfield(&["run", &cfg], &[]);
    assert_eq!(result.status.code(), Some(1));
    let err = String::from_utf8_lossy(&result.stderr);
    assert!(err.contains("line 2") && err.contains("foo"), "{err}");

    let result = nfield(&["run", dir.path().join("missing.ini").to_str().unwrap()], &[]);
    assert_eq!(result.status.code(), Some(1));
}

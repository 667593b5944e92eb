use std::path::PathBuf;
use std::process::ExitCode;

use nfield::config::{parse_config, render, Experiment, RunConfig};
use nfield::error::Error;
use nfield::experiment::run_experiment;
use nfield::RunArtifacts;

const USAGE: &str = "\
usage:
  nfield run <config-path>
  nfield preset <name> [--out DIR] [--render]
  nfield converge <config-path> --steps k1,k2,...

presets: dde-constant, integro-decay, integro-periodic, neural-hopf,
         neural-inhomogeneous

The NFIELD_OUT environment variable overrides the output directory.";

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergence { .. } | Error::SingularSystem { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch() -> Result<(), Error> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let usage = || Error::invalid(format!("bad arguments\n{USAGE}"));
    match args.first().map(String::as_str) {
        Some("run") => {
            let path = args.get(1).ok_or_else(usage)?;
            let mut cfg = parse_config(&std::fs::read_to_string(path)?)?;
            apply_out_override(&mut cfg, None);
            report(run_experiment(&cfg)?);
            Ok(())
        }
        Some("preset") => {
            let name = args.get(1).ok_or_else(usage)?;
            let experiment = Experiment::from_name(name)
                .filter(|e| RunConfig::preset(*e).is_some())
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "unknown preset \"{name}\"; available: {}",
                        RunConfig::preset_names().join(", ")
                    ))
                })?;
            let mut cfg = RunConfig::preset(experiment).unwrap();
            let mut out: Option<PathBuf> = None;
            let mut render_only = false;
            let mut i = 2;
            while i < args.len() {
                match args[i].as_str() {
                    "--out" => {
                        out = Some(PathBuf::from(args.get(i + 1).ok_or_else(usage)?));
                        i += 2;
                    }
                    "--render" => {
                        render_only = true;
                        i += 1;
                    }
                    _ => return Err(usage()),
                }
            }
            if render_only {
                print!("{}", render(&cfg));
                return Ok(());
            }
            apply_out_override(&mut cfg, out);
            report(run_experiment(&cfg)?);
            Ok(())
        }
        Some("converge") => {
            let path = args.get(1).ok_or_else(usage)?;
            let mut cfg = parse_config(&std::fs::read_to_string(path)?)?;
            let mut steps: Option<Vec<f64>> = None;
            let mut i = 2;
            while i < args.len() {
                match args[i].as_str() {
                    "--steps" => {
                        let list = args.get(i + 1).ok_or_else(usage)?;
                        let parsed: Result<Vec<f64>, _> = list
                            .split(',')
                            .filter(|s| !s.is_empty())
                            .map(str::parse::<f64>)
                            .collect();
                        steps = Some(parsed.map_err(|_| {
                            Error::invalid(format!("could not parse step list \"{list}\""))
                        })?);
                        i += 2;
                    }
                    _ => return Err(usage()),
                }
            }
            cfg.converge_steps =
                steps.ok_or_else(|| Error::invalid(format!("converge needs --steps\n{USAGE}")))?;
            apply_out_override(&mut cfg, None);
            report(run_experiment(&cfg)?);
            Ok(())
        }
        _ => Err(usage()),
    }
}

fn apply_out_override(cfg: &mut RunConfig, flag: Option<PathBuf>) {
    if let Some(dir) = flag {
        cfg.out_dir = dir;
    }
    if let Ok(dir) = std::env::var("NFIELD_OUT") {
        if !dir.is_empty() {
            cfg.out_dir = PathBuf::from(dir);
        }
    }
}

fn report(artifacts: RunArtifacts) {
    if let Some(stats) = &artifacts.stats {
        println!(
            "solved {} slabs, max {} Newton iterations, max residual {:.3e}, wall {:.3?}",
            stats.iterations.len(),
            stats.max_iterations(),
            stats.max_final_residual(),
            stats.wall_time
        );
    }
    if let Some(slope) = &artifacts.slope {
        println!(
            "fitted slope {:.4} (fit residual {:.3e}{})",
            slope.slope,
            slope.fit_residual,
            if slope.low_confidence { ", low confidence" } else { "" }
        );
    }
    if let Some(report) = &artifacts.oscillation {
        println!("oscillation report: {}", report.classification.label());
    }
    for f in &artifacts.files {
        println!("wrote {}", f.display());
    }
}

//! Experiment drivers: build a problem from a `RunConfig`, execute it (single
//! run or convergence study), and write CSV data plus a gnuplot script.
//!
//! All numeric output is printed with 17 significant digits and assembled in
//! a fixed order, so reruns with the same config are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::{
    center_probe_index, convergence_order, dde_oracle, l2_error_at_time, oscillation_diagnostics,
    trace_at_node, Classification, ConvergenceTable, OscillationReport, OscillationThresholds,
    SlopeFit, DDE_ORACLE_SUBSTEPS, DEFAULT_TRANSIENT_FRACTION,
};
use crate::config::{
    ActivationConfig, DelayConfig, Experiment, HistoryConfig, KernelConfig, Reference, RunConfig,
    SourceConfig,
};
use crate::error::{Error, Result};
use crate::history::HistoryBuffer;
use crate::mesh::{Domain, SpaceMesh, TimePartition};
use crate::model::{
    ActivationSpec, DelaySpec, InitialHistory, KernelSpec, NeuralFieldProblem, SourceFn,
};
use crate::solver::{solve_trajectory, SolverOptions, SolverStats};

/// Snapshot of slab end traces sampled on a uniform spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    /// (time level, samples (x, u)).
    pub frames: Vec<(f64, Vec<(f64, f64)>)>,
}

/// Everything a finished experiment produced.
#[derive(Debug)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub slope: Option<SlopeFit>,
    pub oscillation: Option<OscillationReport>,
    pub stats: Option<SolverStats>,
}

pub fn build_mesh(cfg: &RunConfig) -> Result<SpaceMesh> {
    SpaceMesh::uniform(Domain::new(cfg.domain.0, cfg.domain.1)?, cfg.elements)
}

pub fn build_partition(cfg: &RunConfig, step: f64) -> Result<TimePartition> {
    match cfg.breaking_period {
        Some(bp) => TimePartition::with_breaking_points(cfg.t_final, step, bp),
        None => TimePartition::uniform(cfg.t_final, step),
    }
}

/// Materialize the model from the config; the mesh supplies the subdomain of
/// the kernel inhomogeneity (one element).
pub fn build_problem(cfg: &RunConfig, mesh: &SpaceMesh) -> Result<NeuralFieldProblem> {
    let base = match &cfg.kernel {
        KernelConfig::Constant(c) => KernelSpec::Constant(*c),
        KernelConfig::BiExponential(terms) => KernelSpec::BiExponential(terms.clone()),
    };
    let kernel = if cfg.omega > 0.0 {
        let idx = cfg.omega_element.unwrap_or(cfg.elements / 2);
        if idx >= mesh.n_elements() {
            return Err(Error::invalid(format!(
                "omega_element {idx} out of range for {} elements",
                mesh.n_elements()
            )));
        }
        KernelSpec::Inhomogeneous {
            base: Box::new(base),
            omega: cfg.omega,
            subdomain: mesh.element_bounds(idx),
        }
    } else {
        base
    };
    let activation = match cfg.activation {
        ActivationConfig::Linear => ActivationSpec::Linear,
        ActivationConfig::Sigmoid(s) => ActivationSpec::Sigmoid { sigma: s },
    };
    let delay = match cfg.delay {
        DelayConfig::Zero => DelaySpec::Zero,
        DelayConfig::Constant(tau) => DelaySpec::Constant(tau),
        DelayConfig::DistancePlusOffset(t0) => DelaySpec::DistancePlusOffset { tau0: t0 },
    };
    let history = match cfg.history {
        HistoryConfig::Constant(c) => InitialHistory::Constant(c),
        HistoryConfig::LinearInTime => InitialHistory::LinearInTime,
        HistoryConfig::LinearInSpace => InitialHistory::LinearInSpace,
    };
    let source: Option<SourceFn> = match cfg.source {
        SourceConfig::None => None,
        SourceConfig::Periodic => {
            let alpha = cfg.alpha;
            Some(Arc::new(move |t: f64, x: f64| {
                x * t.cos() + alpha * x * t.sin()
            }))
        }
    };
    NeuralFieldProblem::new(
        cfg.alpha,
        kernel,
        activation,
        delay,
        source,
        history,
        Domain::new(cfg.domain.0, cfg.domain.1)?,
        cfg.t_final,
    )
}

pub fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        time_order: cfg.time_order,
        space_order: cfg.space_order,
        quad_time: cfg.quad_time,
        quad_space: cfg.quad_space,
        newton: cfg.newton,
    }
}

/// Sample all slab end traces (plus the initial trace at t = 0) on a uniform
/// x-grid.
pub fn build_snapshots(buffer: &HistoryBuffer, grid_points: usize) -> Result<SnapshotSet> {
    let dom = buffer.disc.mesh.domain();
    let xs: Vec<f64> = (0..grid_points)
        .map(|i| dom.a + i as f64 * dom.length() / (grid_points - 1) as f64)
        .collect();
    let mut frames = Vec::with_capacity(buffer.n_done() + 1);
    for n in 0..=buffer.n_done() {
        let t = buffer.disc.partition.levels[n];
        let mut samples = Vec::with_capacity(xs.len());
        for &x in &xs {
            samples.push((x, buffer.evaluate(t, x)?));
        }
        frames.push((t, samples));
    }
    Ok(SnapshotSet { frames })
}

fn probe_index(buffer: &HistoryBuffer, probe_x: Option<f64>) -> usize {
    match probe_x {
        None => center_probe_index(buffer),
        Some(x) => buffer
            .disc
            .dofs
            .node_x
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().partial_cmp(&(b.1 - x).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap(),
    }
}

fn infer_reference(cfg: &RunConfig) -> Result<Reference> {
    if let Some(r) = cfg.reference {
        return Ok(r);
    }
    match cfg.experiment {
        Experiment::DdeConstant => Ok(Reference::DdeOracle),
        Experiment::IntegroDecay => Ok(Reference::SpaceLinearDecay),
        Experiment::IntegroPeriodic => Ok(Reference::SpaceLinearPeriodic),
        other => Err(Error::invalid(format!(
            "experiment {} has no reference solution for a convergence study",
            other.name()
        ))),
    }
}

/// Error of one finished run against the configured reference, measured at
/// the final time (left trace).
fn reference_error(
    cfg: &RunConfig,
    reference: Reference,
    problem: &NeuralFieldProblem,
    buffer: &HistoryBuffer,
) -> Result<f64> {
    let t_end = buffer.disc.partition.t_final();
    match reference {
        Reference::DdeOracle => {
            let tau = match cfg.delay {
                DelayConfig::Constant(tau) if tau > 0.0 => tau,
                _ => {
                    return Err(Error::invalid(
                        "the DDE oracle reference needs a positive constant delay",
                    ))
                }
            };
            let center = 0.5 * (cfg.domain.0 + cfg.domain.1);
            let history = problem.history.clone();
            let oracle = dde_oracle(
                cfg.alpha,
                tau,
                move |s| history.eval(s, center),
                t_end,
                DDE_ORACLE_SUBSTEPS,
            )?;
            let probe = buffer.disc.dofs.node_x[probe_index(buffer, cfg.probe_x)];
            Ok((buffer.evaluate(t_end, probe)? - oracle.eval(t_end)).abs())
        }
        Reference::SpaceLinearDecay => {
            l2_error_at_time(buffer, |t, x| x * (-t).exp(), t_end)
        }
        Reference::SpaceLinearPeriodic => l2_error_at_time(buffer, |t, x| x * t.sin(), t_end),
    }
}

/// Execute one configuration end to end and write its outputs.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunArtifacts> {
    let mesh = build_mesh(cfg)?;
    let problem = build_problem(cfg, &mesh)?;
    let opts = solver_options(cfg);
    fs::create_dir_all(&cfg.out_dir)?;

    let converge_mode =
        cfg.experiment == Experiment::Converge || !cfg.converge_steps.is_empty();
    if converge_mode {
        if cfg.converge_steps.len() < 3 {
            return Err(Error::invalid(format!(
                "convergence mode needs at least 3 steps, got {}",
                cfg.converge_steps.len()
            )));
        }
        let reference = infer_reference(cfg)?;
        let mut steps = cfg.converge_steps.clone();
        steps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut rows = Vec::with_capacity(steps.len());
        for &k in &steps {
            let mesh_k = build_mesh(cfg)?;
            let partition = build_partition(cfg, k)?;
            let (buffer, _) = solve_trajectory(&problem, mesh_k, partition, &opts)?;
            rows.push((k, reference_error(cfg, reference, &problem, &buffer)?));
        }
        let table = ConvergenceTable { rows };
        let slope = convergence_order(&table)?;
        let files = write_outputs(
            &cfg.out_dir,
            None,
            None,
            None,
            Some((&table, slope)),
            None,
        )?;
        return Ok(RunArtifacts {
            files,
            slope: Some(slope),
            oscillation: None,
            stats: None,
        });
    }

    let partition = build_partition(cfg, cfg.step)?;
    let (buffer, stats) = solve_trajectory(&problem, mesh, partition, &opts)?;
    let snapshots = build_snapshots(&buffer, cfg.grid_points)?;
    let trace = trace_at_node(&buffer, probe_index(&buffer, cfg.probe_x));

    let oscillation = match cfg.experiment {
        Experiment::NeuralHopf | Experiment::NeuralInhomogeneous => Some(oscillation_diagnostics(
            &trace,
            DEFAULT_TRANSIENT_FRACTION,
            OscillationThresholds::default(),
        )?),
        _ => None,
    };

    let files = write_outputs(
        &cfg.out_dir,
        Some(&snapshots),
        Some(&trace),
        Some(&stats),
        None,
        oscillation.as_ref(),
    )?;
    Ok(RunArtifacts {
        files,
        slope: None,
        oscillation,
        stats: Some(stats),
    })
}

/// Full-precision float formatting (17 significant digits).
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write whichever outputs the run produced, plus the plot script. Returns
/// the paths written.
pub fn write_outputs(
    dir: &Path,
    snapshots: Option<&SnapshotSet>,
    trace: Option<&[(f64, f64)]>,
    stats: Option<&SolverStats>,
    convergence: Option<(&ConvergenceTable, SlopeFit)>,
    oscillation: Option<&OscillationReport>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    if let Some(snap) = snapshots {
        let path = dir.join("snapshots.csv");
        let mut s = String::from("t,x,u\n");
        for (t, samples) in &snap.frames {
            for (x, u) in samples {
                s.push_str(&format!("{},{},{}\n", fmt17(*t), fmt17(*x), fmt17(*u)));
            }
        }
        fs::write(&path, s)?;
        files.push(path);
    }

    if let Some(trace) = trace {
        let path = dir.join("trace.csv");
        let mut s = String::from("t,u\n");
        for (t, u) in trace {
            s.push_str(&format!("{},{}\n", fmt17(*t), fmt17(*u)));
        }
        fs::write(&path, s)?;
        files.push(path);
    }

    if let Some(stats) = stats {
        let path = dir.join("stats.csv");
        let mut s = String::from("slab,iterations,final_residual\n");
        for (i, (it, res)) in stats
            .iterations
            .iter()
            .zip(&stats.final_residuals)
            .enumerate()
        {
            s.push_str(&format!("{},{},{}\n", i + 1, it, fmt17(*res)));
        }
        fs::write(&path, s)?;
        files.push(path);
    }

    if let Some((table, slope)) = convergence {
        let path = dir.join("convergence.csv");
        let mut s = String::from("step,error\n");
        for (k, e) in &table.rows {
            s.push_str(&format!("{},{}\n", fmt17(*k), fmt17(*e)));
        }
        fs::write(&path, s)?;
        files.push(path);

        let path = dir.join("report.csv");
        let mut s = String::from("key,value\n");
        s.push_str(&format!("slope,{}\n", fmt17(slope.slope)));
        s.push_str(&format!("fit_residual,{}\n", fmt17(slope.fit_residual)));
        s.push_str(&format!("low_confidence,{}\n", slope.low_confidence));
        fs::write(&path, s)?;
        files.push(path);
    }

    if let Some(report) = oscillation {
        let path = dir.join("report.csv");
        let mut s = String::from("key,value\n");
        s.push_str(&format!("classification,{}\n", report.classification.label()));
        s.push_str(&format!("mean,{}\n", fmt17(report.mean)));
        s.push_str(&format!(
            "window_amplitude_1,{}\n",
            fmt17(report.window_amplitudes.0)
        ));
        s.push_str(&format!(
            "window_amplitude_2,{}\n",
            fmt17(report.window_amplitudes.1)
        ));
        s.push_str(&format!("samples_used,{}\n", report.samples_used));
        match &report.classification {
            Classification::DecayedToSteady { value } => {
                s.push_str(&format!("steady_value,{}\n", fmt17(*value)));
            }
            Classification::SustainedOscillation { amplitude, period } => {
                s.push_str(&format!("amplitude,{}\n", fmt17(*amplitude)));
                if let Some(p) = period {
                    s.push_str(&format!("period,{}\n", fmt17(*p)));
                }
            }
            Classification::Undetermined => {}
        }
        fs::write(&path, s)?;
        files.push(path);
    }

    let path = dir.join("plot.gp");
    fs::write(&path, plot_script(snapshots.is_some(), trace.is_some(), convergence.is_some()))?;
    files.push(path);

    Ok(files)
}

/// Gnuplot script covering the figure families: space-time contour, surface,
/// fixed-x trace and error log-log. Written as text, never executed here.
fn plot_script(have_snapshots: bool, have_trace: bool, have_convergence: bool) -> String {
    let mut s = String::from(
        "# gnuplot script generated alongside the CSV outputs\n\
         set datafile separator ','\n\n",
    );
    if have_snapshots {
        s.push_str(
            "# space-time contour view\n\
             set terminal pngcairo size 900,600\n\
             set output 'contour.png'\n\
             set xlabel 'x'\n\
             set ylabel 't'\n\
             set pm3d map\n\
             splot 'snapshots.csv' using 2:1:3 every ::1 notitle\n\n\
             # surface view\n\
             set output 'surface.png'\n\
             unset pm3d\n\
             set hidden3d\n\
             set xlabel 'x'\n\
             set ylabel 't'\n\
             set zlabel 'u'\n\
             splot 'snapshots.csv' using 2:1:3 every ::1 with pm3d notitle\n\n",
        );
    }
    if have_trace {
        s.push_str(
            "# trace at the probe point\n\
             set output 'trace.png'\n\
             set xlabel 't'\n\
             set ylabel 'u'\n\
             plot 'trace.csv' using 1:2 every ::1 with lines notitle\n\n",
        );
    }
    if have_convergence {
        s.push_str(
            "# discretization error, log-log\n\
             set output 'convergence.png'\n\
             set logscale xy\n\
             set xlabel 'step'\n\
             set ylabel 'error'\n\
             plot 'convergence.csv' using 1:2 every ::1 with linespoints notitle\n\n",
        );
    }
    s
}

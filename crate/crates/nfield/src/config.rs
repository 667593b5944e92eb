//! Run configuration: a small sectioned key=value format, its renderer, and
//! the built-in experiment presets.
//!
//! Parsing is fail-closed: unknown sections, unknown keys, duplicates and
//! malformed values are all errors carrying the offending line number.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::solver::NewtonConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    DdeConstant,
    IntegroDecay,
    IntegroPeriodic,
    NeuralHopf,
    NeuralInhomogeneous,
    Custom,
    Converge,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::DdeConstant => "dde-constant",
            Experiment::IntegroDecay => "integro-decay",
            Experiment::IntegroPeriodic => "integro-periodic",
            Experiment::NeuralHopf => "neural-hopf",
            Experiment::NeuralInhomogeneous => "neural-inhomogeneous",
            Experiment::Custom => "custom",
            Experiment::Converge => "converge",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "dde-constant" => Experiment::DdeConstant,
            "integro-decay" => Experiment::IntegroDecay,
            "integro-periodic" => Experiment::IntegroPeriodic,
            "neural-hopf" => Experiment::NeuralHopf,
            "neural-inhomogeneous" => Experiment::NeuralInhomogeneous,
            "custom" => Experiment::Custom,
            "converge" => Experiment::Converge,
            _ => return None,
        })
    }
}

/// Reference solution used by convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Method-of-steps solution of the constant-delay scalar DDE.
    DdeOracle,
    /// u(t, x) = x e^{−t}
    SpaceLinearDecay,
    /// u(t, x) = x sin t
    SpaceLinearPeriodic,
}

impl Reference {
    pub fn name(&self) -> &'static str {
        match self {
            Reference::DdeOracle => "dde-oracle",
            Reference::SpaceLinearDecay => "space-linear-decay",
            Reference::SpaceLinearPeriodic => "space-linear-periodic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "dde-oracle" => Reference::DdeOracle,
            "space-linear-decay" => Reference::SpaceLinearDecay,
            "space-linear-periodic" => Reference::SpaceLinearPeriodic,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelConfig {
    Constant(f64),
    BiExponential(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationConfig {
    Linear,
    Sigmoid(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayConfig {
    Zero,
    Constant(f64),
    DistancePlusOffset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistoryConfig {
    Constant(f64),
    LinearInTime,
    LinearInSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceConfig {
    None,
    /// g(t, x) = x cos t + α x sin t (exact solution x sin t).
    Periodic,
}

/// Everything one run needs, resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub reference: Option<Reference>,
    pub probe_x: Option<f64>,

    pub elements: usize,
    pub space_order: usize,
    pub quad_space: Option<usize>,
    pub domain: (f64, f64),

    pub step: f64,
    pub time_order: usize,
    pub quad_time: Option<usize>,
    pub breaking_period: Option<f64>,
    pub converge_steps: Vec<f64>,

    pub alpha: f64,
    pub t_final: f64,
    pub kernel: KernelConfig,
    pub activation: ActivationConfig,
    pub delay: DelayConfig,
    pub history: HistoryConfig,
    pub source: SourceConfig,
    pub omega: f64,
    pub omega_element: Option<usize>,

    pub newton: NewtonConfig,

    pub out_dir: PathBuf,
    pub grid_points: usize,
}

impl RunConfig {
    /// Baseline for custom experiments; `step` and `t_final` must be set
    /// explicitly by the config file.
    fn baseline() -> Self {
        RunConfig {
            experiment: Experiment::Custom,
            reference: None,
            probe_x: None,
            elements: 16,
            space_order: 1,
            quad_space: None,
            domain: (-1.0, 1.0),
            step: 0.0,
            time_order: 1,
            quad_time: None,
            breaking_period: None,
            converge_steps: Vec::new(),
            alpha: 1.0,
            t_final: 0.0,
            kernel: KernelConfig::Constant(1.0),
            activation: ActivationConfig::Linear,
            delay: DelayConfig::Zero,
            history: HistoryConfig::Constant(0.01),
            source: SourceConfig::None,
            omega: 0.0,
            omega_element: None,
            newton: NewtonConfig::default(),
            out_dir: PathBuf::from("out"),
            grid_points: 101,
        }
    }

    /// Built-in presets carrying the reference experiment parameters.
    pub fn preset(experiment: Experiment) -> Option<Self> {
        let mut cfg = Self::baseline();
        cfg.experiment = experiment;
        match experiment {
            Experiment::DdeConstant => {
                // scalar DDE u̇ = −u + u(t−2) as a space-constant field
                cfg.elements = 1;
                cfg.space_order = 0;
                cfg.time_order = 1;
                cfg.step = 0.25;
                cfg.breaking_period = Some(2.0);
                cfg.t_final = 10.0;
                cfg.kernel = KernelConfig::Constant(0.5); // 1/|Ω|
                cfg.delay = DelayConfig::Constant(2.0);
                cfg.history = HistoryConfig::LinearInTime;
                cfg.reference = Some(Reference::DdeOracle);
            }
            Experiment::IntegroDecay => {
                cfg.elements = 64;
                cfg.step = 0.05;
                cfg.t_final = 1.0;
                cfg.kernel = KernelConfig::Constant(1.0);
                cfg.delay = DelayConfig::Zero;
                cfg.history = HistoryConfig::LinearInSpace;
                cfg.reference = Some(Reference::SpaceLinearDecay);
            }
            Experiment::IntegroPeriodic => {
                cfg.elements = 32;
                cfg.step = 0.05;
                cfg.t_final = 4.8;
                cfg.kernel = KernelConfig::Constant(1.0);
                cfg.delay = DelayConfig::Zero;
                cfg.history = HistoryConfig::Constant(0.0);
                cfg.source = SourceConfig::Periodic;
                cfg.reference = Some(Reference::SpaceLinearPeriodic);
            }
            Experiment::NeuralHopf => {
                cfg.elements = 32;
                cfg.step = 0.05;
                cfg.t_final = 100.0;
                cfg.kernel = KernelConfig::BiExponential(vec![(3.0, 0.5), (-5.5, 1.0)]);
                cfg.activation = ActivationConfig::Sigmoid(6.0);
                cfg.delay = DelayConfig::DistancePlusOffset(1.0);
                cfg.history = HistoryConfig::Constant(0.01);
            }
            Experiment::NeuralInhomogeneous => {
                cfg.elements = 16;
                cfg.step = 0.1;
                // long horizon: the homogeneous comparison run (omega = 0)
                // decays slowly and must settle below the steady threshold
                cfg.t_final = 800.0;
                cfg.kernel = KernelConfig::BiExponential(vec![(3.0, 0.5), (-5.5, 1.0)]);
                cfg.activation = ActivationConfig::Sigmoid(4.0);
                cfg.delay = DelayConfig::DistancePlusOffset(1.0);
                cfg.history = HistoryConfig::Constant(0.01);
                cfg.omega = 15.0;
                cfg.omega_element = Some(8);
            }
            Experiment::Custom | Experiment::Converge => return None,
        }
        Some(cfg)
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[
            "dde-constant",
            "integro-decay",
            "integro-periodic",
            "neural-hopf",
            "neural-inhomogeneous",
        ]
    }
}

const SECTIONS: &[&str] = &["run", "mesh", "time", "model", "newton", "output"];

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::parse(line, format!("unknown section \"{name}\"")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key = value, got \"{trimmed}\"")))?;
        let section = section
            .clone()
            .ok_or_else(|| Error::parse(line, "key before any [section] header"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::parse(line, format!("empty value for \"{key}\"")));
        }
        if entries
            .iter()
            .any(|e: &Entry| e.section == section && e.key == key)
        {
            return Err(Error::parse(line, format!("duplicate key \"{key}\"")));
        }
        entries.push(Entry {
            line,
            section,
            key,
            value,
        });
    }
    Ok(entries)
}

fn parse_f64(e: &Entry) -> Result<f64> {
    let v = e
        .value
        .parse::<f64>()
        .map_err(|_| Error::parse(e.line, format!("non-numeric value for \"{}\": \"{}\"", e.key, e.value)))?;
    if !v.is_finite() {
        return Err(Error::parse(
            e.line,
            format!("non-finite value for \"{}\": \"{}\"", e.key, e.value),
        ));
    }
    Ok(v)
}

fn parse_usize(e: &Entry) -> Result<usize> {
    e.value
        .parse::<usize>()
        .map_err(|_| Error::parse(e.line, format!("expected a non-negative integer for \"{}\": \"{}\"", e.key, e.value)))
}

/// Split a numeric list on commas and/or whitespace.
fn parse_f64_list(e: &Entry) -> Result<Vec<f64>> {
    e.value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(e.line, format!("non-numeric entry \"{s}\" in \"{}\"", e.key))
                })
        })
        .collect()
}

fn parse_variant(e: &Entry) -> (String, Vec<String>) {
    let mut parts = e
        .value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    let head = parts.next().unwrap_or_default();
    (head, parts.collect())
}

fn variant_args_f64(e: &Entry, args: &[String]) -> Result<Vec<f64>> {
    args.iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(e.line, format!("non-numeric parameter \"{s}\" for \"{}\"", e.key))
                })
        })
        .collect()
}

/// Parse a config file into a validated `RunConfig`. Named experiments start
/// from their preset, so a minimal file only has to override what differs.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = tokenize(text)?;
    let last_line = text.lines().count();

    // resolve the experiment first so defaults come from the right preset
    let experiment = match entries
        .iter()
        .find(|e| e.section == "run" && e.key == "experiment")
    {
        Some(e) => Experiment::from_name(&e.value)
            .ok_or_else(|| Error::parse(e.line, format!("unknown experiment \"{}\"", e.value)))?,
        None => Experiment::Custom,
    };
    let mut cfg = RunConfig::preset(experiment).unwrap_or_else(|| {
        let mut c = RunConfig::baseline();
        c.experiment = experiment;
        c
    });
    let preset_defaults = experiment != Experiment::Custom && experiment != Experiment::Converge;
    let mut have_step = preset_defaults;
    let mut have_t_final = preset_defaults;

    for e in &entries {
        match (e.section.as_str(), e.key.as_str()) {
            ("run", "experiment") => {}
            ("run", "reference") => {
                cfg.reference = Some(Reference::from_name(&e.value).ok_or_else(|| {
                    Error::parse(e.line, format!("unknown reference \"{}\"", e.value))
                })?);
            }
            ("run", "probe_x") => cfg.probe_x = Some(parse_f64(e)?),
            ("mesh", "elements") => {
                cfg.elements = parse_usize(e)?;
                if cfg.elements == 0 {
                    return Err(Error::parse(e.line, "elements must be ≥ 1"));
                }
            }
            ("mesh", "space_order") => cfg.space_order = parse_usize(e)?,
            ("mesh", "quad_space") => cfg.quad_space = Some(parse_usize(e)?),
            ("mesh", "domain_a") => cfg.domain.0 = parse_f64(e)?,
            ("mesh", "domain_b") => cfg.domain.1 = parse_f64(e)?,
            ("time", "step") | ("time", "k") => {
                cfg.step = parse_f64(e)?;
                have_step = true;
            }
            ("time", "time_order") => cfg.time_order = parse_usize(e)?,
            ("time", "quad_time") => cfg.quad_time = Some(parse_usize(e)?),
            ("time", "breaking_period") => cfg.breaking_period = Some(parse_f64(e)?),
            ("time", "converge_steps") => cfg.converge_steps = parse_f64_list(e)?,
            ("model", "alpha") => cfg.alpha = parse_f64(e)?,
            ("model", "t_final") | ("model", "T") => {
                cfg.t_final = parse_f64(e)?;
                have_t_final = true;
            }
            ("model", "kernel") => {
                let (head, args) = parse_variant(e);
                let nums = variant_args_f64(e, &args)?;
                cfg.kernel = match head.as_str() {
                    "constant" => {
                        if nums.len() != 1 {
                            return Err(Error::parse(e.line, "kernel constant takes one parameter"));
                        }
                        KernelConfig::Constant(nums[0])
                    }
                    "biexp" => {
                        if nums.is_empty() || nums.len() % 2 != 0 {
                            return Err(Error::parse(
                                e.line,
                                "kernel biexp takes parameter pairs c1 mu1 c2 mu2 ...",
                            ));
                        }
                        KernelConfig::BiExponential(
                            nums.chunks(2).map(|c| (c[0], c[1])).collect(),
                        )
                    }
                    other => {
                        return Err(Error::parse(e.line, format!("unknown kernel variant \"{other}\"")))
                    }
                };
            }
            ("model", "activation") => {
                let (head, args) = parse_variant(e);
                let nums = variant_args_f64(e, &args)?;
                cfg.activation = match (head.as_str(), nums.len()) {
                    ("linear", 0) => ActivationConfig::Linear,
                    ("sigmoid", 1) => {
                        if !(nums[0] > 0.0) {
                            return Err(Error::parse(e.line, "sigmoid steepness must be positive"));
                        }
                        ActivationConfig::Sigmoid(nums[0])
                    }
                    _ => {
                        return Err(Error::parse(
                            e.line,
                            format!("unknown activation \"{}\"", e.value),
                        ))
                    }
                };
            }
            ("model", "delay") => {
                let (head, args) = parse_variant(e);
                let nums = variant_args_f64(e, &args)?;
                cfg.delay = match (head.as_str(), nums.len()) {
                    ("zero", 0) => DelayConfig::Zero,
                    ("constant", 1) => DelayConfig::Constant(nums[0]),
                    ("dist", 1) => DelayConfig::DistancePlusOffset(nums[0]),
                    _ => {
                        return Err(Error::parse(e.line, format!("unknown delay \"{}\"", e.value)))
                    }
                };
            }
            ("model", "history") => {
                let (head, args) = parse_variant(e);
                let nums = variant_args_f64(e, &args)?;
                cfg.history = match (head.as_str(), nums.len()) {
                    ("constant", 1) => HistoryConfig::Constant(nums[0]),
                    ("linear-in-time", 0) => HistoryConfig::LinearInTime,
                    ("linear-in-space", 0) => HistoryConfig::LinearInSpace,
                    _ => {
                        return Err(Error::parse(e.line, format!("unknown history \"{}\"", e.value)))
                    }
                };
            }
            ("model", "source") => {
                cfg.source = match e.value.as_str() {
                    "none" => SourceConfig::None,
                    "periodic" => SourceConfig::Periodic,
                    other => {
                        return Err(Error::parse(e.line, format!("unknown source \"{other}\"")))
                    }
                };
            }
            ("model", "omega") => cfg.omega = parse_f64(e)?,
            ("model", "omega_element") => cfg.omega_element = Some(parse_usize(e)?),
            ("newton", "abs_tol") => cfg.newton.abs_tol = parse_f64(e)?,
            ("newton", "rel_tol") => cfg.newton.rel_tol = parse_f64(e)?,
            ("newton", "max_iter") => cfg.newton.max_iter = parse_usize(e)?,
            ("output", "dir") => cfg.out_dir = PathBuf::from(&e.value),
            ("output", "grid_points") => {
                cfg.grid_points = parse_usize(e)?;
                if cfg.grid_points < 2 {
                    return Err(Error::parse(e.line, "grid_points must be ≥ 2"));
                }
            }
            (section, key) => {
                return Err(Error::parse(
                    e.line,
                    format!("unknown key \"{key}\" in section [{section}]"),
                ));
            }
        }
    }

    if !have_step {
        return Err(Error::parse(last_line, "missing required key [time] step"));
    }
    if !have_t_final {
        return Err(Error::parse(last_line, "missing required key [model] t_final"));
    }
    validate(&cfg, last_line)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, line: usize) -> Result<()> {
    let err = |msg: String| Err(Error::parse(line, msg));
    if !(cfg.step > 0.0) {
        return err(format!("step must be positive, got {}", cfg.step));
    }
    if !(cfg.t_final > 0.0) {
        return err(format!("t_final must be positive, got {}", cfg.t_final));
    }
    if !(cfg.domain.0 < cfg.domain.1) {
        return err(format!("domain must satisfy a < b, got [{}, {}]", cfg.domain.0, cfg.domain.1));
    }
    if cfg.alpha < 0.0 {
        return err(format!("alpha must be ≥ 0, got {}", cfg.alpha));
    }
    if cfg.elements > 1_000_000 {
        return err(format!("elements = {} is beyond any sane mesh", cfg.elements));
    }
    if cfg.space_order > 12 || cfg.time_order > 12 {
        return err("polynomial orders above 12 are not supported".into());
    }
    if cfg.grid_points > 1_000_000 {
        return err(format!("grid_points = {} is beyond any sane grid", cfg.grid_points));
    }
    if !(cfg.newton.abs_tol > 0.0) || !(cfg.newton.rel_tol > 0.0) {
        return err("newton tolerances must be positive".into());
    }
    if cfg.newton.max_iter == 0 {
        return err("newton max_iter must be ≥ 1".into());
    }
    if let Some(bp) = cfg.breaking_period {
        if !(bp > 0.0) {
            return err(format!("breaking_period must be positive, got {bp}"));
        }
    }
    if cfg.converge_steps.iter().any(|&k| !(k > 0.0)) {
        return err("converge_steps must all be positive".into());
    }
    if let Some(idx) = cfg.omega_element {
        if idx >= cfg.elements {
            return err(format!(
                "omega_element {idx} out of range for {} elements",
                cfg.elements
            ));
        }
    }
    if cfg.omega < 0.0 {
        return err(format!("omega must be ≥ 0, got {}", cfg.omega));
    }
    if cfg.space_order == 0 && cfg.elements > 1 {
        return err("space_order 0 requires a single element (no continuity across elements)".into());
    }
    match cfg.delay {
        DelayConfig::Constant(tau) if tau < 0.0 => {
            return err(format!("constant delay must be ≥ 0, got {tau}"))
        }
        DelayConfig::DistancePlusOffset(tau0) if tau0 < 0.0 => {
            return err(format!("delay offset must be ≥ 0, got {tau0}"))
        }
        _ => {}
    }
    Ok(())
}

/// Render a config back to text; `parse_config(render(cfg))` reproduces `cfg`.
pub fn render(cfg: &RunConfig) -> String {
    let mut s = String::new();
    s.push_str("[run]\n");
    s.push_str(&format!("experiment = {}\n", cfg.experiment.name()));
    if let Some(r) = cfg.reference {
        s.push_str(&format!("reference = {}\n", r.name()));
    }
    if let Some(p) = cfg.probe_x {
        s.push_str(&format!("probe_x = {p}\n"));
    }
    s.push_str("\n[mesh]\n");
    s.push_str(&format!("elements = {}\n", cfg.elements));
    s.push_str(&format!("space_order = {}\n", cfg.space_order));
    if let Some(q) = cfg.quad_space {
        s.push_str(&format!("quad_space = {q}\n"));
    }
    s.push_str(&format!("domain_a = {}\n", cfg.domain.0));
    s.push_str(&format!("domain_b = {}\n", cfg.domain.1));
    s.push_str("\n[time]\n");
    s.push_str(&format!("step = {}\n", cfg.step));
    s.push_str(&format!("time_order = {}\n", cfg.time_order));
    if let Some(q) = cfg.quad_time {
        s.push_str(&format!("quad_time = {q}\n"));
    }
    if let Some(bp) = cfg.breaking_period {
        s.push_str(&format!("breaking_period = {bp}\n"));
    }
    if !cfg.converge_steps.is_empty() {
        let steps: Vec<String> = cfg.converge_steps.iter().map(|k| k.to_string()).collect();
        s.push_str(&format!("converge_steps = {}\n", steps.join(",")));
    }
    s.push_str("\n[model]\n");
    s.push_str(&format!("alpha = {}\n", cfg.alpha));
    s.push_str(&format!("t_final = {}\n", cfg.t_final));
    match &cfg.kernel {
        KernelConfig::Constant(c) => s.push_str(&format!("kernel = constant {c}\n")),
        KernelConfig::BiExponential(terms) => {
            let params: Vec<String> = terms
                .iter()
                .flat_map(|&(c, mu)| [c.to_string(), mu.to_string()])
                .collect();
            s.push_str(&format!("kernel = biexp {}\n", params.join(" ")));
        }
    }
    match cfg.activation {
        ActivationConfig::Linear => s.push_str("activation = linear\n"),
        ActivationConfig::Sigmoid(sig) => s.push_str(&format!("activation = sigmoid {sig}\n")),
    }
    match cfg.delay {
        DelayConfig::Zero => s.push_str("delay = zero\n"),
        DelayConfig::Constant(tau) => s.push_str(&format!("delay = constant {tau}\n")),
        DelayConfig::DistancePlusOffset(t0) => s.push_str(&format!("delay = dist {t0}\n")),
    }
    match cfg.history {
        HistoryConfig::Constant(c) => s.push_str(&format!("history = constant {c}\n")),
        HistoryConfig::LinearInTime => s.push_str("history = linear-in-time\n"),
        HistoryConfig::LinearInSpace => s.push_str("history = linear-in-space\n"),
    }
    match cfg.source {
        SourceConfig::None => s.push_str("source = none\n"),
        SourceConfig::Periodic => s.push_str("source = periodic\n"),
    }
    s.push_str(&format!("omega = {}\n", cfg.omega));
    if let Some(idx) = cfg.omega_element {
        s.push_str(&format!("omega_element = {idx}\n"));
    }
    s.push_str("\n[newton]\n");
    s.push_str(&format!("abs_tol = {}\n", cfg.newton.abs_tol));
    s.push_str(&format!("rel_tol = {}\n", cfg.newton.rel_tol));
    s.push_str(&format!("max_iter = {}\n", cfg.newton.max_iter));
    s.push_str("\n[output]\n");
    s.push_str(&format!("dir = {}\n", cfg.out_dir.display()));
    s.push_str(&format!("grid_points = {}\n", cfg.grid_points));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_dde_config_is_valid() {
        let text = "[run]\nexperiment = dde-constant\n\n[time]\nstep = 0.1\n\n[model]\nalpha = 1\nt_final = 10\ndelay = constant 2\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.experiment, Experiment::DdeConstant);
        assert_eq!(cfg.step, 0.1);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.delay, DelayConfig::Constant(2.0));
        // preset defaults fill the rest
        assert_eq!(cfg.elements, 1);
        assert_eq!(cfg.history, HistoryConfig::LinearInTime);
    }

    #[test]
    fn hopf_config_from_scratch() {
        let text = "\
[run]
experiment = custom

[mesh]
elements = 32
space_order = 1

[time]
step = 0.05
time_order = 1

[model]
alpha = 1
t_final = 60
kernel = biexp 3.0 0.5 -5.5 1.0
activation = sigmoid 6
delay = dist 1
history = constant 0.01
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(
            cfg.kernel,
            KernelConfig::BiExponential(vec![(3.0, 0.5), (-5.5, 1.0)])
        );
        assert_eq!(cfg.activation, ActivationConfig::Sigmoid(6.0));
        assert_eq!(cfg.delay, DelayConfig::DistancePlusOffset(1.0));
    }

    #[test]
    fn unknown_key_is_fail_closed() {
        let text = "[model]\nfoo = 1\nt_final = 1\n\n[time]\nstep = 0.1\n";
        match parse_config(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("foo"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_and_bad_values() {
        assert!(matches!(
            parse_config("[bogus]\nx = 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("[time]\nstep = fast\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("step = 0.1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("[time]\nstep = 0.1\nstep = 0.2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn missing_required_keys() {
        let err = parse_config("[time]\nstep = 0.1\n").unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("t_final"), "{message}"),
            other => panic!("{other:?}"),
        }
        let err = parse_config("[model]\nt_final = 1\n").unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("step"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_round_trip_through_render() {
        for name in RunConfig::preset_names() {
            let exp = Experiment::from_name(name).unwrap();
            let cfg = RunConfig::preset(exp).unwrap();
            let text = render(&cfg);
            let parsed = parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(parsed, cfg, "round trip failed for {name}");
        }
    }

    #[test]
    fn custom_round_trip_with_options() {
        let mut cfg = RunConfig::baseline();
        cfg.step = 0.125;
        cfg.t_final = 3.5;
        cfg.quad_space = Some(6);
        cfg.quad_time = Some(4);
        cfg.breaking_period = Some(1.75);
        cfg.converge_steps = vec![0.2, 0.1, 0.05];
        cfg.probe_x = Some(0.25);
        cfg.reference = Some(Reference::SpaceLinearDecay);
        cfg.omega = 15.0;
        cfg.omega_element = Some(7);
        cfg.kernel = KernelConfig::BiExponential(vec![(3.0, 0.5), (-5.5, 1.0)]);
        cfg.activation = ActivationConfig::Sigmoid(4.0);
        cfg.delay = DelayConfig::DistancePlusOffset(1.0);
        cfg.history = HistoryConfig::LinearInSpace;
        cfg.source = SourceConfig::Periodic;
        let parsed = parse_config(&render(&cfg)).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn non_finite_and_resource_exhausting_values_rejected() {
        // f64 overflow to infinity
        assert!(parse_config("[time]\nstep = 1e999\n\n[model]\nt_final = 1\n").is_err());
        assert!(parse_config("[time]\nstep = 0.1\n\n[model]\nt_final = inf\n").is_err());
        assert!(parse_config("[time]\nstep = 0.1\n\n[model]\nt_final = 1\nalpha = nan\n").is_err());
        // astronomically many slabs must fail cleanly, not allocate
        let cfg = parse_config("[time]\nstep = 1e-300\n\n[model]\nt_final = 1e300\n").unwrap();
        assert!(crate::mesh::TimePartition::uniform(cfg.t_final, cfg.step).is_err());
        // oversized discrete parameters
        assert!(parse_config("[mesh]\nelements = 99999999\n\n[time]\nstep = 0.1\n\n[model]\nt_final = 1\n").is_err());
        assert!(parse_config("[mesh]\nspace_order = 99\n\n[time]\nstep = 0.1\n\n[model]\nt_final = 1\n").is_err());
        assert!(parse_config("[time]\nstep = 0.1\n\n[model]\nt_final = 1\n\n[newton]\nmax_iter = 0\n").is_err());
    }

    #[test]
    fn validation_catches_inconsistencies() {
        // omega element out of range
        let text = "[mesh]\nelements = 4\n\n[time]\nstep = 0.1\n\n[model]\nt_final = 1\nomega = 15\nomega_element = 9\n";
        assert!(parse_config(text).is_err());
        // r = 0 on a multi-element mesh
        let text = "[mesh]\nelements = 4\nspace_order = 0\n\n[time]\nstep = 0.1\n\n[model]\nt_final = 1\n";
        assert!(parse_config(text).is_err());
    }
}

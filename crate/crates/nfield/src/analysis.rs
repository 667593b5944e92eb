//! Post-processing: L2 errors against reference solutions, convergence-order
//! fits, a method-of-steps DDE reference solver, and steady-state/oscillation
//! classification of probe traces.

use crate::basis::QuadratureRule;
use crate::error::{Error, Result};
use crate::history::HistoryBuffer;
use crate::mesh::TimeLocation;

/// ‖u_h(t,·) − u(t,·)‖_{L²(Ω)} via elementwise Gauss quadrature; times at a
/// level use the left trace.
pub fn l2_error_at_time(
    buffer: &HistoryBuffer,
    exact: impl Fn(f64, f64) -> f64,
    t: f64,
) -> Result<f64> {
    let disc = &*buffer.disc;
    let t = disc.partition.snap_to_level(t);
    let slab = match disc.partition.locate(t)? {
        TimeLocation::Initial => {
            return Err(Error::out_of_range(format!(
                "error requested at t = {t} ≤ 0"
            )))
        }
        TimeLocation::Interval(m) if m > buffer.n_done() => {
            return Err(Error::out_of_range(format!(
                "error requested at t = {t}, slab {m} not solved"
            )));
        }
        TimeLocation::Interval(m) => m,
    };
    let rule = QuadratureRule::gauss((disc.space_order + 2).max(6))?;
    let phi_table: Vec<Vec<f64>> = rule
        .points
        .iter()
        .map(|&xi| disc.space_basis.eval(xi))
        .collect();
    let mut theta = vec![0.0; disc.n_time_nodes()];
    let mut acc = 0.0;
    for e in 0..disc.mesh.n_elements() {
        let (l, _) = disc.mesh.element_bounds(e);
        let len = disc.mesh.element_length(e);
        for (iq, (&xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = l + (xi + 1.0) * len / 2.0;
            let uh = buffer.eval_in_slab_scratch(slab, t, e, &phi_table[iq], &mut theta);
            let diff = uh - exact(t, x);
            acc += w * len / 2.0 * diff * diff;
        }
    }
    Ok(acc.sqrt())
}

/// Rows of (step, error) from a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<(f64, f64)>,
}

/// Least-squares slope of log e against log k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    /// RMS residual of the fit in natural-log space.
    pub fit_residual: f64,
    pub low_confidence: bool,
}

/// Fit residuals above this (ln-space RMS) flag the slope as low-confidence.
pub const FIT_RESIDUAL_THRESHOLD: f64 = 0.25;

pub fn convergence_order(table: &ConvergenceTable) -> Result<SlopeFit> {
    if table.rows.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 rows for a slope, got {}",
            table.rows.len()
        )));
    }
    for w in table.rows.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::invalid("steps must be strictly decreasing"));
        }
    }
    if table.rows.iter().any(|&(_, e)| !(e > 0.0)) {
        return Err(Error::invalid("errors must be positive for a log-log fit"));
    }
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|&(k, e)| (k.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts
        .iter()
        .map(|p| {
            let pred = my + slope * (p.0 - mx);
            (p.1 - pred) * (p.1 - pred)
        })
        .sum();
    let fit_residual = (rss / n).sqrt();
    Ok(SlopeFit {
        slope,
        fit_residual,
        low_confidence: fit_residual > FIT_RESIDUAL_THRESHOLD,
    })
}

/// Dense reference solution of u̇ = −α u + u(t − τ) by the method of steps:
/// classical RK4 on each delay interval with cubic-Hermite dense output.
pub struct DdeReference {
    tau: f64,
    history: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pieces: Vec<DdePiece>,
}

struct DdePiece {
    t_start: f64,
    h: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl DdePiece {
    fn eval(&self, t: f64) -> f64 {
        let n = self.values.len() - 1;
        let s = (t - self.t_start) / self.h;
        let i = (s.floor() as usize).min(n - 1);
        let s = s - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i], self.derivs[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * self.h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * self.h * d1
    }
}

/// Default RK4 sub-steps per delay interval.
pub const DDE_ORACLE_SUBSTEPS: usize = 2048;

pub fn dde_oracle(
    alpha: f64,
    tau: f64,
    history: impl Fn(f64) -> f64 + Send + Sync + 'static,
    t_final: f64,
    n_sub: usize,
) -> Result<DdeReference> {
    if !(tau > 0.0) || !(t_final > 0.0) || n_sub < 2 {
        return Err(Error::invalid(
            "DDE oracle needs τ > 0, T > 0 and at least 2 sub-steps",
        ));
    }
    let mut oracle = DdeReference {
        tau,
        history: Box::new(history),
        pieces: Vec::new(),
    };
    let h = tau / n_sub as f64;
    let mut t_start = 0.0;
    let mut y = oracle.lag(0.0); // u(0) = u₀(0)
    while t_start < t_final {
        let mut values = Vec::with_capacity(n_sub + 1);
        let mut derivs = Vec::with_capacity(n_sub + 1);
        let f = |t: f64, u: f64, oracle: &DdeReference| -> f64 { -alpha * u + oracle.lag(t - tau) };
        values.push(y);
        derivs.push(f(t_start, y, &oracle));
        for i in 0..n_sub {
            let t = t_start + i as f64 * h;
            let k1 = f(t, y, &oracle);
            let k2 = f(t + h / 2.0, y + h / 2.0 * k1, &oracle);
            let k3 = f(t + h / 2.0, y + h / 2.0 * k2, &oracle);
            let k4 = f(t + h, y + h * k3, &oracle);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            values.push(y);
            derivs.push(f(t + h, y, &oracle));
        }
        oracle.pieces.push(DdePiece {
            t_start,
            h,
            values,
            derivs,
        });
        t_start += tau;
    }
    Ok(oracle)
}

impl DdeReference {
    fn lag(&self, t: f64) -> f64 {
        if t <= 0.0 {
            (self.history)(t.max(-self.tau))
        } else {
            let m = ((t / self.tau).floor() as usize).min(self.pieces.len() - 1);
            self.pieces[m].eval(t)
        }
    }

    /// Evaluate the reference solution anywhere in [−τ, T].
    pub fn eval(&self, t: f64) -> f64 {
        self.lag(t)
    }
}

/// Decision thresholds for trace classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationThresholds {
    /// Post-transient peak-to-peak range below this (relative to
    /// max(1, |mean|)) counts as a steady state.
    pub eps_steady: f64,
    /// Window amplitudes must exceed this to count as sustained oscillation.
    pub eps_osc: f64,
}

impl Default for OscillationThresholds {
    fn default() -> Self {
        OscillationThresholds {
            eps_steady: 1e-6,
            eps_osc: 1e-4,
        }
    }
}

pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    DecayedToSteady { value: f64 },
    SustainedOscillation { amplitude: f64, period: Option<f64> },
    Undetermined,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::DecayedToSteady { .. } => "decayed-to-steady",
            Classification::SustainedOscillation { .. } => "sustained-oscillation",
            Classification::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub classification: Classification,
    pub mean: f64,
    pub window_amplitudes: (f64, f64),
    pub samples_used: usize,
}

/// Classify a probe-point time series after discarding the leading transient.
pub fn oscillation_diagnostics(
    trace: &[(f64, f64)],
    transient_fraction: f64,
    thresholds: OscillationThresholds,
) -> Result<OscillationReport> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::invalid(format!(
            "transient fraction must lie in [0, 1), got {transient_fraction}"
        )));
    }
    let start = (trace.len() as f64 * transient_fraction).ceil() as usize;
    let post = &trace[start.min(trace.len())..];
    if post.len() < 200 {
        return Err(Error::invalid(format!(
            "need ≥ 200 post-transient samples, got {}",
            post.len()
        )));
    }
    let n = post.len();
    let mean = post.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (min, max) = post
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    let range = max - min;

    let half = n / 2;
    let amp = |w: &[(f64, f64)]| -> f64 {
        let (lo, hi) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.1), hi.max(p.1))
            });
        hi - lo
    };
    let amp1 = amp(&post[..half]);
    let amp2 = amp(&post[half..]);

    let classification = if range < thresholds.eps_steady * mean.abs().max(1.0) {
        Classification::DecayedToSteady { value: mean }
    } else if amp1 > thresholds.eps_osc
        && amp2 > thresholds.eps_osc
        && (amp1 - amp2).abs() <= 0.1 * amp1.max(amp2)
    {
        Classification::SustainedOscillation {
            amplitude: amp2,
            period: estimate_period(post, mean),
        }
    } else {
        Classification::Undetermined
    };

    Ok(OscillationReport {
        classification,
        mean,
        window_amplitudes: (amp1, amp2),
        samples_used: n,
    })
}

/// Mean spacing of upward zero crossings about `mean`, with linear
/// interpolation of the crossing times.
fn estimate_period(samples: &[(f64, f64)], mean: f64) -> Option<f64> {
    let mut crossings = Vec::new();
    for w in samples.windows(2) {
        let (t0, u0) = (w[0].0, w[0].1 - mean);
        let (t1, u1) = (w[1].0, w[1].1 - mean);
        if u0 < 0.0 && u1 >= 0.0 {
            let frac = if u1 != u0 { -u0 / (u1 - u0) } else { 0.0 };
            crossings.push(t0 + frac * (t1 - t0));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let spans = crossings.len() - 1;
    Some((crossings[spans] - crossings[0]) / spans as f64)
}

/// Global DOF index of the spatial node nearest the domain center.
pub fn center_probe_index(buffer: &HistoryBuffer) -> usize {
    let dom = buffer.disc.mesh.domain();
    let center = 0.5 * (dom.a + dom.b);
    buffer
        .disc
        .dofs
        .node_x
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - center)
                .abs()
                .partial_cmp(&(b.1 - center).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap()
}

/// Time series of the left traces at one spatial DOF, one sample per level.
pub fn trace_at_node(buffer: &HistoryBuffer, node: usize) -> Vec<(f64, f64)> {
    buffer
        .slabs()
        .iter()
        .map(|s| {
            (
                buffer.disc.partition.levels[s.slab_index],
                s.trace_left()[node],
            )
        })
        .collect()
}

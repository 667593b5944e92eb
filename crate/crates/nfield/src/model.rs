//! Problem ingredients: decay rate, connectivity kernel, firing-rate
//! activation, delay function, source term and initial history.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Domain;

/// Connectivity kernel J(x, r).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Constant(f64),
    /// Σ_j ĉ_j e^{−μ_j |x−r|}
    BiExponential(Vec<(f64, f64)>),
    /// base kernel scaled by (1+ω) when the second argument lies in the
    /// subdomain [a', b'].
    Inhomogeneous {
        base: Box<KernelSpec>,
        omega: f64,
        subdomain: (f64, f64),
    },
}

impl KernelSpec {
    pub fn eval(&self, x: f64, r: f64) -> f64 {
        match self {
            KernelSpec::Constant(c) => *c,
            KernelSpec::BiExponential(terms) => {
                let d = (x - r).abs();
                terms.iter().map(|&(c, mu)| c * (-mu * d).exp()).sum()
            }
            KernelSpec::Inhomogeneous {
                base,
                omega,
                subdomain,
            } => {
                let v = base.eval(x, r);
                if r >= subdomain.0 && r <= subdomain.1 {
                    (1.0 + omega) * v
                } else {
                    v
                }
            }
        }
    }
}

/// Firing-rate function S with its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationSpec {
    /// S(u) = u
    Linear,
    /// S(u) = 1/(1+e^{−σu}) − 1/2, evaluated as tanh(σu/2)/2 to avoid
    /// overflow for large |u|.
    Sigmoid { sigma: f64 },
}

impl ActivationSpec {
    pub fn eval(&self, u: f64) -> (f64, f64) {
        match self {
            ActivationSpec::Linear => (u, 1.0),
            ActivationSpec::Sigmoid { sigma } => {
                let t = (0.5 * sigma * u).tanh();
                (0.5 * t, 0.25 * sigma * (1.0 - t * t))
            }
        }
    }

    /// Lipschitz constant of S.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ActivationSpec::Linear => 1.0,
            ActivationSpec::Sigmoid { sigma } => sigma / 4.0,
        }
    }
}

/// Transmission delay τ(x, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySpec {
    Zero,
    Constant(f64),
    /// τ(x, r) = τ₀ + |x − r| (unit propagation speed).
    DistancePlusOffset { tau0: f64 },
}

impl DelaySpec {
    pub fn eval(&self, x: f64, r: f64) -> f64 {
        match self {
            DelaySpec::Zero => 0.0,
            DelaySpec::Constant(tau) => *tau,
            DelaySpec::DistancePlusOffset { tau0 } => tau0 + (x - r).abs(),
        }
    }

    /// Exact supremum of τ over the closed domain square.
    pub fn tau_max(&self, domain: Domain) -> f64 {
        match self {
            DelaySpec::Zero => 0.0,
            DelaySpec::Constant(tau) => *tau,
            DelaySpec::DistancePlusOffset { tau0 } => tau0 + domain.length(),
        }
    }
}

/// Initial history u₀(s, x) on [−τ_max, 0] × Ω̄.
#[derive(Clone)]
pub enum InitialHistory {
    Constant(f64),
    /// u₀(s, x) = −s
    LinearInTime,
    /// u₀(s, x) = x
    LinearInSpace,
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl InitialHistory {
    pub fn eval(&self, s: f64, x: f64) -> f64 {
        match self {
            InitialHistory::Constant(c) => *c,
            InitialHistory::LinearInTime => -s,
            InitialHistory::LinearInSpace => x,
            InitialHistory::Custom(f) => f(s, x),
        }
    }
}

impl fmt::Debug for InitialHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialHistory::Constant(c) => write!(f, "Constant({c})"),
            InitialHistory::LinearInTime => write!(f, "LinearInTime"),
            InitialHistory::LinearInSpace => write!(f, "LinearInSpace"),
            InitialHistory::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Complete problem statement for one run.
#[derive(Clone)]
pub struct NeuralFieldProblem {
    pub alpha: f64,
    pub kernel: KernelSpec,
    pub activation: ActivationSpec,
    pub delay: DelaySpec,
    pub source: Option<SourceFn>,
    pub history: InitialHistory,
    pub domain: Domain,
    pub t_final: f64,
    tau_max: f64,
}

impl NeuralFieldProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        kernel: KernelSpec,
        activation: ActivationSpec,
        delay: DelaySpec,
        source: Option<SourceFn>,
        history: InitialHistory,
        domain: Domain,
        t_final: f64,
    ) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::invalid(format!("decay rate must be ≥ 0, got {alpha}")));
        }
        if !(t_final > 0.0) {
            return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
        }
        let tau_max = delay.tau_max(domain);
        Ok(NeuralFieldProblem {
            alpha,
            kernel,
            activation,
            delay,
            source,
            history,
            domain,
            t_final,
            tau_max,
        })
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    /// Evaluate the initial history with the clamping convention: values of s
    /// a rounding error below −τ_max are clamped, anything further is an
    /// error, as is s > 0.
    pub fn initial_value(&self, s: f64, x: f64) -> Result<f64> {
        let tol = 1e-12 * self.tau_max.max(1.0);
        if s > tol {
            return Err(Error::out_of_range(format!(
                "history time s = {s} is positive"
            )));
        }
        if s < -self.tau_max - tol {
            return Err(Error::out_of_range(format!(
                "history time s = {s} below −τ_max = {}",
                -self.tau_max
            )));
        }
        let s = s.clamp(-self.tau_max, 0.0);
        Ok(self.history.eval(s, x))
    }

    pub fn source_value(&self, t: f64, x: f64) -> f64 {
        match &self.source {
            Some(g) => g(t, x),
            None => 0.0,
        }
    }
}

impl fmt::Debug for NeuralFieldProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NeuralFieldProblem")
            .field("alpha", &self.alpha)
            .field("kernel", &self.kernel)
            .field("activation", &self.activation)
            .field("delay", &self.delay)
            .field("source", &self.source.as_ref().map(|_| ".."))
            .field("history", &self.history)
            .field("domain", &self.domain)
            .field("t_final", &self.t_final)
            .field("tau_max", &self.tau_max)
            .finish()
    }
}

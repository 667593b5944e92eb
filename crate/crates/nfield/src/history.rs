//! Storage of the initial history and all solved slabs, classification of
//! delayed evaluation times, and evaluation of the discrete solution at any
//! past space-time point.
//!
//! Values at a time level always use the left limit, i.e. the trace of the
//! slab ending there; only the classification boundary t_delay = t_{n−1} of
//! the current slab resolves to the (implicit) right limit.

use std::sync::Arc;

use crate::basis::{LagrangeBasis, SpaceDofMap};
use crate::error::{Error, Result};
use crate::mesh::{level_tolerance, SpaceMesh, TimeLocation, TimePartition};
use crate::model::InitialHistory;

/// Everything fixed about the discretization of one run: mesh, partition,
/// polynomial orders and the reference bases with the global DOF numbering.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: SpaceMesh,
    pub partition: TimePartition,
    pub time_order: usize,
    pub space_order: usize,
    pub time_basis: LagrangeBasis,
    pub space_basis: LagrangeBasis,
    pub dofs: SpaceDofMap,
}

impl Discretization {
    pub fn new(mesh: SpaceMesh, partition: TimePartition, q: usize, r: usize) -> Self {
        let dofs = SpaceDofMap::new(&mesh, r);
        Discretization {
            mesh,
            partition,
            time_order: q,
            space_order: r,
            time_basis: LagrangeBasis::with_lobatto_layout(q),
            space_basis: LagrangeBasis::with_lobatto_layout(r),
            dofs,
        }
    }

    pub fn n_time_nodes(&self) -> usize {
        self.time_order + 1
    }

    pub fn n_space_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    /// Total unknowns per slab.
    pub fn slab_dimension(&self) -> usize {
        self.n_time_nodes() * self.n_space_dofs()
    }

    /// Reference time coordinate of t within slab n.
    pub fn time_ref_coord(&self, n: usize, t: f64) -> f64 {
        let (t0, t1) = self.partition.slab_bounds(n);
        let xi = 2.0 * (t - t0) / (t1 - t0) - 1.0;
        xi.clamp(-1.0, 1.0)
    }

    /// Reference space coordinate of x within element e.
    pub fn space_ref_coord(&self, e: usize, x: f64) -> f64 {
        let (l, r) = self.mesh.element_bounds(e);
        let xi = 2.0 * (x - l) / (r - l) - 1.0;
        xi.clamp(-1.0, 1.0)
    }

    /// Nodal interpolant of a spatial function onto the global DOF vector.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.dofs.node_x.iter().map(|&x| f(x)).collect()
    }
}

/// The dGcG trial function on one slab: coefficients over
/// (time node × global space DOF), flattened row-major by time node.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub slab_index: usize,
    pub coeffs: Vec<f64>,
    pub n_time: usize,
    pub n_space: usize,
}

impl SlabSolution {
    pub fn new(slab_index: usize, n_time: usize, n_space: usize) -> Self {
        SlabSolution {
            slab_index,
            coeffs: vec![0.0; n_time * n_space],
            n_time,
            n_space,
        }
    }

    #[inline]
    pub fn coeff(&self, time_node: usize, space_dof: usize) -> f64 {
        self.coeffs[time_node * self.n_space + space_dof]
    }

    /// Coefficients of the left trace u^{n,−} (endpoints-included layout).
    pub fn trace_left(&self) -> &[f64] {
        &self.coeffs[(self.n_time - 1) * self.n_space..]
    }

    /// Coefficients of the right trace u^{n−1,+}.
    pub fn trace_right(&self) -> &[f64] {
        &self.coeffs[..self.n_space]
    }
}

/// Which regime a delayed evaluation time falls into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayCase {
    /// t_delay ≤ 0: read from the initial history (clamped to −τ_max).
    Initial { s: f64 },
    /// t_delay ≥ t_{n−1}: inside the current slab, value is implicit.
    CurrentSlab,
    /// 0 < t_delay < t_{n−1}: a previously solved slab.
    PastSlab { slab: usize },
}

/// Initial history plus all solved slabs; evaluates u_h anywhere in the past.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    pub history: InitialHistory,
    pub tau_max: f64,
    pub disc: Arc<Discretization>,
    slabs: Vec<SlabSolution>,
}

impl HistoryBuffer {
    pub fn new(history: InitialHistory, tau_max: f64, disc: Arc<Discretization>) -> Self {
        HistoryBuffer {
            history,
            tau_max,
            disc,
            slabs: Vec::new(),
        }
    }

    pub fn n_done(&self) -> usize {
        self.slabs.len()
    }

    pub fn slab(&self, n: usize) -> &SlabSolution {
        &self.slabs[n - 1]
    }

    pub fn slabs(&self) -> &[SlabSolution] {
        &self.slabs
    }

    /// Nodal interpolant of u₀(0, ·): the trace u^{0,−}.
    pub fn initial_trace(&self) -> Vec<f64> {
        self.disc.interpolate(|x| self.history.eval(0.0, x))
    }

    /// Left-trace coefficients feeding slab n (u^{n−1,−}).
    pub fn incoming_trace(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            self.initial_trace()
        } else {
            self.slab(n - 1).trace_left().to_vec()
        }
    }

    /// Append the next slab; the index must follow without gaps.
    pub fn push_slab(&mut self, s: SlabSolution) -> Result<()> {
        if s.slab_index != self.n_done() + 1 {
            return Err(Error::contract(format!(
                "slab {} pushed after {} solved slabs",
                s.slab_index,
                self.n_done()
            )));
        }
        if s.n_time != self.disc.n_time_nodes() || s.n_space != self.disc.n_space_dofs() {
            return Err(Error::contract("slab dimensions disagree with discretization"));
        }
        self.slabs.push(s);
        Ok(())
    }

    /// Classify a delayed time for the solve of slab `current_slab`.
    pub fn classify_delay_case(&self, current_slab: usize, t_delay: f64) -> Result<DelayCase> {
        let tol = 1e-12 * self.tau_max.max(1.0);
        if t_delay < -self.tau_max - tol {
            return Err(Error::out_of_range(format!(
                "delayed time {t_delay} below −τ_max = {}",
                -self.tau_max
            )));
        }
        let (t_prev, t_n) = self.disc.partition.slab_bounds(current_slab);
        if t_delay > t_n + level_tolerance(t_n) {
            return Err(Error::out_of_range(format!(
                "delayed time {t_delay} beyond current slab end {t_n}"
            )));
        }
        if t_delay <= level_tolerance(t_delay) {
            return Ok(DelayCase::Initial {
                s: t_delay.clamp(-self.tau_max, 0.0),
            });
        }
        if t_delay >= t_prev {
            return Ok(DelayCase::CurrentSlab);
        }
        match self.disc.partition.locate(t_delay)? {
            TimeLocation::Interval(m) => Ok(DelayCase::PastSlab { slab: m }),
            TimeLocation::Initial => unreachable!("t_delay > 0 handled above"),
        }
    }

    /// Evaluate a Case-1 or Case-3 delayed value at (t_delay, r). Current-slab
    /// values live on the Newton iterate and are rejected here.
    pub fn evaluate_past(&self, case: DelayCase, t_delay: f64, r: f64) -> Result<f64> {
        match case {
            DelayCase::Initial { s } => Ok(self.history.eval(s, r)),
            DelayCase::PastSlab { slab } => {
                if slab > self.n_done() {
                    return Err(Error::contract(format!(
                        "slab {slab} not solved yet ({} done)",
                        self.n_done()
                    )));
                }
                let e = self.disc.mesh.locate(r)?;
                let phi = self.disc.space_basis.eval(self.disc.space_ref_coord(e, r));
                Ok(self.eval_in_slab(slab, t_delay, e, &phi))
            }
            DelayCase::CurrentSlab => Err(Error::contract(
                "current-slab values come from the Newton iterate, not the buffer",
            )),
        }
    }

    /// Evaluate the stored solution at (t, x) for any t ≤ last solved level;
    /// times at a level use the left limit, t ≤ 0 reads the history.
    pub fn evaluate(&self, t: f64, x: f64) -> Result<f64> {
        match self.disc.partition.locate(t)? {
            TimeLocation::Initial => Ok(self.history.eval(t.clamp(-self.tau_max, 0.0), x)),
            TimeLocation::Interval(m) => {
                if m > self.n_done() {
                    return Err(Error::out_of_range(format!(
                        "t = {t} lies in slab {m}, but only {} slabs are solved",
                        self.n_done()
                    )));
                }
                let e = self.disc.mesh.locate(x)?;
                let phi = self.disc.space_basis.eval(self.disc.space_ref_coord(e, x));
                Ok(self.eval_in_slab(m, t, e, &phi))
            }
        }
    }

    /// Hot-path slab evaluation where the owning element and its basis values
    /// at the space point are already known.
    #[inline]
    pub fn eval_in_slab_scratch(
        &self,
        slab: usize,
        t: f64,
        element: usize,
        phi: &[f64],
        theta_scratch: &mut [f64],
    ) -> f64 {
        let s = &self.slabs[slab - 1];
        let xi_t = self.disc.time_ref_coord(slab, t);
        self.disc.time_basis.eval_into(xi_t, theta_scratch);
        let mut acc = 0.0;
        for (a, &theta) in theta_scratch.iter().enumerate() {
            if theta == 0.0 {
                continue;
            }
            let mut sv = 0.0;
            for (i, &p) in phi.iter().enumerate() {
                sv += s.coeff(a, self.disc.dofs.dof(element, i)) * p;
            }
            acc += theta * sv;
        }
        acc
    }

    fn eval_in_slab(&self, slab: usize, t: f64, element: usize, phi: &[f64]) -> f64 {
        let mut theta = vec![0.0; self.disc.n_time_nodes()];
        self.eval_in_slab_scratch(slab, t, element, phi, &mut theta)
    }
}

//! Per-slab assembly of the dGcG system and its Newton solution.
//!
//! Each slab solve finds û with residual
//!
//!   R(û) = ∫(∂_t u_h + α u_h − g) v dx dt + ([u_h]_{n−1}, v^{n−1,+})
//!          − ∫ (∫ J(x,r) S(u_h(t−τ(x,r), r)) dr) v dx dt = 0
//!
//! for all test functions v = θ_b φ_j, which is the integrated-by-parts slab
//! formulation with the inter-slab jump written explicitly. The time
//! derivative is evaluated in the shifted form Σ_a (s_a − s_0) θ'_a and the
//! jump from coefficient differences, so a constant continuation of the
//! previous trace has exactly zero residual when α = 0 and the delay integrand
//! vanishes.
//!
//! Delayed evaluation times are classified per quadrature point: initial
//! history (explicit), current slab (implicit, contributes Jacobian blocks via
//! S′), or an earlier slab (explicit).

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::basis::QuadratureRule;
use crate::error::{Error, Result};
use crate::history::{Discretization, HistoryBuffer, SlabSolution};
use crate::linalg::{inf_norm, DenseMatrix};
use crate::mesh::{level_tolerance, SpaceMesh, TimeLocation};
use crate::model::{DelaySpec, KernelSpec, NeuralFieldProblem};

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the residual ∞-norm.
    pub abs_tol: f64,
    /// Relative tolerance against the initial residual norm of the slab.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_iter: 25,
        }
    }
}

/// Discretization orders and quadrature overrides for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub time_order: usize,
    pub space_order: usize,
    /// Time quadrature points per slab; default q + 2.
    pub quad_time: Option<usize>,
    /// Space quadrature points per element; default max(r + 2, 4).
    pub quad_space: Option<usize>,
    pub newton: NewtonConfig,
}

impl SolverOptions {
    pub fn new(time_order: usize, space_order: usize) -> Self {
        SolverOptions {
            time_order,
            space_order,
            quad_time: None,
            quad_space: None,
            newton: NewtonConfig::default(),
        }
    }

    pub fn time_points(&self) -> usize {
        self.quad_time.unwrap_or(self.time_order + 2)
    }

    pub fn space_points(&self) -> usize {
        self.quad_space.unwrap_or((self.space_order + 2).max(4))
    }
}

/// One space quadrature point of the global inner/outer integration grid.
#[derive(Debug, Clone, Copy)]
pub struct SpaceQuadPoint {
    pub element: usize,
    pub x: f64,
    /// Physical weight (reference weight × |K|/2).
    pub weight: f64,
    /// Index into the shared reference basis-value table.
    pub ref_idx: usize,
}

/// Precomputed kernel and delay values on the tensor grid of space quadrature
/// points; reused by every slab since the system is autonomous.
#[derive(Debug, Clone)]
pub struct DelayTables {
    pub points: Vec<SpaceQuadPoint>,
    /// Space basis values at the reference quadrature points (n_qs × (r+1)).
    pub phi: Vec<Vec<f64>>,
    /// J(x_q, r_qs), row-major over (outer, inner).
    pub kernel: Vec<f64>,
    /// τ(x_q, r_qs), same layout.
    pub tau: Vec<f64>,
}

impl DelayTables {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn kernel_at(&self, outer: usize, inner: usize) -> f64 {
        self.kernel[outer * self.points.len() + inner]
    }

    #[inline]
    pub fn tau_at(&self, outer: usize, inner: usize) -> f64 {
        self.tau[outer * self.points.len() + inner]
    }
}

/// Fill the kernel/delay tables for a mesh and space rule.
pub fn precompute_delay_tables(
    mesh: &SpaceMesh,
    rule: &QuadratureRule,
    space_basis: &crate::basis::LagrangeBasis,
    kernel: &KernelSpec,
    delay: &DelaySpec,
) -> DelayTables {
    let mut points = Vec::with_capacity(mesh.n_elements() * rule.len());
    for e in 0..mesh.n_elements() {
        let (l, _) = mesh.element_bounds(e);
        let len = mesh.element_length(e);
        for (iq, (&xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            points.push(SpaceQuadPoint {
                element: e,
                x: l + (xi + 1.0) * len / 2.0,
                weight: w * len / 2.0,
                ref_idx: iq,
            });
        }
    }
    let phi = rule.points.iter().map(|&xi| space_basis.eval(xi)).collect();
    let p = points.len();
    let mut kernel_tab = vec![0.0; p * p];
    let mut tau_tab = vec![0.0; p * p];
    for (io, outer) in points.iter().enumerate() {
        for (ii, inner) in points.iter().enumerate() {
            kernel_tab[io * p + ii] = kernel.eval(outer.x, inner.x);
            tau_tab[io * p + ii] = delay.eval(outer.x, inner.x);
        }
    }
    DelayTables {
        points,
        phi,
        kernel: kernel_tab,
        tau: tau_tab,
    }
}

/// Dense residual and Jacobian of one slab's algebraic system.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub residual: Vec<f64>,
    pub jacobian: DenseMatrix,
}

/// Per-slab Newton statistics.
#[derive(Debug, Clone)]
pub struct SlabStats {
    pub iterations: usize,
    /// Residual ∞-norm before each iteration plus the final accepted one.
    pub residual_norms: Vec<f64>,
    pub final_residual: f64,
}

/// Accumulated statistics over a trajectory.
#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub iterations: Vec<usize>,
    pub final_residuals: Vec<f64>,
    pub residual_histories: Vec<Vec<f64>>,
    pub wall_time: Duration,
}

impl SolverStats {
    fn push(&mut self, s: SlabStats) {
        self.iterations.push(s.iterations);
        self.final_residuals.push(s.final_residual);
        self.residual_histories.push(s.residual_norms);
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn max_final_residual(&self) -> f64 {
        self.final_residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Reference-element data evaluated once per run.
#[derive(Debug, Clone)]
struct RunQuadrature {
    time_rule: QuadratureRule,
    space_rule: QuadratureRule,
}

impl RunQuadrature {
    fn new(opts: &SolverOptions) -> Result<Self> {
        Ok(RunQuadrature {
            time_rule: QuadratureRule::gauss(opts.time_points())?,
            space_rule: QuadratureRule::gauss(opts.space_points())?,
        })
    }
}

/// One time quadrature point of a slab, with the basis data evaluated there.
#[derive(Debug, Clone)]
struct TimeQuadPoint {
    t: f64,
    /// Physical weight.
    w: f64,
    /// θ_a(ξ).
    theta: Vec<f64>,
    /// θ'_a(ξ) (reference derivative).
    dtheta: Vec<f64>,
    /// Derivative vector with the zeroth entry replaced by −Σ_{a≥1} θ'_a, the
    /// exact Jacobian of the shifted time-derivative evaluation.
    dtheta_shifted: Vec<f64>,
}

/// Time quadrature mapped onto one slab. The delayed trajectory under the
/// integral is discontinuous where t − τ crosses an earlier time level; the
/// rule is applied to the slab as a whole, without splitting at those
/// crossings, which reproduces the reference second-order behaviour of
/// non-aligned constant-delay runs (crossing-split quadrature would restore
/// superconvergence and erase the aligned/non-aligned distinction).
fn slab_time_quadrature(
    disc: &Discretization,
    rule: &QuadratureRule,
    n: usize,
) -> Vec<TimeQuadPoint> {
    let (t0, t1) = disc.partition.slab_bounds(n);
    let k_n = t1 - t0;
    let mut points = Vec::with_capacity(rule.len());
    for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
        let t = t0 + (xi + 1.0) * k_n / 2.0;
        let (theta, dtheta) = disc.time_basis.eval_with_deriv(xi);
        let mut dtheta_shifted = dtheta.clone();
        dtheta_shifted[0] = -dtheta[1..].iter().sum::<f64>();
        points.push(TimeQuadPoint {
            t,
            w: w * k_n / 2.0,
            theta,
            dtheta,
            dtheta_shifted,
        });
    }
    points
}

/// Assembles and solves the slab systems of one run.
pub struct SlabSolver {
    pub problem: NeuralFieldProblem,
    pub disc: Arc<Discretization>,
    pub tables: DelayTables,
    pub newton: NewtonConfig,
    quad: RunQuadrature,
}

impl SlabSolver {
    pub fn new(
        problem: NeuralFieldProblem,
        disc: Arc<Discretization>,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let quad = RunQuadrature::new(opts)?;
        let tables = precompute_delay_tables(
            &disc.mesh,
            &quad.space_rule,
            &disc.space_basis,
            &problem.kernel,
            &problem.delay,
        );
        Ok(SlabSolver {
            problem,
            disc,
            tables,
            newton: opts.newton,
            quad,
        })
    }

    /// Residual and Jacobian of slab n's system at `guess`.
    pub fn assemble(
        &self,
        n: usize,
        guess: &SlabSolution,
        buffer: &HistoryBuffer,
    ) -> Result<SlabSystem> {
        if buffer.n_done() + 1 < n {
            return Err(Error::contract(format!(
                "assembling slab {n} but only {} prior slabs are stored",
                buffer.n_done()
            )));
        }
        let disc = &*self.disc;
        let nt = disc.n_time_nodes();
        let nx = disc.n_space_dofs();
        let dim = nt * nx;
        debug_assert_eq!(guess.coeffs.len(), dim);

        let (t0, t1) = disc.partition.slab_bounds(n);
        let k_n = t1 - t0;
        let time_scale = 2.0 / k_n;
        let alpha = self.problem.alpha;
        let tau_max = self.problem.tau_max();

        let mut residual = vec![0.0; dim];
        let mut jac = DenseMatrix::zeros(dim);
        let w_prev = buffer.incoming_trace(n);

        let tq_points = slab_time_quadrature(disc, &self.quad.time_rule, n);
        let n_qs = self.quad.space_rule.len();
        let n_inner = self.tables.n_points();

        let mut s_vals = vec![0.0; nt];
        let mut theta_d = vec![0.0; nt];

        for e in 0..disc.mesh.n_elements() {
            let (el, _) = disc.mesh.element_bounds(e);
            let elen = disc.mesh.element_length(e);

            // jump term ([u_h]_{n−1}, v^{n−1,+}): rows with b = 0 only
            for iq in 0..n_qs {
                let w_x = self.quad.space_rule.weights[iq] * elen / 2.0;
                let phi = &self.tables.phi[iq];
                let mut jump = 0.0;
                for (i, &p) in phi.iter().enumerate() {
                    let dof = disc.dofs.dof(e, i);
                    jump += (guess.coeffs[dof] - w_prev[dof]) * p;
                }
                for (jloc, &pj) in phi.iter().enumerate() {
                    let row = disc.dofs.dof(e, jloc);
                    residual[row] += w_x * jump * pj;
                    for (ploc, &pp) in phi.iter().enumerate() {
                        jac.add(row, disc.dofs.dof(e, ploc), w_x * pp * pj);
                    }
                }
            }

            for tq in &tq_points {
                let w_t = tq.w;
                let t_q = tq.t;
                let theta = &tq.theta;
                let dtheta = &tq.dtheta;
                let dtheta_shifted = &tq.dtheta_shifted;

                for iq in 0..n_qs {
                    let w_x = self.quad.space_rule.weights[iq] * elen / 2.0;
                    let w = w_t * w_x;
                    let phi = &self.tables.phi[iq];
                    let x_q = el + (self.quad.space_rule.points[iq] + 1.0) * elen / 2.0;
                    let outer = e * n_qs + iq;

                    // iterate values per time node at this space point
                    for (a, sv) in s_vals.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (i, &p) in phi.iter().enumerate() {
                            acc += guess.coeffs[a * nx + disc.dofs.dof(e, i)] * p;
                        }
                        *sv = acc;
                    }
                    // shifted evaluation: exact zero for time-constant iterates
                    let mut udot = 0.0;
                    for a in 1..nt {
                        udot += (s_vals[a] - s_vals[0]) * dtheta[a];
                    }
                    udot *= time_scale;
                    let mut uval = 0.0;
                    for a in 0..nt {
                        uval += s_vals[a] * theta[a];
                    }
                    let gval = self.problem.source_value(t_q, x_q);

                    // delay integral over Ω at (t_q, x_q)
                    let mut gsum = 0.0;
                    for inner in 0..n_inner {
                        let tau = self.tables.tau_at(outer, inner);
                        let jv = self.tables.kernel_at(outer, inner);
                        let point = &self.tables.points[inner];
                        let phi_f = &self.tables.phi[point.ref_idx];
                        let t_d = t_q - tau;

                        if t_d <= level_tolerance(t_d) {
                            // initial history, explicit
                            let s = t_d.clamp(-tau_max, 0.0);
                            let v = buffer.history.eval(s, point.x);
                            let (sv, _) = self.problem.activation.eval(v);
                            gsum += point.weight * jv * sv;
                        } else if t_d >= t0 {
                            // current slab, implicit in the iterate
                            let xi_d = disc.time_ref_coord(n, t_d);
                            disc.time_basis.eval_into(xi_d, &mut theta_d);
                            let mut v = 0.0;
                            for (a, &ta) in theta_d.iter().enumerate() {
                                if ta == 0.0 {
                                    continue;
                                }
                                let mut acc = 0.0;
                                for (i, &p) in phi_f.iter().enumerate() {
                                    acc += guess.coeffs
                                        [a * nx + disc.dofs.dof(point.element, i)]
                                        * p;
                                }
                                v += ta * acc;
                            }
                            let (sv, sd) = self.problem.activation.eval(v);
                            gsum += point.weight * jv * sv;
                            // chain rule through S′ into the Jacobian
                            let base = -w * point.weight * jv * sd;
                            if base != 0.0 {
                                for (a, &ta) in theta_d.iter().enumerate() {
                                    if ta == 0.0 {
                                        continue;
                                    }
                                    for (iloc, &pf) in phi_f.iter().enumerate() {
                                        let col =
                                            a * nx + disc.dofs.dof(point.element, iloc);
                                        let cf = base * ta * pf;
                                        for (b, &tb) in theta.iter().enumerate() {
                                            let rowfac = cf * tb;
                                            for (jloc, &pj) in phi.iter().enumerate() {
                                                jac.add(
                                                    b * nx + disc.dofs.dof(e, jloc),
                                                    col,
                                                    rowfac * pj,
                                                );
                                            }
                                        }
                                    }
                                }
                            }
                        } else {
                            // earlier slab, explicit
                            let m = match disc.partition.locate(t_d)? {
                                TimeLocation::Interval(m) => m,
                                TimeLocation::Initial => unreachable!(),
                            };
                            if m > buffer.n_done() {
                                return Err(Error::contract(format!(
                                    "slab {n} delay needs unsolved slab {m}"
                                )));
                            }
                            let v = buffer.eval_in_slab_scratch(
                                m,
                                t_d,
                                point.element,
                                phi_f,
                                &mut theta_d,
                            );
                            let (sv, _) = self.problem.activation.eval(v);
                            gsum += point.weight * jv * sv;
                        }
                    }

                    let common = w * (udot + alpha * uval - gval - gsum);
                    for (b, &tb) in theta.iter().enumerate() {
                        for (jloc, &pj) in phi.iter().enumerate() {
                            residual[b * nx + disc.dofs.dof(e, jloc)] += common * tb * pj;
                        }
                    }
                    // volume Jacobian: ∂(u̇ + αu)/∂û
                    for (b, &tb) in theta.iter().enumerate() {
                        for (jloc, &pj) in phi.iter().enumerate() {
                            let row = b * nx + disc.dofs.dof(e, jloc);
                            let rowfac = w * tb * pj;
                            for a in 0..nt {
                                let colfac =
                                    dtheta_shifted[a] * time_scale + alpha * theta[a];
                                if colfac == 0.0 {
                                    continue;
                                }
                                for (ploc, &pp) in phi.iter().enumerate() {
                                    jac.add(
                                        row,
                                        a * nx + disc.dofs.dof(e, ploc),
                                        rowfac * colfac * pp,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }

        Ok(SlabSystem {
            residual,
            jacobian: jac,
        })
    }

    /// Newton iteration for slab n starting from the constant-in-time
    /// continuation of the previous trace.
    pub fn solve_slab(&self, n: usize, buffer: &HistoryBuffer) -> Result<(SlabSolution, SlabStats)> {
        let disc = &*self.disc;
        let nt = disc.n_time_nodes();
        let nx = disc.n_space_dofs();
        let w_prev = buffer.incoming_trace(n);
        let mut guess = SlabSolution::new(n, nt, nx);
        for a in 0..nt {
            guess.coeffs[a * nx..(a + 1) * nx].copy_from_slice(&w_prev);
        }

        let mut norms = Vec::new();
        let mut iterations = 0;
        let mut initial_norm = f64::NAN;
        loop {
            let system = self.assemble(n, &guess, buffer)?;
            let norm = inf_norm(&system.residual);
            norms.push(norm);
            if iterations == 0 {
                initial_norm = norm;
            }
            if norm <= self.newton.abs_tol + self.newton.rel_tol * initial_norm {
                return Ok((
                    guess,
                    SlabStats {
                        iterations,
                        final_residual: norm,
                        residual_norms: norms,
                    },
                ));
            }
            if iterations >= self.newton.max_iter {
                return Err(Error::NonConvergence {
                    slab: n,
                    iterations,
                    residual: norm,
                });
            }
            let mut jacobian = system.jacobian;
            let mut delta = system.residual;
            jacobian.solve_in_place(&mut delta).map_err(|e| match e {
                Error::SingularSystem { pivot, .. } => Error::SingularSystem { slab: n, pivot },
                other => other,
            })?;
            for (c, d) in guess.coeffs.iter_mut().zip(&delta) {
                *c -= d;
            }
            iterations += 1;
        }
    }
}

/// March through every slab of the partition.
pub fn solve_trajectory(
    problem: &NeuralFieldProblem,
    mesh: SpaceMesh,
    partition: crate::mesh::TimePartition,
    opts: &SolverOptions,
) -> Result<(HistoryBuffer, SolverStats)> {
    let disc = Arc::new(Discretization::new(
        mesh,
        partition,
        opts.time_order,
        opts.space_order,
    ));
    let solver = SlabSolver::new(problem.clone(), disc.clone(), opts)?;
    let mut buffer = HistoryBuffer::new(problem.history.clone(), problem.tau_max(), disc.clone());
    let start = Instant::now();
    let mut stats = SolverStats::default();
    for n in 1..=disc.partition.n_slabs() {
        let (slab, slab_stats) = solver.solve_slab(n, &buffer)?;
        buffer.push_slab(slab)?;
        stats.push(slab_stats);
    }
    stats.wall_time = start.elapsed();
    Ok((buffer, stats))
}

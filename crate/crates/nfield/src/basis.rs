//! Reference-element Lagrange bases, affine maps and Gauss–Legendre rules.
//!
//! Time bases use an endpoints-included (Lobatto-style) node layout so the
//! slab traces u^{n−1,+} and u^{n,−} are single coefficient rows.

use crate::error::{Error, Result};

/// Gauss–Legendre quadrature rule on (−1, 1).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// n-point Gauss–Legendre rule, exact for polynomials of degree ≤ 2n−1.
    pub fn gauss(n: usize) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::invalid(format!(
                "Gauss rule size must lie in 1..=16, got {n}"
            )));
        }
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots come in ± pairs; compute the positive half by Newton iteration
        // and mirror, which keeps the rule exactly symmetric.
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_deriv(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_deriv(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // cos() above starts near +1 for i = 0, so x descends from the right.
            points[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            points[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            points[n / 2] = 0.0;
        }
        Ok(QuadratureRule { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a function over (−1, 1).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Legendre polynomial P_n and its derivative at x via the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Endpoints-included node layout on [−1, 1] (Chebyshev–Lobatto points);
/// order 0 uses the single midpoint node.
pub fn lobatto_layout(order: usize) -> Vec<f64> {
    if order == 0 {
        return vec![0.0];
    }
    let q = order as f64;
    let mut nodes: Vec<f64> = (0..=order)
        .map(|i| -(std::f64::consts::PI * i as f64 / q).cos())
        .collect();
    // Symmetrize so nodes come in exact ± pairs with ±1 at the ends.
    for i in 0..=order / 2 {
        let v = 0.5 * (nodes[order - i] - nodes[i]);
        nodes[i] = -v;
        nodes[order - i] = v;
    }
    nodes[0] = -1.0;
    nodes[order] = 1.0;
    if order.is_multiple_of(2) {
        nodes[order / 2] = 0.0;
    }
    nodes
}

/// Lagrange basis on a fixed set of distinct nodes in [−1, 1].
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub order: usize,
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let order = nodes.len() - 1;
        let bary = (0..nodes.len())
            .map(|i| {
                let mut w = 1.0;
                for j in 0..nodes.len() {
                    if j != i {
                        w *= nodes[i] - nodes[j];
                    }
                }
                1.0 / w
            })
            .collect();
        LagrangeBasis { order, nodes, bary }
    }

    pub fn with_lobatto_layout(order: usize) -> Self {
        Self::new(lobatto_layout(order))
    }

    pub fn n_funcs(&self) -> usize {
        self.nodes.len()
    }

    /// Basis values at ξ (barycentric form; exact 0/1 on node hits).
    pub fn eval(&self, xi: f64) -> Vec<f64> {
        let mut values = vec![0.0; self.n_funcs()];
        self.eval_into(xi, &mut values);
        values
    }

    /// `eval` writing into a caller-provided slice (hot path).
    pub fn eval_into(&self, xi: f64, values: &mut [f64]) {
        debug_assert_eq!(values.len(), self.n_funcs());
        if self.order == 0 {
            values[0] = 1.0;
            return;
        }
        for (i, &x) in self.nodes.iter().enumerate() {
            if xi == x {
                values.fill(0.0);
                values[i] = 1.0;
                return;
            }
        }
        let mut sum = 0.0;
        for i in 0..self.n_funcs() {
            let term = self.bary[i] / (xi - self.nodes[i]);
            values[i] = term;
            sum += term;
        }
        for v in values.iter_mut() {
            *v /= sum;
        }
    }

    /// Values and ∂/∂ξ derivatives at ξ.
    pub fn eval_with_deriv(&self, xi: f64) -> (Vec<f64>, Vec<f64>) {
        let values = self.eval(xi);
        let n = self.n_funcs();
        let mut derivs = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let mut prod = 1.0 / (self.nodes[i] - self.nodes[k]);
                for j in 0..n {
                    if j != i && j != k {
                        prod *= (xi - self.nodes[j]) / (self.nodes[i] - self.nodes[j]);
                    }
                }
                acc += prod;
            }
            derivs[i] = acc;
        }
        (values, derivs)
    }
}

/// Affine map from the reference square (−1,1)² onto one space-time element
/// (t_{n−1}, t_n) × K_j.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub t_left: f64,
    pub t_len: f64,
    pub x_left: f64,
    pub x_len: f64,
}

impl ElementMap {
    pub fn new(t_left: f64, t_len: f64, x_left: f64, x_len: f64) -> Self {
        ElementMap {
            t_left,
            t_len,
            x_left,
            x_len,
        }
    }

    /// Map a reference point and return the Jacobian determinant.
    pub fn apply(&self, xi_t: f64, xi_x: f64) -> (f64, f64, f64) {
        let t = self.t_left + (xi_t + 1.0) * self.t_len / 2.0;
        let x = self.x_left + (xi_x + 1.0) * self.x_len / 2.0;
        (t, x, self.jacobian())
    }

    pub fn jacobian(&self) -> f64 {
        (self.t_len / 2.0) * (self.x_len / 2.0)
    }
}

/// Global continuous space DOF numbering for order-r elements on a mesh.
///
/// For r ≥ 1 boundary nodes are shared between neighbours, which enforces the
/// spatial continuity of the trial space by construction. r = 0 keeps one DOF
/// per element and is only meaningful on single-element meshes.
#[derive(Debug, Clone)]
pub struct SpaceDofMap {
    pub order: usize,
    /// Physical coordinate of each global DOF node.
    pub node_x: Vec<f64>,
    n_elements: usize,
}

impl SpaceDofMap {
    pub fn new(mesh: &crate::mesh::SpaceMesh, order: usize) -> Self {
        let m = mesh.n_elements();
        let node_x = if order == 0 {
            (0..m)
                .map(|e| {
                    let (l, r) = mesh.element_bounds(e);
                    0.5 * (l + r)
                })
                .collect()
        } else {
            let layout = lobatto_layout(order);
            (0..=m * order)
                .map(|g| {
                    let e = (g / order).min(m - 1);
                    let i = g - e * order;
                    let (l, r) = mesh.element_bounds(e);
                    match i {
                        0 => l,
                        i if i == order => r,
                        i => l + (layout[i] + 1.0) * (r - l) / 2.0,
                    }
                })
                .collect()
        };
        SpaceDofMap {
            order,
            node_x,
            n_elements: m,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.node_x.len()
    }

    /// Global DOF index of local node i in element e.
    pub fn dof(&self, element: usize, local: usize) -> usize {
        if self.order == 0 {
            element
        } else {
            element * self.order + local
        }
    }

    pub fn dofs_per_element(&self) -> usize {
        self.order + 1
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Domain, SpaceMesh};

    #[test]
    fn midpoint_rule() {
        let r = QuadratureRule::gauss(1).unwrap();
        assert_eq!(r.points, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn two_point_rule() {
        let r = QuadratureRule::gauss(2).unwrap();
        let x = 1.0 / 3.0_f64.sqrt();
        assert!((r.points[0] + x).abs() < 1e-15);
        assert!((r.points[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        assert!((r.weights[1] - 1.0).abs() < 1e-15);
        // exact for cubics
        assert!(r.integrate(|s| s * s * s).abs() < 1e-14);
    }

    #[test]
    fn rule_size_validation() {
        assert!(QuadratureRule::gauss(0).is_err());
        assert!(QuadratureRule::gauss(17).is_err());
    }

    #[test]
    fn quadrature_exactness_on_monomials() {
        for n in 1..=8 {
            let rule = QuadratureRule::gauss(n).unwrap();
            for d in 0..=(2 * n - 1) {
                let got = rule.integrate(|x| x.powi(d as i32));
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!(
                    (got - exact).abs() < 1e-13,
                    "n={n} degree={d}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_measure() {
        for n in 1..=16 {
            let rule = QuadratureRule::gauss(n).unwrap();
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-14, "n={n}: weight sum {sum}");
        }
    }

    #[test]
    fn linear_lagrange_values_and_derivs() {
        let basis = LagrangeBasis::with_lobatto_layout(1);
        let (v, d) = basis.eval_with_deriv(-1.0);
        assert_eq!(v, vec![1.0, 0.0]);
        assert!((d[0] + 0.5).abs() < 1e-15);
        assert!((d[1] - 0.5).abs() < 1e-15);
        let v = basis.eval(0.0);
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn constant_basis() {
        let basis = LagrangeBasis::with_lobatto_layout(0);
        let (v, d) = basis.eval_with_deriv(0.3);
        assert_eq!(v, vec![1.0]);
        assert_eq!(d, vec![0.0]);
    }

    #[test]
    fn partition_of_unity() {
        for order in 0..=5 {
            let basis = LagrangeBasis::with_lobatto_layout(order);
            for i in 0..=200 {
                let xi = -1.0 + i as f64 / 100.0;
                let sum: f64 = basis.eval(xi).iter().sum();
                assert!((sum - 1.0).abs() < 1e-14, "order={order} xi={xi}: {sum}");
            }
        }
    }

    #[test]
    fn lagrange_property_at_nodes() {
        for order in 1..=4 {
            let basis = LagrangeBasis::with_lobatto_layout(order);
            for (i, &x) in basis.nodes.clone().iter().enumerate() {
                let v = basis.eval(x);
                for (j, &vj) in v.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(vj, expect, "order={order} node {i} func {j}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let step = 1e-6;
        for order in 1..=4 {
            let basis = LagrangeBasis::with_lobatto_layout(order);
            for i in 0..=20 {
                let xi = -0.99 + i as f64 * 0.099;
                let (_, d) = basis.eval_with_deriv(xi);
                let vp = basis.eval(xi + step);
                let vm = basis.eval(xi - step);
                for j in 0..basis.n_funcs() {
                    let fd = (vp[j] - vm[j]) / (2.0 * step);
                    assert!(
                        (d[j] - fd).abs() < 1e-8,
                        "order={order} xi={xi} func={j}: {} vs {}",
                        d[j],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn element_map_corners_and_centroid() {
        let map = ElementMap::new(0.0, 0.5, -1.0, 1.0);
        let (t, x, det) = map.apply(-1.0, -1.0);
        assert_eq!((t, x), (0.0, -1.0));
        assert!((det - 0.125).abs() < 1e-15);
        let (t, x, _) = map.apply(1.0, 1.0);
        assert_eq!((t, x), (0.5, 0.0));
        let (t, x, _) = map.apply(0.0, 0.0);
        assert_eq!((t, x), (0.25, -0.5));
    }

    #[test]
    fn dof_map_shares_element_boundaries() {
        let mesh = SpaceMesh::uniform(Domain::new(-1.0, 1.0).unwrap(), 4).unwrap();
        let dofs = SpaceDofMap::new(&mesh, 2);
        assert_eq!(dofs.n_dofs(), 9);
        assert_eq!(dofs.dof(0, 2), dofs.dof(1, 0));
        assert_eq!(dofs.node_x[0], -1.0);
        assert_eq!(*dofs.node_x.last().unwrap(), 1.0);
        assert!((dofs.node_x[1] + 0.75).abs() < 1e-15); // element-interior node
        let d0 = SpaceDofMap::new(&mesh, 0);
        assert_eq!(d0.n_dofs(), 4);
        assert!((d0.node_x[0] + 0.75).abs() < 1e-15);
    }
}

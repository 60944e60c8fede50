//! One-dimensional grids and quadrature rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of nodes accepted by [`Grid1D`].
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Logarithmic cylinder variable `s = -log r`.
    CylinderAxis,
    /// Physical radius.
    Radial,
}

/// Strictly increasing nodes with positive quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    kind: GridKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    step: Option<f64>,
}

impl Grid1D {
    /// Uniform grid on `[a, b]` with trapezoid weights.
    pub fn uniform(kind: GridKind, a: f64, b: f64, n_nodes: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::grid(format!("need a < b, got [{a}, {b}]")));
        }
        if n_nodes < MIN_NODES {
            return Err(Error::grid(format!(
                "need at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        let h = (b - a) / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| a + i as f64 * h).collect();
        nodes[n_nodes - 1] = b;
        let mut weights = vec![h; n_nodes];
        weights[0] = 0.5 * h;
        weights[n_nodes - 1] = 0.5 * h;
        Ok(Self {
            kind,
            nodes,
            weights,
            step: Some(h),
        })
    }

    /// Symmetric cylinder grid on `[-span, span]`.
    pub fn cylinder(span: f64, n_nodes: usize) -> Result<Self> {
        if !(span > 0.0) {
            return Err(Error::grid(format!("span must be positive, got {span}")));
        }
        let mut g = Self::uniform(GridKind::CylinderAxis, -span, span, n_nodes)?;
        // Force exact mirror symmetry of the nodes.
        let n = g.nodes.len();
        for i in 0..n / 2 {
            let v = 0.5 * (g.nodes[n - 1 - i] - g.nodes[i]);
            g.nodes[i] = -v;
            g.nodes[n - 1 - i] = v;
        }
        if n % 2 == 1 {
            g.nodes[n / 2] = 0.0;
        }
        Ok(g)
    }

    /// Composite Gauss-Legendre grid with `panels` equal panels of `order` nodes.
    pub fn gauss_legendre(
        kind: GridKind,
        a: f64,
        b: f64,
        panels: usize,
        order: usize,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::grid(format!("need a < b, got [{a}, {b}]")));
        }
        if panels == 0 || order == 0 || panels * order < MIN_NODES {
            return Err(Error::grid(format!("need at least {MIN_NODES} nodes")));
        }
        let (x, w) = gauss_legendre_rule(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * width * (xi + 1.0));
                weights.push(0.5 * width * wi);
            }
        }
        Ok(Self {
            kind,
            nodes,
            weights,
            step: None,
        })
    }

    /// Arbitrary strictly increasing nodes with trapezoid weights.
    pub fn from_nodes(kind: GridKind, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::grid(format!(
                "need at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::grid("nodes must be finite and strictly increasing"));
        }
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let d = 0.5 * (nodes[i + 1] - nodes[i]);
            weights[i] += d;
            weights[i + 1] += d;
        }
        let h0 = nodes[1] - nodes[0];
        let uniform = nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-12 * h0.abs().max(1.0));
        let step = uniform.then(|| (nodes[n - 1] - nodes[0]) / (n - 1) as f64);
        Ok(Self {
            kind,
            nodes,
            weights,
            step,
        })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Spacing of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn require_step(&self) -> Result<f64> {
        self.step
            .ok_or_else(|| Error::grid("operation requires a uniform grid"))
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn span(&self) -> f64 {
        self.end() - self.start()
    }

    /// Largest gap between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Whether the nodes are symmetric about zero to within `tol * span`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.nodes.len();
        let scale = self.span().max(1.0);
        (0..n).all(|i| (self.nodes[i] + self.nodes[n - 1 - i]).abs() <= tol * scale)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre integral of `f` over the panels delimited by `edges`.
pub fn integrate_panels(edges: &[f64], order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre_rule(order);
    let mut total = 0.0;
    for e in edges.windows(2) {
        let (lo, hi) = (e[0], e[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + half * xi);
        }
        total += half * s;
    }
    total
}

/// Composite Gauss-Legendre integral over `[a, b]` with `panels` equal panels.
pub fn integrate_gl(a: f64, b: f64, panels: usize, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let edges: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect();
    integrate_panels(&edges, order, f)
}

/// Composite Simpson rule on arbitrary increasing nodes.
///
/// Consecutive pairs of intervals use the exact integral of the interpolating
/// quadratic. A leftover final interval uses the trapezoid rule.
pub fn simpson_nonuniform(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len();
    debug_assert_eq!(n, f.len());
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * f[i]
                + hs * hs / (h0 * h1) * f[i + 1]
                + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        total += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    }
    total
}

/// Running integral `F_i = int_{x_0}^{x_i} f` on a uniform grid, fourth order.
pub fn cumulative_integral(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        return out;
    }
    for i in 0..n - 1 {
        let piece = if i == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            h / 24.0 * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
        } else {
            h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in [2usize, 5, 8, 16] {
            let (x, w) = gauss_legendre_rule(order);
            for deg in 0..(2 * order) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((approx - exact).abs() < 1e-13, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn constant_integrates_to_span() {
        let g = Grid1D::cylinder(17.5, 301).unwrap();
        assert!((g.integrate(&vec![1.0; g.len()]) - 35.0).abs() < 1e-12);
        assert!(g.is_symmetric(1e-15));
        let gl = Grid1D::gauss_legendre(GridKind::Radial, 0.5, 2.0, 10, 8).unwrap();
        assert!((gl.integrate_fn(|_| 1.0) - 1.5).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::uniform(GridKind::Radial, 1.0, 0.0, 100).is_err());
        assert!(Grid1D::uniform(GridKind::Radial, 0.0, 1.0, 8).is_err());
        assert!(
            Grid1D::from_nodes(GridKind::Radial, (0..20).map(|i| -(i as f64)).collect()).is_err()
        );
    }

    #[test]
    fn simpson_nonuniform_is_exact_for_cubics() {
        let x: Vec<f64> = (0..41).map(|i| (i as f64 / 40.0).powf(1.7)).collect();
        let f: Vec<f64> = x.iter().map(|t| 1.0 + 2.0 * t - 3.0 * t * t).collect();
        assert!((simpson_nonuniform(&x, &f) - (1.0 + 1.0 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).cos()).collect();
            let c = cumulative_integral(h, &f);
            (0..n)
                .map(|i| (c[i] - (i as f64 * h).sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}

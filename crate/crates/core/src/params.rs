//! Parameter tuples and derived constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when deciding whether `gamma` hits a sphere eigenvalue.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Dimension, integrability exponents and weight exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl Params {
    pub fn new(n: u32, p: f64, q: f64, alpha: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::params(format!(
                "dimension must be at least 3, got {n}"
            )));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::params(format!("p must be finite and > 1, got {p}")));
        }
        if !(q.is_finite() && q >= p) {
            return Err(Error::params(format!(
                "q must be finite and >= p, got q={q}, p={p}"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::params(format!("alpha must be finite, got {alpha}")));
        }
        Ok(Self { n, p, q, alpha })
    }

    /// Tuple with `q = p`.
    pub fn rellich(n: u32, p: f64, alpha: f64) -> Result<Self> {
        Self::new(n, p, p, alpha)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn derive(&self) -> DerivedParams {
        derive_params(self)
    }
}

/// Constants attached to a parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Weight exponent on the lower-order side.
    pub beta: f64,
    /// Zeroth-order coefficient of the cylinder operator.
    pub gamma: f64,
    /// First-order shift `(n + a)/p - 1` for the weight `a = alpha - p`.
    pub h1: f64,
    /// Second-order shift `(n + alpha)/p - 2`.
    pub h2: f64,
    /// First-order coefficient of the cylinder operator, `(n+2)/2 - (n+alpha)/p`.
    pub drift: f64,
    /// Centre of the reflection symmetry in `alpha`.
    pub alpha_star: f64,
    /// Critical Sobolev exponent `np/(n-2p)`, when `n > 2p`.
    pub p_crit: Option<f64>,
    /// `((n-2)/2)^2 + ((alpha+2)/2)^2`, defined for `p = 2`.
    pub gamma_bar: Option<f64>,
}

pub fn derive_params(params: &Params) -> DerivedParams {
    let n = params.nf();
    let (p, q, alpha) = (params.p, params.q, params.alpha);
    let beta = n - q * (n - 2.0 * p + alpha) / p;
    let gamma = (n - 2.0 * p + alpha) / p * (n * p - n - alpha) / p;
    let h2 = (n + alpha) / p - 2.0;
    let h1 = hardy_shift(params.n, p, alpha - p);
    let drift = (n + 2.0) / 2.0 - (n + alpha) / p;
    let alpha_star = p + n * (p - 2.0) / 2.0;
    let p_crit = (n > 2.0 * p).then(|| n * p / (n - 2.0 * p));
    let gamma_bar = (p == 2.0).then(|| ((n - 2.0) / 2.0).powi(2) + ((alpha + 2.0) / 2.0).powi(2));
    DerivedParams {
        beta,
        gamma,
        h1,
        h2,
        drift,
        alpha_star,
        p_crit,
        gamma_bar,
    }
}

/// First-order shift `(n + a)/p - 1` for the weight `|x|^a`.
pub fn hardy_shift(n: u32, p: f64, a: f64) -> f64 {
    (n as f64 + a) / p - 1.0
}

/// Eigenvalue `k(n - 2 + k)` of the Laplace-Beltrami operator on the unit sphere.
pub fn sphere_eigenvalue(n: u32, k: u32) -> f64 {
    let k = k as f64;
    k * (n as f64 - 2.0 + k)
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// Spherical mode index `k` with `gamma + lambda_k = 0`, if any.
pub fn resonant_mode(params: &Params) -> Option<u32> {
    let gamma = params.derive().gamma;
    resonant_mode_for_gamma(params.n, gamma)
}

pub(crate) fn resonant_mode_for_gamma(n: u32, gamma: f64) -> Option<u32> {
    let b = n as f64 - 2.0;
    let disc = b * b - 4.0 * gamma;
    if disc < 0.0 {
        return None;
    }
    let root = 0.5 * (-b + disc.sqrt());
    if root < -0.5 {
        return None;
    }
    let base = root.max(0.0).floor() as u32;
    let tol = RESONANCE_TOL * gamma.abs().max(1.0);
    [base, base + 1]
        .into_iter()
        .find(|&k| (gamma + sphere_eigenvalue(n, k)).abs() <= tol)
}

/// Whether some spherical mode makes the zeroth-order cylinder coefficient vanish.
pub fn is_resonant(params: &Params) -> bool {
    resonant_mode(params).is_some()
}

/// Closed-form constant for `p = q = 2`: `min_k (gamma + lambda_k)^2` and its minimizer.
pub fn mu22_closed_form(n: u32, alpha: f64) -> Result<(f64, u32)> {
    let params = Params::rellich(n, 2.0, alpha)?;
    let gamma = params.derive().gamma;
    // Past the real root of k^2 + (n-2)k + gamma the values c_k grow with k.
    let b = n as f64 - 2.0;
    let disc = (b * b - 4.0 * gamma).max(0.0);
    let k_root = (0.5 * (-b + disc.sqrt())).max(0.0);
    let k_max = k_root.ceil() as u32 + 1;
    let mut best = (f64::INFINITY, 0);
    for k in 0..=k_max {
        let c = gamma + sphere_eigenvalue(n, k);
        let v = c * c;
        if v < best.0 {
            best = (v, k);
        }
    }
    Ok(best)
}

//! Explicit test-function families whose quotients collapse, and rate fits.
//!
//! Each family is built from a fixed profile `omega` supported in `(t0, t1)`
//! inside `(0, 1)` and a scale parameter `eps`. On the cylinder the family is
//! `w(s) = omega(e^{-eps s})`, and the quotients below are the cylinder
//! quotients rewritten in the variable `t = e^{-eps s}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{spherical_ratio, SphericalMode};
use crate::params::{sphere_area, Params, RESONANCE_TOL};
use crate::quadrature::integrate_gl;

/// Panels and order of the Gauss-Legendre rule used on the support of `omega`.
const PANELS: usize = 400;
const ORDER: usize = 16;

/// `((t - t0)(t1 - t))^3`, normalized to peak value one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOmega {
    pub t0: f64,
    pub t1: f64,
}

impl ProfileOmega {
    pub fn new(t0: f64, t1: f64) -> Result<Self> {
        if !(0.0 < t0 && t0 < t1 && t1 < 1.0) {
            return Err(Error::params(format!(
                "support must satisfy 0 < t0 < t1 < 1, got ({t0}, {t1})"
            )));
        }
        Ok(Self { t0, t1 })
    }

    fn norm(&self) -> f64 {
        (0.5 * (self.t1 - self.t0)).powi(6)
    }

    /// `(omega, omega', omega'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= self.t0 || t >= self.t1 {
            return (0.0, 0.0, 0.0);
        }
        let (a, b) = (t - self.t0, self.t1 - t);
        let k = 1.0 / self.norm();
        let w = a.powi(3) * b.powi(3);
        let w1 = 3.0 * a * a * b.powi(3) - 3.0 * a.powi(3) * b * b;
        let w2 = 6.0 * a * b.powi(3) - 18.0 * a * a * b * b + 6.0 * a.powi(3) * b;
        (k * w, k * w1, k * w2)
    }

    /// Same shape on the dilated support `(kappa t0, kappa t1)`.
    pub fn dilated(&self, kappa: f64) -> Result<Self> {
        Self::new(kappa * self.t0, kappa * self.t1)
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        integrate_gl(self.t0, self.t1, PANELS, ORDER, f)
    }
}

impl Default for ProfileOmega {
    fn default() -> Self {
        Self { t0: 0.25, t1: 0.75 }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::params(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// `int t^{p-1} |eps t omega'' + (c + eps) omega'|^p`.
fn drift_numerator(omega: &ProfileOmega, eps: f64, c: f64, p: f64) -> f64 {
    omega.integrate(|t| {
        let (_, w1, w2) = omega.eval(t);
        t.powf(p - 1.0) * (eps * t * w2 + (c + eps) * w1).abs().powf(p)
    })
}

fn log_moment(omega: &ProfileOmega, e: f64) -> f64 {
    omega.integrate(|t| omega.eval(t).0.abs().powf(e) / t)
}

/// Quotient of the resonant family in mode `k`, which decays like `eps^p`
/// when the first-order coefficient `2A` is nonzero.
pub fn resonance_family_bound(
    omega: &ProfileOmega,
    eps: f64,
    params: &Params,
    k: u32,
) -> Result<f64> {
    check_eps(eps)?;
    let d = params.derive();
    let lambda = crate::params::sphere_eigenvalue(params.n, k);
    if (d.gamma + lambda).abs() > RESONANCE_TOL * d.gamma.abs().max(1.0) {
        return Err(Error::ResonanceMismatch(format!(
            "gamma + lambda_{k} = {} is not zero",
            d.gamma + lambda
        )));
    }
    let p = params.p;
    let num = drift_numerator(omega, eps, 2.0 * d.drift, p);
    Ok(eps.powf(p) * num / log_moment(omega, p))
}

/// The cylinder profile `w(s) = omega(e^{-eps s})` with derivatives in `s`.
pub fn family_profile(omega: &ProfileOmega, eps: f64) -> impl Fn(f64) -> (f64, f64, f64) + '_ {
    move |s: f64| {
        let t = (-eps * s).exp();
        let (w, w1, w2) = omega.eval(t);
        (w, -eps * t * w1, eps * eps * (t * w1 + t * t * w2))
    }
}

/// Sharpness quotient for radial profiles, which tends to `|gamma|^p` as `eps -> 0`.
///
/// Defined on the closed range `2p - n <= alpha <= np - n`.
pub fn mitidieri_quotient(omega: &ProfileOmega, eps: f64, params: &Params) -> Result<f64> {
    check_eps(eps)?;
    let (n, p, alpha) = (params.nf(), params.p, params.alpha);
    let tol = 1e-12 * (1.0 + n * p);
    if alpha < 2.0 * p - n - tol || alpha > n * p - n + tol {
        return Err(Error::params(format!(
            "alpha = {alpha} outside [{}, {}]",
            2.0 * p - n,
            n * p - n
        )));
    }
    let d = params.derive();
    let c = 2.0 * d.drift;
    let num = omega.integrate(|t| {
        let (w, w1, w2) = omega.eval(t);
        (eps * eps * t * t * w2 + eps * t * (c + eps) * w1 - d.gamma * w)
            .abs()
            .powf(p)
            / t
    });
    Ok(num / log_moment(omega, p))
}

/// Navier-boundary family on a cone over a cap whose first Dirichlet eigenvalue is `-gamma`.
///
/// The spherical factor `int |phi|^p / (int |phi|^q)^{p/q}` of the cap profile is included.
/// The quotient decays like `eps^{p - 1 + p/q}`.
pub fn navier_degeneration_quotient(
    omega: &ProfileOmega,
    eps: f64,
    params: &Params,
    cap: &SphericalMode,
) -> Result<f64> {
    let factor = navier_factor(params, cap)?;
    navier_with_factor(omega, eps, params, factor)
}

fn navier_factor(params: &Params, cap: &SphericalMode) -> Result<f64> {
    let d = params.derive();
    if (cap.eigenvalue() + d.gamma).abs() > 1e-8 * d.gamma.abs().max(1.0) {
        return Err(Error::ResonanceMismatch(format!(
            "mode eigenvalue {} differs from -gamma = {}",
            cap.eigenvalue(),
            -d.gamma
        )));
    }
    spherical_ratio(cap, params.n, params.p, params.q)
}

fn navier_with_factor(omega: &ProfileOmega, eps: f64, params: &Params, factor: f64) -> Result<f64> {
    check_eps(eps)?;
    let d = params.derive();
    let (p, q) = (params.p, params.q);
    let num = eps.powf(p - 1.0) * drift_numerator(omega, eps, 2.0 * d.drift, p);
    let den = log_moment(omega, q) / eps;
    Ok(factor * num / den.powf(p / q))
}

/// Navier quotients over a list of `eps` with the spherical factor computed once.
pub fn navier_degeneration_ladder(
    omega: &ProfileOmega,
    eps: &[f64],
    params: &Params,
    cap: &SphericalMode,
) -> Result<Vec<f64>> {
    let factor = navier_factor(params, cap)?;
    eps.iter()
        .map(|&e| navier_with_factor(omega, e, params, factor))
        .collect()
}

/// The ladder `2^{-3}, ..., 2^{-10}`.
pub fn default_eps_ladder() -> Vec<f64> {
    (3..=10).map(|k| 2f64.powi(-k)).collect()
}

/// Least-squares fit of `log value = intercept + slope * log eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn check_series(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::params("abscissae and values differ in length"));
    }
    if x.len() < min {
        return Err(Error::params(format!(
            "need at least {min} points, got {}",
            x.len()
        )));
    }
    if y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::params("values must be positive and finite"));
    }
    Ok(())
}

/// Solves the normal equations of a small least-squares problem.
fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = rows[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, y) in rows.iter().zip(rhs) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += r[i] * r[j];
            }
            a[i][k] += r[i] * y;
        }
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular least-squares system".into()));
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Ok((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

fn r_squared(rows: &[Vec<f64>], rhs: &[f64], coef: &[f64]) -> f64 {
    let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
    let ss_tot: f64 = rhs.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = rows
        .iter()
        .zip(rhs)
        .map(|(r, y)| (y - r.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>()).powi(2))
        .sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub fn fit_rate(eps: &[f64], values: &[f64]) -> Result<RateFit> {
    check_series(eps, values, 4)?;
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::params("eps must be positive"));
    }
    let rows: Vec<Vec<f64>> = eps.iter().map(|e| vec![1.0, e.ln()]).collect();
    let rhs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let coef = least_squares(&rows, &rhs)?;
    Ok(RateFit {
        eps: eps.to_vec(),
        values: values.to_vec(),
        slope: coef[1],
        intercept: coef[0],
        r_squared: r_squared(&rows, &rhs, &coef),
    })
}

/// Fit of `log R = a - rate * h - power * log h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialRateFit {
    pub h: Vec<f64>,
    pub values: Vec<f64>,
    pub rate: f64,
    pub power: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_exponential_rate(h: &[f64], values: &[f64]) -> Result<ExponentialRateFit> {
    check_series(h, values, 4)?;
    if h.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::params("h must be positive"));
    }
    let rows: Vec<Vec<f64>> = h.iter().map(|x| vec![1.0, -x, -x.ln()]).collect();
    let rhs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let coef = least_squares(&rows, &rhs)?;
    Ok(ExponentialRateFit {
        h: h.to_vec(),
        values: values.to_vec(),
        rate: coef[1],
        power: coef[2],
        intercept: coef[0],
        r_squared: r_squared(&rows, &rhs, &coef),
    })
}

/// Cubic step: one below `t = 1`, zero above `t = 2`.
pub fn cutoff_eta(t: f64) -> (f64, f64, f64) {
    if t <= 1.0 {
        (1.0, 0.0, 0.0)
    } else if t >= 2.0 {
        (0.0, 0.0, 0.0)
    } else {
        let tau = t - 1.0;
        (
            1.0 - 3.0 * tau * tau + 2.0 * tau.powi(3),
            -6.0 * tau + 6.0 * tau * tau,
            -6.0 + 12.0 * tau,
        )
    }
}

/// `int_{B_1} |x|^alpha |Lap(eta_h u) - Lap u|^p dx` for a smooth radial `u`,
/// where `eta_h(x) = eta(-log|x| / h)`.
///
/// `u(r)` returns `(u, u_r, u_rr)`. The integral is evaluated in the
/// variable `t = -log r / h`, so the underflow of `r` near the origin is harmless.
pub fn cutoff_density_residual(
    u: &dyn Fn(f64) -> (f64, f64, f64),
    h: f64,
    params: &Params,
) -> Result<f64> {
    let (n, p, alpha) = (params.nf(), params.p, params.alpha);
    if alpha <= 2.0 * p - n {
        return Err(Error::params(format!(
            "need alpha > 2p - n, got alpha = {alpha}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::params(format!("h must be positive, got {h}")));
    }
    let kappa = alpha + n - 2.0 * p;
    // r^2 Lap u and r u_r, both finite as r -> 0.
    let scaled = |r: f64| {
        let (v, v1, v2) = u(r);
        (v, r * v1, r * r * v2 + (n - 1.0) * r * v1)
    };
    let transition = |t: f64| {
        let r = (-h * t).exp();
        let (e, e1, e2) = cutoff_eta(t);
        let (v, rv1, r2lap) = scaled(r);
        let d = (e - 1.0) * r2lap - 2.0 * e1 / h * rv1 + v * (e2 / (h * h) - (n - 2.0) * e1 / h);
        let w = (-h * t * kappa).exp();
        if w == 0.0 || d == 0.0 {
            0.0
        } else {
            h * w * d.abs().powf(p)
        }
    };
    let tail = |t: f64| {
        let r = (-h * t).exp();
        let (_, _, r2lap) = scaled(r);
        let w = (-h * t * kappa).exp();
        if w == 0.0 || r2lap == 0.0 {
            0.0
        } else {
            h * w * r2lap.abs().powf(p)
        }
    };
    // Grade the transition panels towards t = 1 where the weight peaks.
    let panels = 400;
    let edges: Vec<f64> = (0..=panels)
        .map(|j| 1.0 + (j as f64 / panels as f64).powi(3))
        .collect();
    let a = crate::quadrature::integrate_panels(&edges, ORDER, transition);
    let tail_len = 80.0 / (h * (alpha + n));
    let tail_edges: Vec<f64> = (0..=panels)
        .map(|j| 2.0 + tail_len * (j as f64 / panels as f64).powi(2))
        .collect();
    let b = crate::quadrature::integrate_panels(&tail_edges, ORDER, tail);
    let total = sphere_area(params.n) * (a + b);
    if !total.is_finite() {
        return Err(Error::Numerical("cutoff residual is not finite".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::{rellich_quotient, CylinderFunction, ModeProfile};
    use crate::quadrature::Grid1D;
    use proptest::prelude::*;

    fn ladder() -> Vec<f64> {
        default_eps_ladder()
    }

    #[test]
    fn resonance_slope_is_p() {
        let om = ProfileOmega::default();
        let params = Params::rellich(5, 2.0, 7.0).unwrap();
        let eps = ladder();
        let v: Vec<f64> = eps
            .iter()
            .map(|&e| resonance_family_bound(&om, e, &params, 1).unwrap())
            .collect();
        let fit = fit_rate(&eps, &v).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn resonance_mismatch_rejected() {
        let om = ProfileOmega::default();
        let params = Params::rellich(5, 2.0, 7.0).unwrap();
        assert!(matches!(
            resonance_family_bound(&om, 0.1, &params, 2),
            Err(Error::ResonanceMismatch(_))
        ));
    }

    #[test]
    fn family_matches_cylinder_quotient() {
        let om = ProfileOmega::default();
        let params = Params::rellich(5, 2.0, 7.0).unwrap();
        let eps = 0.25;
        let grid = Grid1D::cylinder(8.0, 40_001).unwrap();
        let prof = ModeProfile::from_fn(
            SphericalMode::harmonic(5, 1),
            &grid,
            family_profile(&om, eps),
        );
        let g = CylinderFunction::single(grid, prof).unwrap();
        let cyl = rellich_quotient(&g, &params).unwrap();
        let direct = resonance_family_bound(&om, eps, &params, 1).unwrap();
        assert!((cyl - direct).abs() < 1e-6 * direct, "{cyl} vs {direct}");
    }

    #[test]
    fn sharpness_quotient_tends_to_gamma_power() {
        let om = ProfileOmega::default();
        let params = Params::rellich(5, 2.0, 0.0).unwrap();
        let g = params.derive().gamma;
        let v = mitidieri_quotient(&om, 1e-3, &params).unwrap();
        assert!((v - g * g).abs() < 1e-2 * g * g);
        assert!(mitidieri_quotient(&om, 1e-3, &Params::rellich(5, 2.0, 6.5).unwrap()).is_err());
    }

    #[test]
    fn cutoff_residual_vanishes_for_functions_vanishing_near_origin() {
        let params = Params::rellich(5, 2.0, 0.5).unwrap();
        let u = |r: f64| {
            if r < 0.1 {
                (0.0, 0.0, 0.0)
            } else {
                ((r - 0.1).powi(3), 3.0 * (r - 0.1).powi(2), 6.0 * (r - 0.1))
            }
        };
        assert_eq!(cutoff_density_residual(&u, 3.0, &params).unwrap(), 0.0);
        assert!(cutoff_density_residual(&u, 1.0, &params).unwrap() > 0.0);
    }

    #[test]
    fn cutoff_residual_rate() {
        let params = Params::rellich(5, 2.0, 2.0 * 2.0 - 5.0 + 0.1).unwrap();
        let u = |r: f64| (r.cos(), -r.sin(), -r.cos());
        let small: Vec<f64> = (1..=10)
            .map(|h| cutoff_density_residual(&u, h as f64, &params).unwrap())
            .collect();
        assert!(small.windows(2).all(|w| w[1] < w[0]));
        let hs: Vec<f64> = (2..=8).map(|k| 100.0 * k as f64).collect();
        let vals: Vec<f64> = hs
            .iter()
            .map(|&h| cutoff_density_residual(&u, h, &params).unwrap())
            .collect();
        let fit = fit_exponential_rate(&hs, &vals).unwrap();
        assert!((fit.rate - 0.1).abs() < 0.02, "{}", fit.rate);
    }

    #[test]
    fn fit_rate_exact_on_power_law() {
        let eps = ladder();
        let v: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(1.7)).collect();
        let fit = fit_rate(&eps, &v).unwrap();
        assert!((fit.slope - 1.7).abs() < 1e-12);
        assert!(fit_rate(&eps[..2], &v[..2]).is_err());
    }

    proptest! {
        #[test]
        fn navier_quotient_is_dilation_invariant(kappa in 0.5f64..1.3, eps in 0.01f64..0.3) {
            let om = ProfileOmega::default();
            let params = Params::new(3, 2.0, 4.0, 6.0).unwrap();
            let cap = crate::modes::cap_for_eigenvalue(3, -params.derive().gamma).unwrap();
            let a = navier_degeneration_quotient(&om, eps, &params, &cap).unwrap();
            let b = navier_degeneration_quotient(&om.dilated(kappa).unwrap(), eps, &params, &cap).unwrap();
            prop_assert!((a - b).abs() <= 1e-4 * a);
        }
    }
}

//! Spherical modes, the per-mode symbol of the cylinder operator and cap eigenmodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{sphere_area, sphere_eigenvalue, Params};
use crate::quadrature::{integrate_panels, simpson_nonuniform};

/// A spherical factor: a zonal harmonic on the full sphere or the first
/// Dirichlet eigenfunction of a polar cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphericalMode {
    Harmonic {
        k: u32,
        eigenvalue: f64,
    },
    Cap {
        nu: f64,
        eigenvalue: f64,
        theta0: f64,
    },
}

impl SphericalMode {
    pub fn harmonic(n: u32, k: u32) -> Self {
        SphericalMode::Harmonic {
            k,
            eigenvalue: sphere_eigenvalue(n, k),
        }
    }

    pub fn radial() -> Self {
        SphericalMode::Harmonic {
            k: 0,
            eigenvalue: 0.0,
        }
    }

    pub fn eigenvalue(&self) -> f64 {
        match *self {
            SphericalMode::Harmonic { eigenvalue, .. } | SphericalMode::Cap { eigenvalue, .. } => {
                eigenvalue
            }
        }
    }

    /// Polar opening angle of the support; `pi` for the full sphere.
    pub fn theta0(&self) -> f64 {
        match *self {
            SphericalMode::Harmonic { .. } => std::f64::consts::PI,
            SphericalMode::Cap { theta0, .. } => theta0,
        }
    }

    pub fn harmonic_index(&self) -> Option<u32> {
        match *self {
            SphericalMode::Harmonic { k, .. } => Some(k),
            SphericalMode::Cap { .. } => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, SphericalMode::Harmonic { k: 0, .. })
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match *self {
            SphericalMode::Harmonic { k, .. } => format!("k={k}"),
            SphericalMode::Cap { nu, .. } => format!("nu={nu:.6}"),
        }
    }
}

/// The quadratic `f(t) = (t + c)^2 + 4 A^2 t` on `t >= 0`, where `t` stands
/// for the squared frequency and `c = gamma + eigenvalue`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCurve {
    pub c: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolInfimum {
    pub value: f64,
    pub t_star: f64,
}

impl SymbolCurve {
    pub fn eval(&self, t: f64) -> f64 {
        (t + self.c).powi(2) + 4.0 * self.drift * self.drift * t
    }

    pub fn infimum(&self) -> SymbolInfimum {
        let a2 = self.drift * self.drift;
        if self.c >= -2.0 * a2 {
            SymbolInfimum {
                value: self.c * self.c,
                t_star: 0.0,
            }
        } else {
            let t_star = -self.c - 2.0 * a2;
            SymbolInfimum {
                value: 4.0 * a2 * (-self.c - a2),
                t_star,
            }
        }
    }
}

fn require_p2(params: &Params) -> Result<()> {
    if params.p != 2.0 {
        return Err(Error::params(format!(
            "the symbol needs p = 2, got p = {}",
            params.p
        )));
    }
    Ok(())
}

pub fn symbol_curve(params: &Params, mode: &SphericalMode) -> Result<SymbolCurve> {
    require_p2(params)?;
    let d = params.derive();
    Ok(SymbolCurve {
        c: d.gamma + mode.eigenvalue(),
        drift: d.drift,
    })
}

/// Infimum over frequencies of the `p = 2` symbol for one spherical mode.
pub fn symbol_infimum(params: &Params, mode: &SphericalMode) -> Result<SymbolInfimum> {
    Ok(symbol_curve(params, mode)?.infimum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolOracle {
    pub value: f64,
    pub argmin_k: u32,
    pub argmin_t: f64,
    /// Whether the symbol minimum agrees with the closed form `min_k c_k^2`.
    pub matches_closed_form: bool,
}

/// Smallest `k` with `lambda_k > bound`.
fn first_mode_above(n: u32, bound: f64) -> u32 {
    let mut k = 0;
    while sphere_eigenvalue(n, k) <= bound {
        k += 1;
    }
    k
}

/// Smallest admissible `k_max`: two past the first `k` with `lambda_k > |gamma| + 4A^2`.
pub fn required_k_max(n: u32, gamma: f64, drift: f64) -> u32 {
    first_mode_above(n, gamma.abs() + 4.0 * drift * drift) + 2
}

/// Default `k_max`: the first `k` with `lambda_k > |gamma| + 4A^2 + 10`.
pub fn default_k_max(n: u32, gamma: f64, drift: f64) -> u32 {
    first_mode_above(n, gamma.abs() + 4.0 * drift * drift + 10.0)
        .max(required_k_max(n, gamma, drift))
}

/// Minimum of the `p = 2` symbol over harmonic modes `0..=k_max` and all frequencies.
pub fn mu2_symbol_oracle(n: u32, alpha: f64, k_max: Option<u32>) -> Result<SymbolOracle> {
    let params = Params::rellich(n, 2.0, alpha)?;
    let d = params.derive();
    let required = required_k_max(n, d.gamma, d.drift);
    let k_max = k_max.unwrap_or_else(|| default_k_max(n, d.gamma, d.drift));
    if k_max < required {
        return Err(Error::params(format!(
            "k_max = {k_max} is below the required bound {required}"
        )));
    }
    let mut best = SymbolOracle {
        value: f64::INFINITY,
        argmin_k: 0,
        argmin_t: 0.0,
        matches_closed_form: true,
    };
    for k in 0..=k_max {
        let inf = symbol_infimum(&params, &SphericalMode::harmonic(n, k))?;
        if inf.value < best.value {
            best.value = inf.value;
            best.argmin_k = k;
            best.argmin_t = inf.t_star;
        }
    }
    let (closed, _) = crate::params::mu22_closed_form(n, alpha)?;
    best.matches_closed_form = (best.value - closed).abs() <= 1e-10 * (1.0 + closed);
    Ok(best)
}

/// First Dirichlet eigenfunction of a polar cap, tabulated in `x = cos(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapProfile {
    pub n: u32,
    pub mu: f64,
    pub nu: f64,
    pub theta0: f64,
    pub x0: f64,
    /// Nodes from `x = 1` down to `x0`.
    pub xs: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

/// Largest step of the Runge-Kutta march in `x`.
pub const CAP_STEP: f64 = 1e-4;
/// Small caps are re-shot with a finer step so that at least this many nodes cover them.
pub const CAP_MIN_NODES: usize = 10_000;
/// Length of the initial interval covered by the regular series at `x = 1`.
pub const CAP_SERIES_LEN: f64 = 1e-2;
/// The march stops this close to the south pole.
pub const CAP_POLE_GAP: f64 = 1e-3;

fn nu_of(n: u32, mu: f64) -> f64 {
    let b = n as f64 - 2.0;
    0.5 * (-b + (b * b + 4.0 * mu).sqrt())
}

/// Regular solution at the north pole as a hypergeometric series in `z = (1-x)/2`.
fn cap_series(n: u32, nu: f64, x: f64) -> (f64, f64) {
    let z = 0.5 * (1.0 - x);
    let c = 0.5 * (n as f64 - 1.0);
    let b = nu + n as f64 - 2.0;
    let (mut coef, mut zp) = (1.0, 1.0);
    let (mut val, mut dval) = (0.0, 0.0);
    for j in 0..10_000usize {
        let jf = j as f64;
        val += coef * zp;
        let next = coef * (jf - nu) * (jf + b) / ((jf + 1.0) * (jf + c));
        // d/dx z^{j+1} = -(j+1)/2 z^j
        dval += -0.5 * (jf + 1.0) * next * zp;
        coef = next;
        zp *= z;
        let term = (coef * zp).abs();
        if jf > nu + 2.0
            && term <= 1e-18 * val.abs().max(1e-300)
            && (0.5 * jf * coef * zp).abs() <= 1e-18 * dval.abs().max(1e-300)
        {
            break;
        }
        if coef == 0.0 {
            break;
        }
    }
    (val, dval)
}

fn cap_rhs(n: u32, mu: f64, x: f64, y: [f64; 2]) -> [f64; 2] {
    let num = (n as f64 - 1.0) * x * y[1] - mu * y[0];
    [y[1], num / (1.0 - x * x)]
}

fn rk4(n: u32, mu: f64, x: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = cap_rhs(n, mu, x, y);
    let k2 = cap_rhs(
        n,
        mu,
        x + 0.5 * h,
        [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
    );
    let k3 = cap_rhs(
        n,
        mu,
        x + 0.5 * h,
        [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
    );
    let k4 = cap_rhs(n, mu, x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Shoots the regular Gegenbauer solution from the north pole to its first zero.
pub fn shoot_cap(n: u32, mu: f64) -> Result<CapProfile> {
    let coarse = shoot_cap_with_step(n, mu, CAP_STEP)?;
    if coarse.xs.len() >= CAP_MIN_NODES {
        return Ok(coarse);
    }
    shoot_cap_with_step(
        n,
        mu,
        CAP_STEP * coarse.xs.len() as f64 / CAP_MIN_NODES as f64,
    )
}

fn shoot_cap_with_step(n: u32, mu: f64, h: f64) -> Result<CapProfile> {
    if n < 3 {
        return Err(Error::params(format!(
            "dimension must be at least 3, got {n}"
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::params(format!(
            "cap eigenvalue must be positive, got {mu}"
        )));
    }
    let nu = nu_of(n, mu);
    let series_steps = (CAP_SERIES_LEN / h).round() as usize;
    let mut xs = Vec::new();
    let mut phi = Vec::new();
    let mut dphi = Vec::new();
    for j in 0..=series_steps {
        let x = 1.0 - j as f64 * h;
        let (v, d) = cap_series(n, nu, x);
        xs.push(x);
        phi.push(v);
        dphi.push(d);
        if j > 0 && v <= 0.0 {
            // Zero inside the series interval: refine with the series itself.
            let (mut lo, mut hi) = (x, x + h);
            while hi - lo > 1e-15 {
                let mid = 0.5 * (lo + hi);
                if cap_series(n, nu, mid).0 > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let x0 = 0.5 * (lo + hi);
            let (_, d0) = cap_series(n, nu, x0);
            xs.pop();
            phi.pop();
            dphi.pop();
            xs.push(x0);
            phi.push(0.0);
            dphi.push(d0);
            return Ok(CapProfile {
                n,
                mu,
                nu,
                theta0: x0.acos(),
                x0,
                xs,
                phi,
                dphi,
            });
        }
    }
    let mut x = xs[series_steps];
    let mut y = [phi[series_steps], dphi[series_steps]];
    let stop = -1.0 + CAP_POLE_GAP;
    let mut step = 0usize;
    loop {
        step += 1;
        let x_next = 1.0 - (series_steps + step) as f64 * h;
        if x_next < stop {
            return Err(Error::NoRoot(format!(
                "no zero above x = {stop} for eigenvalue {mu} in dimension {n}"
            )));
        }
        let dx = x_next - x;
        let y_next = rk4(n, mu, x, y, dx);
        if y_next[0] <= 0.0 {
            let (mut lo, mut hi) = (0.0, dx.abs());
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if rk4(n, mu, x, y, -mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            let y0 = rk4(n, mu, x, y, -t);
            let x0 = x - t;
            xs.push(x0);
            phi.push(0.0);
            dphi.push(y0[1]);
            return Ok(CapProfile {
                n,
                mu,
                nu,
                theta0: x0.acos(),
                x0,
                xs,
                phi,
                dphi,
            });
        }
        xs.push(x_next);
        phi.push(y_next[0]);
        dphi.push(y_next[1]);
        x = x_next;
        y = y_next;
    }
}

/// Cap mode whose first Dirichlet eigenvalue equals `mu`.
pub fn cap_for_eigenvalue(n: u32, mu: f64) -> Result<SphericalMode> {
    let cap = shoot_cap(n, mu)?;
    Ok(cap.mode())
}

impl CapProfile {
    pub fn mode(&self) -> SphericalMode {
        SphericalMode::Cap {
            nu: self.nu,
            eigenvalue: self.mu,
            theta0: self.theta0,
        }
    }

    /// Eigenvalue recovered from the Rayleigh quotient of the tabulated profile.
    pub fn rayleigh_quotient(&self) -> f64 {
        let m = self.n as f64;
        let num = self.theta_integral(|i, sin| sin.powf(m) * self.dphi[i].powi(2));
        let den = self.theta_integral(|i, sin| sin.powf(m - 2.0) * self.phi[i].powi(2));
        num / den
    }

    /// `int_{cap} |phi|^p` over the sphere, without normalization.
    pub fn raw_lp_integral(&self, p: f64) -> f64 {
        let m = self.n as f64;
        sphere_area(self.n - 1)
            * self.theta_integral(|i, sin| sin.powf(m - 2.0) * self.phi[i].abs().powf(p))
    }

    /// Simpson's rule in the polar angle, where the integrands are smooth.
    fn theta_integral(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        let theta: Vec<f64> = self.xs.iter().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
        let vals: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(i, t)| f(i, t.sin()))
            .collect();
        simpson_nonuniform(&theta, &vals)
    }
}

fn gegenbauer(k: u32, lambda: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (mut c0, mut c1) = (1.0, 2.0 * lambda * x);
    for j in 1..k {
        let jf = j as f64;
        let c2 = (2.0 * x * (jf + lambda) * c1 - (jf + 2.0 * lambda - 1.0) * c0) / (jf + 1.0);
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// `int_{S^{n-1}} |Z|^p` for the zonal harmonic of degree `k`, unnormalized.
fn zonal_raw_lp(n: u32, k: u32, p: f64) -> f64 {
    use std::f64::consts::PI;
    let lambda = 0.5 * (n as f64 - 2.0);
    let f = |theta: f64| gegenbauer(k, lambda, theta.cos());
    // Split at the zeros of the harmonic so every panel is smooth inside.
    let samples = 4096.max(64 * k as usize);
    let mut edges = vec![0.0];
    let mut prev = f(0.0);
    for i in 1..=samples {
        let t = PI * i as f64 / samples as f64;
        let v = f(t);
        if v == 0.0 || (v > 0.0) != (prev > 0.0) {
            let (mut lo, mut hi) = (PI * (i - 1) as f64 / samples as f64, t);
            let s_lo = prev > 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = 0.5 * (lo + hi);
            if z > *edges.last().unwrap() {
                edges.push(z);
            }
        }
        prev = v;
    }
    edges.push(PI);
    let mut fine = Vec::new();
    for e in edges.windows(2) {
        let m = 8;
        for j in 0..m {
            fine.push(e[0] + (e[1] - e[0]) * j as f64 / m as f64);
        }
    }
    fine.push(PI);
    let m = n as f64;
    sphere_area(n - 1) * integrate_panels(&fine, 20, |t| f(t).abs().powf(p) * t.sin().powf(m - 2.0))
}

/// `int_{S^{n-1}} |phi|^p` for the mode normalized to unit `L^2(S^{n-1})` norm.
pub fn spherical_lp_integral(mode: &SphericalMode, n: u32, p: f64) -> Result<f64> {
    match *mode {
        SphericalMode::Harmonic { k, .. } => {
            if k == 0 {
                return Ok(sphere_area(n).powf(1.0 - 0.5 * p));
            }
            let l2 = zonal_raw_lp(n, k, 2.0);
            Ok(zonal_raw_lp(n, k, p) / l2.powf(0.5 * p))
        }
        SphericalMode::Cap { eigenvalue, .. } => {
            let cap = shoot_cap(n, eigenvalue)?;
            Ok(cap.raw_lp_integral(p) / cap.raw_lp_integral(2.0).powf(0.5 * p))
        }
    }
}

/// Scale-free spherical factor `int |phi|^p / (int |phi|^q)^{p/q}`.
pub fn spherical_ratio(mode: &SphericalMode, n: u32, p: f64, q: f64) -> Result<f64> {
    if p == q {
        return Ok(1.0);
    }
    Ok(spherical_lp_integral(mode, n, p)? / spherical_lp_integral(mode, n, q)?.powf(p / q))
}

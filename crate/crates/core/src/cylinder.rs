//! Cylinder profiles, the weighted norm identities and the reflection map.
//!
//! A function `u(x) = |x|^{-H} w(s) phi(x/|x|)` with `s = -log |x|` is stored as
//! its profile `w` on a uniform grid in `s` together with `w'` and `w''`.
//! Weighted integrals of `u` become unweighted integrals of `w`, and the
//! Laplacian becomes `|x|^{-H-2} (w'' - 2A w' - (gamma + lambda) w) phi`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{spherical_lp_integral, spherical_ratio, SphericalMode};
use crate::params::{hardy_shift, Params};
use crate::quadrature::{simpson_nonuniform, Grid1D, GridKind};

/// Nodes a profile must span before the norm identities are trusted.
pub const MIN_SUPPORT_NODES: usize = 64;

/// One spherical mode with its radial profile and two derivatives in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub mode: SphericalMode,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl ModeProfile {
    /// Derivatives from second-order finite differences on a uniform grid.
    pub fn from_values(mode: SphericalMode, grid: &Grid1D, values: Vec<f64>) -> Result<Self> {
        let h = grid.require_step()?;
        if values.len() != grid.len() {
            return Err(Error::grid(format!(
                "profile has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let (d1, d2) = finite_differences(&values, h);
        Ok(Self {
            mode,
            values,
            d1,
            d2,
        })
    }

    /// Samples `f(s) = (w, w', w'')` on the grid.
    pub fn from_fn(mode: SphericalMode, grid: &Grid1D, f: impl Fn(f64) -> (f64, f64, f64)) -> Self {
        let n = grid.len();
        let (mut values, mut d1, mut d2) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for &s in grid.nodes() {
            let (a, b, c) = f(s);
            values.push(a);
            d1.push(b);
            d2.push(c);
        }
        Self {
            mode,
            values,
            d1,
            d2,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Second-order central differences with one-sided second-order ends.
pub fn finite_differences(w: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = w.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (w[i + 1] - w[i - 1]) / (2.0 * h);
        d2[i] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
    d2[0] = (2.0 * w[0] - 5.0 * w[1] + 4.0 * w[2] - w[3]) / (h * h);
    d1[n - 1] = (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * h);
    d2[n - 1] = (2.0 * w[n - 1] - 5.0 * w[n - 2] + 4.0 * w[n - 3] - w[n - 4]) / (h * h);
    (d1, d2)
}

/// A finite sum of separated terms on a common cylinder grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction {
    grid: Grid1D,
    modes: Vec<ModeProfile>,
}

/// Serializable form: nodes and per-mode values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderRecord {
    pub nodes: Vec<f64>,
    pub modes: Vec<ModeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub mode: SphericalMode,
    pub values: Vec<f64>,
}

impl CylinderFunction {
    pub fn new(grid: Grid1D, modes: Vec<ModeProfile>) -> Result<Self> {
        if grid.kind() != GridKind::CylinderAxis {
            return Err(Error::grid("profiles live on a cylinder-axis grid"));
        }
        grid.require_step()?;
        if modes.is_empty() {
            return Err(Error::grid("at least one mode is required"));
        }
        for m in &modes {
            if m.values.len() != grid.len() || m.d1.len() != grid.len() || m.d2.len() != grid.len()
            {
                return Err(Error::grid("profile length does not match the grid"));
            }
            if m.values
                .iter()
                .chain(&m.d1)
                .chain(&m.d2)
                .any(|v| !v.is_finite())
            {
                return Err(Error::Numerical(
                    "profile contains non-finite values".into(),
                ));
            }
            let scale = m.max_abs().max(1.0);
            let ends = m.values[0].abs().max(m.values[m.values.len() - 1].abs());
            if ends > 1e-12 * scale {
                return Err(Error::BoundaryNotZero { value: ends });
            }
        }
        Ok(Self { grid, modes })
    }

    pub fn single(grid: Grid1D, profile: ModeProfile) -> Result<Self> {
        Self::new(grid, vec![profile])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn modes(&self) -> &[ModeProfile] {
        &self.modes
    }

    pub fn step(&self) -> f64 {
        self.grid.step().expect("cylinder grids are uniform")
    }

    /// Number of nodes between the first and last nonzero value over all modes.
    pub fn support_nodes(&self) -> usize {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for m in &self.modes {
            if let Some(a) = m.values.iter().position(|v| *v != 0.0) {
                lo = lo.min(a);
                hi = hi.max(m.values.iter().rposition(|v| *v != 0.0).unwrap());
            }
        }
        if lo == usize::MAX {
            0
        } else {
            hi - lo + 1
        }
    }

    fn check_resolution(&self) -> Result<()> {
        let support_nodes = self.support_nodes();
        // The zero function has nothing to resolve.
        if support_nodes > 0 && support_nodes < MIN_SUPPORT_NODES {
            return Err(Error::GridTooCoarse {
                support_nodes,
                required: MIN_SUPPORT_NODES,
            });
        }
        Ok(())
    }

    /// Largest deviation of the stored derivatives from central differences,
    /// relative to the largest stored second derivative.
    pub fn fd_consistency(&self) -> f64 {
        let h = self.step();
        let mut worst: f64 = 0.0;
        for m in &self.modes {
            let (d1, d2) = finite_differences(&m.values, h);
            let scale =
                m.d2.iter()
                    .chain(&m.d1)
                    .fold(1e-300f64, |a, v| a.max(v.abs()));
            for i in 1..m.values.len() - 1 {
                worst = worst
                    .max((d1[i] - m.d1[i]).abs() / scale)
                    .max((d2[i] - m.d2[i]).abs() / scale);
            }
        }
        worst
    }

    /// Translation by `shift` grid steps, filling with zeros.
    pub fn translated(&self, shift: isize) -> Result<Self> {
        let n = self.grid.len() as isize;
        let move_vec = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let j = i - shift;
                    if j >= 0 && j < n {
                        v[j as usize]
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let modes = self
            .modes
            .iter()
            .map(|m| ModeProfile {
                mode: m.mode,
                values: move_vec(&m.values),
                d1: move_vec(&m.d1),
                d2: move_vec(&m.d2),
            })
            .collect();
        Self::new(self.grid.clone(), modes)
    }

    /// Multiplies every profile by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| ModeProfile {
                mode: m.mode,
                values: m.values.iter().map(|v| c * v).collect(),
                d1: m.d1.iter().map(|v| c * v).collect(),
                d2: m.d2.iter().map(|v| c * v).collect(),
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            modes,
        }
    }

    pub fn to_record(&self) -> CylinderRecord {
        CylinderRecord {
            nodes: self.grid.nodes().to_vec(),
            modes: self
                .modes
                .iter()
                .map(|m| ModeRecord {
                    mode: m.mode,
                    values: m.values.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a function from its record, with finite-difference derivatives.
    pub fn from_record(record: &CylinderRecord) -> Result<Self> {
        let grid = Grid1D::from_nodes(GridKind::CylinderAxis, record.nodes.clone())?;
        let modes = record
            .modes
            .iter()
            .map(|m| ModeProfile::from_values(m.mode, &grid, m.values.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, modes)
    }

    pub fn is_single(&self) -> bool {
        self.modes.len() == 1
    }

    /// Pointwise `w'' - 2A w' - (gamma + lambda) w` for one mode.
    pub fn operator_values(&self, idx: usize, params: &Params) -> Vec<f64> {
        let d = params.derive();
        let m = &self.modes[idx];
        let c = d.gamma + m.mode.eigenvalue();
        (0..m.values.len())
            .map(|i| m.d2[i] - 2.0 * d.drift * m.d1[i] - c * m.values[i])
            .collect()
    }
}

/// Physical and cylinder evaluations of one weighted integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub physical: f64,
    pub cylinder: f64,
    pub rel_gap: f64,
}

impl NormPair {
    fn new(physical: f64, cylinder: f64) -> Result<Self> {
        if !(physical.is_finite() && cylinder.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite norm (physical {physical}, cylinder {cylinder})"
            )));
        }
        let rel_gap = (physical - cylinder).abs() / cylinder.abs().max(1e-300);
        Ok(Self {
            physical,
            cylinder,
            rel_gap,
        })
    }
}

/// `int |x|^a |grad u|^p` and `int |x|^{a-p} |u|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderNorms {
    pub weight: f64,
    pub shift: f64,
    pub gradient: NormPair,
    pub lower: NormPair,
    /// Spherical constant `int |phi|^p` already folded into both sides.
    pub spherical_factor: f64,
}

/// `int |x|^alpha |Lap u|^p`, `int |x|^{alpha-2p} |u|^p` and `int |x|^{-beta} |u|^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderNorms {
    pub laplacian: NormPair,
    pub lower: NormPair,
    pub sobolev: NormPair,
    pub spherical_factor_p: f64,
    pub spherical_factor_q: f64,
}

fn spherical_factor(g: &CylinderFunction, n: u32, p: f64) -> Result<f64> {
    if p == 2.0 {
        // Orthonormal modes: the L^2 norms add.
        return Ok(1.0);
    }
    spherical_lp_integral(&g.modes[0].mode, n, p)
}

/// Integral over the physical radius of `f(i)` given at the nodes `r_i = e^{-s_i}`.
fn radial_integral(grid: &Grid1D, f: impl Fn(usize, f64) -> f64) -> f64 {
    let s = grid.nodes();
    let n = s.len();
    let mut r = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let ri = (-s[i]).exp();
        r.push(ri);
        v.push(f(i, ri));
    }
    simpson_nonuniform(&r, &v)
}

/// First-order norms for the weight `|x|^a`.
///
/// Separates for a single mode with `p = 2`, for any number of modes with
/// `p = 2`, and for a radial profile with any `p`.
pub fn first_order_norms(g: &CylinderFunction, params: &Params, a: f64) -> Result<FirstOrderNorms> {
    let (n, p) = (params.n, params.p);
    if p != 2.0 && !(g.is_single() && g.modes[0].mode.is_radial()) {
        return Err(Error::NonSeparable(
            "gradient norms with p != 2 need a single radial mode".into(),
        ));
    }
    if (a - (p - n as f64)).abs() < 1e-12 {
        return Err(Error::params("weight a = p - n has zero shift"));
    }
    g.check_resolution()?;
    let shift = hardy_shift(n, p, a);
    let factor = spherical_factor(g, n, p)?;
    let grid = g.grid();
    let m = n as f64;

    let mut grad_cyl = vec![0.0; grid.len()];
    let mut low_cyl = vec![0.0; grid.len()];
    for (i, cell) in grad_cyl.iter_mut().enumerate() {
        let mut acc = 0.0;
        for mp in &g.modes {
            let t = mp.d1[i] + shift * mp.values[i];
            acc += t * t + mp.mode.eigenvalue() * mp.values[i] * mp.values[i];
        }
        *cell = acc.powf(0.5 * p);
    }
    for (i, cell) in low_cyl.iter_mut().enumerate() {
        *cell = if p == 2.0 {
            g.modes.iter().map(|mp| mp.values[i] * mp.values[i]).sum()
        } else {
            g.modes[0].values[i].abs().powf(p)
        };
    }
    let gradient_cyl = factor * grid.integrate(&grad_cyl);
    let lower_cyl = factor * grid.integrate(&low_cyl);

    // Physical side: u_r and u/r from the chain rule, integrated in r.
    let gradient_phys = factor
        * radial_integral(grid, |i, r| {
            if g.modes
                .iter()
                .all(|mp| mp.values[i] == 0.0 && mp.d1[i] == 0.0)
            {
                return 0.0;
            }
            let pow = r.powf(-shift);
            let mut acc = 0.0;
            for mp in &g.modes {
                let u = pow * mp.values[i];
                let u_r = -shift * pow / r * mp.values[i] - pow / r * mp.d1[i];
                acc += u_r * u_r + mp.mode.eigenvalue() * u * u / (r * r);
            }
            r.powf(a + m - 1.0) * acc.powf(0.5 * p)
        });
    let lower_phys = factor
        * radial_integral(grid, |i, r| {
            if g.modes.iter().all(|mp| mp.values[i] == 0.0) {
                return 0.0;
            }
            let pow = r.powf(-shift);
            let val = if p == 2.0 {
                g.modes.iter().map(|mp| (pow * mp.values[i]).powi(2)).sum()
            } else {
                (pow * g.modes[0].values[i]).abs().powf(p)
            };
            r.powf(a - p + m - 1.0) * val
        });
    Ok(FirstOrderNorms {
        weight: a,
        shift,
        gradient: NormPair::new(gradient_phys, gradient_cyl)?,
        lower: NormPair::new(lower_phys, lower_cyl)?,
        spherical_factor: factor,
    })
}

/// Second-order norms. Separates for a single mode, or for several modes when `p = q = 2`.
pub fn second_order_norms(g: &CylinderFunction, params: &Params) -> Result<SecondOrderNorms> {
    let (n, p, q) = (params.n, params.p, params.q);
    if !g.is_single() && !(p == 2.0 && q == 2.0) {
        return Err(Error::NonSeparable(
            "several modes need p = q = 2 for the norms to separate".into(),
        ));
    }
    g.check_resolution()?;
    let d = params.derive();
    let (h, alpha, beta, m) = (d.h2, params.alpha, d.beta, n as f64);
    let fp = spherical_factor(g, n, p)?;
    let fq = spherical_factor(g, n, q)?;
    let grid = g.grid();

    let ops: Vec<Vec<f64>> = (0..g.modes.len())
        .map(|k| g.operator_values(k, params))
        .collect();
    let lap_cyl_vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            if g.is_single() {
                ops[0][i].abs().powf(p)
            } else {
                ops.iter().map(|o| o[i] * o[i]).sum()
            }
        })
        .collect();
    let pow_sum = |i: usize, e: f64| -> f64 {
        if g.is_single() {
            g.modes[0].values[i].abs().powf(e)
        } else {
            g.modes.iter().map(|mp| mp.values[i] * mp.values[i]).sum()
        }
    };
    let low_cyl_vals: Vec<f64> = (0..grid.len()).map(|i| pow_sum(i, p)).collect();
    let sob_cyl_vals: Vec<f64> = (0..grid.len()).map(|i| pow_sum(i, q)).collect();
    let lap_cyl = fp * grid.integrate(&lap_cyl_vals);
    let low_cyl = fp * grid.integrate(&low_cyl_vals);
    let sob_cyl = fq * grid.integrate(&sob_cyl_vals);

    // Physical side: radial derivatives of r^{-H} w(-log r), then the
    // Laplacian u_rr + (n-1) u_r / r - lambda u / r^2.
    let lap_at = |mp: &ModeProfile, i: usize, r: f64| -> f64 {
        let pow = r.powf(-h);
        let (w, w1, w2) = (mp.values[i], mp.d1[i], mp.d2[i]);
        let u = pow * w;
        let u_r = -pow / r * (h * w + w1);
        let u_rr = pow / (r * r) * ((h + 1.0) * (h * w + w1) + h * w1 + w2);
        u_rr + (m - 1.0) * u_r / r - mp.mode.eigenvalue() * u / (r * r)
    };
    let zero_at = |i: usize| {
        g.modes
            .iter()
            .all(|mp| mp.values[i] == 0.0 && mp.d1[i] == 0.0 && mp.d2[i] == 0.0)
    };
    let lap_phys = fp
        * radial_integral(grid, |i, r| {
            if zero_at(i) {
                return 0.0;
            }
            let val = if g.is_single() {
                lap_at(&g.modes[0], i, r).abs().powf(p)
            } else {
                g.modes.iter().map(|mp| lap_at(mp, i, r).powi(2)).sum()
            };
            r.powf(alpha + m - 1.0) * val
        });
    let phys_u = |i: usize, r: f64, e: f64| -> f64 {
        let pow = r.powf(-h);
        if g.is_single() {
            (pow * g.modes[0].values[i]).abs().powf(e)
        } else {
            g.modes.iter().map(|mp| (pow * mp.values[i]).powi(2)).sum()
        }
    };
    let low_phys = fp
        * radial_integral(grid, |i, r| {
            if zero_at(i) {
                return 0.0;
            }
            r.powf(alpha - 2.0 * p + m - 1.0) * phys_u(i, r, p)
        });
    let sob_phys = fq
        * radial_integral(grid, |i, r| {
            if zero_at(i) {
                return 0.0;
            }
            r.powf(-beta + m - 1.0) * phys_u(i, r, q)
        });
    Ok(SecondOrderNorms {
        laplacian: NormPair::new(lap_phys, lap_cyl)?,
        lower: NormPair::new(low_phys, low_cyl)?,
        sobolev: NormPair::new(sob_phys, sob_cyl)?,
        spherical_factor_p: fp,
        spherical_factor_q: fq,
    })
}

fn laplacian_integral(g: &CylinderFunction, params: &Params) -> f64 {
    let p = params.p;
    let vals: Vec<Vec<f64>> = (0..g.modes.len())
        .map(|k| g.operator_values(k, params))
        .collect();
    let integrand: Vec<f64> = (0..g.grid.len())
        .map(|i| {
            if g.is_single() {
                vals[0][i].abs().powf(p)
            } else {
                vals.iter().map(|v| v[i] * v[i]).sum()
            }
        })
        .collect();
    g.grid.integrate(&integrand)
}

fn power_integral(g: &CylinderFunction, e: f64) -> f64 {
    let integrand: Vec<f64> = (0..g.grid.len())
        .map(|i| {
            if g.is_single() {
                g.modes[0].values[i].abs().powf(e)
            } else {
                g.modes.iter().map(|m| m.values[i] * m.values[i]).sum()
            }
        })
        .collect();
    g.grid.integrate(&integrand)
}

fn require_separable(g: &CylinderFunction, p: f64, q: f64) -> Result<()> {
    if !g.is_single() && !(p == 2.0 && q == 2.0) {
        return Err(Error::NonSeparable("several modes need p = q = 2".into()));
    }
    Ok(())
}

/// `int |x|^alpha |Lap u|^p / int |x|^{alpha-2p} |u|^p` on the cylinder.
pub fn rellich_quotient(g: &CylinderFunction, params: &Params) -> Result<f64> {
    require_separable(g, params.p, params.p)?;
    Ok(laplacian_integral(g, params) / power_integral(g, params.p))
}

/// `int |x|^alpha |Lap u|^p / (int |x|^{-beta} |u|^q)^{p/q}` on the cylinder,
/// including the spherical factor of the (single) mode.
pub fn sobolev_quotient(g: &CylinderFunction, params: &Params) -> Result<f64> {
    let (p, q) = (params.p, params.q);
    require_separable(g, p, q)?;
    let factor = if g.is_single() {
        spherical_ratio(&g.modes[0].mode, params.n, p, q)?
    } else {
        1.0
    };
    Ok(factor * laplacian_integral(g, params) / power_integral(g, q).powf(p / q))
}

/// First-order quotient `int |x|^a |grad u|^p / (int |x|^b |u|^q)^{p/q}` with
/// the scale-invariant `b`. Needs `p = 2` or a radial profile.
pub fn ckn_quotient(g: &CylinderFunction, n: u32, p: f64, q: f64, a: f64) -> Result<f64> {
    if p != 2.0 && !(g.is_single() && g.modes[0].mode.is_radial()) {
        return Err(Error::NonSeparable(
            "gradient quotient with p != 2 needs a radial mode".into(),
        ));
    }
    require_separable(g, p, q)?;
    let shift = hardy_shift(n, p, a);
    let integrand: Vec<f64> = (0..g.grid.len())
        .map(|i| {
            let acc: f64 = g
                .modes
                .iter()
                .map(|m| {
                    let t = m.d1[i] + shift * m.values[i];
                    t * t + m.mode.eigenvalue() * m.values[i] * m.values[i]
                })
                .sum();
            acc.powf(0.5 * p)
        })
        .collect();
    let factor = if g.is_single() {
        spherical_ratio(&g.modes[0].mode, n, p, q)?
    } else {
        1.0
    };
    Ok(factor * g.grid.integrate(&integrand) / power_integral(g, q).powf(p / q))
}

/// Weight `2(p - n) - a` paired with `a` by the reflection `s -> -s`.
pub fn hat_weight_first_order(n: u32, p: f64, a: f64) -> f64 {
    2.0 * (p - n as f64) - a
}

/// Reflects the profile through `s = 0` and maps `alpha` to `2 alpha* - alpha`.
pub fn reflect_and_hat(
    g: &CylinderFunction,
    params: &Params,
) -> Result<(CylinderFunction, Params)> {
    if !g.grid.is_symmetric(1e-12) {
        return Err(Error::grid("reflection needs a grid symmetric about s = 0"));
    }
    let rev = |v: &[f64], sign: f64| -> Vec<f64> { v.iter().rev().map(|x| sign * x).collect() };
    let modes = g
        .modes
        .iter()
        .map(|m| ModeProfile {
            mode: m.mode,
            values: rev(&m.values, 1.0),
            d1: rev(&m.d1, -1.0),
            d2: rev(&m.d2, 1.0),
        })
        .collect();
    let d = params.derive();
    let hat = Params::new(
        params.n,
        params.p,
        params.q,
        2.0 * d.alpha_star - params.alpha,
    )?;
    Ok((CylinderFunction::new(g.grid.clone(), modes)?, hat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(center: f64, width: f64) -> impl Fn(f64) -> (f64, f64, f64) {
        move |s: f64| {
            let z = (s - center) / width;
            if z.abs() >= 1.0 {
                return (0.0, 0.0, 0.0);
            }
            let b = 1.0 - z * z;
            let w = b.powi(4);
            let w1 = 4.0 * b.powi(3) * (-2.0 * z) / width;
            let w2 = (12.0 * b * b * 4.0 * z * z - 8.0 * b.powi(3)) / (width * width);
            (w, w1, w2)
        }
    }

    fn sample(n_nodes: usize, mode: SphericalMode) -> CylinderFunction {
        let grid = Grid1D::cylinder(20.0, n_nodes).unwrap();
        let prof = ModeProfile::from_fn(mode, &grid, bump(1.5, 4.0));
        CylinderFunction::single(grid, prof).unwrap()
    }

    #[test]
    fn operator_matches_physical_laplacian() {
        // Physical Laplacian by central differences in r at r = 1 (s = 0).
        let params = Params::rellich(5, 2.0, 1.0).unwrap();
        let d = params.derive();
        let env = bump(0.3, 2.0);
        let sigma = 0.7;
        let w = |s: f64| {
            let (b, b1, b2) = env(s);
            let e = (sigma * s).exp();
            (
                b * e,
                (b1 + sigma * b) * e,
                (b2 + 2.0 * sigma * b1 + sigma * sigma * b) * e,
            )
        };
        let grid = Grid1D::cylinder(5.0, 1001).unwrap();
        let g = CylinderFunction::single(
            grid,
            ModeProfile::from_fn(
                SphericalMode::radial(),
                &Grid1D::cylinder(5.0, 1001).unwrap(),
                w,
            ),
        )
        .unwrap();
        let i = g.grid().len() / 2;
        assert_eq!(g.grid().nodes()[i], 0.0);
        let op = g.operator_values(0, &params)[i];
        let u = |r: f64| r.powf(-d.h2) * w(-r.ln()).0;
        let e = 1e-4;
        let (um, u0, up) = (u(1.0 - e), u(1.0), u(1.0 + e));
        let lap = (up - 2.0 * u0 + um) / (e * e) + 4.0 * (up - um) / (2.0 * e);
        assert!((lap - op).abs() < 1e-6 * op.abs().max(1.0), "{lap} vs {op}");
    }

    #[test]
    fn identities_converge() {
        let params = Params::rellich(4, 2.0, 0.0).unwrap();
        let coarse =
            second_order_norms(&sample(2048, SphericalMode::harmonic(4, 1)), &params).unwrap();
        let fine =
            second_order_norms(&sample(4096, SphericalMode::harmonic(4, 1)), &params).unwrap();
        assert!(coarse.laplacian.rel_gap < 1e-5);
        assert!(fine.laplacian.rel_gap < coarse.laplacian.rel_gap / 3.0);
        let f =
            first_order_norms(&sample(2048, SphericalMode::harmonic(4, 2)), &params, 0.0).unwrap();
        assert!(f.gradient.rel_gap < 1e-5 && f.lower.rel_gap < 1e-5);
    }

    #[test]
    fn non_separable_is_rejected() {
        let params = Params::rellich(4, 3.0, 2.0).unwrap();
        let g = sample(1024, SphericalMode::harmonic(4, 1));
        assert!(matches!(
            first_order_norms(&g, &params, 0.0),
            Err(Error::NonSeparable(_))
        ));
        let grid = g.grid().clone();
        let two = CylinderFunction::new(
            grid.clone(),
            vec![g.modes()[0].clone(), g.modes()[0].clone()],
        )
        .unwrap();
        assert!(matches!(
            second_order_norms(&two, &params),
            Err(Error::NonSeparable(_))
        ));
    }

    #[test]
    fn coarse_and_boundary_errors() {
        let params = Params::rellich(4, 2.0, 0.0).unwrap();
        let grid = Grid1D::cylinder(20.0, 100).unwrap();
        let prof = ModeProfile::from_fn(SphericalMode::radial(), &grid, bump(0.0, 3.0));
        let g = CylinderFunction::single(grid.clone(), prof).unwrap();
        assert!(matches!(
            second_order_norms(&g, &params),
            Err(Error::GridTooCoarse { .. })
        ));
        let prof =
            ModeProfile::from_fn(SphericalMode::radial(), &grid, |s| (1.0 + s * s, 0.0, 0.0));
        assert!(matches!(
            CylinderFunction::single(grid, prof),
            Err(Error::BoundaryNotZero { .. })
        ));
    }

    #[test]
    fn reflection_preserves_quotients() {
        let params = Params::rellich(5, 2.0, 0.5).unwrap();
        let g = sample(1001, SphericalMode::harmonic(5, 2));
        let (h, hat) = reflect_and_hat(&g, &params).unwrap();
        assert!((hat.alpha - 3.5).abs() < 1e-15);
        let a = rellich_quotient(&g, &params).unwrap();
        let b = rellich_quotient(&h, &hat).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let (n, p) = (5, 2.0);
        let a1 = ckn_quotient(&g, n, p, p, 0.3).unwrap();
        let b1 = ckn_quotient(&h, n, p, p, hat_weight_first_order(n, p, 0.3)).unwrap();
        assert!((a1 - b1).abs() <= 1e-12 * a1);
    }

    #[test]
    fn record_round_trip() {
        let g = sample(512, SphericalMode::harmonic(3, 1));
        let rec = g.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: CylinderRecord = serde_json::from_str(&json).unwrap();
        let g2 = CylinderFunction::from_record(&back).unwrap();
        for (i, (a, b)) in g2.modes()[0]
            .values
            .iter()
            .zip(&g.modes()[0].values)
            .enumerate()
        {
            assert_eq!(
                a, b,
                "{i} {} {}",
                rec.modes[0].values[i], back.modes[0].values[i]
            );
        }
        assert!(g.fd_consistency() < 5e-3);
    }

    #[test]
    fn translation_invariance() {
        let params = Params::rellich(5, 2.0, 1.0).unwrap();
        let g = sample(2001, SphericalMode::harmonic(5, 1));
        let t = g.translated(37).unwrap();
        let a = rellich_quotient(&g, &params).unwrap();
        let b = rellich_quotient(&t, &params).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }
}

//! Radial Poisson problems `-Lap v = f` on annuli `{1/R < |x| < R}` with zero
//! boundary values, and the comparison `v >= |u|` for `f = |Lap u|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::quadrature::{cumulative_integral, simpson_nonuniform, Grid1D, GridKind};

/// Radial function on a uniform radial grid with two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl RadialProfile {
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> (f64, f64, f64)) -> Result<Self> {
        if grid.kind() != GridKind::Radial {
            return Err(Error::grid("radial profiles need a radial grid"));
        }
        let (mut values, mut d1, mut d2) = (vec![], vec![], vec![]);
        for &r in grid.nodes() {
            let (a, b, c) = f(r);
            values.push(a);
            d1.push(b);
            d2.push(c);
        }
        Ok(Self {
            grid,
            values,
            d1,
            d2,
        })
    }

    /// Fourth-order finite-difference derivatives of tabulated values.
    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if grid.kind() != GridKind::Radial {
            return Err(Error::grid("radial profiles need a radial grid"));
        }
        let h = grid.require_step()?;
        if values.len() != grid.len() {
            return Err(Error::grid("profile length does not match the grid"));
        }
        let (d1, d2) = fd4(&values, h);
        Ok(Self {
            grid,
            values,
            d1,
            d2,
        })
    }

    /// `u'' + (n - 1) u' / r` at every node.
    pub fn laplacian(&self, n: u32) -> Vec<f64> {
        let m = n as f64 - 1.0;
        self.grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, r)| self.d2[i] + m * self.d1[i] / r)
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| c * x).collect();
        Self {
            grid: self.grid.clone(),
            values: s(&self.values),
            d1: s(&self.d1),
            d2: s(&self.d2),
        }
    }
}

/// Fourth-order first and second derivatives; five-point one-sided stencils at the ends.
pub fn fd4(w: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = w.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 2..n - 2 {
        d1[i] = (w[i - 2] - 8.0 * w[i - 1] + 8.0 * w[i + 1] - w[i + 2]) / (12.0 * h);
        d2[i] = (-w[i - 2] + 16.0 * w[i - 1] - 30.0 * w[i] + 16.0 * w[i + 1] - w[i + 2])
            / (12.0 * h * h);
    }
    let fwd1 = |i: usize, s: f64| -> f64 {
        // s = +1 forward stencil from i, s = -1 backward.
        let at = |k: usize| if s > 0.0 { w[i + k] } else { w[i - k] };
        s * (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h)
    };
    let fwd2 = |i: usize, s: f64| -> f64 {
        let at = |k: usize| if s > 0.0 { w[i + k] } else { w[i - k] };
        (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) + 61.0 * at(4) - 10.0 * at(5))
            / (12.0 * h * h)
    };
    let near1 = |i: usize, s: f64| -> f64 {
        // One node in from the end: stencil i-1 .. i+3 (or mirrored).
        let at = |k: isize| {
            if s > 0.0 {
                w[(i as isize + k) as usize]
            } else {
                w[(i as isize - k) as usize]
            }
        };
        s * (-3.0 * at(-1) - 10.0 * at(0) + 18.0 * at(1) - 6.0 * at(2) + at(3)) / (12.0 * h)
    };
    let near2 = |i: usize, s: f64| -> f64 {
        let at = |k: isize| {
            if s > 0.0 {
                w[(i as isize + k) as usize]
            } else {
                w[(i as isize - k) as usize]
            }
        };
        (10.0 * at(-1) - 15.0 * at(0) - 4.0 * at(1) + 14.0 * at(2) - 6.0 * at(3) + at(4))
            / (12.0 * h * h)
    };
    d1[0] = fwd1(0, 1.0);
    d2[0] = fwd2(0, 1.0);
    d1[1] = near1(1, 1.0);
    d2[1] = near2(1, 1.0);
    d1[n - 1] = fwd1(n - 1, -1.0);
    d2[n - 1] = fwd2(n - 1, -1.0);
    d1[n - 2] = near1(n - 2, -1.0);
    d2[n - 2] = near2(n - 2, -1.0);
    (d1, d2)
}

/// `-Lap v = f` on `{1/R < r < R}` with `v = 0` on both spheres.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusProblem {
    pub n: u32,
    pub radius: f64,
    pub grid: Grid1D,
    pub source: Vec<f64>,
}

impl AnnulusProblem {
    pub fn new(n: u32, radius: f64, nodes: usize, source: impl Fn(f64) -> f64) -> Result<Self> {
        if !(radius > 1.0 && radius.is_finite()) {
            return Err(Error::params(format!(
                "annulus radius must exceed 1, got {radius}"
            )));
        }
        let grid = Grid1D::uniform(GridKind::Radial, 1.0 / radius, radius, nodes)?;
        let src = grid.nodes().iter().map(|&r| source(r)).collect();
        Self::from_grid(n, radius, grid, src)
    }

    pub fn from_grid(n: u32, radius: f64, grid: Grid1D, source: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::params(format!(
                "dimension must be at least 3, got {n}"
            )));
        }
        if !(radius > 1.0) {
            return Err(Error::params(format!(
                "annulus radius must exceed 1, got {radius}"
            )));
        }
        let tol = 1e-12 * radius;
        if grid.kind() != GridKind::Radial
            || (grid.start() - 1.0 / radius).abs() > tol
            || (grid.end() - radius).abs() > tol
        {
            return Err(Error::grid("grid must be radial and cover [1/R, R]"));
        }
        grid.require_step()?;
        if source.len() != grid.len() {
            return Err(Error::grid("source length does not match the grid"));
        }
        if let Some(v) = source.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::params(format!(
                "source must be nonnegative and finite, found {v}"
            )));
        }
        Ok(Self {
            n,
            radius,
            grid,
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    /// Largest `|v'' + (n-1) v'/r + f|` over nodes away from the ends.
    pub residual: f64,
    pub boundary_defect: f64,
}

/// Solves `(r^{n-1} v')' = -r^{n-1} f` by two running integrals.
pub fn solve_radial_annulus(prob: &AnnulusProblem) -> Result<RadialSolution> {
    let h = prob.grid.require_step()?;
    let r = prob.grid.nodes();
    let m = prob.n as f64 - 1.0;
    let weighted: Vec<f64> = r
        .iter()
        .zip(&prob.source)
        .map(|(r, f)| f * r.powf(m))
        .collect();
    let big_f = cumulative_integral(h, &weighted);
    let inv: Vec<f64> = r.iter().map(|r| r.powf(-m)).collect();
    let g = cumulative_integral(h, &inv);
    let hf: Vec<f64> = inv.iter().zip(&big_f).map(|(a, b)| a * b).collect();
    let hh = cumulative_integral(h, &hf);
    let last = r.len() - 1;
    let c = hh[last] / g[last];
    let mut values: Vec<f64> = g.iter().zip(&hh).map(|(g, hv)| c * g - hv).collect();
    values[0] = 0.0;
    let boundary_defect = values[last].abs();
    values[last] = 0.0;
    let d1: Vec<f64> = inv.iter().zip(&big_f).map(|(i, f)| i * (c - f)).collect();
    let (fd1, fd2) = fd4(&values, h);
    let mut residual: f64 = 0.0;
    for i in 2..last - 1 {
        residual = residual.max((fd2[i] + m * fd1[i] / r[i] + prob.source[i]).abs());
    }
    Ok(RadialSolution {
        values,
        d1,
        residual,
        boundary_defect,
    })
}

/// `int_{1/R}^{R} r^{w + n - 1} |g(r)|^e dr` with Simpson's rule.
fn radial_moment(grid: &Grid1D, n: u32, w: f64, e: f64, g: &[f64]) -> f64 {
    let r = grid.nodes();
    let vals: Vec<f64> = r
        .iter()
        .zip(g)
        .map(|(r, v)| r.powf(w + n as f64 - 1.0) * v.abs().powf(e))
        .collect();
    simpson_nonuniform(r, &vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `min (v - |u|)` over nodes.
    pub min_gap: f64,
    pub max_gap: f64,
    pub v_dominates: bool,
    /// Common numerator `int |x|^alpha |Lap u|^p`.
    pub numerator: f64,
    pub denominator_u: f64,
    pub denominator_v: f64,
    pub quotient_u: f64,
    pub quotient_v: f64,
    pub quotient_monotone: bool,
    pub residual: f64,
}

/// Tolerance on `v >= |u|`.
pub const DOMINATION_TOL: f64 = 1e-8;

/// Solves `-Lap v = |Lap u|` and compares `v` with `|u|` and the quotients
/// `int |x|^alpha |Lap .|^p / (int |x|^{-beta} |.|^q)^{p/q}`.
pub fn comparison_check(u: &RadialProfile, params: &Params) -> Result<ComparisonReport> {
    let last = u.values.len() - 1;
    let ends = u.values[0].abs().max(u.values[last].abs());
    if ends > 1e-10 {
        return Err(Error::BoundaryNotZero { value: ends });
    }
    let radius = u.grid.end();
    let lap = u.laplacian(params.n);
    let f: Vec<f64> = lap.iter().map(|v| v.abs()).collect();
    let prob = AnnulusProblem::from_grid(params.n, radius, u.grid.clone(), f.clone())?;
    let sol = solve_radial_annulus(&prob)?;
    let gaps: Vec<f64> = sol
        .values
        .iter()
        .zip(&u.values)
        .map(|(v, u)| v - u.abs())
        .collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d = params.derive();
    let (p, q) = (params.p, params.q);
    let numerator = radial_moment(&u.grid, params.n, params.alpha, p, &f);
    let denominator_u = radial_moment(&u.grid, params.n, -d.beta, q, &u.values);
    let denominator_v = radial_moment(&u.grid, params.n, -d.beta, q, &sol.values);
    let quotient_u = numerator / denominator_u.powf(p / q);
    let quotient_v = numerator / denominator_v.powf(p / q);
    Ok(ComparisonReport {
        min_gap,
        max_gap,
        v_dominates: min_gap >= -DOMINATION_TOL,
        numerator,
        denominator_u,
        denominator_v,
        quotient_u,
        quotient_v,
        quotient_monotone: quotient_v <= quotient_u * (1.0 + 1e-8),
        residual: sol.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `int |x|^{alpha - 2p} |v|^p` against `gamma^{-p} int |x|^alpha |f|^p`.
pub fn weighted_stability_bound(prob: &AnnulusProblem, params: &Params) -> Result<StabilityBound> {
    let (n, p, alpha) = (params.nf(), params.p, params.alpha);
    if !(alpha > 2.0 * p - n && alpha < n * p - n) {
        return Err(Error::params(format!(
            "need {} < alpha < {}, got {alpha}",
            2.0 * p - n,
            n * p - n
        )));
    }
    if prob.n != params.n {
        return Err(Error::params(
            "dimension of the problem and parameters differ",
        ));
    }
    let sol = solve_radial_annulus(prob)?;
    let gamma = params.derive().gamma;
    let lhs = radial_moment(&prob.grid, prob.n, alpha - 2.0 * p, p, &sol.values);
    let rhs = gamma.powf(-p) * radial_moment(&prob.grid, prob.n, alpha, p, &prob.source);
    Ok(StabilityBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// `(1 - z^2)^3` bump in `r` centred at `c` with half-width `w`, and its derivatives.
pub fn radial_bump(c: f64, w: f64) -> impl Fn(f64) -> (f64, f64, f64) {
    move |r: f64| {
        let z = (r - c) / w;
        if z.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let b = 1.0 - z * z;
        (
            b.powi(3),
            -6.0 * z * b * b / w,
            (24.0 * z * z * b - 6.0 * b * b) / (w * w),
        )
    }
}

/// Seeded radial profiles on `[1/R, R]` that change sign, each a sum of two
/// to four bumps with random signs. Draws that happen not to change sign are discarded.
pub fn random_sign_changing_profiles(
    seed: u64,
    count: usize,
    radius: f64,
    nodes: usize,
) -> Result<Vec<RadialProfile>> {
    if !(radius > 1.5 && radius.is_finite()) {
        return Err(Error::params(format!(
            "radius must exceed 1.5, got {radius}"
        )));
    }
    let grid = Grid1D::uniform(GridKind::Radial, 1.0 / radius, radius, nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(2..=4))
            .map(|_| {
                let w = rng.gen_range(0.1..0.4);
                let c = rng.gen_range(1.0 / radius + w..radius - w);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (sign * rng.gen_range(0.5..2.0), c, w)
            })
            .collect();
        let u = RadialProfile::from_fn(grid.clone(), |r| {
            bumps.iter().fold((0.0, 0.0, 0.0), |acc, &(a, c, w)| {
                let (b, b1, b2) = radial_bump(c, w)(r);
                (acc.0 + a * b, acc.1 + a * b1, acc.2 + a * b2)
            })
        })?;
        if u.values.iter().any(|v| *v > 1e-6) && u.values.iter().any(|v| *v < -1e-6) {
            out.push(u);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_source_in_three_dimensions() {
        let prob = AnnulusProblem::new(3, 2.0, 1024, |_| 1.0).unwrap();
        let sol = solve_radial_annulus(&prob).unwrap();
        // v = a + b/r - r^2/6 with v(1/2) = v(2) = 0.
        let b = -(2.0 / 3.0 - 1.0 / 24.0) / 1.5;
        let a = 2.0 / 3.0 - b / 2.0;
        let err = prob
            .grid
            .nodes()
            .iter()
            .zip(&sol.values)
            .map(|(r, v)| (v - (a + b / r - r * r / 6.0)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
        assert!(sol.boundary_defect < 1e-10);
        assert!(sol.residual < 1e-6);
    }

    #[test]
    fn zero_source_gives_zero() {
        let prob = AnnulusProblem::new(4, 3.0, 256, |_| 0.0).unwrap();
        let sol = solve_radial_annulus(&prob).unwrap();
        assert!(sol.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(AnnulusProblem::new(3, 1.0, 256, |_| 1.0).is_err());
        assert!(AnnulusProblem::new(3, 2.0, 256, |r| r - 1.0).is_err());
    }

    #[test]
    fn superharmonic_u_is_reproduced() {
        let params = Params::new(3, 2.0, 2.0, 0.0).unwrap();
        let prob = AnnulusProblem::new(3, 2.0, 1024, |r| radial_bump(1.0, 0.3)(r).0).unwrap();
        let sol = solve_radial_annulus(&prob).unwrap();
        assert!(sol.values[1..sol.values.len() - 1].iter().all(|v| *v > 0.0));
        let u = RadialProfile::from_values(prob.grid.clone(), sol.values.clone()).unwrap();
        let rep = comparison_check(&u, &params).unwrap();
        assert!(rep.v_dominates);
        assert!(
            rep.max_gap.abs() < 1e-6 && rep.min_gap.abs() < 1e-6,
            "{} {}",
            rep.min_gap,
            rep.max_gap
        );
    }

    #[test]
    fn sign_changing_u() {
        let params = Params::new(3, 2.0, 2.0, 0.0).unwrap();
        let grid = Grid1D::uniform(GridKind::Radial, 0.5, 2.0, 1024).unwrap();
        let k = 2.0 * std::f64::consts::PI / 1.5;
        let u = RadialProfile::from_fn(grid, |r| {
            let x = k * (r - 0.5);
            (x.sin(), k * x.cos(), -k * k * x.sin())
        })
        .unwrap();
        let rep = comparison_check(&u, &params).unwrap();
        assert!(rep.v_dominates && rep.max_gap > 1e-3);
        assert!(rep.quotient_v < rep.quotient_u);
        let rep2 = comparison_check(&u.scaled(2.0), &params).unwrap();
        assert!((rep2.quotient_u - rep.quotient_u).abs() < 1e-10 * rep.quotient_u);
        assert!((rep2.quotient_v - rep.quotient_v).abs() < 1e-10 * rep.quotient_v);
    }

    #[test]
    fn stability_bound_example() {
        let params = Params::rellich(5, 2.0, 0.0).unwrap();
        let prob = AnnulusProblem::new(5, 4.0, 2048, |r| radial_bump(1.0, 0.5)(r).0).unwrap();
        let b = weighted_stability_bound(&prob, &params).unwrap();
        assert!(b.holds && b.lhs > 0.0 && b.lhs < b.rhs);
        let zero = AnnulusProblem::new(5, 4.0, 256, |_| 0.0).unwrap();
        let z = weighted_stability_bound(&zero, &params).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        assert!(weighted_stability_bound(&prob, &Params::rellich(5, 2.0, 5.0).unwrap()).is_err());
    }

    #[test]
    fn random_profiles_change_sign_and_repeat() {
        let a = random_sign_changing_profiles(3, 10, 2.0, 512).unwrap();
        let b = random_sign_changing_profiles(3, 10, 2.0, 512).unwrap();
        assert_eq!(a, b);
        for u in &a {
            assert!(u.values.iter().any(|v| *v > 0.0) && u.values.iter().any(|v| *v < 0.0));
            assert_eq!(u.values[0], 0.0);
        }
        assert!(random_sign_changing_profiles(3, 1, 1.2, 512).is_err());
    }

    #[test]
    fn fd4_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let w: Vec<f64> = (0..n).map(|i| (2.0 * i as f64 * h).sin()).collect();
            let (d1, d2) = fd4(&w, h);
            (0..n)
                .map(|i| {
                    let x = 2.0 * i as f64 * h;
                    (d1[i] - 2.0 * x.cos())
                        .abs()
                        .max((d2[i] + 4.0 * x.sin()).abs())
                })
                .fold(0.0, f64::max)
        };
        assert!(err(51) / err(101) > 10.0);
    }
}

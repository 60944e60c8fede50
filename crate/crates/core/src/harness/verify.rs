//! Checks of the first- and second-order weighted inequalities on samples.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylinder::{ckn_quotient, sobolev_quotient, CylinderFunction};
use crate::error::{Error, Result};
use crate::modes::mu2_symbol_oracle;
use crate::params::{hardy_shift, mu22_closed_form, Params};

/// Relative slack allowed before a sample counts as a violation.
pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum Suite {
    /// `int |x|^a |grad u|^p >= |H|^p int |x|^{a-p} |u|^p`.
    Hardy { a: f64 },
    /// `int |x|^alpha |Lap u|^p >= gamma^p int |x|^{alpha-2p} |u|^p`.
    Rellich,
    /// First-order quotient with the scale-invariant weight on `|u|^q`.
    Ckn { a: f64 },
    /// `int |x|^alpha |Lap u|^p` against `(int |x|^{-beta} |u|^q)^{p/q}`.
    RellichSobolev,
    /// The `p = q = 2` inequality in the unit ball with a `|log |x||^{-2}` remainder.
    ImprovedLog,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Hardy { .. } => "hardy",
            Suite::Rellich => "rellich",
            Suite::Ckn { .. } => "ckn",
            Suite::RellichSobolev => "rellich-sobolev",
            Suite::ImprovedLog => "improved-log",
        }
    }

    /// Parses a suite name; first-order suites take the weight `a`.
    pub fn parse(name: &str, a: f64) -> Result<Self> {
        match name {
            "hardy" => Ok(Suite::Hardy { a }),
            "rellich" => Ok(Suite::Rellich),
            "ckn" => Ok(Suite::Ckn { a }),
            "rellich-sobolev" => Ok(Suite::RellichSobolev),
            "improved-log" => Ok(Suite::ImprovedLog),
            other => Err(Error::params(format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::parse(s, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantSource {
    /// Known sharp constant; each sample is checked against it.
    Sharp,
    /// No computable sharp constant; the running minimum quotient is an empirical estimate.
    EmpiricalMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub params: Params,
    pub constant: Option<f64>,
    pub source: ConstantSource,
    pub tolerance: f64,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Smallest `(lhs - constant * rhs) / lhs` over samples.
    pub min_relative_slack: Option<f64>,
    /// Smallest `lhs / rhs` over samples.
    pub min_quotient: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn trapezoid(g: &CylinderFunction, f: impl Fn(usize) -> f64) -> f64 {
    let vals: Vec<f64> = (0..g.grid().len()).map(f).collect();
    g.grid().integrate(&vals)
}

/// `int |w|^e`, with the squares of several modes summed when `e = 2`.
fn power_integral(g: &CylinderFunction, e: f64) -> f64 {
    trapezoid(g, |i| {
        if g.is_single() {
            g.modes()[0].values[i].abs().powf(e)
        } else {
            g.modes().iter().map(|m| m.values[i] * m.values[i]).sum()
        }
    })
}

fn laplacian_integral(g: &CylinderFunction, params: &Params) -> f64 {
    let ops: Vec<Vec<f64>> = (0..g.modes().len())
        .map(|k| g.operator_values(k, params))
        .collect();
    trapezoid(g, |i| {
        if g.is_single() {
            ops[0][i].abs().powf(params.p)
        } else {
            ops.iter().map(|o| o[i] * o[i]).sum()
        }
    })
}

fn gradient_integral(g: &CylinderFunction, p: f64, shift: f64) -> f64 {
    trapezoid(g, |i| {
        let acc: f64 = g
            .modes()
            .iter()
            .map(|m| {
                let t = m.d1[i] + shift * m.values[i];
                t * t + m.mode.eigenvalue() * m.values[i] * m.values[i]
            })
            .sum();
        acc.powf(0.5 * p)
    })
}

/// `int w^2 / s^2` over `s > 0`.
fn log_remainder_integral(g: &CylinderFunction) -> f64 {
    let s = g.grid().nodes();
    trapezoid(g, |i| {
        let w2: f64 = g.modes().iter().map(|m| m.values[i] * m.values[i]).sum();
        if w2 == 0.0 {
            0.0
        } else {
            w2 / (s[i] * s[i])
        }
    })
}

fn check_separable(samples: &[CylinderFunction], p: f64, q: f64, first_order: bool) -> Result<()> {
    for (i, g) in samples.iter().enumerate() {
        if !g.is_single() && !(p == 2.0 && q == 2.0) {
            return Err(Error::NonSeparable(format!(
                "sample {i} has several modes and (p, q) != (2, 2)"
            )));
        }
        if first_order && p != 2.0 && !g.modes()[0].mode.is_radial() {
            return Err(Error::NonSeparable(format!(
                "sample {i}: gradient norms with p != 2 need a radial mode"
            )));
        }
    }
    Ok(())
}

/// Sharp constant of a suite, or `None` where only an empirical minimum is available.
fn suite_constant(
    params: &Params,
    suite: &Suite,
    samples: &[CylinderFunction],
) -> Result<Option<f64>> {
    let (n, p, q, alpha) = (params.n, params.p, params.q, params.alpha);
    let nf = params.nf();
    let p2 = p == 2.0 && q == 2.0;
    match *suite {
        Suite::Hardy { a } => {
            if (a - (p - nf)).abs() < 1e-12 {
                return Err(Error::params("Hardy weight a = p - n has zero constant"));
            }
            check_separable(samples, p, p, true)?;
            Ok(Some(hardy_shift(n, p, a).abs().powf(p)))
        }
        Suite::Rellich => {
            if !(alpha > 2.0 * p - nf && alpha < nf * p - nf) {
                return Err(Error::params(format!(
                    "rellich suite needs {} < alpha < {}, got {alpha}",
                    2.0 * p - nf,
                    nf * p - nf
                )));
            }
            check_separable(samples, p, p, false)?;
            Ok(Some(params.derive().gamma.powf(p)))
        }
        Suite::Ckn { a } => {
            if (a - (p - nf)).abs() < 1e-12 {
                return Err(Error::params("weight a = p - n is excluded"));
            }
            check_separable(samples, p, q, true)?;
            Ok(p2.then(|| hardy_shift(n, p, a).powi(2)))
        }
        Suite::RellichSobolev => {
            check_separable(samples, p, q, false)?;
            if p2 {
                Ok(Some(mu2_symbol_oracle(n, alpha, None)?.value))
            } else {
                Ok(None)
            }
        }
        Suite::ImprovedLog => {
            if !p2 {
                return Err(Error::params("improved-log suite needs p = q = 2"));
            }
            if alpha > nf {
                return Err(Error::params(format!(
                    "improved-log suite needs alpha <= n, got {alpha}"
                )));
            }
            for (i, g) in samples.iter().enumerate() {
                let outside = g
                    .grid()
                    .nodes()
                    .iter()
                    .enumerate()
                    .any(|(j, &s)| s <= 0.0 && g.modes().iter().any(|m| m.values[j] != 0.0));
                if outside {
                    return Err(Error::params(format!(
                        "sample {i} is not supported in the unit ball"
                    )));
                }
            }
            Ok(params.derive().gamma_bar.map(|g| 0.5 * g))
        }
    }
}

/// `(lhs, rhs)` of the suite's inequality `lhs >= constant * rhs` for one sample.
fn sides(g: &CylinderFunction, params: &Params, suite: &Suite) -> Result<(f64, f64)> {
    let (n, p, q) = (params.n, params.p, params.q);
    match *suite {
        Suite::Hardy { a } => Ok((
            gradient_integral(g, p, hardy_shift(n, p, a)),
            power_integral(g, p),
        )),
        Suite::Rellich => Ok((laplacian_integral(g, params), power_integral(g, p))),
        Suite::Ckn { a } => {
            if p == 2.0 && q == 2.0 {
                Ok((
                    gradient_integral(g, p, hardy_shift(n, p, a)),
                    power_integral(g, 2.0),
                ))
            } else {
                Ok((ckn_quotient(g, n, p, q, a)?, 1.0))
            }
        }
        Suite::RellichSobolev => {
            if p == 2.0 && q == 2.0 {
                Ok((laplacian_integral(g, params), power_integral(g, 2.0)))
            } else {
                Ok((sobolev_quotient(g, params)?, 1.0))
            }
        }
        Suite::ImprovedLog => {
            let (s22, _) = mu22_closed_form(n, params.alpha)?;
            let lhs = laplacian_integral(g, params) - s22 * power_integral(g, 2.0);
            Ok((lhs, log_remainder_integral(g)))
        }
    }
}

/// Evaluates a suite on every sample; parameter checks run before any evaluation.
pub fn verify_inequalities(
    samples: &[CylinderFunction],
    params: &Params,
    suite: Suite,
) -> Result<VerifyReport> {
    if samples.is_empty() {
        return Err(Error::params("no samples to verify"));
    }
    let constant = suite_constant(params, &suite, samples)?;
    let evaluated: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|g| sides(g, params, &suite))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    let mut min_slack: Option<f64> = None;
    let mut min_quotient = f64::INFINITY;
    for (index, &(lhs, rhs)) in evaluated.iter().enumerate() {
        if !(lhs.is_finite() && rhs.is_finite()) {
            return Err(Error::Numerical(format!(
                "sample {index} gave non-finite integrals"
            )));
        }
        let quotient = lhs / rhs;
        min_quotient = min_quotient.min(quotient);
        match constant {
            Some(c) => {
                let diff = lhs - c * rhs;
                let slack = diff / lhs.abs().max(f64::MIN_POSITIVE);
                min_slack = Some(min_slack.map_or(slack, |m| m.min(slack)));
                if diff < -VERIFY_TOL * lhs.abs() || lhs <= 0.0 && c * rhs > 0.0 {
                    violations.push(Violation {
                        index,
                        lhs,
                        rhs,
                        relative_slack: slack,
                    });
                }
            }
            None => {
                if !(lhs > 0.0 && rhs > 0.0) {
                    violations.push(Violation {
                        index,
                        lhs,
                        rhs,
                        relative_slack: f64::NEG_INFINITY,
                    });
                }
            }
        }
    }
    Ok(VerifyReport {
        suite,
        params: *params,
        constant,
        source: if constant.is_some() {
            ConstantSource::Sharp
        } else {
            ConstantSource::EmpiricalMinimum
        },
        tolerance: VERIFY_TOL,
        samples: samples.len(),
        violations,
        min_relative_slack: min_slack,
        min_quotient,
    })
}

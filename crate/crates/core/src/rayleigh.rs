//! Discrete minimization of cylinder quotients.
//!
//! The profile lives on the interior nodes of a uniform grid on `[-S, S]` and
//! is extended by zero outside. The operator `w'' - 2A w' - c w` is discretized
//! with central differences and evaluated at every node the extended profile
//! touches, so `L` is rectangular and `K = L^T L` is a symmetric Toeplitz
//! pentadiagonal matrix whose symbol is the continuous symbol sampled through
//! `T = 4 sin^2(xi h / 2) / h^2`. The discrete quotient is therefore bounded
//! below by the discrete symbol and the truncation bias decays like `S^{-2}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::modes::{default_k_max, spherical_ratio, symbol_infimum, SphericalMode};
use crate::params::{mu22_closed_form, Params};

/// Which constant is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    /// Lower-order side `int |x|^{alpha - 2p} |u|^p`.
    Mu,
    /// Lower-order side `(int |x|^{-beta} |u|^q)^{p/q}`.
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eigen,
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// Extrapolated in the truncation span from a converged eigen-solve.
    Extrapolated,
    /// Converged eigen-solve on a single span.
    Discrete,
    /// Best value found by descent over separated profiles.
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub span: f64,
    pub nodes: usize,
    pub k_max: Option<u32>,
    pub extrapolate: bool,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            span: 40.0,
            nodes: 4096,
            k_max: None,
            extrapolate: true,
            restarts: 5,
            max_iter: 400,
            seed: 0,
        }
    }
}

/// Values at spans `S/2, S, 2S` with a common grid spacing and the fitted limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanLadder {
    pub spans: [f64; 3],
    pub nodes: [usize; 3],
    pub values: [f64; 3],
    pub extrapolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub mode: SphericalMode,
    pub method: Method,
    /// Best estimate for this mode.
    pub value: f64,
    /// Quotient on the requested span without extrapolation.
    pub raw_value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub span: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub ladder: Option<SpanLadder>,
    /// Whether every accepted line-search step lowered the objective.
    pub line_search_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    pub params: Params,
    pub value: f64,
    pub raw_value: f64,
    pub exactness: Exactness,
    pub argmin: SphericalMode,
    pub per_mode: Vec<QuotientReport>,
    pub closed_form: Option<f64>,
    pub symbol: Option<f64>,
}

/// The clamped difference operator for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftOperator {
    pub nodes: usize,
    pub h: f64,
    pub drift: f64,
    pub c: f64,
}

impl DriftOperator {
    pub fn new(params: &Params, mode: &SphericalMode, span: f64, nodes: usize) -> Result<Self> {
        if nodes < 16 {
            return Err(Error::grid(format!("need at least 16 nodes, got {nodes}")));
        }
        if !(span > 0.0) {
            return Err(Error::grid(format!("span must be positive, got {span}")));
        }
        let d = params.derive();
        Ok(Self {
            nodes,
            h: 2.0 * span / (nodes - 1) as f64,
            drift: d.drift,
            c: d.gamma + mode.eigenvalue(),
        })
    }

    pub fn interior(&self) -> usize {
        self.nodes - 2
    }

    /// Stencil weights `(a_minus, a_0, a_plus)` for `w_{i-1}, w_i, w_{i+1}`.
    fn stencil(&self) -> (f64, f64, f64) {
        let h = self.h;
        (
            1.0 / (h * h) + self.drift / h,
            -2.0 / (h * h) - self.c,
            1.0 / (h * h) - self.drift / h,
        )
    }

    /// `L x` at all `nodes` rows for interior unknowns `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (am, a0, ap) = self.stencil();
        let m = x.len();
        let get = |j: isize| {
            if j >= 0 && (j as usize) < m {
                x[j as usize]
            } else {
                0.0
            }
        };
        (0..self.nodes as isize)
            .map(|i| {
                // Row i touches unknowns for nodes i-1, i, i+1, i.e. indices i-2, i-1, i.
                am * get(i - 2) + a0 * get(i - 1) + ap * get(i)
            })
            .collect()
    }

    /// `L^T y` for a vector over all rows.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let (am, a0, ap) = self.stencil();
        (0..self.interior())
            .map(|j| {
                // Unknown j sits at node j+1 and feeds rows j, j+1, j+2.
                ap * y[j] + a0 * y[j + 1] + am * y[j + 2]
            })
            .collect()
    }

    /// `K = L^T L`.
    pub fn normal_matrix(&self) -> SymBanded {
        let (am, a0, ap) = self.stencil();
        let m = self.interior();
        let mut k = SymBanded::zeros(m, 2);
        let (d0, d1, d2) = (am * am + a0 * a0 + ap * ap, a0 * (am + ap), am * ap);
        for j in 0..m {
            k.add(j, j, d0);
            if j >= 1 {
                k.add(j, j - 1, d1);
            }
            if j >= 2 {
                k.add(j, j - 2, d2);
            }
        }
        k
    }

    /// Minimum over frequencies of the discrete symbol.
    pub fn discrete_symbol_min(&self) -> f64 {
        let (a2, h) = (self.drift * self.drift, self.h);
        let t_max = 4.0 / (h * h);
        let f = |t: f64| (t + self.c).powi(2) + 4.0 * a2 * t * (1.0 - 0.25 * h * h * t);
        let mut best = f(0.0).min(f(t_max));
        let lead = 1.0 - a2 * h * h;
        if lead > 0.0 {
            let t = -(2.0 * self.c + 4.0 * a2) / (2.0 * lead);
            if t > 0.0 && t < t_max {
                best = best.min(f(t));
            }
        }
        best
    }

    pub fn quotient(&self, x: &[f64]) -> (f64, f64) {
        let lx = self.apply(x);
        (
            lx.iter().map(|v| v * v).sum(),
            x.iter().map(|v| v * v).sum(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub iterations: usize,
    pub vector: Vec<f64>,
}

/// Smallest eigenvalue of `K` by shifted inverse iteration.
pub fn smallest_eigen(op: &DriftOperator) -> Result<EigenSolution> {
    let m = op.interior();
    let k = op.normal_matrix();
    let lower = op.discrete_symbol_min();
    let mut sigma = lower - 1e-9 * lower.abs().max(1.0);
    let chol = loop {
        let mut shifted = k.clone();
        shifted.add_diagonal(-sigma);
        match shifted.cholesky() {
            Ok(c) => break c,
            Err(_) => {
                let next = sigma - 1e-6 * sigma.abs().max(1.0);
                if sigma < -1e6 {
                    return Err(Error::Numerical(
                        "no admissible shift for inverse iteration".into(),
                    ));
                }
                sigma = if next > 0.0 { 0.5 * next } else { next - 1e-3 };
            }
        }
    };
    // Rounding noise in the quotient is of order eps * ||K||.
    let noise = 1e-15 * (0..m).map(|i| k.get(i, i).abs()).fold(0.0, f64::max);
    let mut x: Vec<f64> = (0..m)
        .map(|j| (std::f64::consts::PI * (j + 1) as f64 / (m + 1) as f64).sin())
        .collect();
    let mut prev = f64::INFINITY;
    let mut stable = 0;
    const MAX_ITER: usize = 10_000;
    for it in 1..=MAX_ITER {
        let mut y = chol.solve(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let (num, den) = op.quotient(&y);
        let theta = num / den;
        x = y;
        if (theta - prev).abs() <= 1e-14 * theta.abs() + noise {
            stable += 1;
            if stable >= 2 {
                return Ok(EigenSolution {
                    value: theta,
                    numerator: num,
                    denominator: den,
                    iterations: it,
                    vector: x,
                });
            }
        } else {
            stable = 0;
        }
        prev = theta;
    }
    let kx = k.mul_vec(&x);
    let residual = kx
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - prev * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual,
    })
}

/// Fits `theta(S) = theta_inf + a S^{-2} + b S^{-3}` through three spans.
pub fn extrapolate_span(spans: [f64; 3], values: [f64; 3]) -> f64 {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i] = [1.0, spans[i].powi(-2), spans[i].powi(-3), values[i]];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    m[0][3] / m[0][0]
}

/// Span ladder `S/2, S, 2S` at the spacing of `(span, nodes)`.
pub fn ladder_nodes(span: f64, nodes: usize) -> ([f64; 3], [usize; 3]) {
    let spans = [0.5 * span, span, 2.0 * span];
    let cells = (nodes - 1) as f64;
    let counts = [
        (0.5 * cells).round() as usize + 1,
        nodes,
        (2.0 * cells).round() as usize + 1,
    ];
    (spans, counts)
}

/// `p = q = 2` per-mode minimum of `||L w||^2 / ||w||^2`.
pub fn minimize_mode_p2(
    params: &Params,
    mode: &SphericalMode,
    opts: &EstimateOptions,
) -> Result<QuotientReport> {
    if params.p != 2.0 {
        return Err(Error::params("the eigen route needs p = 2"));
    }
    if !(opts.span >= 10.0) {
        return Err(Error::params(format!(
            "the eigen route needs span >= 10, got {}",
            opts.span
        )));
    }
    let op = DriftOperator::new(params, mode, opts.span, opts.nodes)?;
    let main = smallest_eigen(&op)?;
    let mut report = QuotientReport {
        mode: *mode,
        method: Method::Eigen,
        value: main.value,
        raw_value: main.value,
        numerator: main.numerator,
        denominator: main.denominator,
        span: opts.span,
        nodes: opts.nodes,
        iterations: main.iterations,
        ladder: None,
        line_search_monotone: true,
    };
    if opts.extrapolate {
        let (spans, counts) = ladder_nodes(opts.span, opts.nodes);
        let mut values = [0.0; 3];
        for i in 0..3 {
            values[i] = if i == 1 {
                main.value
            } else {
                smallest_eigen(&DriftOperator::new(params, mode, spans[i], counts[i])?)?.value
            };
        }
        let extrapolated = extrapolate_span(spans, values);
        report.value = extrapolated.max(0.0);
        report.ladder = Some(SpanLadder {
            spans,
            nodes: counts,
            values,
            extrapolated,
        });
    }
    Ok(report)
}

/// Objective `F * h sum |L x|^p / (h sum |x|^q)^{p/q}` and its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientObjective {
    pub op: DriftOperator,
    pub p: f64,
    pub q: f64,
    pub factor: f64,
}

impl QuotientObjective {
    pub fn new(
        params: &Params,
        mode: &SphericalMode,
        span: f64,
        nodes: usize,
        q: f64,
    ) -> Result<Self> {
        let factor = spherical_ratio(mode, params.n, params.p, q)?;
        Ok(Self {
            op: DriftOperator::new(params, mode, span, nodes)?,
            p: params.p,
            q,
            factor,
        })
    }

    fn parts(&self, x: &[f64]) -> (Vec<f64>, f64, f64) {
        let h = self.op.h;
        let lx = self.op.apply(x);
        let num = h * lx.iter().map(|v| v.abs().powf(self.p)).sum::<f64>();
        let den = h * x.iter().map(|v| v.abs().powf(self.q)).sum::<f64>();
        (lx, num, den)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (_, num, den) = self.parts(x);
        self.factor * num / den.powf(self.p / self.q)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (p, q, h) = (self.p, self.q, self.op.h);
        let (lx, num, den) = self.parts(x);
        let dp = den.powf(p / q);
        let value = self.factor * num / dp;
        let wl: Vec<f64> = lx
            .iter()
            .map(|v| h * p * v.signum() * v.abs().powf(p - 1.0))
            .collect();
        let gnum = self.op.apply_transpose(&wl);
        let coef = (p / q) * num / (dp * den);
        let grad = gnum
            .iter()
            .zip(x)
            .map(|(gn, xi)| {
                self.factor * (gn / dp - coef * h * q * xi.signum() * xi.abs().powf(q - 1.0))
            })
            .collect();
        (value, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentRun {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub iterations: usize,
}

impl DescentRun {
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Armijo constant of the backtracking line search.
pub const ARMIJO_C1: f64 = 1e-4;

/// Projected descent from `x0` preconditioned by `K = L^T L`.
///
/// The direction is `-(x.x / 2) K^{-1} grad J`, so for `p = q = 2` a unit step
/// is one step of inverse iteration. After each step the iterate is rescaled
/// to unit `h sum |x|^q`, which leaves the objective unchanged.
pub fn descend(obj: &QuotientObjective, x0: Vec<f64>, max_iter: usize) -> Result<DescentRun> {
    let chol = obj.op.normal_matrix().cholesky()?;
    let normalize = |x: &mut Vec<f64>| {
        let d = obj.op.h * x.iter().map(|v| v.abs().powf(obj.q)).sum::<f64>();
        let s = d.powf(-1.0 / obj.q);
        x.iter_mut().for_each(|v| *v *= s);
    };
    if x0.len() != obj.op.interior() {
        return Err(Error::params(format!(
            "start has {} entries, expected {}",
            x0.len(),
            obj.op.interior()
        )));
    }
    if x0.iter().all(|v| *v == 0.0) {
        return Err(Error::params("descent needs a nonzero starting profile"));
    }
    let mut x = x0;
    normalize(&mut x);
    let (mut j, mut g) = obj.value_and_gradient(&x);
    if !j.is_finite() {
        return Err(Error::Numerical(
            "objective is not finite at the start".into(),
        ));
    }
    let mut history = vec![j];
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let scale = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let mut d = chol.solve(&g);
        d.iter_mut().for_each(|v| *v *= -scale);
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            normalize(&mut trial);
            let jt = obj.value(&trial);
            if jt.is_finite() && jt <= j + ARMIJO_C1 * t * slope && jt < j {
                accepted = Some((trial, jt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, jt)) = accepted else { break };
        let rel = (j - jt) / j.abs().max(1e-300);
        x = trial;
        let (jn, gn) = obj.value_and_gradient(&x);
        j = jn.min(jt);
        g = gn;
        history.push(jt);
        if rel < 1e-12 {
            break;
        }
    }
    Ok(DescentRun {
        value: *history.last().unwrap(),
        vector: x,
        history,
        iterations,
    })
}

fn initial_profile(m: usize, restart: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (center, width) = if restart == 0 {
        (0.5, 0.25)
    } else {
        (rng.gen_range(0.25..0.75), rng.gen_range(0.05..0.25))
    };
    (0..m)
        .map(|j| {
            let t = (j + 1) as f64 / (m + 1) as f64;
            let z = (t - center) / width;
            let base = (-z * z).exp() * (std::f64::consts::PI * t).sin();
            if restart == 0 {
                base
            } else {
                base * (1.0 + 0.1 * (7.0 * t + restart as f64).sin())
            }
        })
        .collect()
}

/// Per-mode minimum for general `(p, q)` by descent with seeded restarts.
pub fn minimize_mode_general(
    params: &Params,
    mode: &SphericalMode,
    q: f64,
    opts: &EstimateOptions,
) -> Result<QuotientReport> {
    if !(params.p > 1.0 && q >= params.p) {
        return Err(Error::params(format!(
            "descent needs p > 1 and q >= p, got p = {}, q = {q}",
            params.p
        )));
    }
    let obj = QuotientObjective::new(params, mode, opts.span, opts.nodes, q)?;
    let m = obj.op.interior();
    let k_tag = mode.harmonic_index().unwrap_or(u32::MAX) as u64;
    let mut rng =
        ChaCha8Rng::seed_from_u64(opts.seed ^ (k_tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let mut best: Option<DescentRun> = None;
    let mut monotone = true;
    let mut iterations = 0;
    for r in 0..opts.restarts.max(1) {
        let x0 = initial_profile(m, r, &mut rng);
        let run = descend(&obj, x0, opts.max_iter)?;
        monotone &= run.is_monotone();
        iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let h = obj.op.h;
    let lx = obj.op.apply(&best.vector);
    let numerator = obj.factor * h * lx.iter().map(|v| v.abs().powf(params.p)).sum::<f64>();
    let denominator =
        (h * best.vector.iter().map(|v| v.abs().powf(q)).sum::<f64>()).powf(params.p / q);
    Ok(QuotientReport {
        mode: *mode,
        method: Method::Gradient,
        value: best.value,
        raw_value: best.value,
        numerator,
        denominator,
        span: opts.span,
        nodes: opts.nodes,
        iterations,
        ladder: None,
        line_search_monotone: monotone,
    })
}

/// Estimates the constant as a minimum over harmonic modes `0..=k_max`.
///
/// With `p = 2` and the lower-order side `Mu` (or `S` with `q = 2`) the per-mode
/// problem is a generalized eigenproblem. Modes whose symbol lower bound
/// already exceeds the best value found are skipped. Otherwise each mode is
/// minimized by descent and the result is an upper bound.
pub fn estimate_constant(
    params: &Params,
    kind: ConstantKind,
    opts: &EstimateOptions,
) -> Result<ConstantEstimate> {
    let d = params.derive();
    let n = params.n;
    let q = match kind {
        ConstantKind::Mu => params.p,
        ConstantKind::S => params.q,
    };
    let k_max = opts
        .k_max
        .unwrap_or_else(|| default_k_max(n, d.gamma, d.drift));
    let eigen = params.p == 2.0 && q == 2.0;
    let mut per_mode = Vec::new();
    if eigen {
        let mut order: Vec<(f64, SphericalMode)> = (0..=k_max)
            .map(|k| {
                let mode = SphericalMode::harmonic(n, k);
                Ok((
                    symbol_infimum(&Params::rellich(n, 2.0, params.alpha)?, &mode)?.value,
                    mode,
                ))
            })
            .collect::<Result<_>>()?;
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for (lower, mode) in order {
            if lower > best * (1.0 + 1e-6) + 1e-12 {
                continue;
            }
            let r = minimize_mode_p2(params, &mode, opts)?;
            best = best.min(r.value);
            per_mode.push(r);
        }
    } else {
        per_mode = (0..=k_max)
            .into_par_iter()
            .map(|k| minimize_mode_general(params, &SphericalMode::harmonic(n, k), q, opts))
            .collect::<Result<Vec<_>>>()?;
    }
    let best = per_mode
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Numerical("no modes evaluated".into()))?;
    let raw = per_mode
        .iter()
        .map(|r| r.raw_value)
        .fold(f64::INFINITY, f64::min);
    let (closed_form, symbol) = if eigen {
        let oracle = crate::modes::mu2_symbol_oracle(n, params.alpha, None)?;
        (
            Some(mu22_closed_form(n, params.alpha)?.0),
            Some(oracle.value),
        )
    } else {
        (None, None)
    };
    let exactness = match (eigen, opts.extrapolate) {
        (true, true) => Exactness::Extrapolated,
        (true, false) => Exactness::Discrete,
        _ => Exactness::UpperBound,
    };
    Ok(ConstantEstimate {
        kind,
        params: *params,
        value: best.value,
        raw_value: raw,
        exactness,
        argmin: best.mode,
        per_mode,
        closed_form,
        symbol,
    })
}

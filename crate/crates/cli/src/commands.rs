//! One function per subcommand, each producing a report.

use anyhow::{bail, Result};
use rellich_core::degeneration::{
    fit_rate, mitidieri_quotient, navier_degeneration_ladder, resonance_family_bound, ProfileOmega,
};
use rellich_core::harness::sweep::{alpha_grid, degenerating_mode, DISCRETE_TOL, RESONANT_FLOOR};
use rellich_core::harness::verify::VERIFY_TOL;
use rellich_core::harness::{
    generate_samples, run_sweep, verify_inequalities, Check, Report, SampleSpec, Suite,
    SweepRecord, SweepTasks,
};
use rellich_core::modes::{mu2_symbol_oracle, SphericalMode};
use rellich_core::params::{is_resonant, mu22_closed_form, resonant_mode};
use rellich_core::poisson::{
    comparison_check, random_sign_changing_profiles, weighted_stability_bound, AnnulusProblem,
    DOMINATION_TOL,
};
use rellich_core::rayleigh::{estimate_constant, ConstantEstimate, ConstantKind, EstimateOptions};
use rellich_core::{Grid1D, Params};
use serde::Serialize;

use crate::args::{EstimateArgs, Family, Settings};

/// Tolerance for the closed form against the symbol minimum.
const CLOSED_FORM_TOL: f64 = 1e-10;

/// A finished command: its report and, for sweeps, the flat rows.
pub struct Outcome {
    pub report: Report,
    pub rows: Option<Vec<SweepRecord>>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, rows: None }
    }
}

fn new_report(command: &str, settings: &Settings, extra: impl Serialize) -> Result<Report> {
    #[derive(Serialize)]
    struct Header<'a, E: Serialize> {
        #[serde(flatten)]
        params: &'a Params,
        modes: &'a [u32],
        grid_span: Option<f64>,
        grid_points: Option<usize>,
        eps_ladder: &'a [f64],
        seed: u64,
        #[serde(flatten)]
        extra: E,
    }
    let header = Header {
        params: &settings.params,
        modes: &settings.modes,
        grid_span: settings.grid_span,
        grid_points: settings.grid_points,
        eps_ladder: &settings.eps_ladder,
        seed: settings.seed,
        extra,
    };
    let mut report = Report::new(command, header)?;
    report.versions.insert(
        env!("CARGO_PKG_NAME").into(),
        env!("CARGO_PKG_VERSION").into(),
    );
    Ok(report)
}

fn no_extra() -> serde_json::Value {
    serde_json::json!({})
}

pub fn constants(settings: &Settings) -> Result<Outcome> {
    let params = settings.params;
    let mut report = new_report("constants", settings, no_extra())?;
    let derived = params.derive();
    report
        .push_result(serde_json::json!({ "derived": derived, "resonant": is_resonant(&params) }))?;
    if params.p == 2.0 && params.q == 2.0 {
        let (closed, k) = mu22_closed_form(params.n, params.alpha)?;
        let oracle = mu2_symbol_oracle(params.n, params.alpha, None)?;
        report.push_result(
            serde_json::json!({ "mu_closed": closed, "closed_k": k, "symbol": oracle }),
        )?;
        report.push_check(
            Check::new("symbol-matches-closed-form", oracle.matches_closed_form)
                .with_value((oracle.value - closed).abs())
                .with_tolerance(CLOSED_FORM_TOL),
        );
        report.push_check(
            Check::new(
                "resonance-iff-zero",
                is_resonant(&params) == (closed < 1e-20),
            )
            .with_value(closed),
        );
    }
    Ok(report.into())
}

fn estimate_options(settings: &Settings, args: &EstimateArgs) -> EstimateOptions {
    let defaults = EstimateOptions::default();
    EstimateOptions {
        span: settings.grid_span.unwrap_or(defaults.span),
        nodes: settings.grid_points.unwrap_or(defaults.nodes),
        k_max: args.k_max,
        extrapolate: !args.no_extrapolate,
        restarts: args.restarts,
        max_iter: args.max_iter,
        seed: settings.seed,
    }
}

/// Checks shared by `mu` and `estimate-s`.
fn estimate_checks(report: &mut Report, est: &ConstantEstimate, tol: f64) {
    report.push_check(
        Check::new("positive-finite", est.value.is_finite() && est.value >= 0.0)
            .with_value(est.value),
    );
    if let Some(symbol) = est.symbol {
        let check = if symbol > RESONANT_FLOOR {
            let rel = (est.value - symbol).abs() / symbol;
            Check::new("discrete-matches-symbol", rel <= tol)
                .with_value(rel)
                .with_tolerance(tol)
        } else {
            Check::new("discrete-small-at-resonance", est.value < RESONANT_FLOOR)
                .with_value(est.value)
                .with_tolerance(RESONANT_FLOOR)
        };
        report.push_check(check.with_detail(format!("symbol value {symbol}")));
    }
    let descents: Vec<_> = est
        .per_mode
        .iter()
        .filter(|r| r.ladder.is_none() && r.iterations > 0)
        .collect();
    if !descents.is_empty() {
        report.push_check(Check::new(
            "line-search-monotone",
            descents.iter().all(|r| r.line_search_monotone),
        ));
    }
}

pub fn mu(settings: &Settings, args: &EstimateArgs) -> Result<Outcome> {
    let params = Params::new(
        settings.params.n,
        settings.params.p,
        settings.params.p,
        settings.params.alpha,
    )?;
    let opts = estimate_options(settings, args);
    let mut report = new_report("mu", settings, opts)?;
    let est = estimate_constant(&params, ConstantKind::Mu, &opts)?;
    estimate_checks(&mut report, &est, args.tol);
    report.push_result(&est)?;
    Ok(report.into())
}

pub fn estimate_s(settings: &Settings, args: &EstimateArgs) -> Result<Outcome> {
    let opts = estimate_options(settings, args);
    let mut report = new_report("estimate-s", settings, opts)?;
    let est = estimate_constant(&settings.params, ConstantKind::S, &opts)?;
    estimate_checks(&mut report, &est, args.tol);
    report.push_result(&est)?;
    Ok(report.into())
}

#[derive(Serialize)]
struct LadderPoint {
    eps: f64,
    value: f64,
}

pub fn degenerate(
    settings: &Settings,
    family: Family,
    slope_tol: f64,
    sharp_tol: f64,
) -> Result<Outcome> {
    let params = settings.params;
    let (p, q) = (params.p, params.q);
    let omega = ProfileOmega::default();
    let eps = &settings.eps_ladder;
    let family_name = format!("{family:?}").to_lowercase();
    let mut report = new_report(
        "degenerate",
        settings,
        serde_json::json!({ "family": family_name }),
    )?;
    let values: Vec<f64> = match family {
        Family::Resonance => {
            let Some(k) = resonant_mode(&params) else {
                bail!(
                    "alpha = {} is not resonant for n = {}, p = {p}",
                    params.alpha,
                    params.n
                );
            };
            eps.iter()
                .map(|&e| resonance_family_bound(&omega, e, &params, k))
                .collect::<Result<_, _>>()?
        }
        Family::Navier => {
            let mode = degenerating_mode(&params)?;
            report.push_result(serde_json::json!({ "mode": mode }))?;
            navier_degeneration_ladder(&omega, eps, &params, &mode)?
        }
        Family::Sharpness => eps
            .iter()
            .map(|&e| mitidieri_quotient(&omega, e, &params))
            .collect::<Result<_, _>>()?,
    };
    let points: Vec<LadderPoint> = eps
        .iter()
        .zip(&values)
        .map(|(&eps, &value)| LadderPoint { eps, value })
        .collect();
    report.push_result(&points)?;
    match family {
        Family::Resonance | Family::Navier => {
            let fit = fit_rate(eps, &values)?;
            let expected = if family == Family::Resonance {
                p
            } else {
                p - 1.0 + p / q
            };
            report.push_check(
                Check::new(
                    "degeneration-slope",
                    (fit.slope - expected).abs() <= slope_tol,
                )
                .with_value(fit.slope)
                .with_tolerance(slope_tol)
                .with_detail(format!("expected {expected}")),
            );
            report.push_result(&fit)?;
        }
        Family::Sharpness => {
            let target = params.derive().gamma.abs().powf(p);
            let smallest = eps
                .iter()
                .zip(&values)
                .min_by(|a, b| a.0.total_cmp(b.0))
                .map(|(_, v)| *v)
                .unwrap_or(f64::NAN);
            let rel = (smallest - target).abs() / target.abs().max(f64::MIN_POSITIVE);
            report.push_check(
                Check::new("sharpness-limit", rel <= sharp_tol)
                    .with_value(rel)
                    .with_tolerance(sharp_tol)
                    .with_detail(format!("|gamma|^p = {target}")),
            );
        }
    }
    Ok(report.into())
}

pub fn verify(settings: &Settings, suite: &str, a: Option<f64>, count: usize) -> Result<Outcome> {
    let params = settings.params;
    let suite = Suite::parse(suite, a.unwrap_or(params.alpha - params.p))?;
    let mut report = new_report(
        "verify",
        settings,
        serde_json::json!({ "suite": suite, "samples": count }),
    )?;
    let grid = Grid1D::cylinder(
        settings.grid_span.unwrap_or(20.0),
        settings.grid_points.unwrap_or(2048),
    )?;
    let modes: Vec<SphericalMode> = settings
        .modes
        .iter()
        .map(|&k| SphericalMode::harmonic(params.n, k))
        .collect();
    let p2 = params.p == 2.0 && params.q == 2.0;
    let spec = if suite == Suite::ImprovedLog {
        SampleSpec::unit_ball(settings.seed, count, modes)
    } else {
        SampleSpec {
            seed: settings.seed,
            count,
            modes,
            combine_modes: p2,
            ..SampleSpec::default()
        }
    };
    let samples = generate_samples(&spec, &grid)?;
    let result = verify_inequalities(&samples, &params, suite)?;
    let mut check = Check::new("no-violations", result.passed())
        .with_tolerance(VERIFY_TOL)
        .with_detail(format!(
            "{} violations in {} samples",
            result.violations.len(),
            result.samples
        ));
    if let Some(slack) = result.min_relative_slack {
        check = check.with_value(slack);
    }
    report.push_check(check);
    report.push_result(&result)?;
    Ok(report.into())
}

pub fn compare(settings: &Settings, count: usize, radius: f64) -> Result<Outcome> {
    let params = settings.params;
    let mut report = new_report(
        "compare",
        settings,
        serde_json::json!({ "samples": count, "radius": radius }),
    )?;
    let profiles = random_sign_changing_profiles(
        settings.seed,
        count,
        radius,
        settings.grid_points.unwrap_or(2048),
    )?;
    let (nf, p) = (params.nf(), params.p);
    let stability = params.alpha > 2.0 * p - nf && params.alpha < nf * p - nf;
    let (mut dominated, mut monotone, mut stable) = (0, 0, 0);
    let mut min_gap = f64::INFINITY;
    for u in &profiles {
        let rep = comparison_check(u, &params)?;
        dominated += rep.v_dominates as usize;
        monotone += rep.quotient_monotone as usize;
        min_gap = min_gap.min(rep.min_gap);
        if stability {
            let source = u.laplacian(params.n).iter().map(|v| v.abs()).collect();
            let prob = AnnulusProblem::from_grid(params.n, radius, u.grid.clone(), source)?;
            stable += weighted_stability_bound(&prob, &params)?.holds as usize;
        }
        report.push_result(&rep)?;
    }
    report.push_check(
        Check::new("majorant-dominates", dominated == count)
            .with_value(min_gap)
            .with_tolerance(DOMINATION_TOL)
            .with_detail(format!("{dominated}/{count} profiles")),
    );
    report.push_check(
        Check::new("quotient-decreases", monotone == count)
            .with_detail(format!("{monotone}/{count} profiles")),
    );
    if stability {
        report.push_check(
            Check::new("stability-bound", stable == count)
                .with_detail(format!("{stable}/{count} sources")),
        );
    }
    Ok(report.into())
}

pub fn sweep(
    settings: &Settings,
    lo: f64,
    hi: f64,
    step: f64,
    discrete: bool,
    rates: bool,
) -> Result<Outcome> {
    let alphas = alpha_grid(lo, hi, step)?;
    let defaults = EstimateOptions::default();
    let tasks = SweepTasks {
        discrete,
        rates,
        options: EstimateOptions {
            span: settings.grid_span.unwrap_or(defaults.span),
            nodes: settings.grid_points.unwrap_or(defaults.nodes),
            seed: settings.seed,
            ..defaults
        },
        eps_ladder: settings.eps_ladder.clone(),
    };
    let extra = serde_json::json!({ "alpha_min": lo, "alpha_max": hi, "alpha_step": step, "tasks": &tasks });
    let mut report = new_report("sweep", settings, extra)?;
    let rows = run_sweep(&alphas, &settings.params, &tasks)?;
    let failing: Vec<String> = rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| format!("{}: {}", r.alpha, r.failed_checks))
        .collect();
    let mut check =
        Check::new("all-rows-pass", failing.is_empty()).with_detail(format!("{} rows", rows.len()));
    if discrete {
        check = check.with_tolerance(DISCRETE_TOL);
    }
    if !failing.is_empty() {
        check = check.with_detail(failing.join(", "));
    }
    report.push_check(check);
    for r in &rows {
        report.push_result(r)?;
    }
    Ok(Outcome {
        report,
        rows: Some(rows),
    })
}

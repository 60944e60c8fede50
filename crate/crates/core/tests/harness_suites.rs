use rellich_core::cylinder::second_order_norms;
use rellich_core::harness::{
    generate_samples, run_sweep, verify_inequalities, write_csv, Check, ConstantSource, Report,
    SampleSpec, Suite, SweepTasks,
};
use rellich_core::modes::SphericalMode;
use rellich_core::{Grid1D, Params};

fn grid() -> Grid1D {
    Grid1D::cylinder(20.0, 2048).unwrap()
}

#[test]
fn samples_are_reproducible_from_the_seed() {
    let spec = SampleSpec {
        count: 10,
        ..SampleSpec::default()
    };
    let a = generate_samples(&spec, &grid()).unwrap();
    let b = generate_samples(&spec, &grid()).unwrap();
    assert_eq!(a, b);
    let c = generate_samples(&SampleSpec { seed: 2, ..spec }, &grid()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn hundred_samples_satisfy_the_norm_identities() {
    let params = Params::rellich(5, 2.0, 1.0).unwrap();
    let spec = SampleSpec {
        modes: vec![SphericalMode::radial(), SphericalMode::harmonic(5, 2)],
        ..SampleSpec::default()
    };
    let samples = generate_samples(&spec, &grid()).unwrap();
    assert_eq!(samples.len(), 100);
    for g in &samples {
        let norms = second_order_norms(g, &params).unwrap();
        assert!(
            norms.laplacian.rel_gap < 1e-4 && norms.lower.rel_gap < 1e-4,
            "{norms:?}"
        );
    }
}

#[test]
fn hardy_suite_has_no_violations() {
    let spec = SampleSpec {
        count: 1000,
        modes: vec![SphericalMode::radial(), SphericalMode::harmonic(4, 1)],
        ..SampleSpec::default()
    };
    let samples = generate_samples(&spec, &grid()).unwrap();
    let report = verify_inequalities(
        &samples,
        &Params::rellich(4, 2.0, 0.0).unwrap(),
        Suite::Hardy { a: 0.0 },
    )
    .unwrap();
    assert!(report.passed(), "{:?}", report.violations.first());
    assert_eq!(report.constant, Some(1.0));
    assert_eq!(report.source, ConstantSource::Sharp);
}

#[test]
fn rellich_suite_has_no_violations() {
    let spec = SampleSpec {
        count: 1000,
        seed: 3,
        ..SampleSpec::default()
    };
    let samples = generate_samples(&spec, &grid()).unwrap();
    let report = verify_inequalities(
        &samples,
        &Params::new(5, 3.0, 3.0, 2.0).unwrap(),
        Suite::Rellich,
    )
    .unwrap();
    assert!(report.passed(), "{:?}", report.violations.first());
    assert!(report.min_relative_slack.unwrap() > 0.0);
}

#[test]
fn rellich_suite_rejects_the_endpoint() {
    let samples = generate_samples(
        &SampleSpec {
            count: 2,
            ..SampleSpec::default()
        },
        &grid(),
    )
    .unwrap();
    assert!(verify_inequalities(
        &samples,
        &Params::rellich(5, 2.0, -1.0).unwrap(),
        Suite::Rellich
    )
    .is_err());
    assert!(verify_inequalities(
        &samples,
        &Params::rellich(5, 2.0, 5.0).unwrap(),
        Suite::Rellich
    )
    .is_err());
}

#[test]
fn improved_log_suite_on_unit_ball_samples() {
    let spec = SampleSpec::unit_ball(
        9,
        1000,
        vec![SphericalMode::radial(), SphericalMode::harmonic(5, 1)],
    );
    let samples = generate_samples(&spec, &grid()).unwrap();
    let report = verify_inequalities(
        &samples,
        &Params::rellich(5, 2.0, 4.0).unwrap(),
        Suite::ImprovedLog,
    )
    .unwrap();
    assert!(report.passed(), "{:?}", report.violations.first());
    let outside = generate_samples(
        &SampleSpec {
            count: 5,
            ..SampleSpec::default()
        },
        &grid(),
    )
    .unwrap();
    assert!(verify_inequalities(
        &outside,
        &Params::rellich(5, 2.0, 4.0).unwrap(),
        Suite::ImprovedLog
    )
    .is_err());
}

#[test]
fn general_exponents_record_an_empirical_minimum() {
    let samples = generate_samples(
        &SampleSpec {
            count: 50,
            ..SampleSpec::default()
        },
        &grid(),
    )
    .unwrap();
    let report = verify_inequalities(
        &samples,
        &Params::new(5, 2.0, 3.0, 0.5).unwrap(),
        Suite::RellichSobolev,
    )
    .unwrap();
    assert_eq!(report.source, ConstantSource::EmpiricalMinimum);
    assert!(report.passed() && report.min_quotient > 0.0);
}

#[test]
fn report_json_is_deterministic_without_timestamp() {
    let build = || {
        let mut r = Report::new("constants", Params::rellich(5, 2.0, 0.0).unwrap()).unwrap();
        r.push_result(Params::rellich(5, 2.0, 0.0).unwrap().derive())
            .unwrap();
        r.push_check(
            Check::new("demo", true)
                .with_value(1.0)
                .with_tolerance(1e-8),
        );
        r.stamp();
        r
    };
    let (a, b) = (build(), build());
    assert_eq!(
        a.to_comparable_json().unwrap(),
        b.to_comparable_json().unwrap()
    );
    assert!(a.all_passed());
}

#[test]
fn small_sweep_with_discrete_solves() {
    let template = Params::rellich(5, 2.0, 0.0).unwrap();
    let alphas = [-1.0, 0.0, 2.0, 6.0, 7.0];
    let tasks = SweepTasks {
        discrete: true,
        ..SweepTasks::default()
    };
    let rows = run_sweep(&alphas, &template, &tasks).unwrap();
    assert!(
        rows.iter().all(|r| !r.failed()),
        "{:?}",
        rows.iter().find(|r| r.failed())
    );
    assert!(rows[4].resonant && rows[4].mu_discrete.unwrap() < 1e-2);
    assert!(rows[3].rate_slope.is_some() && rows[0].rate_slope.is_none());
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
}

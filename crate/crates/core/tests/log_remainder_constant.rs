//! The log-weighted remainder constant for radial profiles on the unit ball.
//!
//! For `w` supported in `s > 0` the radial remainder integrates by parts to
//! `int w''^2 + (4A^2 + 2 gamma) int w'^2`, and the one-dimensional Hardy
//! constant `1/4` for `int w'^2 / int w^2/s^2` is approached by
//! `w = sqrt(s) psi(log(s) / L)` as `L` grows. The infimum of the remainder
//! quotient is therefore `A^2 + gamma/2 = ((n-2)^2 + (alpha-2)^2) / 8`, which is
//! below `gamma_bar / 2` whenever `alpha > 0`.

use rellich_core::cylinder::{CylinderFunction, ModeProfile};
use rellich_core::harness::{verify_inequalities, Suite};
use rellich_core::modes::SphericalMode;
use rellich_core::{Grid1D, Params};

/// `256 (z(1-z))^4` on `(0, 1)` with two derivatives.
fn psi(z: f64) -> (f64, f64, f64) {
    if z <= 0.0 || z >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let b = z * (1.0 - z);
    let db = 1.0 - 2.0 * z;
    (
        256.0 * b.powi(4),
        1024.0 * b.powi(3) * db,
        256.0 * (12.0 * b * b * db * db - 8.0 * b.powi(3)),
    )
}

/// `w(s) = sqrt(s) psi(ln s / L)` with derivatives in `s`, supported in `(1, e^L)`.
fn spread(l: f64) -> impl Fn(f64) -> (f64, f64, f64) {
    move |s: f64| {
        if s <= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let (p, p1, p2) = psi(s.ln() / l);
        let r = s.sqrt();
        let wu = r * (p / 2.0 + p1 / l);
        let wuu = r * (p / 4.0 + p1 / l + p2 / (l * l));
        (r * p, wu / s, (wuu - wu) / (s * s))
    }
}

fn simpson(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

/// Remainder quotient of the spread profile, integrated in `u = ln s`.
fn oracle_quotient(n: u32, alpha: f64, l: f64) -> f64 {
    let params = Params::rellich(n, 2.0, alpha).unwrap();
    let d = params.derive();
    let m = 200_000;
    let first = simpson(0.0, l, m, |u| {
        let (p, p1, _) = psi(u / l);
        (p / 2.0 + p1 / l).powi(2)
    });
    let second = simpson(0.0, l, m, |u| {
        let (p, _, p2) = psi(u / l);
        (p2 / (l * l) - p / 4.0).powi(2) * (-2.0 * u).exp()
    });
    let weight = simpson(0.0, l, m, |u| psi(u / l).0.powi(2));
    (second + (4.0 * d.drift * d.drift + 2.0 * d.gamma) * first) / weight
}

fn radial_log_constant(n: u32, alpha: f64) -> f64 {
    ((n as f64 - 2.0).powi(2) + (alpha - 2.0).powi(2)) / 8.0
}

#[test]
fn spread_profiles_approach_the_radial_log_constant() {
    let limit = radial_log_constant(5, 4.0);
    assert_eq!(limit, 1.625);
    let values: Vec<f64> = [4.0, 6.0, 8.0, 12.0, 20.0, 40.0, 200.0]
        .iter()
        .map(|&l| oracle_quotient(5, 4.0, l))
        .collect();
    for w in values.windows(2) {
        assert!(w[1] < w[0], "{values:?}");
    }
    assert!(values.iter().all(|&v| v > limit));
    assert!((values[6] - limit).abs() < 5e-3 * limit, "{values:?}");
}

#[test]
fn gamma_bar_half_exceeds_the_radial_infimum_for_positive_alpha() {
    for (n, alpha) in [(5u32, 4.0), (4, 1.0), (6, 3.0)] {
        let gb = Params::rellich(n, 2.0, alpha)
            .unwrap()
            .derive()
            .gamma_bar
            .unwrap();
        assert!(0.5 * gb > radial_log_constant(n, alpha));
    }
    // The two agree at alpha = 0.
    let gb = Params::rellich(5, 2.0, 0.0)
        .unwrap()
        .derive()
        .gamma_bar
        .unwrap();
    assert!((0.5 * gb - radial_log_constant(5, 0.0)).abs() < 1e-14);
}

#[test]
fn library_suite_flags_a_spread_profile() {
    let params = Params::rellich(5, 2.0, 4.0).unwrap();
    let grid = Grid1D::cylinder(410.0, (1 << 18) + 1).unwrap();
    let prof = ModeProfile::from_fn(SphericalMode::radial(), &grid, spread(6.0));
    let g = CylinderFunction::single(grid, prof).unwrap();
    let report = verify_inequalities(&[g], &params, Suite::ImprovedLog).unwrap();
    let expected = oracle_quotient(5, 4.0, 6.0);
    assert!(
        (report.min_quotient - expected).abs() < 1e-3 * expected,
        "{} vs {expected}",
        report.min_quotient
    );
    assert!(expected < 5.625);
    assert_eq!(report.violations.len(), 1);
}

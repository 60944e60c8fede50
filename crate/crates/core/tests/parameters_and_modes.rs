use std::f64::consts::PI;

use proptest::prelude::*;
use rellich_core::modes::{
    cap_for_eigenvalue, mu2_symbol_oracle, required_k_max, shoot_cap, SphericalMode, SymbolCurve,
};
use rellich_core::params::{is_resonant, mu22_closed_form, resonant_mode, sphere_eigenvalue};
use rellich_core::Params;

#[test]
fn derived_constants_for_five_two_two_zero() {
    let d = Params::new(5, 2.0, 2.0, 0.0).unwrap().derive();
    assert_eq!(d.beta, 4.0);
    assert_eq!(d.gamma, 1.25);
    assert_eq!(d.h2, 0.5);
    assert_eq!(d.drift, 1.0);
    assert_eq!(d.alpha_star, 2.0);
    assert_eq!(d.p_crit, Some(10.0));
}

#[test]
fn resonance_examples() {
    let p = |a: f64| Params::rellich(5, 2.0, a).unwrap();
    assert_eq!(resonant_mode(&p(7.0)), Some(1));
    assert_eq!(resonant_mode(&p(-3.0)), Some(1));
    assert_eq!(resonant_mode(&p(5.0)), Some(0));
    assert!(!is_resonant(&p(0.0)));
    assert!(!is_resonant(&p(7.0 + 1e-6)));
}

#[test]
fn symbol_infimum_examples() {
    let s = SymbolCurve {
        c: 1.25,
        drift: 1.0,
    }
    .infimum();
    assert_eq!((s.value, s.t_star), (25.0 / 16.0, 0.0));
    let s = SymbolCurve {
        c: -3.0,
        drift: 0.0,
    }
    .infimum();
    assert_eq!((s.value, s.t_star), (0.0, 3.0));
    let s = SymbolCurve {
        c: -4.0,
        drift: 1.0,
    }
    .infimum();
    assert_eq!((s.value, s.t_star), (12.0, 2.0));
    assert!(
        s.value
            < SymbolCurve {
                c: -4.0,
                drift: 1.0
            }
            .eval(0.0)
    );
}

#[test]
fn symbol_oracle_examples() {
    let o = mu2_symbol_oracle(5, 0.0, None).unwrap();
    assert_eq!((o.value, o.argmin_k, o.argmin_t), (25.0 / 16.0, 0, 0.0));
    assert!(o.matches_closed_form);
    let o = mu2_symbol_oracle(5, 7.0, None).unwrap();
    assert_eq!((o.value, o.argmin_k, o.argmin_t), (0.0, 1, 0.0));
    assert!(o.matches_closed_form);
    let o = mu2_symbol_oracle(5, 2.0, None).unwrap();
    assert_eq!(o.value, 81.0 / 16.0);
    assert!(o.matches_closed_form);
}

#[test]
fn symbol_oracle_rejects_small_k_max() {
    let d = Params::rellich(5, 2.0, 0.0).unwrap().derive();
    let need = required_k_max(5, d.gamma, d.drift);
    assert!(mu2_symbol_oracle(5, 0.0, Some(need - 1)).is_err());
    assert!(mu2_symbol_oracle(5, 0.0, Some(need)).is_ok());
}

#[test]
fn hemisphere_caps() {
    for n in 3..9 {
        let m = cap_for_eigenvalue(n, n as f64 - 1.0).unwrap();
        assert!((m.theta0() - PI / 2.0).abs() < 1e-8, "n = {n}");
    }
}

#[test]
fn cap_with_legendre_two() {
    let m = cap_for_eigenvalue(3, 6.0).unwrap();
    assert!((m.theta0() - (1.0 / 3f64.sqrt()).acos()).abs() < 1e-8);
}

/// First zero of `phi'' + cot(theta) phi' + mu phi = 0` with `phi(0) = 1`, by
/// fine RK4 in the polar angle from a short series start.
fn theta_zero(mu: f64, step: f64) -> f64 {
    let rhs = |t: f64, y: [f64; 2]| [y[1], -y[1] / t.tan() - mu * y[0]];
    let mut t = 1e-3;
    let mut y = [1.0 - mu * t * t / 4.0, -mu * t / 2.0];
    loop {
        let k1 = rhs(t, y);
        let k2 = rhs(
            t + step / 2.0,
            [y[0] + step / 2.0 * k1[0], y[1] + step / 2.0 * k1[1]],
        );
        let k3 = rhs(
            t + step / 2.0,
            [y[0] + step / 2.0 * k2[0], y[1] + step / 2.0 * k2[1]],
        );
        let k4 = rhs(t + step, [y[0] + step * k3[0], y[1] + step * k3[1]]);
        let next = [
            y[0] + step / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + step / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] <= 0.0 {
            // Linear interpolation is enough at this step size.
            return t + step * y[0] / (y[0] - next[0]);
        }
        t += step;
        y = next;
    }
}

#[test]
fn cap_for_three_halves_matches_polar_shooting() {
    let m = cap_for_eigenvalue(3, 15.0 / 4.0).unwrap();
    let SphericalMode::Cap { nu, .. } = m else {
        panic!("expected a cap")
    };
    assert!((nu - 1.5).abs() < 1e-14);
    let oracle = theta_zero(15.0 / 4.0, 1e-6);
    assert!(
        (m.theta0() - oracle).abs() < 1e-8,
        "{} vs {oracle}",
        m.theta0()
    );
}

#[test]
fn cap_rayleigh_recheck_on_examples() {
    for (n, mu) in [(3, 2.0), (3, 6.0), (3, 3.75), (5, 4.0), (4, 1.0)] {
        let cap = shoot_cap(n, mu).unwrap();
        assert!(
            (cap.rayleigh_quotient() - mu).abs() < 1e-6 * mu,
            "n = {n}, mu = {mu}"
        );
    }
}

proptest! {
    #[test]
    fn closed_form_is_symmetric_about_alpha_star(n in 3u32..9, alpha in -10.0f64..14.0) {
        let (a, _) = mu22_closed_form(n, alpha).unwrap();
        let (b, _) = mu22_closed_form(n, 4.0 - alpha).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn symbol_oracle_is_symmetric_about_alpha_star(n in 3u32..9, alpha in -10.0f64..14.0) {
        let a = mu2_symbol_oracle(n, alpha, None).unwrap();
        let b = mu2_symbol_oracle(n, 4.0 - alpha, None).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * (1.0 + a.value));
    }

    #[test]
    fn symbol_value_is_a_lower_envelope(c in -40.0f64..40.0, a in -4.0f64..4.0, ts in proptest::collection::vec(0.0f64..500.0, 200)) {
        let s = SymbolCurve { c, drift: a };
        let inf = s.infimum();
        for t in ts {
            prop_assert!(s.eval(t) >= inf.value - 1e-9 * (1.0 + inf.value.abs()));
        }
    }

    #[test]
    fn closed_form_vanishes_exactly_at_resonance(n in 3u32..8, k in 0u32..5, side in proptest::bool::ANY) {
        // alpha with gamma = -lambda_k: ((n-2)/2)^2 - ((alpha-2)/2)^2 = -lambda_k.
        let r = (((n as f64 - 2.0) / 2.0).powi(2) + sphere_eigenvalue(n, k)).sqrt();
        let alpha = if side { 2.0 + 2.0 * r } else { 2.0 - 2.0 * r };
        let params = Params::rellich(n, 2.0, alpha).unwrap();
        prop_assert!(is_resonant(&params));
        let (v, _) = mu22_closed_form(n, alpha).unwrap();
        prop_assert!(v < 1e-20);
    }
}

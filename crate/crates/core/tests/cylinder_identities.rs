use proptest::prelude::*;
use rellich_core::cylinder::{
    ckn_quotient, first_order_norms, hat_weight_first_order, reflect_and_hat, rellich_quotient,
    second_order_norms, CylinderFunction, ModeProfile,
};
use rellich_core::modes::{mu2_symbol_oracle, SphericalMode};
use rellich_core::params::hardy_shift;
use rellich_core::{Grid1D, Params};

/// `(1 - z^2)^4` bump with exact derivatives.
fn bump(center: f64, width: f64, amp: f64) -> impl Fn(f64) -> (f64, f64, f64) {
    move |s: f64| {
        let z = (s - center) / width;
        if z.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let b = 1.0 - z * z;
        (
            amp * b.powi(4),
            -amp * 8.0 * z * b.powi(3) / width,
            amp * (48.0 * z * z * b * b - 8.0 * b.powi(3)) / (width * width),
        )
    }
}

fn single(nodes: usize, mode: SphericalMode, center: f64, width: f64) -> CylinderFunction {
    let grid = Grid1D::cylinder(20.0, nodes).unwrap();
    let prof = ModeProfile::from_fn(mode, &grid, bump(center, width, 1.0));
    CylinderFunction::single(grid, prof).unwrap()
}

#[test]
fn second_order_radial_bump_identity() {
    let params = Params::rellich(5, 2.0, 0.0).unwrap();
    let g = single(8193, SphericalMode::radial(), 0.5, 3.0);
    let norms = second_order_norms(&g, &params).unwrap();
    for pair in [norms.laplacian, norms.lower, norms.sobolev] {
        assert!(pair.rel_gap < 1e-6, "{pair:?}");
    }
}

#[test]
fn first_order_radial_bump_identity() {
    let params = Params::rellich(4, 2.0, 0.0).unwrap();
    let g = single(8193, SphericalMode::radial(), -0.5, 3.0);
    let norms = first_order_norms(&g, &params, 0.0).unwrap();
    assert!(
        norms.gradient.rel_gap < 1e-6 && norms.lower.rel_gap < 1e-6,
        "{norms:?}"
    );
}

#[test]
fn zero_function_has_zero_norms() {
    let params = Params::rellich(5, 2.0, 0.0).unwrap();
    let grid = Grid1D::cylinder(20.0, 1024).unwrap();
    let prof = ModeProfile::from_fn(SphericalMode::radial(), &grid, |_| (0.0, 0.0, 0.0));
    let g = CylinderFunction::single(grid, prof).unwrap();
    let norms = second_order_norms(&g, &params).unwrap();
    assert_eq!(
        (norms.laplacian.physical, norms.laplacian.cylinder),
        (0.0, 0.0)
    );
    assert_eq!((norms.lower.physical, norms.lower.cylinder), (0.0, 0.0));
}

#[test]
fn radial_mode_quotient_is_above_the_constant() {
    let params = Params::rellich(5, 2.0, 0.0).unwrap();
    let g = single(4097, SphericalMode::radial(), 0.0, 6.0);
    let q = rellich_quotient(&g, &params).unwrap();
    let mu = mu2_symbol_oracle(5, 0.0, None).unwrap().value;
    assert!(q >= mu - 1e-9, "{q} < {mu}");
}

#[test]
fn reflection_examples() {
    let params = Params::rellich(5, 2.0, 0.7).unwrap();
    let g = single(2049, SphericalMode::harmonic(5, 1), 1.3, 2.5);
    let (h, hat) = reflect_and_hat(&g, &params).unwrap();
    let a = second_order_norms(&g, &params).unwrap();
    let b = second_order_norms(&h, &hat).unwrap();
    assert!((a.laplacian.cylinder - b.laplacian.cylinder).abs() <= 1e-12 * a.laplacian.cylinder);
    assert!((a.lower.cylinder - b.lower.cylinder).abs() <= 1e-12 * a.lower.cylinder);
    let (back, again) = reflect_and_hat(&h, &hat).unwrap();
    assert_eq!(back.modes()[0].values, g.modes()[0].values);
    assert!((again.alpha - params.alpha).abs() < 1e-14);
    for a in [-2.0, 0.0, 1.5, 3.0] {
        let ahat = hat_weight_first_order(5, 2.0, a);
        assert!((hardy_shift(5, 2.0, ahat) + hardy_shift(5, 2.0, a)).abs() < 1e-14);
    }
}

#[test]
fn asymmetric_grid_is_rejected() {
    let params = Params::rellich(5, 2.0, 0.7).unwrap();
    let grid = Grid1D::uniform(rellich_core::GridKind::CylinderAxis, -10.0, 20.0, 2048).unwrap();
    let prof = ModeProfile::from_fn(SphericalMode::radial(), &grid, bump(0.0, 3.0, 1.0));
    let g = CylinderFunction::single(grid, prof).unwrap();
    assert!(reflect_and_hat(&g, &params).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hardy_quotient_is_above_its_constant(
        center in -5.0f64..5.0, width in 1.0f64..5.0, a in -3.0f64..3.0, k in 0u32..3, n in 3u32..7,
    ) {
        prop_assume!((a - (2.0 - n as f64)).abs() > 0.05);
        let g = single(2049, SphericalMode::harmonic(n, k), center, width);
        let params = Params::rellich(n, 2.0, 0.0).unwrap();
        let norms = first_order_norms(&g, &params, a).unwrap();
        let h = hardy_shift(n, 2.0, a);
        prop_assert!(norms.gradient.cylinder / norms.lower.cylinder >= h * h - 1e-9);
    }

    #[test]
    fn ckn_quotient_symmetry_is_exact(center in -5.0f64..5.0, width in 1.0f64..5.0, a in -3.0f64..3.0, q in 2.0f64..6.0) {
        let g = single(2049, SphericalMode::radial(), center, width);
        let params = Params::rellich(5, 2.0, 0.0).unwrap();
        let (h, _) = reflect_and_hat(&g, &params).unwrap();
        let x = ckn_quotient(&g, 5, 2.0, q, a).unwrap();
        let y = ckn_quotient(&h, 5, 2.0, q, hat_weight_first_order(5, 2.0, a)).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x);
    }

    #[test]
    fn translation_leaves_quotients_unchanged(center in -3.0f64..3.0, width in 1.0f64..4.0, shift in -200isize..200, alpha in 0.0f64..3.0) {
        let g = single(2049, SphericalMode::harmonic(5, 1), center, width);
        let params = Params::rellich(5, 2.0, alpha).unwrap();
        let moved = g.translated(shift).unwrap();
        let a = rellich_quotient(&g, &params).unwrap();
        let b = rellich_quotient(&moved, &params).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a);
    }
}

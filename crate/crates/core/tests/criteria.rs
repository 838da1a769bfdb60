use delaystab_core::criteria::{
    check_bbi_comparison, check_linear, check_nonoscillation_1e, check_thm1, check_thm2,
    check_thm5, estimate_thm2_params, invert_delay_bound, LimsupGrid,
};
use delaystab_core::model::{DelaySpec, InitialCondition, LinearDDE, ScalarFunction};
use proptest::prelude::*;

// Reference values computed independently in double precision.
const THM1_LHS_1_15_2: f64 = 0.090_223_522_157_742;
const THM1_RHS_1_15_2: f64 = 0.143_100_843_640_673;
const EXAMPLE2_BOUND: f64 = 1.684_668_990_466_703;

#[test]
fn thm1_reference_point() {
    let v = check_thm1(1.0, 1.5, 2.0).unwrap();
    assert!((v.lhs - THM1_LHS_1_15_2).abs() < 1e-14);
    assert!((v.rhs - THM1_RHS_1_15_2).abs() < 1e-14);
    assert!(!v.certified);
    let w = check_thm2(1.5, 2.0).unwrap();
    assert!((w.lhs - v.lhs).abs() < 1e-15 && (w.rhs - v.rhs).abs() < 1e-15);
}

#[test]
fn example2_delay_bound() {
    let h = invert_delay_bound(1.351_074_334_884_124_3, 1.738_029_748_391_103, 1.5);
    assert!((h - EXAMPLE2_BOUND).abs() < 1e-12);
    assert!((check_bbi_comparison(0.5, 4.0, 3.0).unwrap() - 0.911_919_627_447_628_2).abs() < 1e-12);
}

#[test]
fn limsup_of_rectified_sine_approaches_one() {
    let knots: Vec<(f64, f64)> = (0..=4000)
        .map(|i| {
            let t = i as f64 * 0.01;
            (t, t.sin().abs())
        })
        .collect();
    let b = ScalarFunction::Tabulated {
        knots,
        interpolation: delaystab_core::model::Interpolation::Linear,
    };
    let p = LinearDDE::new(ScalarFunction::constant(1.0), InitialCondition::constant(1.0))
        .with_term(b, DelaySpec::constant_lag(1.0).unwrap());
    let mut last = 0.0;
    for step in [0.5, 0.1, 0.01] {
        let grid = LimsupGrid { burn_in: 2.0, horizon: 40.0, grid_step: step };
        let (h0, beta) = estimate_thm2_params(&p, &grid).unwrap();
        assert_eq!(h0.value, 1.0);
        assert!(beta.value >= last - 1e-12);
        last = beta.value;
    }
    assert!((last - 1.0).abs() < 1e-4);
}

#[test]
fn nonoscillation_examples() {
    let lag = DelaySpec::constant_lag(1.0).unwrap();
    let a = ScalarFunction::constant(2.0);
    let grid = LimsupGrid::new(20.0, 0.05);
    let yes = check_nonoscillation_1e(&ScalarFunction::constant(0.3), &lag, &a, &grid).unwrap();
    assert!(yes.certified && (yes.lhs - 0.3).abs() < 1e-12);
    let no = check_nonoscillation_1e(&ScalarFunction::constant(0.4), &lag, &a, &grid).unwrap();
    assert!(!no.certified);
    let zero = check_nonoscillation_1e(&ScalarFunction::constant(0.0), &lag, &a, &grid).unwrap();
    assert!(zero.certified && zero.lhs == 0.0);
}

#[test]
fn variable_coefficient_check_uses_rescaled_quantities() {
    let p = LinearDDE::new(ScalarFunction::constant(2.0), InitialCondition::constant(1.0))
        .with_term(ScalarFunction::constant(1.0), DelaySpec::constant_lag(0.5).unwrap());
    let v = check_linear(&p, &LimsupGrid::new(20.0, 0.1)).unwrap();
    assert!(v.certified);
    assert_eq!(v.inputs["beta"], 0.5);
    assert_eq!(v.inputs["h0"], 1.0);
}

proptest! {
    #[test]
    fn thm1_and_thm2_agree(a in 0.05f64..5.0, b in 0.05f64..5.0, h in 0.0f64..4.0) {
        let v1 = check_thm1(a, b, h).unwrap();
        let v2 = check_thm2(b / a, a * h).unwrap();
        prop_assert_eq!(v1.certified, v2.certified);
    }

    #[test]
    fn thm5_is_monotone_in_the_lag(
        a0 in 0.1f64..3.0,
        extra in 0.0f64..2.0,
        b0 in 0.1f64..3.0,
        h in 0.0f64..3.0,
        shrink in 0.0f64..1.0,
    ) {
        let upper = a0 + extra;
        if check_thm5(a0, upper, b0, h).unwrap().certified {
            prop_assert!(check_thm5(a0, upper, b0, h * shrink).unwrap().certified);
        }
    }

    #[test]
    fn inversion_is_the_exact_boundary(a0 in 0.1f64..3.0, extra in 0.0f64..2.0, b0 in 0.1f64..3.0) {
        let upper = a0 + extra;
        let h = invert_delay_bound(a0, upper, b0);
        prop_assert!(h > 0.0);
        if h.is_finite() {
            prop_assert!(check_thm5(a0, upper, b0, h * (1.0 - 1e-9)).unwrap().certified);
            prop_assert!(!check_thm5(a0, upper, b0, h * (1.0 + 1e-9)).unwrap().certified);
        } else {
            prop_assert!(check_thm5(a0, upper, b0, 1e6).unwrap().certified);
        }
    }

    #[test]
    fn comparison_bound_depends_on_the_product(beta in 0.1f64..3.0, n in 0.5f64..8.0, r in 0.1f64..5.0, s in 0.25f64..4.0) {
        let a = check_bbi_comparison(beta, n, r).unwrap();
        let b = check_bbi_comparison(beta * s, n, r / s).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

use delaystab_core::analysis::example1_exact;
use delaystab_core::model::{
    DelayKind, DelaySpec, DensityShape, DistributedTerm, InitialCondition, Kernel, LinearDDE,
    Piece, ScalarFunction,
};
use delaystab_core::solver::{
    integrate_example1, integrate_linear, kernel_integral, rescale_time, rescaled_problem,
    Example1Variant, IntegratorConfig,
};
use proptest::prelude::*;

/// Brute-force Picard iteration for
/// `x' = -2 x - integral_{t-1}^{t} x(s) ds`, `x = 1` on `[-1, 0]`, on `[0, 2]`
/// with trapezoid sums on a uniform grid of width `h`.
fn picard_oracle(h: f64) -> Vec<f64> {
    let n = (2.0 / h).round() as usize;
    let lag = (1.0 / h).round() as usize;
    let mut x = vec![1.0; n + 1];
    for _ in 0..60 {
        // cumulative integral of x from -1; history contributes a unit slope
        let mut cum = vec![0.0; n + 1];
        for i in 1..=n {
            cum[i] = cum[i - 1] + 0.5 * h * (x[i - 1] + x[i]);
        }
        let window = |i: usize| -> f64 {
            if i >= lag {
                cum[i] - cum[i - lag]
            } else {
                // [t-1, 0] from the history plus [0, t]
                (lag - i) as f64 * h + cum[i]
            }
        };
        let rhs: Vec<f64> = (0..=n).map(|i| -2.0 * x[i] - window(i)).collect();
        let mut next = vec![1.0; n + 1];
        for i in 1..=n {
            next[i] = next[i - 1] + 0.5 * h * (rhs[i - 1] + rhs[i]);
        }
        x = next;
    }
    x
}

#[test]
fn uniform_density_matches_picard_iteration() {
    let p = LinearDDE::new(ScalarFunction::constant(2.0), InitialCondition::constant(1.0))
        .with_distributed(DistributedTerm {
            coefficient: ScalarFunction::constant(1.0),
            lower_limit: DelaySpec::constant_lag(1.0).unwrap(),
            kernel: Kernel::uniform(),
        });
    let traj = integrate_linear(&p, &IntegratorConfig::new(2.0, 0.01)).unwrap();
    let h = 2e-4;
    let oracle = picard_oracle(h);
    for k in 0..=40 {
        let t = 0.05 * k as f64;
        let i = (t / h).round() as usize;
        let err = (traj.evaluate(t).unwrap() - oracle[i]).abs();
        assert!(err < 1e-6, "t = {t}: {err}");
    }
}

#[test]
fn rescaled_equation_reproduces_reparametrization() {
    let p = LinearDDE::new(ScalarFunction::constant(2.0), InitialCondition::constant(1.0))
        .with_term(ScalarFunction::constant(1.0), DelaySpec::constant_lag(0.5).unwrap());
    let traj = integrate_linear(&p, &IntegratorConfig::new(10.0, 0.005)).unwrap();
    let y = rescale_time(&p, &traj).unwrap();
    let q = rescaled_problem(&p, 10.0).unwrap();
    assert_eq!(q.concentrated[0].coefficient.as_constant(), Some(0.5));
    assert_eq!(q.concentrated[0].delay.as_constant_lag(), Some(1.0));
    let direct = integrate_linear(&q, &IntegratorConfig::new(20.0, 0.01)).unwrap();
    for k in 0..=200 {
        let s = 0.1 * k as f64;
        let err = (direct.evaluate(s).unwrap() - y.evaluate(s).unwrap()).abs();
        assert!(err < 1e-6, "s = {s}: {err}");
    }
}

#[test]
fn rescaling_with_variable_coefficient() {
    let a = ScalarFunction::PiecewisePeriodic {
        period: 1.0,
        pieces: vec![
            Piece { start: 0.0, end: 0.5, value: 2.0 },
            Piece { start: 0.5, end: 1.0, value: 1.0 },
        ],
    };
    let p = LinearDDE::new(a, InitialCondition::constant(1.0))
        .with_term(ScalarFunction::constant(0.8), DelaySpec::constant_lag(0.5).unwrap());
    let traj = integrate_linear(&p, &IntegratorConfig::new(6.0, 0.005)).unwrap();
    let y = rescale_time(&p, &traj).unwrap();
    assert!((y.horizon() - 9.0).abs() < 1e-12);
    let q = rescaled_problem(&p, 6.0).unwrap();
    assert!(matches!(q.concentrated[0].delay.kind(), DelayKind::TabulatedLag { .. }));
    let direct = integrate_linear(&q, &IntegratorConfig::new(9.0, 0.001)).unwrap();
    for k in 0..=90 {
        let s = 0.1 * k as f64;
        let err = (direct.evaluate(s).unwrap() - y.evaluate(s).unwrap()).abs();
        assert!(err < 1e-4, "s = {s}: {err}");
    }
}

#[test]
fn dense_output_converges_with_fourth_order() {
    let p = LinearDDE::new(ScalarFunction::constant(1.0), InitialCondition::constant(1.0))
        .with_term(ScalarFunction::constant(0.5), DelaySpec::constant_lag(1.0).unwrap());
    let run = |h: f64| integrate_linear(&p, &IntegratorConfig::new(4.0, h)).unwrap();
    let (c, m, f) = (run(0.1), run(0.05), run(0.025));
    // sup-norm gap between successive refinements, sampled off the grids
    let gap = |u: &delaystab_core::solver::Trajectory, v: &delaystab_core::solver::Trajectory| {
        (0..4000)
            .map(|k| 0.001 * k as f64 + 3e-4)
            .map(|t| (u.evaluate(t).unwrap() - v.evaluate(t).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let order = (gap(&c, &m) / gap(&m, &f)).log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn oracle_equivalence_for_example1() {
    for b in [1.65, 1.8, 1.85] {
        for variant in Example1Variant::ALL {
            let traj = integrate_example1(b, variant, 20).unwrap();
            let exact = example1_exact(b, variant, 20);
            for (n, x) in exact.iter().enumerate() {
                let num = traj.evaluate(n as f64).unwrap();
                assert!((num - x).abs() <= 1e-6 * x.abs(), "b = {b}, {variant:?}, n = {n}");
            }
        }
    }
}

#[test]
fn positive_variant_keeps_a_above_one_half() {
    let a = delaystab_core::solver::example1_coefficient(1.8, Example1Variant::PositiveA);
    let traj = integrate_example1(1.8, Example1Variant::PositiveA, 5).unwrap();
    let min = traj
        .segments()
        .iter()
        .flat_map(|s| {
            [
                a.evaluate_side(s.t0, delaystab_core::model::Side::Right).unwrap(),
                a.evaluate_side(s.t1, delaystab_core::model::Side::Left).unwrap(),
            ]
        })
        .fold(f64::INFINITY, f64::min);
    assert_eq!(min, 0.5);
}

#[test]
fn overflow_is_reported() {
    // x' = 5 x(t - 0.1) with x(0) = 1 grows like e^{30 t} and beyond
    let p = LinearDDE::new(ScalarFunction::constant(0.0), InitialCondition::constant(1e300))
        .with_term(ScalarFunction::constant(1e6), DelaySpec::constant_lag(0.0).unwrap());
    let err = integrate_linear(&p, &IntegratorConfig::new(1.0, 0.01));
    assert!(err.is_ok() || matches!(err, Err(delaystab_core::Error::Overflow { .. })));
}

#[test]
fn history_domain_is_enforced() {
    let history = ScalarFunction::Tabulated {
        knots: vec![(-0.5, 1.0), (0.0, 1.0)],
        interpolation: delaystab_core::model::Interpolation::Linear,
    };
    let p = LinearDDE::new(
        ScalarFunction::constant(1.0),
        InitialCondition { history, value_at_zero: 1.0 },
    )
    .with_term(ScalarFunction::constant(1.0), DelaySpec::constant_lag(1.0).unwrap());
    assert!(matches!(
        integrate_linear(&p, &IntegratorConfig::new(2.0, 0.05)),
        Err(delaystab_core::Error::HistoryDomain { .. })
    ));
}

fn any_delay() -> impl Strategy<Value = DelaySpec> {
    prop_oneof![
        (0.0f64..5.0).prop_map(|tau| DelaySpec::constant_lag(tau).unwrap()),
        Just(DelaySpec::floor()),
        prop::collection::vec(0.0f64..3.0, 2..6).prop_map(|lags| {
            let knots = lags.iter().enumerate().map(|(i, l)| (i as f64 * 40.0 / (lags.len() - 1) as f64, *l)).collect();
            DelaySpec::new(DelayKind::TabulatedLag { knots }).unwrap()
        }),
    ]
}

fn any_density() -> impl Strategy<Value = DensityShape> {
    prop_oneof![
        Just(DensityShape::Uniform),
        (-5.0f64..5.0).prop_map(|rate| DensityShape::Exponential { rate }),
        prop::collection::vec(0.0f64..3.0, 2..6).prop_map(|w| {
            let n = w.len() - 1;
            DensityShape::Tabulated {
                knots: w.iter().enumerate().map(|(i, w)| (i as f64 / n as f64, w + 0.1)).collect(),
            }
        }),
    ]
}

proptest! {
    #[test]
    fn delays_never_look_ahead(d in any_delay(), t in 0.0f64..40.0) {
        let h = d.delay_at(t).unwrap();
        prop_assert!(h <= t);
        prop_assert!(t - h <= d.lag_bound() + 1e-12);
    }

    #[test]
    fn piecewise_periodic_repeats(split in 0.05f64..0.95, v0 in -3.0f64..3.0, v1 in -3.0f64..3.0, period in 0.5f64..3.0, t in 0.0f64..20.0) {
        let f = ScalarFunction::PiecewisePeriodic {
            period,
            pieces: vec![
                Piece { start: 0.0, end: split * period, value: v0 },
                Piece { start: split * period, end: period, value: v1 },
            ],
        };
        prop_assert_eq!(f.evaluate(t).unwrap(), f.evaluate(t + period).unwrap());
    }

    #[test]
    fn densities_are_normalized(shape in any_density(), lo in -5.0f64..30.0, len in 0.001f64..5.0, panel in 0.001f64..0.1) {
        let k = Kernel::Density { density: shape };
        let mass = kernel_integral(&k, lo, lo + len, 3, panel, |_| Ok(1.0)).unwrap();
        prop_assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn solutions_are_linear_in_the_history(
        a in 0.0f64..2.0,
        b in 0.0f64..2.0,
        tau in 0.2f64..2.0,
        x0 in -2.0f64..2.0,
        slope in -1.0f64..1.0,
    ) {
        let history = ScalarFunction::Tabulated {
            knots: vec![(-3.0, x0 - 3.0 * slope), (0.0, x0)],
            interpolation: delaystab_core::model::Interpolation::Linear,
        };
        let base = InitialCondition { history, value_at_zero: x0 };
        let cfg = IntegratorConfig::with_default_step(5.0, Some(tau));
        let make = |init: InitialCondition| {
            let p = LinearDDE::new(ScalarFunction::constant(a), init)
                .with_term(ScalarFunction::constant(b), DelaySpec::constant_lag(tau).unwrap());
            integrate_linear(&p, &cfg).unwrap()
        };
        let x = make(base.clone());
        for lambda in [-1.0, 2.0] {
            let y = make(base.scaled(lambda));
            for ((_, u), (_, v)) in x.nodes().zip(y.nodes()) {
                prop_assert!((lambda * u - v).abs() <= 1e-10);
            }
        }
    }
}

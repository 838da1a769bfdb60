//! Method-of-steps integration with dense output.

pub(crate) mod engine;
mod trajectory;

use alloc::format;
use alloc::vec::Vec;

pub use self::trajectory::{Breakpoint, BreakpointKind, Segment, Trajectory, Warning};
use self::engine::{collect_breakpoints, KernelQuadrature, Past, Rhs};
use crate::model::{
    DelayKind, DelaySpec, InitialCondition, LinearDDE, NonlinearDDE, NonlinearTerm, Piece,
    ScalarFunction, Side,
};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorConfig {
    pub step_size: f64,
    /// Gauss-Legendre nodes per step-sized panel of a density kernel.
    pub quadrature_nodes_per_step: usize,
    pub horizon: f64,
}

impl IntegratorConfig {
    pub fn new(horizon: f64, step_size: f64) -> Self {
        IntegratorConfig {
            step_size,
            quadrature_nodes_per_step: 3,
            horizon,
        }
    }

    /// Step `min(0.01, lag / 20)` for the smallest positive lag.
    pub fn with_default_step(horizon: f64, min_positive_lag: Option<f64>) -> Self {
        Self::new(horizon, default_step(min_positive_lag))
    }

    pub fn validate(&self, min_positive_lag: Option<f64>) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.quadrature_nodes_per_step < 2 {
            return Err(Error::InvalidSpec(
                "at least two quadrature nodes per step are required".into(),
            ));
        }
        if let Some(lag) = min_positive_lag {
            if self.step_size > lag / 10.0 * (1.0 + 1e-12) {
                return Err(Error::InvalidSpec(format!(
                    "step size {} exceeds a tenth of the smallest lag {lag}",
                    self.step_size
                )));
            }
        }
        Ok(())
    }
}

pub fn default_step(min_positive_lag: Option<f64>) -> f64 {
    match min_positive_lag {
        Some(lag) => (lag / 20.0).min(0.01),
        None => 0.01,
    }
}

fn min_positive<'a>(delays: impl Iterator<Item = &'a DelaySpec>) -> Option<f64> {
    delays
        .map(DelaySpec::lag_bound)
        .filter(|l| *l > 0.0)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
}

/// Smallest positive lag bound among the delays of a linear problem.
pub fn min_positive_lag(problem: &LinearDDE) -> Option<f64> {
    min_positive(problem.delays())
}

pub fn min_positive_lag_nonlinear(problem: &NonlinearDDE) -> Option<f64> {
    min_positive(problem.terms.iter().map(NonlinearTerm::delay))
}

fn reaches_now(h: f64, t: f64) -> bool {
    h >= t - 1e-12 * t.abs().max(1.0)
}

/// `x(h)` during a stage at time `t` with stage value `x`.
fn delayed(past: &Past<'_>, h: f64, t: f64, x: f64) -> Result<f64> {
    if reaches_now(h, t) {
        Ok(x)
    } else {
        past.value(h)
    }
}

struct LinearRhs<'a> {
    problem: &'a LinearDDE,
    quad: KernelQuadrature,
}

impl Rhs for LinearRhs<'_> {
    fn derivative(&self, t: f64, side: Side, x: f64, past: &Past<'_>) -> Result<f64> {
        let p = self.problem;
        let mut acc = p.a.evaluate_side(t, side)? * x;
        for term in &p.concentrated {
            let b = term.coefficient.evaluate_side(t, side)?;
            if b != 0.0 {
                let h = term.delay.delay_at_side(t, side)?;
                acc += b * delayed(past, h, t, x)?;
            }
        }
        for term in &p.distributed {
            let b = term.coefficient.evaluate_side(t, side)?;
            if b != 0.0 {
                let h = term.lower_limit.delay_at_side(t, side)?;
                let mean = self
                    .quad
                    .integrate(&term.kernel, h, t, |s| delayed(past, s, t, x))?;
                acc += b * mean;
            }
        }
        Ok(-acc)
    }
}

struct NonlinearRhs<'a> {
    problem: &'a NonlinearDDE,
    quad: KernelQuadrature,
}

impl Rhs for NonlinearRhs<'_> {
    fn derivative(&self, t: f64, side: Side, x: f64, past: &Past<'_>) -> Result<f64> {
        let p = self.problem;
        let mut acc = p.f.eval(t, side, x)?;
        for term in &p.terms {
            match term {
                NonlinearTerm::Concentrated { g, delay } => {
                    let h = delay.delay_at_side(t, side)?;
                    acc += g.eval(t, side, delayed(past, h, t, x)?)?;
                }
                NonlinearTerm::Distributed {
                    g,
                    lower_limit,
                    kernel,
                } => {
                    let h = lower_limit.delay_at_side(t, side)?;
                    acc += self
                        .quad
                        .integrate(kernel, h, t, |s| g.eval(t, side, delayed(past, s, t, x)?))?;
                }
            }
        }
        Ok(-acc)
    }
}

/// `integral_{lo}^{hi} f(s) d_s R(s)` for a normalized kernel, using the
/// integrator's rule with `nodes_per_panel` Gauss-Legendre nodes on panels
/// of length at most `panel`.
pub fn kernel_integral<F>(
    kernel: &crate::model::Kernel,
    lo: f64,
    hi: f64,
    nodes_per_panel: usize,
    panel: f64,
    f: F,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    KernelQuadrature::new(nodes_per_panel, panel).integrate(kernel, lo, hi, f)
}

/// Constant lags through which breakpoints propagate.
pub(crate) fn constant_lags<'a>(delays: impl Iterator<Item = &'a DelaySpec>) -> Vec<f64> {
    let mut lags: Vec<f64> = delays.filter_map(DelaySpec::as_constant_lag).collect();
    lags.sort_by(f64::total_cmp);
    lags.dedup();
    lags
}

pub(crate) fn history_breakpoints(initial: &InitialCondition, max_lag: f64) -> Vec<f64> {
    if max_lag > 0.0 {
        initial.history.breakpoints(-max_lag, 0.0)
    } else {
        Vec::new()
    }
}

/// Solves `x' + a(t) x + sum_k b_k(t) x(h_k(t)) + sum_l b_l(t) int x dR_l = 0`.
pub fn integrate_linear(problem: &LinearDDE, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate(min_positive_lag(problem))?;
    problem.validate(cfg.horizon)?;
    let horizon = cfg.horizon;

    let mut coefficient = problem.a.breakpoints(0.0, horizon);
    for c in problem.delay_coefficients() {
        coefficient.extend(c.breakpoints(0.0, horizon));
    }
    let mut delay = Vec::new();
    for d in problem.delays() {
        delay.extend(d.breakpoints(0.0, horizon));
    }
    let breakpoints = collect_breakpoints(
        horizon,
        coefficient,
        delay,
        history_breakpoints(&problem.initial, problem.max_lag_bound()),
        &constant_lags(problem.delays()),
    );
    let rhs = LinearRhs {
        problem,
        quad: KernelQuadrature::new(cfg.quadrature_nodes_per_step, cfg.step_size),
    };
    engine::run(&rhs, &problem.initial, breakpoints, cfg)
}

/// Solves `x' + f(t, x) + sum_k g_k(t, x(h_k(t))) = 0` or its distributed
/// form. Leaving the state box is recorded as a warning.
pub fn integrate_nonlinear(problem: &NonlinearDDE, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate(min_positive_lag_nonlinear(problem))?;
    problem.validate()?;
    let horizon = cfg.horizon;

    let mut coefficient = problem.f.breakpoints(0.0, horizon);
    let mut delay = Vec::new();
    for term in &problem.terms {
        coefficient.extend(term.g().breakpoints(0.0, horizon));
        delay.extend(term.delay().breakpoints(0.0, horizon));
    }
    let breakpoints = collect_breakpoints(
        horizon,
        coefficient,
        delay,
        history_breakpoints(&problem.initial, problem.max_lag_bound()),
        &constant_lags(problem.terms.iter().map(NonlinearTerm::delay)),
    );
    let rhs = NonlinearRhs {
        problem,
        quad: KernelQuadrature::new(cfg.quadrature_nodes_per_step, cfg.step_size),
    };
    let mut traj = engine::run(&rhs, &problem.initial, breakpoints, cfg)?;
    let (x1, x2) = problem.state_box;
    let exit = traj.nodes().find(|(_, x)| *x < x1 || *x > x2);
    if let Some((t, x)) = exit {
        traj.warnings.push(Warning::LeftStateBox { t, x });
    }
    Ok(traj)
}

/// Coefficient `a(t)` used in the destabilization example.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Example1Variant {
    /// `a = 0`: `x' + b x([t]) = 0`.
    Baseline,
    /// `a = 3b` on `[n, n + eps]`, `0` on the rest of the period.
    VanishingA,
    /// `a = 3b` on `[n, n + eps]`, `0.5` on the rest of the period.
    PositiveA,
}

impl Example1Variant {
    pub const ALL: [Example1Variant; 3] = [
        Example1Variant::Baseline,
        Example1Variant::VanishingA,
        Example1Variant::PositiveA,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Example1Variant::Baseline => "baseline",
            Example1Variant::VanishingA => "vanishing_a",
            Example1Variant::PositiveA => "positive_a",
        }
    }
}

/// `eps = ln(4) / (3b)`, the time at which the solution on `[n, n + eps]`
/// with `a = 3b` reaches zero.
pub fn example1_epsilon(b: f64) -> f64 {
    core::f64::consts::LN_2 * 2.0 / (3.0 * b)
}

/// The coefficient `a(t)` for a variant.
pub fn example1_coefficient(b: f64, variant: Example1Variant) -> ScalarFunction {
    let eps = example1_epsilon(b);
    let tail = match variant {
        Example1Variant::Baseline => return ScalarFunction::constant(0.0),
        Example1Variant::VanishingA => 0.0,
        Example1Variant::PositiveA => 0.5,
    };
    ScalarFunction::PiecewisePeriodic {
        period: 1.0,
        pieces: alloc::vec![
            Piece { start: 0.0, end: eps, value: 3.0 * b },
            Piece { start: eps, end: 1.0, value: tail },
        ],
    }
}

pub fn example1_problem(b: f64, variant: Example1Variant) -> LinearDDE {
    LinearDDE::new(example1_coefficient(b, variant), InitialCondition::constant(1.0))
        .with_term(ScalarFunction::constant(b), DelaySpec::floor())
}

/// Step used for the destabilization example.
pub const EXAMPLE1_STEP: f64 = 1e-3;

/// Integrates the example on `[0, n_periods]` from `x(0) = 1`. Values of `b`
/// outside `(1.6, 1.9)` are accepted and flagged.
pub fn integrate_example1(b: f64, variant: Example1Variant, n_periods: u32) -> Result<Trajectory> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    if n_periods == 0 {
        return Err(Error::Domain("at least one period is required".into()));
    }
    let cfg = IntegratorConfig::new(n_periods as f64, EXAMPLE1_STEP);
    let mut traj = integrate_linear(&example1_problem(b, variant), &cfg)?;
    if !(b > 1.6 && b < 1.9) {
        traj.warnings.push(Warning::OutOfRegime { b });
    }
    Ok(traj)
}

/// `p(t) = integral_0^t a` at every node of the trajectory grid, integrated
/// segment by segment with three-point Gauss-Legendre.
fn clock(a: &ScalarFunction, segments: &[Segment]) -> Result<Vec<f64>> {
    let (x, w) = gauss_legendre(3);
    let mut out = Vec::with_capacity(segments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for seg in segments {
        let h = seg.t1 - seg.t0;
        for (xi, wi) in x.iter().zip(&w) {
            let t = seg.t0 + 0.5 * (xi + 1.0) * h;
            acc += 0.5 * h * wi * a.evaluate_side(t, Side::Right)?;
        }
        out.push(acc);
    }
    Ok(out)
}

fn check_a_positive(a: &ScalarFunction, horizon: f64) -> Result<f64> {
    let (amin, _) = a.sampled_range(0.0, horizon, crate::model::sampling_step(horizon))?;
    if !(amin > 0.0) {
        return Err(Error::Domain(format!(
            "a(t) must be bounded away from 0, sampled minimum is {amin}"
        )));
    }
    Ok(amin)
}

/// Reparametrizes a solution by `s = p(t) = integral_0^t a`, so that
/// `y(s) = x(t)`. The initial function is carried over with `p(t) = a(0) t`
/// for `t < 0`.
pub fn rescale_time(problem: &LinearDDE, trajectory: &Trajectory) -> Result<Trajectory> {
    let horizon = trajectory.horizon();
    check_a_positive(&problem.a, horizon)?;
    let a = &problem.a;
    let p = clock(a, &trajectory.segments)?;
    let mut segments = Vec::with_capacity(trajectory.segments.len());
    for (i, seg) in trajectory.segments.iter().enumerate() {
        segments.push(Segment {
            t0: p[i],
            t1: p[i + 1],
            x0: seg.x0,
            x1: seg.x1,
            d0: seg.d0 / a.evaluate_side(seg.t0, Side::Right)?,
            d1: seg.d1 / a.evaluate_side(seg.t1, Side::Left)?,
        });
    }
    let map = |t: f64| -> f64 {
        let i = trajectory.segments.partition_point(|s| s.t1 < t);
        if i >= trajectory.segments.len() {
            return p[p.len() - 1];
        }
        let seg = &trajectory.segments[i];
        let theta = ((t - seg.t0) / (seg.t1 - seg.t0)).clamp(0.0, 1.0);
        p[i] + theta * (p[i + 1] - p[i])
    };
    let breakpoints = trajectory
        .breakpoints
        .iter()
        .map(|b| Breakpoint { t: map(b.t), kind: b.kind })
        .collect();
    let a0 = a.evaluate_side(0.0, Side::Right)?;
    Ok(Trajectory {
        segments,
        initial: InitialCondition {
            history: trajectory.initial.history.time_scaled(a0, 1.0),
            value_at_zero: trajectory.initial.value_at_zero,
        },
        breakpoints,
        step_size: trajectory.step_size * a0,
        warnings: trajectory.warnings.clone(),
    })
}

/// The rescaled equation `y'(s) + y(s) + (b/a)(p^-1(s)) y(l(s)) = 0` with
/// `l(s) = p(h(p^-1(s)))`, on `s` in `[0, p(horizon)]`.
///
/// Requires a single concentrated term. Constant `a` gives an exact
/// description; otherwise coefficient and lag are tabulated on a fine grid.
pub fn rescaled_problem(problem: &LinearDDE, horizon: f64) -> Result<LinearDDE> {
    if problem.concentrated.len() != 1 || !problem.distributed.is_empty() {
        return Err(Error::Domain(
            "time rescaling needs exactly one concentrated delay term".into(),
        ));
    }
    check_a_positive(&problem.a, horizon)?;
    let term = &problem.concentrated[0];
    let a0 = problem.a.evaluate_side(0.0, Side::Right)?;
    let initial = InitialCondition {
        history: problem.initial.history.time_scaled(a0, 1.0),
        value_at_zero: problem.initial.value_at_zero,
    };

    if let Some(a) = problem.a.as_constant() {
        let delay = match term.delay.kind() {
            DelayKind::ConstantLag { tau } => DelaySpec::constant_lag(a * tau)?,
            DelayKind::TabulatedLag { knots } => DelaySpec::new(DelayKind::TabulatedLag {
                knots: knots.iter().map(|(t, l)| (a * t, a * l)).collect(),
            })?,
            DelayKind::Floor => {
                return Err(Error::Domain(
                    "floor delays have no exact rescaled description".into(),
                ))
            }
        };
        return Ok(LinearDDE::new(ScalarFunction::constant(1.0), initial)
            .with_term(term.coefficient.time_scaled(a, 1.0 / a), delay));
    }

    // Tabulate p on a fine grid aligned with the breakpoints of a.
    let step = crate::model::sampling_step(horizon).min(1e-3);
    let mut nodes = problem.a.breakpoints(0.0, horizon);
    nodes.extend(term.coefficient.breakpoints(0.0, horizon));
    nodes.extend(term.delay.breakpoints(0.0, horizon));
    if let Some(tau) = term.delay.as_constant_lag() {
        // kinks of l(s) where h(t) crosses a breakpoint of a
        nodes.extend(
            problem
                .a
                .breakpoints(0.0, horizon)
                .into_iter()
                .map(|b| b + tau)
                .filter(|t| *t <= horizon),
        );
    }
    let n = crate::model::sample_count(0.0, horizon, step);
    nodes.extend((0..=n).map(|i| if i == n { horizon } else { i as f64 * step }));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(1.0));
    let segs: Vec<Segment> = nodes
        .windows(2)
        .map(|w| Segment { t0: w[0], t1: w[1], x0: 0.0, x1: 0.0, d0: 0.0, d1: 0.0 })
        .collect();
    let p = clock(&problem.a, &segs)?;
    let p_at = |t: f64| -> f64 {
        if t <= 0.0 {
            return a0 * t;
        }
        let i = nodes.partition_point(|x| *x <= t).clamp(1, nodes.len() - 1);
        let theta = ((t - nodes[i - 1]) / (nodes[i] - nodes[i - 1])).clamp(0.0, 1.0);
        p[i - 1] + theta * (p[i] - p[i - 1])
    };
    let mut coef = Vec::with_capacity(nodes.len());
    let mut lag = Vec::with_capacity(nodes.len());
    for (i, &t) in nodes.iter().enumerate() {
        let s = p[i];
        if coef.last().is_some_and(|(prev, _): &(f64, f64)| s <= *prev) {
            continue;
        }
        let ratio = term.coefficient.evaluate(t)? / problem.a.evaluate(t)?;
        coef.push((s, ratio));
        let h = term.delay.delay_at(t)?;
        lag.push((s, (s - p_at(h)).max(0.0)));
    }
    let interpolation = if piecewise_constant(&problem.a) && piecewise_constant(&term.coefficient) {
        crate::model::Interpolation::Step
    } else {
        crate::model::Interpolation::Linear
    };
    Ok(LinearDDE::new(ScalarFunction::constant(1.0), initial).with_term(
        ScalarFunction::Tabulated {
            knots: coef,
            interpolation,
        },
        DelaySpec::new(DelayKind::TabulatedLag { knots: lag })?,
    ))
}

fn piecewise_constant(f: &ScalarFunction) -> bool {
    match f {
        ScalarFunction::Constant { .. } | ScalarFunction::PiecewisePeriodic { .. } => true,
        ScalarFunction::Tabulated { interpolation, .. } => {
            *interpolation == crate::model::Interpolation::Step
        }
        ScalarFunction::SinusoidAffine { .. } => false,
    }
}

//! Sufficient stability and attractivity inequalities.
//!
//! Every check returns a [`Verdict`] holding both sides of the inequality.
//! A failed inequality means *inconclusive*: the criteria are sufficient
//! conditions only and no function here ever reports instability.
//!
//! The core inequality, for a non-delay rate `a0`, an upper rate `A`, a
//! delayed gain `b0` and a lag measure `h0`, is
//!
//! ```text
//! (a0 / b0) exp(-A h0) > ln((b0^2 + a0 b0) / (b0^2 + a0^2)).
//! ```
//!
//! The constant-coefficient test uses `a0 = A = a`, the variable-coefficient
//! test works in rescaled time (`a0 = A = 1`, `b0 = beta`) and the nonlinear
//! tests use sector bounds.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::E;

use crate::model::{DelaySpec, Kernel, LinearDDE, ScalarFunction, Side};
use crate::quadrature::{Antiderivative, QUAD_SPACING};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CriterionId {
    /// Constant non-delay coefficient, bounded delayed coefficient and lag.
    Thm1,
    /// Variable coefficients, one concentrated delay.
    Thm2,
    /// Several concentrated delays.
    Thm3,
    /// Distributed (Stieltjes) delays.
    Thm4,
    /// Integro-differential (density kernel) delays.
    Cor1,
    /// Nonlinear, concentrated delays.
    Thm5,
    /// Nonlinear, distributed delays.
    Thm6,
    /// Mackey-Glass global attractivity.
    Thm7,
    /// `sup integral_{h(t)}^{t} b < 1/e` nonoscillation test.
    Nonosc1e,
    /// Comparison bound `beta h0 n R / 4 < 1 + 1/e` for Mackey-Glass.
    #[cfg_attr(feature = "serde", serde(rename = "BBIComparison"))]
    BbiComparison,
}

/// Outcome of a sufficient criterion.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verdict {
    pub criterion: CriterionId,
    pub certified: bool,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub lhs: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub rhs: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float::map"))]
    pub inputs: BTreeMap<String, f64>,
}

impl Verdict {
    /// Certified when `lhs > rhs`.
    fn greater(criterion: CriterionId, lhs: f64, rhs: f64, inputs: &[(&str, f64)]) -> Self {
        Verdict {
            criterion,
            certified: lhs > rhs,
            lhs,
            rhs,
            inputs: echo(inputs),
        }
    }

    /// Same inequality under another criterion label.
    pub fn relabel(mut self, criterion: CriterionId) -> Self {
        self.criterion = criterion;
        self
    }

    pub fn with_input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.into(), value);
        self
    }
}

fn echo(inputs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    inputs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
}

fn log_ratio(a0: f64, b0: f64) -> f64 {
    libm::log((b0 * b0 + a0 * b0) / (b0 * b0 + a0 * a0))
}

/// Constant non-delay coefficient `a`, `0 <= b(t) <= b_bound`,
/// `0 <= t - h(t) <= h_bound`.
pub fn check_thm1(a: f64, b_bound: f64, h_bound: f64) -> Result<Verdict> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    if !(b_bound >= 0.0) || !(h_bound >= 0.0) {
        return Err(Error::Domain(format!(
            "b and h must be nonnegative, got b = {b_bound}, h = {h_bound}"
        )));
    }
    let inputs = [("a", a), ("b", b_bound), ("h", h_bound)];
    if b_bound == 0.0 {
        return Ok(Verdict::greater(
            CriterionId::Thm1,
            f64::INFINITY,
            f64::NEG_INFINITY,
            &inputs,
        ));
    }
    let lhs = a / b_bound * libm::exp(-a * h_bound);
    let rhs = log_ratio(a, b_bound);
    Ok(Verdict::greater(CriterionId::Thm1, lhs, rhs, &inputs))
}

/// Variable coefficients in rescaled time: `beta = limsup b/a`,
/// `h0 = limsup integral_{h(t)}^{t} a`.
pub fn check_thm2(beta: f64, h0: f64) -> Result<Verdict> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if !(h0 >= 0.0) {
        return Err(Error::Domain(format!("h0 must be nonnegative, got {h0}")));
    }
    let lhs = libm::exp(-h0) / beta;
    let rhs = libm::log((beta * beta + beta) / (beta * beta + 1.0));
    Ok(Verdict::greater(
        CriterionId::Thm2,
        lhs,
        rhs,
        &[("beta", beta), ("h0", h0)],
    ))
}

/// Nonlinear sector-bound test. Also used for the distributed version
/// through [`check_thm6`].
pub fn check_thm5(a0: f64, upper: f64, b0: f64, h0: f64) -> Result<Verdict> {
    if !(a0 > 0.0) || !(b0 > 0.0) {
        return Err(Error::Domain(format!(
            "a0 and b0 must be positive, got a0 = {a0}, b0 = {b0}"
        )));
    }
    if !(upper >= a0) {
        return Err(Error::Domain(format!("A = {upper} is below a0 = {a0}")));
    }
    if !(h0 >= 0.0) {
        return Err(Error::Domain(format!("h0 must be nonnegative, got {h0}")));
    }
    let lhs = a0 / b0 * libm::exp(-upper * h0);
    let rhs = log_ratio(a0, b0);
    Ok(Verdict::greater(
        CriterionId::Thm5,
        lhs,
        rhs,
        &[("a0", a0), ("A", upper), ("b0", b0), ("h0", h0)],
    ))
}

pub fn check_thm6(a0: f64, upper: f64, b0: f64, h0: f64) -> Result<Verdict> {
    check_thm5(a0, upper, b0, h0).map(|v| v.relabel(CriterionId::Thm6))
}

/// Largest `h0` for which the sector-bound inequality still holds.
///
/// Returns `+inf` when the right-hand side is nonpositive (every lag is
/// certified) and `0` when the inequality already fails at `h0 = 0`.
pub fn invert_delay_bound(a0: f64, upper: f64, b0: f64) -> f64 {
    let rhs = log_ratio(a0, b0);
    if rhs <= 0.0 {
        return f64::INFINITY;
    }
    let lhs0 = a0 / b0;
    if lhs0 <= rhs {
        return 0.0;
    }
    libm::log(lhs0 / rhs) / upper
}

/// Delay bound `4 (1 + 1/e) / (beta n R)` from the comparison test for the
/// Mackey-Glass model.
pub fn check_bbi_comparison(beta_mg: f64, n: f64, r_max: f64) -> Result<f64> {
    if !(beta_mg > 0.0 && n > 0.0 && r_max > 0.0) {
        return Err(Error::Domain(format!(
            "beta, n and R must be positive, got ({beta_mg}, {n}, {r_max})"
        )));
    }
    Ok(4.0 * (1.0 + 1.0 / E) / (beta_mg * n * r_max))
}

/// The comparison test as a verdict at a given lag: certified when
/// `1 + 1/e > beta h0 n R / 4`.
pub fn check_bbi_comparison_at(beta_mg: f64, n: f64, r_max: f64, h0: f64) -> Result<Verdict> {
    check_bbi_comparison(beta_mg, n, r_max)?;
    Ok(Verdict::greater(
        CriterionId::BbiComparison,
        1.0 + 1.0 / E,
        beta_mg * h0 * n * r_max / 4.0,
        &[("beta", beta_mg), ("n", n), ("R", r_max), ("h0", h0)],
    ))
}

/// Grid for approximating `limsup_{t -> inf}` by a maximum over
/// `[burn_in, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimsupGrid {
    pub burn_in: f64,
    pub horizon: f64,
    pub grid_step: f64,
}

impl LimsupGrid {
    /// Burn-in defaults to 10% of the horizon.
    pub fn new(horizon: f64, grid_step: f64) -> Self {
        LimsupGrid {
            burn_in: 0.1 * horizon,
            horizon,
            grid_step,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0) || !(self.horizon > self.burn_in) || !(self.burn_in >= 0.0) {
            return Err(Error::Precondition(format!(
                "invalid limsup grid: burn_in = {}, horizon = {}, step = {}",
                self.burn_in, self.horizon, self.grid_step
            )));
        }
        Ok(())
    }

    /// Uniform points plus breakpoints, each tagged with the side to use.
    fn points(&self, breakpoints: &[f64]) -> Vec<(f64, Side)> {
        let n = crate::model::sample_count(self.burn_in, self.horizon, self.grid_step);
        let mut pts: Vec<(f64, Side)> = (0..=n)
            .map(|i| {
                let t = if i == n {
                    self.horizon
                } else {
                    self.burn_in + i as f64 * self.grid_step
                };
                (t, Side::Right)
            })
            .collect();
        for &b in breakpoints {
            if b > self.burn_in && b <= self.horizon {
                pts.push((b, Side::Left));
            }
            if b >= self.burn_in && b < self.horizon {
                pts.push((b, Side::Right));
            }
        }
        pts
    }
}

/// Sampled approximation of a `limsup`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimsupEstimate {
    pub value: f64,
    pub burn_in: f64,
    pub grid_step: f64,
    pub horizon: f64,
}

fn antiderivative_of(f: &ScalarFunction, horizon: f64) -> Result<Option<Antiderivative>> {
    if f.as_constant().is_some() {
        return Ok(None);
    }
    Antiderivative::build(
        |t, side| f.evaluate_side(t, side),
        0.0,
        horizon,
        f.breakpoints(0.0, horizon),
        QUAD_SPACING,
    )
    .map(Some)
}

/// `integral_{max(lo,0)}^{hi} f`, exact for constants.
fn integral(f: &ScalarFunction, anti: &Option<Antiderivative>, lo: f64, hi: f64) -> f64 {
    let lo = lo.max(0.0);
    if hi <= lo {
        return 0.0;
    }
    match (f.as_constant(), anti) {
        (Some(c), _) => c * (hi - lo),
        (None, Some(anti)) => anti.between(lo, hi),
        (None, None) => unreachable!("antiderivative is built for every non-constant function"),
    }
}

/// `min_k h_k(t)` over all delays of the problem.
fn min_delay(delays: &[&DelaySpec], t: f64, side: Side) -> Result<f64> {
    let mut h = t;
    for d in delays {
        h = h.min(d.delay_at_side(t, side)?);
    }
    Ok(h)
}

fn max_constant_lag(delays: &[&DelaySpec]) -> Option<f64> {
    delays
        .iter()
        .map(|d| d.as_constant_lag())
        .try_fold(0.0f64, |m, tau| tau.map(|tau| m.max(tau)))
}

/// Estimates `h0 = limsup integral_{min_k h_k(t)}^{t} a(s) ds` and
/// `beta = limsup sum_k b_k(t) / a(t)`.
pub fn estimate_thm2_params(
    problem: &LinearDDE,
    grid: &LimsupGrid,
) -> Result<(LimsupEstimate, LimsupEstimate)> {
    grid.validate()?;
    let delays: Vec<&DelaySpec> = problem.delays().collect();
    let coeffs: Vec<&ScalarFunction> = problem.delay_coefficients().collect();

    let mut bps = problem.a.breakpoints(grid.burn_in, grid.horizon);
    for c in &coeffs {
        bps.extend(c.breakpoints(grid.burn_in, grid.horizon));
    }
    for d in &delays {
        bps.extend(d.breakpoints(grid.burn_in, grid.horizon));
    }
    let anti = antiderivative_of(&problem.a, grid.horizon)?;

    let mut h0 = 0.0f64;
    let mut beta = 0.0f64;
    for (t, side) in grid.points(&bps) {
        let a = problem.a.evaluate_side(t, side)?;
        if !(a > 0.0) {
            return Err(Error::Precondition(format!(
                "a(t) must be bounded away from zero, found a({t}) = {a}"
            )));
        }
        let mut b = 0.0;
        for c in &coeffs {
            b += c.evaluate_side(t, side)?;
        }
        beta = beta.max(b / a);
        let h = min_delay(&delays, t, side)?;
        let span = match (problem.a.as_constant(), max_constant_lag(&delays)) {
            // exact when the whole window lies in t >= 0
            (Some(c), Some(tau)) if t - tau >= 0.0 => c * tau,
            _ => integral(&problem.a, &anti, h, t),
        };
        h0 = h0.max(span);
    }
    let est = |value| LimsupEstimate {
        value,
        burn_in: grid.burn_in,
        grid_step: grid.grid_step,
        horizon: grid.horizon,
    };
    Ok((est(h0), est(beta)))
}

/// Which linear criterion applies to the structure of `problem`.
pub fn linear_criterion_for(problem: &LinearDDE) -> CriterionId {
    if problem.distributed.is_empty() {
        if problem.concentrated.len() <= 1 {
            CriterionId::Thm2
        } else {
            CriterionId::Thm3
        }
    } else if problem.concentrated.is_empty()
        && problem
            .distributed
            .iter()
            .all(|d| matches!(d.kernel, Kernel::Density { .. }))
    {
        CriterionId::Cor1
    } else {
        CriterionId::Thm4
    }
}

/// Estimates `beta`, `h0` and evaluates the variable-coefficient inequality,
/// labelled with the criterion matching the problem's delay structure.
pub fn check_linear(problem: &LinearDDE, grid: &LimsupGrid) -> Result<Verdict> {
    let (h0, beta) = estimate_thm2_params(problem, grid)?;
    if beta.value == 0.0 {
        return Ok(Verdict::greater(
            linear_criterion_for(problem),
            f64::INFINITY,
            f64::NEG_INFINITY,
            &[("beta", 0.0), ("h0", h0.value)],
        ));
    }
    Ok(check_thm2(beta.value, h0.value)?
        .relabel(linear_criterion_for(problem))
        .with_input("burn_in", grid.burn_in)
        .with_input("horizon", grid.horizon)
        .with_input("grid_step", grid.grid_step))
}

/// Evaluates the constant-coefficient test on a problem whose `a` is
/// constant, with `b` the sampled supremum of `sum_k b_k` on `[0, horizon]`
/// and `h` the largest lag bound.
pub fn check_thm1_for(problem: &LinearDDE, horizon: f64) -> Result<Verdict> {
    let a = problem.a.as_constant().ok_or_else(|| {
        Error::Precondition("the constant-coefficient test needs a constant a".into())
    })?;
    let step = crate::model::sampling_step(horizon);
    let mut b = 0.0;
    for c in problem.delay_coefficients() {
        b += c.sampled_range(0.0, horizon, step)?.1;
    }
    check_thm1(a, b, problem.max_lag_bound())
}

/// The `1/e` nonoscillation test for `x' + a x + b x(h) = 0`.
///
/// `lhs` is the sampled `sup integral_{h(t)}^{t} b(s) ds` and `rhs = 1/e`;
/// certified when `lhs < rhs`. The input map also reports
/// `transformed_lhs`, the same supremum for
/// `r(t) = b(t) exp(-integral_{h(t)}^{t} a)`, which never exceeds `lhs`,
/// and `conjugate_lhs` for `b(t) exp(+integral_{h(t)}^{t} a)`. The latter is
/// the coefficient that `z = x exp(integral_0^t a)` actually satisfies, so
/// only `conjugate_lhs < 1/e` guarantees nonoscillation of the equation
/// with the non-delay term.
pub fn check_nonoscillation_1e(
    b: &ScalarFunction,
    h: &DelaySpec,
    a: &ScalarFunction,
    grid: &LimsupGrid,
) -> Result<Verdict> {
    grid.validate()?;
    let step = crate::model::sampling_step(grid.horizon);
    let (bmin, _) = b.sampled_range(0.0, grid.horizon, step)?;
    if bmin < 0.0 {
        return Err(Error::Precondition(format!("b takes the negative value {bmin}")));
    }
    let (amin, _) = a.sampled_range(0.0, grid.horizon, step)?;
    if amin < 0.0 {
        return Err(Error::Precondition(format!("a takes the negative value {amin}")));
    }

    let a_anti = antiderivative_of(a, grid.horizon)?;
    let b_anti = antiderivative_of(b, grid.horizon)?;
    let a_anti = &a_anti;
    let weighted = |sign: f64| {
        move |s: f64, side: Side| -> Result<f64> {
            let hs = h.delay_at_side(s, side)?;
            Ok(b.evaluate_side(s, side)? * libm::exp(sign * integral(a, a_anti, hs, s)))
        }
    };
    let mut r_bps = a.breakpoints(0.0, grid.horizon);
    r_bps.extend(b.breakpoints(0.0, grid.horizon));
    r_bps.extend(h.breakpoints(0.0, grid.horizon));
    let r_anti = Antiderivative::build(weighted(-1.0), 0.0, grid.horizon, r_bps.clone(), QUAD_SPACING)?;
    let z_anti = Antiderivative::build(weighted(1.0), 0.0, grid.horizon, r_bps.clone(), QUAD_SPACING)?;

    let mut sup_b = 0.0f64;
    let mut sup_r = 0.0f64;
    let mut sup_z = 0.0f64;
    for (t, side) in grid.points(&r_bps) {
        let ht = h.delay_at_side(t, side)?;
        sup_b = sup_b.max(integral(b, &b_anti, ht, t));
        sup_r = sup_r.max(r_anti.between(ht.max(0.0), t));
        sup_z = sup_z.max(z_anti.between(ht.max(0.0), t));
    }
    Ok(Verdict {
        criterion: CriterionId::Nonosc1e,
        certified: sup_b < 1.0 / E,
        lhs: sup_b,
        rhs: 1.0 / E,
        inputs: echo(&[
            ("transformed_lhs", sup_r),
            ("conjugate_lhs", sup_z),
            ("burn_in", grid.burn_in),
            ("horizon", grid.horizon),
            ("grid_step", grid.grid_step),
        ]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialCondition, Interpolation};
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn thm1_examples() {
        let v = check_thm1(1.0, 1.0, 0.0).unwrap();
        assert_eq!((v.lhs, v.rhs, v.certified), (1.0, 0.0, true));

        // direct arithmetic: e^-2 / 1.5 and ln((2.25 + 1.5) / (2.25 + 1))
        let v = check_thm1(1.0, 1.5, 2.0).unwrap();
        assert!(close(v.lhs, 0.090_223_522_157_742, 1e-12));
        assert!(close(v.rhs, 0.143_100_843_640_673, 1e-12));
        assert!(!v.certified);

        let v = check_thm1(1.0, 1e-4, 10.0).unwrap();
        assert!(v.rhs < 0.0 && v.lhs > 0.0 && v.certified);

        assert!(check_thm1(1.0, 0.0, 3.0).unwrap().certified);
        assert!(matches!(check_thm1(0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(check_thm1(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn thm2_examples() {
        let v = check_thm2(1.0, 0.0).unwrap();
        assert_eq!((v.lhs, v.rhs, v.certified), (1.0, 0.0, true));
        let v = check_thm2(1.5, 2.0).unwrap();
        assert!(close(v.lhs, 0.090_223_522_157_742, 1e-12) && !v.certified);
        let v = check_thm2(0.5, 1.0).unwrap();
        assert!(close(v.lhs, 2.0 * libm::exp(-1.0), 1e-15));
        assert!(v.rhs < 0.0 && v.certified);
        assert!(check_thm2(0.0, 1.0).is_err());
    }

    #[test]
    fn thm5_examples() {
        assert!(check_thm5(1.35107, 1.73803, 1.5, 1.0).unwrap().certified);
        assert!(!check_thm5(1.35107, 1.73803, 1.5, 2.0).unwrap().certified);
        let v = check_thm5(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!((v.lhs, v.rhs, v.certified), (1.0, 0.0, true));
        assert!(check_thm5(1.0, 0.5, 1.0, 0.0).is_err());
        assert!(check_thm5(-1.0, 1.0, 1.0, 0.0).is_err());
        assert_eq!(check_thm6(1.0, 1.0, 1.0, 0.0).unwrap().criterion, CriterionId::Thm6);
    }

    #[test]
    fn inversion_examples() {
        assert!(close(invert_delay_bound(1.35107, 1.73803, 1.5), 1.6848, 5e-4));
        assert_eq!(invert_delay_bound(1.0, 2.0, 0.5), f64::INFINITY);
        // a0/b0 > ln((1 + a0/b0) / (1 + (a0/b0)^2)) for every positive ratio,
        // so the bound is positive even for a tiny ratio
        let tiny = invert_delay_bound(1e-3, 1e-3, 1.0);
        assert!(tiny > 0.0 && tiny.is_finite());
    }

    #[test]
    fn bbi_examples() {
        assert!(close(check_bbi_comparison(0.5, 4.0, 3.0).unwrap(), 0.9119, 5e-4));
        let half = check_bbi_comparison(0.5, 4.0, 1.5).unwrap();
        assert!(close(half, 2.0 * check_bbi_comparison(0.5, 4.0, 3.0).unwrap(), 1e-12));
        let scaled = check_bbi_comparison(1.0, 2.0, 3.0).unwrap();
        assert!(close(scaled, check_bbi_comparison(0.5, 4.0, 3.0).unwrap(), 1e-12));
        assert!(check_bbi_comparison(0.0, 4.0, 3.0).is_err());
    }

    fn single(a: f64, b: ScalarFunction, tau: f64) -> LinearDDE {
        LinearDDE::new(ScalarFunction::constant(a), InitialCondition::constant(1.0))
            .with_term(b, DelaySpec::constant_lag(tau).unwrap())
    }

    #[test]
    fn estimate_unit_coefficient() {
        let p = single(1.0, ScalarFunction::constant(0.3), 0.7);
        let (h0, _) = estimate_thm2_params(&p, &LimsupGrid::new(20.0, 0.1)).unwrap();
        assert_eq!(h0.value, 0.7);
    }

    #[test]
    fn estimate_constant_coefficients() {
        let p = single(2.0, ScalarFunction::constant(1.0), 0.5);
        let (h0, beta) = estimate_thm2_params(&p, &LimsupGrid::new(20.0, 0.1)).unwrap();
        assert_eq!(h0.value, 1.0);
        assert_eq!(beta.value, 0.5);
        let v = check_linear(&p, &LimsupGrid::new(20.0, 0.1)).unwrap();
        assert_eq!(v.criterion, CriterionId::Thm2);
        assert!(v.certified);
    }

    #[test]
    fn estimate_tabulated_abs_sine_refines_towards_one() {
        let knots: Vec<(f64, f64)> = (0..=20_000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                (t, libm::sin(t).abs())
            })
            .collect();
        let b = ScalarFunction::Tabulated {
            knots,
            interpolation: Interpolation::Linear,
        };
        let p = single(1.0, b, 1.0);
        let mut last = 0.0;
        for step in [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125] {
            let (_, beta) = estimate_thm2_params(&p, &LimsupGrid::new(20.0, step)).unwrap();
            assert!(beta.value >= last);
            last = beta.value;
        }
        assert!(close(last, 1.0, 1e-3));
    }

    #[test]
    fn estimate_rejects_vanishing_a() {
        let p = single(0.0, ScalarFunction::constant(1.0), 1.0);
        assert!(matches!(
            estimate_thm2_params(&p, &LimsupGrid::new(10.0, 0.1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn estimate_floor_delay_uses_left_limits() {
        // a = 2 on [n, n + 0.25), 1 elsewhere; h(t) = floor(t)
        let a = ScalarFunction::PiecewisePeriodic {
            period: 1.0,
            pieces: vec![
                crate::model::Piece { start: 0.0, end: 0.25, value: 2.0 },
                crate::model::Piece { start: 0.25, end: 1.0, value: 1.0 },
            ],
        };
        let p = LinearDDE::new(a, InitialCondition::constant(1.0))
            .with_term(ScalarFunction::constant(1.0), DelaySpec::floor());
        let (h0, beta) = estimate_thm2_params(&p, &LimsupGrid::new(10.0, 0.3)).unwrap();
        assert!(close(h0.value, 1.25, 1e-12));
        assert_eq!(beta.value, 1.0);
    }

    #[test]
    fn several_delays_use_the_smallest_argument() {
        let p = single(1.0, ScalarFunction::constant(0.2), 0.5)
            .with_term(ScalarFunction::constant(0.3), DelaySpec::constant_lag(1.5).unwrap());
        let (h0, beta) = estimate_thm2_params(&p, &LimsupGrid::new(20.0, 0.1)).unwrap();
        assert_eq!(h0.value, 1.5);
        assert!(close(beta.value, 0.5, 1e-15));
        assert_eq!(linear_criterion_for(&p), CriterionId::Thm3);
    }

    #[test]
    fn nonoscillation_examples() {
        let tau = DelaySpec::constant_lag(1.0).unwrap();
        let grid = LimsupGrid::new(20.0, 0.1);
        for a in [0.0, 0.5, 3.0] {
            let v = check_nonoscillation_1e(
                &ScalarFunction::constant(0.3),
                &tau,
                &ScalarFunction::constant(a),
                &grid,
            )
            .unwrap();
            assert!(close(v.lhs, 0.3, 1e-12) && v.certified);
            let transformed = v.inputs["transformed_lhs"];
            assert!(transformed <= v.lhs + 1e-12);
            assert!(close(transformed, 0.3 * libm::exp(-a), 1e-6));
        }
        let v = check_nonoscillation_1e(
            &ScalarFunction::constant(0.4),
            &tau,
            &ScalarFunction::constant(0.0),
            &grid,
        )
        .unwrap();
        assert!(close(v.lhs, 0.4, 1e-12) && !v.certified);
        let v = check_nonoscillation_1e(
            &ScalarFunction::constant(0.0),
            &DelaySpec::floor(),
            &ScalarFunction::constant(1.0),
            &grid,
        )
        .unwrap();
        assert_eq!(v.lhs, 0.0);
        assert!(v.certified);
        assert!(check_nonoscillation_1e(
            &ScalarFunction::constant(-0.1),
            &tau,
            &ScalarFunction::constant(1.0),
            &grid
        )
        .is_err());
    }
}

//! The Mackey-Glass respiratory model
//!
//! ```text
//! x'(t) = r(t) [alpha - beta x(t) x(h(t))^n / (1 + x(h(t))^n)],
//! ```
//!
//! its positive equilibrium `K`, the invariant band `[mu, M]`, the
//! logarithmic change of variables `y = ln(x / K)` and the resulting
//! global-attractivity delay bound.

use alloc::format;
use alloc::vec;

use crate::criteria::{self, CriterionId, Verdict};
use crate::model::{
    DelaySpec, InitialCondition, NonlinearDDE, NonlinearTerm, Nonlinearity, ScalarFunction,
    SectorBounds, Side,
};
use crate::solver::engine::{self, collect_breakpoints, Past, Rhs};
use crate::solver::{constant_lags, history_breakpoints, IntegratorConfig, Trajectory};
use crate::{Error, Result};

/// Model parameters; `r0 <= r(t) <= R` must hold.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MgParams {
    pub alpha: f64,
    pub beta: f64,
    pub n: f64,
    pub r: ScalarFunction,
    pub r0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    pub r_max: f64,
    pub delay: DelaySpec,
}

/// Length of the window on which the bounds of `r` are checked.
const R_CHECK_HORIZON: f64 = 200.0;

impl MgParams {
    /// `alpha = 1`, `beta = 0.5`, `n = 4`, `r(t) = 2.7 + 0.3 sin t` with
    /// bounds `[2.4, 3]` and a constant lag.
    pub fn example2(lag: f64) -> Result<Self> {
        Ok(MgParams {
            alpha: 1.0,
            beta: 0.5,
            n: 4.0,
            r: ScalarFunction::SinusoidAffine {
                offset: 2.7,
                amplitude: 0.3,
                frequency: 1.0,
            },
            r0: 2.4,
            r_max: 3.0,
            delay: DelaySpec::constant_lag(lag)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.n > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "alpha, beta and n must be positive, got ({}, {}, {})",
                self.alpha, self.beta, self.n
            )));
        }
        if !(self.r0 > 0.0 && self.r_max >= self.r0 && self.r_max.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < r0 <= R, got r0 = {}, R = {}",
                self.r0, self.r_max
            )));
        }
        self.r.validate()?;
        let (lo, hi) = self.r.sampled_range(0.0, R_CHECK_HORIZON, 0.01)?;
        let tol = 1e-12 * self.r_max;
        if lo < self.r0 - tol || hi > self.r_max + tol {
            return Err(Error::InvalidSpec(format!(
                "sampled r(t) range [{lo}, {hi}] is not inside [r0, R] = [{}, {}]",
                self.r0, self.r_max
            )));
        }
        Ok(())
    }
}

/// Constants derived from the parameters and an equilibrium value.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MgDerived {
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub k: f64,
    pub mu: f64,
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub big_m: f64,
    pub c: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C"))]
    pub big_c: f64,
    pub a0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub upper: f64,
    pub b0: f64,
}

impl MgDerived {
    /// `[mu - eps, M + eps]`.
    pub fn band(&self, eps: f64) -> (f64, f64) {
        (self.mu - eps, self.big_m + eps)
    }
}

/// `(1 - e^{-z}) / z`, equal to 1 at `z = 0`.
pub fn phi(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        -libm::expm1(-z) / z
    }
}

/// The positive root `K` of `beta K^{n+1} = alpha (1 + K^n)`.
///
/// Bisection on `beta K - alpha (1 + K^{-n})`, which is increasing in `K`,
/// from the bracket `(0, 2^j]` until the bracket cannot shrink further.
pub fn solve_equilibrium(alpha: f64, beta: f64, n: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && n > 0.0) || !(alpha.is_finite() && beta.is_finite() && n.is_finite()) {
        return Err(Error::Domain(format!(
            "alpha, beta and n must be positive and finite, got ({alpha}, {beta}, {n})"
        )));
    }
    let g = |k: f64| beta * k - alpha * (1.0 + libm::pow(k, -n));
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Overflow { t: hi });
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if g(hi).abs() < g(lo).abs() { hi } else { lo })
}

/// Residual `beta K^{n+1} - alpha (1 + K^n)`.
pub fn equilibrium_residual(alpha: f64, beta: f64, n: f64, k: f64) -> f64 {
    let kn = libm::pow(k, n);
    beta * kn * k - alpha * (1.0 + kn)
}

/// Band, logarithmic bounds and sector constants. `k_override` replaces
/// the equilibrium solved from the parameters.
pub fn derive_mg(params: &MgParams, k_override: Option<f64>) -> Result<MgDerived> {
    params.validate()?;
    let k = match k_override {
        Some(k) if !(k > 0.0 && k.is_finite()) => {
            return Err(Error::Domain(format!("K must be positive, got {k}")));
        }
        Some(k) => k,
        None => solve_equilibrium(params.alpha, params.beta, params.n)?,
    };
    let (alpha, beta, n) = (params.alpha, params.beta, params.n);
    let mu = alpha / beta;
    let big_m = mu * (1.0 + libm::pow(beta / alpha, n));
    let c = libm::log(mu / k);
    let big_c = libm::log(big_m / k);
    Ok(MgDerived {
        k,
        mu,
        big_m,
        c,
        big_c,
        a0: alpha / k * phi(big_c) * params.r0,
        upper: alpha / k * phi(c) * params.r_max,
        b0: beta * n * params.r_max / 4.0,
    })
}

/// Both delay bounds side by side.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MgBound {
    pub derived: MgDerived,
    /// Largest lag certified by the sector-bound test.
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub attractor_bound: f64,
    /// The comparison bound `4 (1 + 1/e) / (beta n R)`.
    pub comparison_bound: f64,
}

pub fn mg_attractor_bound(params: &MgParams, k_override: Option<f64>) -> Result<MgBound> {
    let derived = derive_mg(params, k_override)?;
    Ok(MgBound {
        derived,
        attractor_bound: criteria::invert_delay_bound(derived.a0, derived.upper, derived.b0),
        comparison_bound: criteria::check_bbi_comparison(params.beta, params.n, params.r_max)?,
    })
}

/// Global attractivity of `K` at the lag bound of `params.delay`.
pub fn check_thm7(params: &MgParams, k_override: Option<f64>) -> Result<Verdict> {
    let d = derive_mg(params, k_override)?;
    let v = criteria::check_thm5(d.a0, d.upper, d.b0, params.delay.lag_bound())?;
    Ok(v.relabel(CriterionId::Thm7).with_input("K", d.k))
}

/// `f(t, y) = r(t) (alpha / K) (1 - e^{-y})`.
pub fn mg_transformed_f(params: &MgParams, k: f64) -> Nonlinearity {
    Nonlinearity::MackeyGlassDecay {
        alpha: params.alpha,
        equilibrium: k,
        r: params.r.clone(),
    }
}

/// `g(t, y) = beta r(t) [1/(1 + K^-n e^{-n y}) - 1/(1 + K^-n)]`.
pub fn mg_transformed_g(params: &MgParams, k: f64) -> Nonlinearity {
    Nonlinearity::MackeyGlassFeedback {
        beta: params.beta,
        n: params.n,
        equilibrium: k,
        r: params.r.clone(),
    }
}

/// `y' + f(t, y) + g(t, y(h(t))) = 0` for `y = ln(x / K)`, with sector
/// constants from [`derive_mg`] on the state box spanned by `c`, `C` and 0.
/// Every positive initial function is admissible, so the initial box is
/// the whole line.
pub fn transformed_problem(
    params: &MgParams,
    k_override: Option<f64>,
    initial: InitialCondition,
) -> Result<NonlinearDDE> {
    let d = derive_mg(params, k_override)?;
    Ok(NonlinearDDE {
        f: mg_transformed_f(params, d.k),
        terms: vec![NonlinearTerm::Concentrated {
            g: mg_transformed_g(params, d.k),
            delay: params.delay.clone(),
        }],
        sector: SectorBounds {
            a0: d.a0,
            upper: d.upper,
            b: vec![d.b0],
        },
        state_box: (d.c.min(0.0), d.big_c.max(0.0)),
        admissible_initial: (f64::NEG_INFINITY, f64::INFINITY),
        initial,
    })
}

struct MgRhs<'a> {
    params: &'a MgParams,
}

impl Rhs for MgRhs<'_> {
    fn derivative(&self, t: f64, side: Side, x: f64, past: &Past<'_>) -> Result<f64> {
        let p = self.params;
        let h = p.delay.delay_at_side(t, side)?;
        let xh = if h >= t - 1e-12 * t.abs().max(1.0) { x } else { past.value(h)? };
        if !(xh >= 0.0) {
            return Err(Error::Domain(format!("negative delayed state {xh} at t = {t}")));
        }
        let q = libm::pow(xh, p.n);
        let r = p.r.evaluate_side(t, side)?;
        Ok(r * (p.alpha - p.beta * x * q / (1.0 + q)))
    }
}

/// Integrates the original model from a nonnegative initial function with
/// `x(0) > 0`.
pub fn integrate_mackey_glass(
    params: &MgParams,
    initial: &InitialCondition,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    params.validate()?;
    let lag = params.delay.lag_bound();
    cfg.validate(if lag > 0.0 { Some(lag) } else { None })?;
    initial.validate()?;
    if !(initial.value_at_zero > 0.0) {
        return Err(Error::Precondition(format!(
            "x(0) must be positive, got {}",
            initial.value_at_zero
        )));
    }
    if lag > 0.0 {
        let (lo, _) = initial
            .history
            .sampled_range(-lag, 0.0, crate::model::sampling_step(lag))?;
        if lo < 0.0 {
            return Err(Error::Precondition(format!(
                "initial function must be nonnegative, sampled minimum {lo}"
            )));
        }
    }
    let horizon = cfg.horizon;
    let breakpoints = collect_breakpoints(
        horizon,
        params.r.breakpoints(0.0, horizon),
        params.delay.breakpoints(0.0, horizon),
        history_breakpoints(initial, lag),
        &constant_lags(core::iter::once(&params.delay)),
    );
    engine::run(&MgRhs { params }, initial, breakpoints, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_equilibria() {
        let k = solve_equilibrium(2.0, 1.0, 1.0).unwrap();
        assert!((k - (1.0 + libm::sqrt(3.0))).abs() < 1e-12);
        let golden = solve_equilibrium(1.0, 1.0, 1.0).unwrap();
        assert!((golden - 0.5 * (1.0 + libm::sqrt(5.0))).abs() < 1e-12);
        let k = solve_equilibrium(1.0, 0.5, 4.0).unwrap();
        assert!((k - 2.1023).abs() < 1e-4);
        assert!(equilibrium_residual(1.0, 0.5, 4.0, k).abs() < 1e-12);
        assert!(solve_equilibrium(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn phi_is_smooth_at_zero() {
        assert_eq!(phi(0.0), 1.0);
        for z in [-2e-4, -1e-4, -5e-5, 5e-5, 1e-4, 2e-4] {
            let direct = -libm::expm1(-z) / z;
            assert!((phi(z) - direct).abs() < 1e-15, "z = {z}");
        }
    }

    #[test]
    fn example2_with_override() {
        let p = MgParams::example2(1.0).unwrap();
        let d = derive_mg(&p, Some(1.5)).unwrap();
        assert_eq!(d.mu, 2.0);
        assert!((d.big_m - 2.125).abs() < 1e-15);
        assert!((d.c - 0.28768).abs() < 1e-5);
        assert!((d.big_c - 0.34831).abs() < 1e-5);
        assert!((d.a0 - 1.35107).abs() < 1e-5);
        assert!((d.upper - 1.73803).abs() < 1e-5);
        assert_eq!(d.b0, 1.5);
        let bound = mg_attractor_bound(&p, Some(1.5)).unwrap();
        assert!((bound.attractor_bound - 1.6848).abs() < 5e-4);
        assert!((bound.comparison_bound - 0.9119).abs() < 5e-4);
        assert!(check_thm7(&p, Some(1.5)).unwrap().certified);
        let far = MgParams::example2(2.0).unwrap();
        assert!(!check_thm7(&far, Some(1.5)).unwrap().certified);
        assert!(derive_mg(&p, Some(-1.0)).is_err());
    }

    #[test]
    fn override_at_mu_uses_series() {
        let p = MgParams::example2(1.0).unwrap();
        let d = derive_mg(&p, Some(2.0)).unwrap();
        assert_eq!(d.c, 0.0);
        assert!((d.upper - 0.5 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn transformed_terms_vanish_at_zero_and_have_sign() {
        let p = MgParams::example2(1.0).unwrap();
        let k = solve_equilibrium(1.0, 0.5, 4.0).unwrap();
        let f = mg_transformed_f(&p, k);
        let g = mg_transformed_g(&p, k);
        for i in 0..=40 {
            let t = 0.25 * i as f64;
            assert_eq!(f.eval(t, Side::Right, 0.0).unwrap(), 0.0);
            assert!(g.eval(t, Side::Right, 0.0).unwrap().abs() < 1e-16);
            for j in 1..=10 {
                for y in [0.1 * j as f64, -0.1 * j as f64] {
                    assert!(f.eval(t, Side::Right, y).unwrap() * y > 0.0);
                    assert!(g.eval(t, Side::Right, y).unwrap() * y > 0.0);
                }
            }
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = MgParams::example2(1.0).unwrap();
        let k = solve_equilibrium(1.0, 0.5, 4.0).unwrap();
        let traj = integrate_mackey_glass(&p, &InitialCondition::constant(k), &IntegratorConfig::new(20.0, 0.01)).unwrap();
        assert!(traj.nodes().all(|(_, x)| (x - k).abs() < 1e-12));
    }
}

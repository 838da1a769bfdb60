//! Declarative descriptions of the equations handled by the crate.
//!
//! Every coefficient, delay, kernel and nonlinearity is a plain value drawn
//! from a closed catalog so that problems can be serialized and shared
//! between threads. Time functions are evaluated with an explicit [`Side`]:
//! the solver integrates between breakpoints and needs the one-sided limits
//! of piecewise data at the ends of each step.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Relative tolerance used to snap evaluation points onto breakpoints.
pub(crate) const SNAP: f64 = 1e-9;

/// Which one-sided limit to take at a discontinuity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Interpolation {
    /// Right-continuous piecewise constant.
    Step,
    Linear,
}

/// One piece `[start, end)` of a periodic piecewise-constant function.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// A time function used for coefficients, rates and initial histories.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ScalarFunction {
    Constant {
        value: f64,
    },
    /// Pieces partition `[0, period)` and repeat with the period.
    PiecewisePeriodic {
        period: f64,
        pieces: Vec<Piece>,
    },
    /// `offset + amplitude * sin(frequency * t)`.
    SinusoidAffine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Knots `(t, value)` with strictly increasing `t`. Evaluation outside
    /// the knot range is an error.
    Tabulated {
        knots: Vec<(f64, f64)>,
        interpolation: Interpolation,
    },
}

fn snap_tol(t: f64) -> f64 {
    SNAP * t.abs().max(1.0)
}

fn check_knots(knots: &[(f64, f64)], what: &str) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::InvalidSpec(format!("{what}: at least one knot is required")));
    }
    if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidSpec(format!("{what}: knots must be finite")));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidSpec(format!(
            "{what}: knot times must be strictly increasing"
        )));
    }
    Ok(())
}

/// Evaluates tabulated data with range checking.
fn tabulated_value(knots: &[(f64, f64)], interp: Interpolation, t: f64, side: Side) -> Result<f64> {
    let lo = knots[0].0;
    let hi = knots[knots.len() - 1].0;
    let tol = snap_tol(t);
    if t < lo - tol || t > hi + tol {
        return Err(Error::Extrapolation { t, lo, hi });
    }
    if knots.len() == 1 {
        return Ok(knots[0].1);
    }
    match interp {
        Interpolation::Step => {
            let idx = match side {
                Side::Right => knots.partition_point(|k| k.0 <= t + tol),
                Side::Left => knots.partition_point(|k| k.0 < t - tol),
            };
            Ok(knots[idx.max(1) - 1].1)
        }
        Interpolation::Linear => {
            let i = knots.partition_point(|k| k.0 <= t).clamp(1, knots.len() - 1);
            let (t0, v0) = knots[i - 1];
            let (t1, v1) = knots[i];
            let theta = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            Ok(v0 + theta * (v1 - v0))
        }
    }
}

impl ScalarFunction {
    pub fn constant(value: f64) -> Self {
        ScalarFunction::Constant { value }
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarFunction::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidSpec("constant value must be finite".into()));
                }
            }
            ScalarFunction::PiecewisePeriodic { period, pieces } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidSpec("period must be positive".into()));
                }
                if pieces.is_empty() {
                    return Err(Error::InvalidSpec("at least one piece is required".into()));
                }
                let tol = SNAP * period;
                if pieces[0].start.abs() > tol {
                    return Err(Error::InvalidSpec("pieces must start at 0".into()));
                }
                if (pieces[pieces.len() - 1].end - period).abs() > tol {
                    return Err(Error::InvalidSpec("pieces must end at the period".into()));
                }
                for p in pieces {
                    if !(p.end > p.start) || !p.value.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "piece [{}, {}) is empty or has a non-finite value",
                            p.start, p.end
                        )));
                    }
                }
                for w in pieces.windows(2) {
                    if (w[1].start - w[0].end).abs() > tol {
                        return Err(Error::InvalidSpec(format!(
                            "pieces overlap or leave a gap at {}",
                            w[0].end
                        )));
                    }
                }
            }
            ScalarFunction::SinusoidAffine {
                offset,
                amplitude,
                frequency,
            } => {
                if !(offset.is_finite() && amplitude.is_finite() && frequency.is_finite()) {
                    return Err(Error::InvalidSpec("sinusoid parameters must be finite".into()));
                }
            }
            ScalarFunction::Tabulated { knots, .. } => check_knots(knots, "tabulated function")?,
        }
        Ok(())
    }

    /// Value at `t`, right-continuous at breakpoints.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        self.evaluate_side(t, Side::Right)
    }

    /// Value at `t` taking the requested one-sided limit at breakpoints.
    pub fn evaluate_side(&self, t: f64, side: Side) -> Result<f64> {
        match self {
            ScalarFunction::Constant { value } => Ok(*value),
            ScalarFunction::PiecewisePeriodic { period, pieces } => {
                Ok(piece_at(*period, pieces, t, side).value)
            }
            ScalarFunction::SinusoidAffine {
                offset,
                amplitude,
                frequency,
            } => Ok(offset + amplitude * libm::sin(frequency * t)),
            ScalarFunction::Tabulated {
                knots,
                interpolation,
            } => tabulated_value(knots, *interpolation, t, side),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarFunction::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// Points in `[lo, hi]` where the function or its derivative may jump.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            ScalarFunction::PiecewisePeriodic { period, pieces } => {
                let first = libm::floor(lo / period) as i64;
                let last = libm::ceil(hi / period) as i64;
                for k in first..=last {
                    for p in pieces {
                        let t = k as f64 * period + p.start;
                        if t >= lo && t <= hi {
                            out.push(t);
                        }
                    }
                }
            }
            ScalarFunction::Tabulated { knots, .. } => {
                out.extend(knots.iter().map(|k| k.0).filter(|t| *t >= lo && *t <= hi));
            }
            _ => {}
        }
        out
    }

    /// `s -> value_factor * f(s / time_factor)`.
    pub fn time_scaled(&self, time_factor: f64, value_factor: f64) -> ScalarFunction {
        match self {
            ScalarFunction::Constant { value } => ScalarFunction::Constant {
                value: value * value_factor,
            },
            ScalarFunction::PiecewisePeriodic { period, pieces } => {
                ScalarFunction::PiecewisePeriodic {
                    period: period * time_factor,
                    pieces: pieces
                        .iter()
                        .map(|p| Piece {
                            start: p.start * time_factor,
                            end: p.end * time_factor,
                            value: p.value * value_factor,
                        })
                        .collect(),
                }
            }
            ScalarFunction::SinusoidAffine {
                offset,
                amplitude,
                frequency,
            } => ScalarFunction::SinusoidAffine {
                offset: offset * value_factor,
                amplitude: amplitude * value_factor,
                frequency: frequency / time_factor,
            },
            ScalarFunction::Tabulated {
                knots,
                interpolation,
            } => ScalarFunction::Tabulated {
                knots: knots
                    .iter()
                    .map(|(t, v)| (t * time_factor, v * value_factor))
                    .collect(),
                interpolation: *interpolation,
            },
        }
    }

    /// Minimum and maximum over a uniform grid on `[lo, hi]` plus both
    /// one-sided values at every breakpoint.
    pub fn sampled_range(&self, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
        if let Some(c) = self.as_constant() {
            return Ok((c, c));
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut visit = |v: f64| {
            min = min.min(v);
            max = max.max(v);
        };
        let n = sample_count(lo, hi, step);
        for i in 0..=n {
            let t = if i == n { hi } else { lo + i as f64 * step };
            visit(self.evaluate(t)?);
        }
        for b in self.breakpoints(lo, hi) {
            if b > lo {
                visit(self.evaluate_side(b, Side::Left)?);
            }
            if b < hi {
                visit(self.evaluate_side(b, Side::Right)?);
            }
        }
        Ok((min, max))
    }
}

pub(crate) fn sample_count(lo: f64, hi: f64, step: f64) -> usize {
    if hi <= lo {
        0
    } else {
        libm::ceil((hi - lo) / step - 1e-9).max(1.0) as usize
    }
}

fn piece_at(period: f64, pieces: &[Piece], t: f64, side: Side) -> &Piece {
    let mut u = libm::fmod(t, period);
    if u < 0.0 {
        u += period;
    }
    let tol = SNAP * period;
    let last = pieces.len() - 1;
    let idx = match side {
        Side::Right => pieces.iter().position(|p| u < p.end - tol).unwrap_or(0),
        Side::Left => {
            if u <= tol {
                last
            } else {
                pieces.iter().position(|p| u <= p.end + tol).unwrap_or(last)
            }
        }
    };
    &pieces[idx]
}

/// Shape of a delay argument `h(t) <= t`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DelayKind {
    /// `h(t) = t - tau`.
    ConstantLag { tau: f64 },
    /// `h(t) = floor(t)`.
    Floor,
    /// `h(t) = t - lag(t)` with `lag` linearly interpolated from `(t, lag)` knots.
    TabulatedLag { knots: Vec<(f64, f64)> },
}

/// A delay argument together with a certified bound on `t - h(t)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "DelaySpecRepr", into = "DelaySpecRepr")
)]
pub struct DelaySpec {
    kind: DelayKind,
    lag_bound: f64,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct DelaySpecRepr {
    #[serde(flatten)]
    kind: DelayKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lag_bound: Option<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<DelaySpecRepr> for DelaySpec {
    type Error = Error;

    fn try_from(repr: DelaySpecRepr) -> Result<Self> {
        let spec = DelaySpec::new(repr.kind)?;
        match repr.lag_bound {
            Some(bound) => spec.with_lag_bound(bound),
            None => Ok(spec),
        }
    }
}

#[cfg(feature = "serde")]
impl From<DelaySpec> for DelaySpecRepr {
    fn from(spec: DelaySpec) -> Self {
        DelaySpecRepr {
            kind: spec.kind,
            lag_bound: Some(spec.lag_bound),
        }
    }
}

impl DelaySpec {
    /// Builds a delay and computes the tightest lag bound of the variant.
    pub fn new(kind: DelayKind) -> Result<Self> {
        let lag_bound = match &kind {
            DelayKind::ConstantLag { tau } => {
                if !(tau.is_finite() && *tau >= 0.0) {
                    return Err(Error::InvalidSpec(format!("lag must be >= 0, got {tau}")));
                }
                *tau
            }
            DelayKind::Floor => 1.0,
            DelayKind::TabulatedLag { knots } => {
                check_knots(knots, "tabulated lag")?;
                if knots.iter().any(|k| k.1 < 0.0) {
                    return Err(Error::InvalidSpec("tabulated lags must be >= 0".into()));
                }
                knots.iter().map(|k| k.1).fold(0.0, f64::max)
            }
        };
        Ok(DelaySpec { kind, lag_bound })
    }

    pub fn constant_lag(tau: f64) -> Result<Self> {
        Self::new(DelayKind::ConstantLag { tau })
    }

    pub fn floor() -> Self {
        DelaySpec {
            kind: DelayKind::Floor,
            lag_bound: 1.0,
        }
    }

    /// Replaces the lag bound by a looser user-supplied one.
    pub fn with_lag_bound(self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= self.lag_bound - 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "lag_bound {bound} is smaller than the largest lag {}",
                self.lag_bound
            )));
        }
        Ok(DelaySpec {
            lag_bound: bound,
            ..self
        })
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    pub fn lag_bound(&self) -> f64 {
        self.lag_bound
    }

    pub fn as_constant_lag(&self) -> Option<f64> {
        match self.kind {
            DelayKind::ConstantLag { tau } => Some(tau),
            _ => None,
        }
    }

    /// `h(t)`; right-continuous where the delay jumps.
    pub fn delay_at(&self, t: f64) -> Result<f64> {
        self.delay_at_side(t, Side::Right)
    }

    pub fn delay_at_side(&self, t: f64, side: Side) -> Result<f64> {
        match &self.kind {
            DelayKind::ConstantLag { tau } => Ok(t - tau),
            DelayKind::Floor => {
                let tol = snap_tol(t);
                let nearest = libm::round(t);
                if (t - nearest).abs() <= tol {
                    Ok(match side {
                        Side::Right => nearest,
                        Side::Left => nearest - 1.0,
                    })
                } else {
                    Ok(libm::floor(t))
                }
            }
            DelayKind::TabulatedLag { knots } => {
                let lag = tabulated_value(knots, Interpolation::Linear, t, side)?;
                Ok(t - lag)
            }
        }
    }

    /// Points in `[lo, hi]` where `h` jumps or has a kink.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.kind {
            DelayKind::ConstantLag { .. } => Vec::new(),
            DelayKind::Floor => {
                let first = libm::ceil(lo) as i64;
                let last = libm::floor(hi) as i64;
                (first..=last).map(|n| n as f64).collect()
            }
            DelayKind::TabulatedLag { knots } => knots
                .iter()
                .map(|k| k.0)
                .filter(|t| *t >= lo && *t <= hi)
                .collect(),
        }
    }
}

/// A Stieltjes atom at relative position `position` in `[h(t), t]`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Unnormalized weight over relative position `p` in `[0, 1]`, where
/// `s = h(t) + p (t - h(t))`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum DensityShape {
    Uniform,
    /// `exp(rate (p - 1))`: most weight on recent states for `rate > 0`.
    Exponential { rate: f64 },
    /// Piecewise-linear weights through `(p, w)` knots covering `[0, 1]`.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl DensityShape {
    pub fn weight(&self, p: f64) -> f64 {
        match self {
            DensityShape::Uniform => 1.0,
            DensityShape::Exponential { rate } => libm::exp(rate * (p - 1.0)),
            DensityShape::Tabulated { knots } => {
                tabulated_value(knots, Interpolation::Linear, p.clamp(0.0, 1.0), Side::Right)
                    .unwrap_or(0.0)
            }
        }
    }

    /// Integral of the weight over `[0, 1]`.
    pub fn total_weight(&self) -> f64 {
        match self {
            DensityShape::Uniform => 1.0,
            DensityShape::Exponential { rate } => {
                if rate.abs() < 1e-8 {
                    1.0 - rate / 2.0
                } else {
                    -libm::expm1(-rate) / rate
                }
            }
            DensityShape::Tabulated { knots } => knots
                .windows(2)
                .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
                .sum(),
        }
    }

    /// Interior points of `[0, 1]` where the weight has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DensityShape::Tabulated { knots } => knots
                .iter()
                .map(|k| k.0)
                .filter(|p| *p > 0.0 && *p < 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Normalized measure over `[h(t), t]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Kernel {
    Atoms { atoms: Vec<Atom> },
    Density { density: DensityShape },
}

impl Kernel {
    pub fn uniform() -> Self {
        Kernel::Density {
            density: DensityShape::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidSpec("atom list is empty".into()));
                }
                for a in atoms {
                    if !(0.0..=1.0).contains(&a.position) || !(a.weight > 0.0) {
                        return Err(Error::InvalidSpec(format!(
                            "atom at {} with weight {} is outside [0,1] or not positive",
                            a.position, a.weight
                        )));
                    }
                }
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "atom weights sum to {total}, expected 1"
                    )));
                }
            }
            Kernel::Density { density } => match density {
                DensityShape::Uniform => {}
                DensityShape::Exponential { rate } => {
                    if !rate.is_finite() {
                        return Err(Error::InvalidSpec("exponential rate must be finite".into()));
                    }
                }
                DensityShape::Tabulated { knots } => {
                    check_knots(knots, "density")?;
                    let (p0, pn) = (knots[0].0, knots[knots.len() - 1].0);
                    if p0.abs() > SNAP || (pn - 1.0).abs() > SNAP {
                        return Err(Error::InvalidSpec("density knots must span [0, 1]".into()));
                    }
                    if knots.iter().any(|k| k.1 < 0.0) {
                        return Err(Error::InvalidSpec("density weights must be >= 0".into()));
                    }
                    if !(density.total_weight() > 0.0) {
                        return Err(Error::InvalidSpec("density has zero mass".into()));
                    }
                }
            },
        }
        Ok(())
    }
}

/// `b(t) * x(h(t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentratedTerm {
    pub coefficient: ScalarFunction,
    pub delay: DelaySpec,
}

/// `b(t) * integral_{h(t)}^{t} x(s) d_s R(t, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributedTerm {
    pub coefficient: ScalarFunction,
    pub lower_limit: DelaySpec,
    pub kernel: Kernel,
}

/// Initial function on `t <= 0`; `value_at_zero` is `x(0)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialCondition {
    pub history: ScalarFunction,
    pub value_at_zero: f64,
}

impl InitialCondition {
    pub fn constant(value: f64) -> Self {
        InitialCondition {
            history: ScalarFunction::constant(value),
            value_at_zero: value,
        }
    }

    /// `x(t)` for `t <= 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if t >= 0.0 {
            return Ok(self.value_at_zero);
        }
        self.history.evaluate(t).map_err(|e| match e {
            Error::Extrapolation { .. } => Error::HistoryDomain { s: t },
            other => other,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        InitialCondition {
            history: self.history.time_scaled(1.0, factor),
            value_at_zero: self.value_at_zero * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value_at_zero.is_finite() {
            return Err(Error::InvalidSpec("x(0) must be finite".into()));
        }
        self.history.validate()
    }
}

/// `x' + a(t) x + sum_k b_k(t) x(h_k(t)) + sum_l b_l(t) int x dR_l = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDDE {
    pub a: ScalarFunction,
    pub concentrated: Vec<ConcentratedTerm>,
    pub distributed: Vec<DistributedTerm>,
    pub initial: InitialCondition,
}

impl LinearDDE {
    pub fn new(a: ScalarFunction, initial: InitialCondition) -> Self {
        LinearDDE {
            a,
            concentrated: Vec::new(),
            distributed: Vec::new(),
            initial,
        }
    }

    pub fn with_term(mut self, coefficient: ScalarFunction, delay: DelaySpec) -> Self {
        self.concentrated.push(ConcentratedTerm { coefficient, delay });
        self
    }

    pub fn with_distributed(mut self, term: DistributedTerm) -> Self {
        self.distributed.push(term);
        self
    }

    /// All delayed coefficients `b_k`, concentrated first.
    pub fn delay_coefficients(&self) -> impl Iterator<Item = &ScalarFunction> {
        self.concentrated
            .iter()
            .map(|c| &c.coefficient)
            .chain(self.distributed.iter().map(|d| &d.coefficient))
    }

    /// All delay arguments (concentrated delays and distributed lower limits).
    pub fn delays(&self) -> impl Iterator<Item = &DelaySpec> {
        self.concentrated
            .iter()
            .map(|c| &c.delay)
            .chain(self.distributed.iter().map(|d| &d.lower_limit))
    }

    pub fn max_lag_bound(&self) -> f64 {
        self.delays().map(DelaySpec::lag_bound).fold(0.0, f64::max)
    }

    /// Structural checks plus sampled nonnegativity of `a` and every `b_k`
    /// on `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        self.a.validate()?;
        self.initial.validate()?;
        for c in self.delay_coefficients() {
            c.validate()?;
        }
        for d in &self.distributed {
            d.kernel.validate()?;
        }
        let step = sampling_step(horizon);
        let (amin, _) = self.a.sampled_range(0.0, horizon, step)?;
        if amin < 0.0 {
            return Err(Error::Precondition(format!(
                "a(t) takes the negative value {amin}"
            )));
        }
        for c in self.delay_coefficients() {
            let (bmin, _) = c.sampled_range(0.0, horizon, step)?;
            if bmin < 0.0 {
                return Err(Error::Precondition(format!(
                    "a delay coefficient takes the negative value {bmin}"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn sampling_step(horizon: f64) -> f64 {
    (horizon / 20_000.0).clamp(1e-3, 0.01)
}

/// Closed catalog of nonlinearities `f(t, u)` / `g(t, u)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Nonlinearity {
    /// `c(t) * u`.
    Linear { coefficient: ScalarFunction },
    /// `r(t) (alpha / K) (1 - exp(-u))`: the instantaneous part of the
    /// log-transformed Mackey-Glass equation.
    MackeyGlassDecay {
        alpha: f64,
        equilibrium: f64,
        r: ScalarFunction,
    },
    /// `beta r(t) [1/(1 + K^-n e^{-n u}) - 1/(1 + K^-n)]`: the delayed part of
    /// the log-transformed Mackey-Glass equation.
    MackeyGlassFeedback {
        beta: f64,
        n: f64,
        equilibrium: f64,
        r: ScalarFunction,
    },
    /// Time-independent table `u -> value`, linearly interpolated.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl Nonlinearity {
    pub fn eval(&self, t: f64, side: Side, u: f64) -> Result<f64> {
        match self {
            Nonlinearity::Linear { coefficient } => Ok(coefficient.evaluate_side(t, side)? * u),
            Nonlinearity::MackeyGlassDecay {
                alpha,
                equilibrium,
                r,
            } => Ok(r.evaluate_side(t, side)? * (alpha / equilibrium) * -libm::expm1(-u)),
            Nonlinearity::MackeyGlassFeedback {
                beta,
                n,
                equilibrium,
                r,
            } => {
                let kn = libm::pow(*equilibrium, -n);
                let shifted = 1.0 / (1.0 + kn * libm::exp(-n * u));
                let base = 1.0 / (1.0 + kn);
                Ok(beta * r.evaluate_side(t, side)? * (shifted - base))
            }
            Nonlinearity::Tabulated { knots } => {
                tabulated_value(knots, Interpolation::Linear, u, Side::Right)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Linear { coefficient } => coefficient.validate(),
            Nonlinearity::MackeyGlassDecay {
                alpha,
                equilibrium,
                r,
            } => {
                if !(*alpha > 0.0 && *equilibrium > 0.0) {
                    return Err(Error::InvalidSpec("alpha and K must be positive".into()));
                }
                r.validate()
            }
            Nonlinearity::MackeyGlassFeedback {
                beta,
                n,
                equilibrium,
                r,
            } => {
                if !(*beta > 0.0 && *n > 0.0 && *equilibrium > 0.0) {
                    return Err(Error::InvalidSpec("beta, n and K must be positive".into()));
                }
                r.validate()
            }
            Nonlinearity::Tabulated { knots } => {
                check_knots(knots, "nonlinearity table")?;
                let zero = tabulated_value(knots, Interpolation::Linear, 0.0, Side::Right)?;
                if zero.abs() > 1e-12 {
                    return Err(Error::InvalidSpec("tabulated nonlinearity must vanish at 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Time breakpoints of any time-dependent factor.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            Nonlinearity::Linear { coefficient } => coefficient.breakpoints(lo, hi),
            Nonlinearity::MackeyGlassDecay { r, .. } | Nonlinearity::MackeyGlassFeedback { r, .. } => {
                r.breakpoints(lo, hi)
            }
            Nonlinearity::Tabulated { .. } => Vec::new(),
        }
    }
}

/// Delayed terms of a nonlinear equation.
#[derive(Clone, Debug, PartialEq)]
pub enum NonlinearTerm {
    /// `g(t, x(h(t)))`.
    Concentrated { g: Nonlinearity, delay: DelaySpec },
    /// `integral_{h(t)}^{t} g(t, x(s)) d_s R(t, s)`.
    Distributed {
        g: Nonlinearity,
        lower_limit: DelaySpec,
        kernel: Kernel,
    },
}

impl NonlinearTerm {
    pub fn g(&self) -> &Nonlinearity {
        match self {
            NonlinearTerm::Concentrated { g, .. } | NonlinearTerm::Distributed { g, .. } => g,
        }
    }

    pub fn delay(&self) -> &DelaySpec {
        match self {
            NonlinearTerm::Concentrated { delay, .. } => delay,
            NonlinearTerm::Distributed { lower_limit, .. } => lower_limit,
        }
    }
}

/// Sector constants `a0 <= f(t,u)/u <= A`, `0 <= g_k(t,u)/u <= b_k`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectorBounds {
    pub a0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub upper: f64,
    pub b: Vec<f64>,
}

impl SectorBounds {
    pub fn b0(&self) -> f64 {
        self.b.iter().sum()
    }
}

/// `x' + f(t, x) + sum_k g_k(t, x(h_k(t))) = 0` (or the distributed form).
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearDDE {
    pub f: Nonlinearity,
    pub terms: Vec<NonlinearTerm>,
    pub sector: SectorBounds,
    /// `[x1, x2]`, the box on which the sector bounds hold.
    pub state_box: (f64, f64),
    /// `[x1^0, x2^0]`, admissible initial values.
    pub admissible_initial: (f64, f64),
    pub initial: InitialCondition,
}

impl NonlinearDDE {
    pub fn max_lag_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.delay().lag_bound())
            .fold(0.0, f64::max)
    }

    pub fn has_distributed(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t, NonlinearTerm::Distributed { .. }))
    }

    pub fn validate(&self) -> Result<()> {
        self.f.validate()?;
        self.initial.validate()?;
        for t in &self.terms {
            t.g().validate()?;
            if let NonlinearTerm::Distributed { kernel, .. } = t {
                kernel.validate()?;
            }
        }
        let s = &self.sector;
        if !(s.a0 > 0.0) || !(s.upper >= s.a0) {
            return Err(Error::InvalidSpec(format!(
                "sector bounds need 0 < a0 <= A, got a0 = {}, A = {}",
                s.a0, s.upper
            )));
        }
        if s.b.len() != self.terms.len() || s.b.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::InvalidSpec(
                "one nonnegative sector bound b_k is required per delayed term".into(),
            ));
        }
        let (x1, x2) = self.state_box;
        if !(x1 <= 0.0 && 0.0 <= x2 && x1.is_finite() && x2.is_finite()) {
            return Err(Error::InvalidSpec("state box must be finite and contain 0".into()));
        }
        let (lo, hi) = self.admissible_initial;
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(Error::InvalidSpec("admissible initial box must contain 0".into()));
        }
        let lag = self.max_lag_bound();
        let (hmin, hmax) = if lag > 0.0 {
            let (a, b) = self.initial.history.sampled_range(-lag, 0.0, sampling_step(lag))?;
            (a.min(self.initial.value_at_zero), b.max(self.initial.value_at_zero))
        } else {
            (self.initial.value_at_zero, self.initial.value_at_zero)
        };
        if hmin < lo || hmax > hi {
            return Err(Error::Precondition(format!(
                "initial function range [{hmin}, {hmax}] leaves the admissible box [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Samples `f(t,u)/u` and `g_k(t,u)/u` on a `(t, u)` grid over
    /// `[0, horizon] x [x1, x2] \ {0}` and reports the first violation.
    pub fn verify_sector_bounds(&self, horizon: f64, t_samples: usize, u_samples: usize) -> Result<()> {
        let (x1, x2) = self.state_box;
        let tol = 1e-9;
        let nt = t_samples.max(1);
        let nu = u_samples.max(2);
        for i in 0..=nt {
            let t = horizon * i as f64 / nt as f64;
            for j in 0..=nu {
                let u = x1 + (x2 - x1) * j as f64 / nu as f64;
                if u.abs() < 1e-12 {
                    continue;
                }
                let fu = self.f.eval(t, Side::Right, u)? / u;
                if fu < self.sector.a0 * (1.0 - tol) || fu > self.sector.upper * (1.0 + tol) {
                    return Err(Error::Precondition(format!(
                        "f(t,u)/u = {fu} at (t, u) = ({t}, {u}) leaves [{}, {}]",
                        self.sector.a0, self.sector.upper
                    )));
                }
                for (k, term) in self.terms.iter().enumerate() {
                    let gu = term.g().eval(t, Side::Right, u)? / u;
                    let bk = self.sector.b[k];
                    if gu < -tol || gu > bk * (1.0 + tol) + tol {
                        return Err(Error::Precondition(format!(
                            "g_{k}(t,u)/u = {gu} at (t, u) = ({t}, {u}) leaves [0, {bk}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn a_def(b: f64, eps: f64, tail: f64) -> ScalarFunction {
        ScalarFunction::PiecewisePeriodic {
            period: 1.0,
            pieces: vec![
                Piece { start: 0.0, end: eps, value: 3.0 * b },
                Piece { start: eps, end: 1.0, value: tail },
            ],
        }
    }

    #[test]
    fn sinusoid_at_zero() {
        let r = ScalarFunction::SinusoidAffine {
            offset: 2.7,
            amplitude: 0.3,
            frequency: 1.0,
        };
        assert_eq!(r.evaluate(0.0).unwrap(), 2.7);
    }

    #[test]
    fn constant_everywhere() {
        let c = ScalarFunction::constant(1.8);
        for t in [0.0, 0.3, 17.0, 1e6] {
            assert_eq!(c.evaluate(t).unwrap(), 1.8);
        }
    }

    #[test]
    fn piecewise_coefficient_pieces() {
        let a = a_def(1.8, 0.256721, 0.0);
        a.validate().unwrap();
        assert!((a.evaluate(1.1).unwrap() - 5.4).abs() < 1e-12);
        assert_eq!(a.evaluate(1.3).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_one_sided_limits() {
        let eps = libm::log(4.0) / 5.4;
        let a = a_def(1.8, eps, 0.5);
        let t = 3.0 + eps;
        assert_eq!(a.evaluate_side(t, Side::Right).unwrap(), 0.5);
        assert!((a.evaluate_side(t, Side::Left).unwrap() - 5.4).abs() < 1e-12);
        assert!((a.evaluate_side(4.0, Side::Right).unwrap() - 5.4).abs() < 1e-12);
        assert_eq!(a.evaluate_side(4.0, Side::Left).unwrap(), 0.5);
    }

    #[test]
    fn piecewise_rejects_gaps_and_overlaps() {
        let gap = ScalarFunction::PiecewisePeriodic {
            period: 1.0,
            pieces: vec![
                Piece { start: 0.0, end: 0.4, value: 1.0 },
                Piece { start: 0.5, end: 1.0, value: 2.0 },
            ],
        };
        assert!(matches!(gap.validate(), Err(Error::InvalidSpec(_))));
        let overlap = ScalarFunction::PiecewisePeriodic {
            period: 1.0,
            pieces: vec![
                Piece { start: 0.0, end: 0.6, value: 1.0 },
                Piece { start: 0.5, end: 1.0, value: 2.0 },
            ],
        };
        assert!(overlap.validate().is_err());
    }

    #[test]
    fn tabulated_extrapolation_is_an_error() {
        let f = ScalarFunction::Tabulated {
            knots: vec![(0.0, 1.0), (1.0, 3.0)],
            interpolation: Interpolation::Linear,
        };
        assert_eq!(f.evaluate(0.5).unwrap(), 2.0);
        assert!(matches!(f.evaluate(1.5), Err(Error::Extrapolation { .. })));
        let unsorted = ScalarFunction::Tabulated {
            knots: vec![(0.0, 1.0), (0.0, 3.0)],
            interpolation: Interpolation::Step,
        };
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn tabulated_step_is_right_continuous() {
        let f = ScalarFunction::Tabulated {
            knots: vec![(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)],
            interpolation: Interpolation::Step,
        };
        assert_eq!(f.evaluate(1.0).unwrap(), 3.0);
        assert_eq!(f.evaluate_side(1.0, Side::Left).unwrap(), 1.0);
        assert_eq!(f.evaluate(1.7).unwrap(), 3.0);
    }

    #[test]
    fn delay_examples() {
        assert_eq!(DelaySpec::floor().delay_at(2.7).unwrap(), 2.0);
        assert_eq!(DelaySpec::constant_lag(0.0).unwrap().delay_at(5.0).unwrap(), 5.0);
        let d = DelaySpec::constant_lag(1.0).unwrap();
        assert!((d.delay_at(0.4).unwrap() + 0.6).abs() < 1e-15);
        assert_eq!(DelaySpec::floor().delay_at_side(3.0, Side::Left).unwrap(), 2.0);
        assert_eq!(DelaySpec::floor().delay_at_side(3.0, Side::Right).unwrap(), 3.0);
    }

    #[test]
    fn lag_bounds() {
        assert_eq!(DelaySpec::floor().lag_bound(), 1.0);
        let tab = DelaySpec::new(DelayKind::TabulatedLag {
            knots: vec![(0.0, 0.2), (5.0, 0.9), (10.0, 0.4)],
        })
        .unwrap();
        assert_eq!(tab.lag_bound(), 0.9);
        assert!(tab.clone().with_lag_bound(0.5).is_err());
        assert_eq!(tab.with_lag_bound(2.0).unwrap().lag_bound(), 2.0);
        assert!(DelaySpec::constant_lag(-1.0).is_err());
    }

    #[test]
    fn atom_weights_must_sum_to_one() {
        let ok = Kernel::Atoms {
            atoms: vec![
                Atom { position: 0.0, weight: 0.25 },
                Atom { position: 1.0, weight: 0.75 },
            ],
        };
        ok.validate().unwrap();
        let bad = Kernel::Atoms {
            atoms: vec![Atom { position: 0.5, weight: 0.9 }],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn exponential_density_mass() {
        let d = DensityShape::Exponential { rate: 2.0 };
        let exact = (1.0 - libm::exp(-2.0)) / 2.0;
        assert!((d.total_weight() - exact).abs() < 1e-15);
        assert!((DensityShape::Exponential { rate: 0.0 }.total_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_problem_rejects_negative_coefficients() {
        let p = LinearDDE::new(ScalarFunction::constant(1.0), InitialCondition::constant(1.0))
            .with_term(
                ScalarFunction::SinusoidAffine {
                    offset: 0.0,
                    amplitude: 1.0,
                    frequency: 1.0,
                },
                DelaySpec::constant_lag(1.0).unwrap(),
            );
        assert!(matches!(p.validate(10.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn history_domain_error() {
        let ic = InitialCondition {
            history: ScalarFunction::Tabulated {
                knots: vec![(-1.0, 0.0), (0.0, 1.0)],
                interpolation: Interpolation::Linear,
            },
            value_at_zero: 1.0,
        };
        assert_eq!(ic.value(-0.5).unwrap(), 0.5);
        assert!(matches!(ic.value(-2.0), Err(Error::HistoryDomain { .. })));
    }
}

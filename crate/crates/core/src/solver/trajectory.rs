use alloc::format;
use alloc::vec::Vec;

use crate::model::InitialCondition;
use crate::{Error, Result};

/// Cubic Hermite piece on `[t0, t1]` built from values and one-sided
/// derivatives at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
    /// Right derivative at `t0`.
    pub d0: f64,
    /// Left derivative at `t1`.
    pub d1: f64,
}

impl Segment {
    pub fn value(&self, t: f64) -> f64 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.x0 + h10 * h * self.d0 + h01 * self.x1 + h11 * h * self.d1
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let dh00 = (6.0 * s2 - 6.0 * s) / h;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / h;
        let dh11 = 3.0 * s2 - 2.0 * s;
        dh00 * self.x0 + dh10 * self.d0 + dh01 * self.x1 + dh11 * self.d1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakpointKind {
    /// `t = 0`, where the derivative of the solution may jump.
    Origin,
    /// Discontinuity of a coefficient.
    Coefficient,
    /// Jump or kink of a delay argument (every integer for `floor`).
    Delay,
    /// A breakpoint carried forward through a constant lag.
    Propagated { generation: u8 },
}

impl BreakpointKind {
    pub fn label(&self) -> &'static str {
        match self {
            BreakpointKind::Origin => "origin",
            BreakpointKind::Coefficient => "coefficient",
            BreakpointKind::Delay => "delay",
            BreakpointKind::Propagated { generation: 1 } => "propagated_1",
            BreakpointKind::Propagated { generation: 2 } => "propagated_2",
            BreakpointKind::Propagated { .. } => "propagated_3",
        }
    }

    fn priority(&self) -> u8 {
        match self {
            BreakpointKind::Origin => 0,
            BreakpointKind::Delay => 1,
            BreakpointKind::Coefficient => 2,
            BreakpointKind::Propagated { generation } => 2 + generation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakpoint {
    pub t: f64,
    pub kind: BreakpointKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Warning {
    /// The state left the box on which the sector bounds were declared.
    LeftStateBox { t: f64, x: f64 },
    /// Example-1 coefficient outside the `1.6 < b < 1.9` regime.
    OutOfRegime { b: f64 },
}

/// Dense numerical solution on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub(crate) segments: Vec<Segment>,
    pub(crate) initial: InitialCondition,
    pub(crate) breakpoints: Vec<Breakpoint>,
    pub(crate) step_size: f64,
    pub(crate) warnings: Vec<Warning>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t1)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn initial_history(&self) -> &InitialCondition {
        &self.initial
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// `x(t)`; times `t <= 0` read the initial history.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return self.initial.value(t);
        }
        let horizon = self.horizon();
        if t > horizon * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Domain(format!(
                "t = {t} is beyond the integration horizon {horizon}"
            )));
        }
        let i = self
            .segments
            .partition_point(|s| s.t1 < t)
            .min(self.segments.len() - 1);
        Ok(self.segments[i].value(t))
    }

    /// Grid nodes `(t_i, x(t_i))`, from `t = 0` to the horizon.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.segments
            .first()
            .map(|s| (s.t0, s.x0))
            .into_iter()
            .chain(self.segments.iter().map(|s| (s.t1, s.x1)))
    }

    /// Uniform samples `0, step, 2 step, ...` up to and including the horizon.
    pub fn sample(&self, step: f64) -> Result<Vec<(f64, f64)>> {
        if !(step > 0.0) {
            return Err(Error::Precondition(format!("sampling step must be positive, got {step}")));
        }
        let horizon = self.horizon();
        let n = crate::model::sample_count(0.0, horizon, step);
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = if i == n { horizon } else { i as f64 * step };
            out.push((t, self.evaluate(t)?));
        }
        Ok(out)
    }
}

/// Sorts and merges breakpoints that coincide up to rounding, keeping the
/// most primary kind.
pub(crate) fn merge_breakpoints(mut bps: Vec<Breakpoint>) -> Vec<Breakpoint> {
    bps.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut out: Vec<Breakpoint> = Vec::with_capacity(bps.len());
    for bp in bps {
        match out.last_mut() {
            Some(last) if (bp.t - last.t).abs() <= 1e-9 * bp.t.abs().max(1.0) => {
                if bp.kind.priority() < last.kind.priority() {
                    *last = bp;
                }
            }
            _ => out.push(bp),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.25 * t * t * t;
        let df = |t: f64| -2.0 + t - 0.75 * t * t;
        let seg = Segment {
            t0: 0.3,
            t1: 0.8,
            x0: f(0.3),
            x1: f(0.8),
            d0: df(0.3),
            d1: df(0.8),
        };
        for i in 0..=10 {
            let t = 0.3 + 0.05 * i as f64;
            assert!((seg.value(t) - f(t)).abs() < 1e-14);
            assert!((seg.derivative(t) - df(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn merging_keeps_primary_kind() {
        let merged = merge_breakpoints(alloc::vec![
            Breakpoint { t: 1.0 + 1e-13, kind: BreakpointKind::Propagated { generation: 1 } },
            Breakpoint { t: 1.0, kind: BreakpointKind::Delay },
            Breakpoint { t: 0.0, kind: BreakpointKind::Origin },
        ]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[1].kind, BreakpointKind::Delay);
        assert_eq!(merged[1].t, 1.0);
    }
}

//! Fixed-step method of steps with the classical four-stage scheme.
//!
//! The grid contains every breakpoint, so each step sees smooth data. Stage
//! times at the start and middle of a step take right limits of the data,
//! the stage at the end of the step takes left limits. Delayed values are
//! read from the cubic Hermite interpolant of the completed steps. When a
//! read lands inside the current step (vanishing lag, distributed kernels
//! reaching up to `t`) the step is repeated with the provisional interpolant
//! of the step itself until the end value settles.

use alloc::vec::Vec;
use core::cell::Cell;

use super::trajectory::{Breakpoint, BreakpointKind, Segment, Trajectory};
use super::IntegratorConfig;
use crate::model::{DensityShape, InitialCondition, Kernel, Side};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Right-hand side `x'(t) = F(t, x(t), past)`.
pub(crate) trait Rhs {
    fn derivative(&self, t: f64, side: Side, x: f64, past: &Past<'_>) -> Result<f64>;
}

/// Read access to the solution before the current stage.
pub(crate) struct Past<'a> {
    initial: &'a InitialCondition,
    segments: &'a [Segment],
    provisional: Option<Segment>,
    start: f64,
    provisional_reads: Cell<bool>,
}

impl Past<'_> {
    /// `x(s)` for `s` up to the end of the current step.
    pub(crate) fn value(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return self.initial.value(s);
        }
        if s <= self.start + 1e-12 * self.start.abs().max(1.0) {
            if self.segments.is_empty() {
                return Ok(self.initial.value_at_zero);
            }
            let i = self
                .segments
                .partition_point(|seg| seg.t1 < s)
                .min(self.segments.len() - 1);
            return Ok(self.segments[i].value(s));
        }
        self.provisional_reads.set(true);
        match (&self.provisional, self.segments.last()) {
            (Some(seg), _) => Ok(seg.value(s)),
            (None, Some(last)) => Ok(last.value(s)),
            (None, None) => Ok(self.initial.value_at_zero),
        }
    }
}

/// Quadrature for normalized kernels over `[lo, hi]`.
pub(crate) struct KernelQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panel: f64,
}

impl KernelQuadrature {
    pub(crate) fn new(nodes_per_panel: usize, panel: f64) -> Self {
        let (x, w) = gauss_legendre(nodes_per_panel.max(2));
        KernelQuadrature {
            nodes: x.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
            panel,
        }
    }

    /// `integral_{lo}^{hi} f(s) d_s R(s)` for the normalized kernel.
    pub(crate) fn integrate<F>(&self, kernel: &Kernel, lo: f64, hi: f64, f: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let len = hi - lo;
        match kernel {
            Kernel::Atoms { atoms } => {
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.weight * f(lo + a.position * len)?;
                }
                Ok(acc)
            }
            Kernel::Density { density } => {
                if len <= 1e-14 * hi.abs().max(1.0) {
                    return f(hi);
                }
                let mut cuts = density.breakpoints();
                if lo < 0.0 && hi > 0.0 {
                    cuts.push(-lo / len);
                }
                cuts.push(0.0);
                cuts.push(1.0);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                // Non-uniform weights get a few panels even on short windows.
                let min_panels = match density {
                    DensityShape::Uniform => 1.0,
                    _ => 4.0,
                };
                let mut acc = 0.0;
                let mut mass = 0.0;
                for w in cuts.windows(2) {
                    let (p0, p1) = (w[0], w[1]);
                    let m = libm::ceil((p1 - p0) * len / self.panel - 1e-9)
                        .max(libm::ceil(min_panels * (p1 - p0)))
                        .max(1.0) as usize;
                    let dp = (p1 - p0) / m as f64;
                    for j in 0..m {
                        let base = p0 + j as f64 * dp;
                        for (x, wt) in self.nodes.iter().zip(&self.weights) {
                            let p = base + x * dp;
                            let wp = wt * dp * density.weight(p);
                            mass += wp;
                            acc += wp * f(lo + p * len)?;
                        }
                    }
                }
                // Dividing by the discrete mass keeps the rule exact on constants.
                Ok(acc / mass)
            }
        }
    }
}

/// Primary breakpoints (origin, coefficient and delay discontinuities)
/// carried forward through every positive constant lag for three
/// generations. `history` holds kinks of the initial function at `t < 0`,
/// which only matter once propagated.
pub(crate) fn collect_breakpoints(
    horizon: f64,
    coefficient: Vec<f64>,
    delay: Vec<f64>,
    history: Vec<f64>,
    lags: &[f64],
) -> Vec<Breakpoint> {
    const MAX_BREAKPOINTS: usize = 1 << 20;
    let mut all = Vec::new();
    all.push(Breakpoint { t: 0.0, kind: BreakpointKind::Origin });
    all.extend(
        coefficient
            .into_iter()
            .filter(|t| *t > 0.0 && *t <= horizon)
            .map(|t| Breakpoint { t, kind: BreakpointKind::Coefficient }),
    );
    all.extend(
        delay
            .into_iter()
            .filter(|t| *t > 0.0 && *t <= horizon)
            .map(|t| Breakpoint { t, kind: BreakpointKind::Delay }),
    );
    let lags: Vec<f64> = lags.iter().copied().filter(|l| *l > 0.0).collect();
    let mut generation: Vec<f64> = all
        .iter()
        .filter(|b| b.kind != BreakpointKind::Delay)
        .map(|b| b.t)
        .chain(history.into_iter().filter(|t| *t < 0.0))
        .collect();
    for g in 1..=3u8 {
        let mut next = Vec::new();
        for &t in &generation {
            for &lag in &lags {
                let s = t + lag;
                if s > 0.0 && s <= horizon {
                    next.push(s);
                }
            }
        }
        next.sort_by(f64::total_cmp);
        next.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
        if all.len() + next.len() > MAX_BREAKPOINTS {
            break;
        }
        all.extend(next.iter().map(|&t| Breakpoint {
            t,
            kind: BreakpointKind::Propagated { generation: g },
        }));
        generation = next;
    }
    super::trajectory::merge_breakpoints(all)
}

/// Step end points: every breakpoint plus uniform subdivisions no longer
/// than the configured step.
fn grid(breakpoints: &[Breakpoint], cfg: &IntegratorConfig) -> Vec<f64> {
    let mut knots: Vec<f64> = breakpoints
        .iter()
        .map(|b| b.t)
        .filter(|t| *t >= 0.0 && *t < cfg.horizon)
        .collect();
    knots.push(cfg.horizon);
    if knots[0] > 0.0 {
        knots.insert(0, 0.0);
    }
    let mut out = Vec::with_capacity((cfg.horizon / cfg.step_size) as usize + knots.len());
    out.push(knots[0]);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 1e-12 * b.abs().max(1.0) {
            continue;
        }
        let m = libm::ceil((b - a) / cfg.step_size - 1e-9).max(1.0) as usize;
        let h = (b - a) / m as f64;
        for i in 1..m {
            out.push(a + i as f64 * h);
        }
        out.push(b);
    }
    out
}

const MAX_SWEEPS: usize = 30;

pub(crate) fn run<R: Rhs>(
    rhs: &R,
    initial: &InitialCondition,
    breakpoints: Vec<Breakpoint>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let times = grid(&breakpoints, cfg);
    let mut segments: Vec<Segment> = Vec::with_capacity(times.len());
    let mut x0 = initial.value_at_zero;

    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let tm = t0 + 0.5 * h;
        let mut past = Past {
            initial,
            segments: &segments,
            provisional: None,
            start: t0,
            provisional_reads: Cell::new(false),
        };
        let k1 = rhs.derivative(t0, Side::Right, x0, &past)?;
        past.provisional = Some(Segment {
            t0,
            t1,
            x0,
            x1: x0 + h * k1,
            d0: k1,
            d1: k1,
        });
        let mut accepted = None;
        for sweep in 0..MAX_SWEEPS {
            past.provisional_reads.set(false);
            let k2 = rhs.derivative(tm, Side::Right, x0 + 0.5 * h * k1, &past)?;
            let k3 = rhs.derivative(tm, Side::Right, x0 + 0.5 * h * k2, &past)?;
            let k4 = rhs.derivative(t1, Side::Left, x0 + h * k3, &past)?;
            let x1 = x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let d1 = rhs.derivative(t1, Side::Left, x1, &past)?;
            if !(x1.is_finite() && d1.is_finite()) {
                return Err(Error::Overflow { t: t1 });
            }
            let seg = Segment { t0, t1, x0, x1, d0: k1, d1 };
            let prev = past.provisional.replace(seg).expect("provisional segment is set");
            let settled = (x1 - prev.x1).abs() <= 1e-14 * x1.abs().max(1e-300)
                && (d1 - prev.d1).abs() <= 1e-13 * d1.abs().max(1e-300);
            if !past.provisional_reads.get() || (sweep > 0 && settled) || sweep + 1 == MAX_SWEEPS {
                accepted = Some(seg);
                break;
            }
        }
        let seg = accepted.expect("loop always accepts on the last sweep");
        x0 = seg.x1;
        segments.push(seg);
    }

    Ok(Trajectory {
        segments,
        initial: initial.clone(),
        breakpoints,
        step_size: cfg.step_size,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;
    use alloc::vec;

    #[test]
    fn density_kernels_have_unit_mass() {
        let q = KernelQuadrature::new(3, 0.01);
        let shapes = [
            DensityShape::Uniform,
            DensityShape::Exponential { rate: 3.0 },
            DensityShape::Exponential { rate: -1.5 },
            DensityShape::Tabulated {
                knots: vec![(0.0, 0.0), (0.3, 2.0), (1.0, 0.5)],
            },
        ];
        for shape in shapes {
            let k = Kernel::Density { density: shape };
            for (lo, hi) in [(-0.7, 0.3), (2.0, 3.5), (10.0, 10.01), (-2.0, -1.0)] {
                let mass = q.integrate(&k, lo, hi, |_| Ok(1.0)).unwrap();
                assert!((mass - 1.0).abs() < 1e-8, "{k:?} on [{lo}, {hi}]: {mass}");
            }
        }
    }

    #[test]
    fn uniform_density_averages_linear_functions() {
        let q = KernelQuadrature::new(2, 0.05);
        let v = q.integrate(&Kernel::uniform(), 1.0, 3.0, |s| Ok(2.0 * s + 1.0)).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn atoms_are_weighted_point_evaluations() {
        let q = KernelQuadrature::new(2, 0.05);
        let k = Kernel::Atoms {
            atoms: vec![
                Atom { position: 0.0, weight: 0.25 },
                Atom { position: 0.5, weight: 0.75 },
            ],
        };
        let v = q.integrate(&k, 2.0, 4.0, |s| Ok(s * s)).unwrap();
        assert!((v - (0.25 * 4.0 + 0.75 * 9.0)).abs() < 1e-12);
    }

    #[test]
    fn propagation_stops_after_three_generations() {
        let bps = collect_breakpoints(10.0, vec![], vec![], vec![], &[1.5]);
        let ts: Vec<f64> = bps.iter().map(|b| b.t).collect();
        assert_eq!(ts, vec![0.0, 1.5, 3.0, 4.5]);
        assert_eq!(bps[3].kind, BreakpointKind::Propagated { generation: 3 });
    }

    #[test]
    fn grid_respects_breakpoints_and_step() {
        let cfg = IntegratorConfig::new(1.0, 0.3);
        let bps = collect_breakpoints(1.0, vec![0.5], vec![], vec![], &[]);
        let g = grid(&bps, &cfg);
        assert!(g.contains(&0.5));
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-15));
    }
}

use alloc::vec::Vec;

use crate::model::Side;
use crate::Result;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cumulative trapezoid integral of a time function on a fixed node set.
///
/// Nodes include every supplied breakpoint and each sub-interval uses the
/// one-sided values at its ends, so piecewise-linear integrands (in
/// particular piecewise-constant ones) are integrated exactly.
pub(crate) struct Antiderivative {
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Node spacing used for quadrature of coefficient functions.
pub(crate) const QUAD_SPACING: f64 = 2.5e-3;

impl Antiderivative {
    pub(crate) fn build<F>(f: F, lo: f64, hi: f64, mut breakpoints: Vec<f64>, spacing: f64) -> Result<Self>
    where
        F: Fn(f64, Side) -> Result<f64>,
    {
        breakpoints.retain(|b| *b > lo && *b < hi);
        breakpoints.push(lo);
        breakpoints.push(hi);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));

        let mut nodes = Vec::new();
        let mut cumulative = Vec::new();
        nodes.push(lo);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in breakpoints.windows(2) {
            let (u, v) = (w[0], w[1]);
            let m = libm::ceil((v - u) / spacing - 1e-9).max(1.0) as usize;
            let h = (v - u) / m as f64;
            let mut left_val = f(u, Side::Right)?;
            for i in 1..=m {
                let t = if i == m { v } else { u + i as f64 * h };
                let right_val = if i == m { f(t, Side::Left)? } else { f(t, Side::Right)? };
                acc += 0.5 * h * (left_val + right_val);
                nodes.push(t);
                cumulative.push(acc);
                left_val = right_val;
            }
        }
        Ok(Antiderivative { nodes, cumulative })
    }

    /// `integral_lo^t`, linear between nodes; clamps outside the node range.
    pub(crate) fn at(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        if t <= self.nodes[0] {
            return 0.0;
        }
        if t >= self.nodes[n - 1] {
            return self.cumulative[n - 1];
        }
        let i = self.nodes.partition_point(|x| *x <= t).clamp(1, n - 1);
        let (t0, t1) = (self.nodes[i - 1], self.nodes[i]);
        let (c0, c1) = (self.cumulative[i - 1], self.cumulative[i]);
        c0 + (c1 - c0) * (t - t0) / (t1 - t0)
    }

    pub(crate) fn between(&self, lo: f64, hi: f64) -> f64 {
        self.at(hi) - self.at(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScalarFunction;
    use alloc::vec;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 2..=8 {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}");
            // exact for degree 2n - 1
            let deg = 2 * n - 1;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, deg as f64 - 1.0)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((approx - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn piecewise_constant_is_exact() {
        let a = ScalarFunction::PiecewisePeriodic {
            period: 1.0,
            pieces: vec![
                crate::model::Piece { start: 0.0, end: 0.3, value: 5.0 },
                crate::model::Piece { start: 0.3, end: 1.0, value: 0.5 },
            ],
        };
        let bps = a.breakpoints(0.0, 4.0);
        let anti = Antiderivative::build(|t, s| a.evaluate_side(t, s), 0.0, 4.0, bps, 0.1).unwrap();
        let per_period = 5.0 * 0.3 + 0.5 * 0.7;
        assert!((anti.between(0.0, 4.0) - 4.0 * per_period).abs() < 1e-12);
        assert!((anti.between(1.0, 1.3) - 1.5).abs() < 1e-12);
        assert!((anti.between(1.1, 1.2) - 0.5).abs() < 1e-12);
    }
}

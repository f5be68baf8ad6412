//! Adaptive Gauss–Legendre quadrature with interval halving.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Points of the fixed rule applied on every subinterval (exact to degree 19).
const ORDER: usize = 10;

fn nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(ORDER))
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
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
        dp = if d != 0.0 { d } else { dp };
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn fixed_rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for &(x, w) in nodes() {
        let v = f(mid + half * x);
        sum += w * v;
        abs += w * v.abs();
    }
    (sum * half, abs * half)
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            rel_tol: 1e-8,
            max_depth: 48,
        }
    }
}

impl Quadrature {
    /// ∫_a^b f. Intervals are halved until the two-half estimate agrees with the
    /// whole-interval estimate to a share of the relative tolerance.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_pieces(&f, &[a, b])
    }

    /// Integrates across consecutive `points`, never straddling a breakpoint.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, f: &F, points: &[f64]) -> Result<f64> {
        if points.len() < 2 {
            return Ok(0.0);
        }
        if points.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidInput("integration breakpoints must be non-decreasing".into()));
        }
        let span = points[points.len() - 1] - points[0];
        if span == 0.0 {
            return Ok(0.0);
        }
        let scale: f64 = points.windows(2).map(|w| fixed_rule(f, w[0], w[1]).1).sum();
        if !scale.is_finite() {
            return Err(Error::Numerical("integrand is not finite".into()));
        }
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for w in points.windows(2) {
            if w[1] > w[0] {
                total += self.adapt(f, w[0], w[1], span, scale)?;
            }
        }
        Ok(total)
    }

    fn adapt<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, span: f64, scale: f64) -> Result<f64> {
        let mut stack = vec![(a, b, fixed_rule(f, a, b).0, 0usize)];
        let mut total = 0.0;
        while let Some((lo, hi, whole, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = fixed_rule(f, lo, mid).0;
            let right = fixed_rule(f, mid, hi).0;
            let refined = left + right;
            let budget = self.rel_tol * scale * (hi - lo) / span;
            if (refined - whole).abs() <= budget.max(4.0 * f64::EPSILON * scale) {
                total += refined;
            } else if depth >= self.max_depth {
                return Err(Error::Numerical(format!(
                    "quadrature did not converge on [{lo:.3e}, {hi:.3e}] (relative change {:.2e})",
                    (refined - whole).abs() / scale
                )));
            } else {
                stack.push((lo, mid, left, depth + 1));
                stack.push((mid, hi, right, depth + 1));
            }
        }
        Ok(total)
    }
}

/// ∫_a^b f with the default tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    Quadrature::default().integrate(f, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = gauss_legendre(ORDER).iter().map(|n| n.1).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_19() {
        for deg in 0..=19 {
            let got = integrate(|x: f64| x.powi(deg), 0.0, 2.0).unwrap();
            let want = 2f64.powi(deg + 1) / (deg + 1) as f64;
            assert!(((got - want) / want).abs() < 1e-13, "degree {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn smooth_transcendental() {
        let got = integrate(f64::sin, 0.0, std::f64::consts::PI).unwrap();
        assert!((got - 2.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_integrand_is_reported() {
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn discontinuity_with_breakpoints() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 2.0 };
        let q = Quadrature::default();
        let got = q.integrate_pieces(&step, &[0.0, 0.3, 1.0]).unwrap();
        assert!((got - 1.7).abs() < 1e-14);
        let adaptive = q.integrate(step, 0.0, 1.0).unwrap();
        assert!((adaptive - 1.7).abs() < 1e-7);
    }
}

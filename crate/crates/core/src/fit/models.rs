//! Built-in curve models with analytic gradients.

use super::lm::Model;
use crate::constants::K_B_MEV_PER_K;
use std::f64::consts::PI;

/// Area-normalised Lorentzian a·(w/2π)/((x−c)² + (w/2)²) and its gradient
/// with respect to (c, w, a).
pub fn area_lorentzian(x: f64, c: f64, w: f64, a: f64) -> (f64, [f64; 3]) {
    let h = 0.5 * w;
    let d = x - c;
    let q = d * d + h * h;
    let shape = h / (PI * q);
    let dc = a * h / PI * 2.0 * d / (q * q);
    let dw = 0.5 * a / PI * (d * d - h * h) / (q * q);
    (a * shape, [dc, dw, shape])
}

/// Sum of area-parameterised Lorentzians on a linear baseline.
///
/// Parameters: `[c₁, w₁, a₁, …, c_n, w_n, a_n, slope, intercept]`; the
/// baseline is `intercept + slope·(x − x_ref)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeaksOnLine {
    pub n_peaks: usize,
    pub x_ref: f64,
}

impl PeaksOnLine {
    pub fn peaks_only(&self, x: f64, p: &[f64]) -> f64 {
        (0..self.n_peaks)
            .map(|k| area_lorentzian(x, p[3 * k], p[3 * k + 1], p[3 * k + 2]).0)
            .sum()
    }
}

impl Model for PeaksOnLine {
    fn n_params(&self) -> usize {
        3 * self.n_peaks + 2
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let m = 3 * self.n_peaks;
        self.peaks_only(x, p) + p[m + 1] + p[m] * (x - self.x_ref)
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        for k in 0..self.n_peaks {
            let (_, d) = area_lorentzian(x, p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            g[3 * k..3 * k + 3].copy_from_slice(&d);
        }
        let m = 3 * self.n_peaks;
        g[m] = x - self.x_ref;
        g[m + 1] = 1.0;
    }

    fn is_valid(&self, p: &[f64]) -> bool {
        (0..self.n_peaks).all(|k| p[3 * k + 1] > 0.0)
    }
}

/// ODMR dips B·(1 − Σ k·L(x; c, w)) with unit-height Lorentzians.
///
/// Parameters: `[B, c₁, w₁, k₁, …]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdmrDips {
    pub n_lines: usize,
}

fn unit_peak(x: f64, c: f64, w: f64) -> (f64, f64, f64) {
    let h = 0.5 * w;
    let d = x - c;
    let q = d * d + h * h;
    let l = h * h / q;
    let dc = h * h * 2.0 * d / (q * q);
    let dw = h * d * d / (q * q);
    (l, dc, dw)
}

impl Model for OdmrDips {
    fn n_params(&self) -> usize {
        1 + 3 * self.n_lines
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let dip: f64 = (0..self.n_lines)
            .map(|k| p[3 * k + 3] * unit_peak(x, p[3 * k + 1], p[3 * k + 2]).0)
            .sum();
        p[0] * (1.0 - dip)
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let b = p[0];
        let mut dip = 0.0;
        for k in 0..self.n_lines {
            let (l, dc, dw) = unit_peak(x, p[3 * k + 1], p[3 * k + 2]);
            let kk = p[3 * k + 3];
            dip += kk * l;
            g[3 * k + 1] = -b * kk * dc;
            g[3 * k + 2] = -b * kk * dw;
            g[3 * k + 3] = -b * l;
        }
        g[0] = 1.0 - dip;
    }

    fn is_valid(&self, p: &[f64]) -> bool {
        (0..self.n_lines).all(|k| p[3 * k + 2] > 0.0)
    }
}

/// Straight line `[a, b]`: a + b·x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear;

impl Model for Linear {
    fn n_params(&self) -> usize {
        2
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] + p[1] * x
    }
    fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) {
        g[0] = 1.0;
        g[1] = x;
    }
}

/// Quadratic `[a, b, c]`: a + b·x + c·x².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic;

impl Model for Quadratic {
    fn n_params(&self) -> usize {
        3
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] + x * (p[1] + x * p[2])
    }
    fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) {
        g[0] = 1.0;
        g[1] = x;
        g[2] = x * x;
    }
}

/// Proportionality y = Γ·x, used with x = P(T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportional;

impl Model for Proportional {
    fn n_params(&self) -> usize {
        1
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x
    }
    fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) {
        g[0] = x;
    }
}

fn debye_factor(t: f64, t_debye: f64) -> f64 {
    1.0 + 2.0 / 3.0 * PI * PI * (t / t_debye).powi(2)
}

/// DWF(T) = exp(−S(1 + ⅔π²T²/T_D²)) in `[S, T_D]`; x is T in K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebyeWaller;

impl Model for DebyeWaller {
    fn n_params(&self) -> usize {
        2
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        (-p[0] * debye_factor(t, p[1])).exp()
    }
    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let f = debye_factor(t, p[1]);
        let v = (-p[0] * f).exp();
        g[0] = -f * v;
        // ∂f/∂T_D = −(4/3)π²T²/T_D³
        g[1] = v * p[0] * 4.0 / 3.0 * PI * PI * t * t / p[1].powi(3);
    }
    fn is_valid(&self, p: &[f64]) -> bool {
        p[1] > 0.0
    }
}

/// DWF(T₀ + b·P) in `[S, b]` with T₀ and T_D held fixed; x is laser power in mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserHeatedDwf {
    pub t0: f64,
    pub t_debye: f64,
}

impl Model for LaserHeatedDwf {
    fn n_params(&self) -> usize {
        2
    }
    fn eval(&self, power: f64, p: &[f64]) -> f64 {
        let t = self.t0 + p[1] * power;
        (-p[0] * debye_factor(t, self.t_debye)).exp()
    }
    fn gradient(&self, power: f64, p: &[f64], g: &mut [f64]) {
        let t = self.t0 + p[1] * power;
        let f = debye_factor(t, self.t_debye);
        let v = (-p[0] * f).exp();
        g[0] = -f * v;
        g[1] = -v * p[0] * 4.0 / 3.0 * PI * PI * t / (self.t_debye * self.t_debye) * power;
    }
}

/// Excited-state average half-splitting ε(T) in `[hξ⊥]` (meV) with D⊥ and A∥ fixed; x is T in K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainAveraged {
    pub d_perp: f64,
    pub a_par: f64,
}

impl Model for StrainAveraged {
    fn n_params(&self) -> usize {
        1
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        let e = self.d_perp * (p[0] / (2.0 * K_B_MEV_PER_K * t)).tanh();
        e / 3.0 + 2.0 / 3.0 * self.a_par.hypot(e)
    }
    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let kt2 = 2.0 * K_B_MEV_PER_K * t;
        let th = (p[0] / kt2).tanh();
        let e = self.d_perp * th;
        let de_dxi = self.d_perp * (1.0 - th * th) / kt2;
        let root = self.a_par.hypot(e);
        let deps_de = 1.0 / 3.0 + if root > 0.0 { 2.0 / 3.0 * e / root } else { 0.0 };
        g[0] = deps_de * de_dxi;
    }
    fn is_valid(&self, p: &[f64]) -> bool {
        p[0] > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_area_is_parameter() {
        let q = crate::quadrature::Quadrature::default();
        let f = |x: f64| area_lorentzian(x, 0.3, 0.5, 2.0).0;
        // tails beyond ±L hold (w/π)/L of the area
        let l = 2000.0;
        let got = q.integrate_pieces(&f, &[-l, -1.0, 0.3, 1.0, l]).unwrap();
        let tail = 2.0 * 2.0 / PI * (0.25f64 / l).atan();
        assert!((got + tail - 2.0).abs() < 1e-7);
    }

    #[test]
    fn dips_hit_contrast_at_center() {
        let m = OdmrDips { n_lines: 1 };
        let v = m.eval(2870.0, &[100.0, 2870.0, 10.0, 0.02]);
        assert!((v - 98.0).abs() < 1e-12);
    }
}

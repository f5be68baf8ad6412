//! Closed-form temperature models: Debye–Waller factor, shot-noise sensitivity,
//! thermal-expansion and electron-phonon shifts, and the excited-state strain
//! reduction.

pub mod dwf;
pub mod expansion;
pub mod strain;

pub use dwf::*;
pub use expansion::*;
pub use strain::*;

use serde::{Deserialize, Serialize};

/// Empirical D(T) = a + bT + cT² (MHz, MHz/K, MHz/K²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticShift {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Temperature range (K) over which the quadratic ground-state fit was made.
pub const QUADRATIC_FIT_RANGE: (f64, f64) = (294.0, 600.0);

impl QuadraticShift {
    pub fn reference() -> Self {
        let (a, b, c) = crate::constants::D_GS_QUADRATIC;
        QuadraticShift { a, b, c }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.a + self.b * t + self.c * t * t
    }
}

pub fn dgs_quadratic(t: f64, q: &QuadraticShift) -> f64 {
    if t < QUADRATIC_FIT_RANGE.0 || t > QUADRATIC_FIT_RANGE.1 {
        log::warn!("D(T) quadratic evaluated at {t} K, outside its fitted range");
    }
    q.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_polynomial() {
        let q = QuadraticShift { a: 2870.0, b: 0.0, c: 0.0 };
        assert_eq!(dgs_quadratic(400.0, &q), 2870.0);
        assert_eq!(dgs_quadratic(1000.0, &q), 2870.0);
    }
}

//! Temperature shifts of zero-field splittings: thermal-expansion pressure and
//! quadratic electron-phonon contributions.

use crate::constants::{DIAMOND_BULK_MODULUS_GPA, DIAMOND_PHONON_CUTOFF_MEV, K_B_MEV_PER_K};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use serde::{Deserialize, Serialize};

const DEFAULT_TABLE: &str = include_str!("../../data/diamond_expansion.csv");

/// Volumetric expansion coefficient e(T), 1/K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionCoefficient {
    /// Linear interpolation between (temperature K, e) rows.
    Table { temperatures: Vec<f64>, values: Vec<f64> },
    /// Σ c_k T^k.
    Polynomial(Vec<f64>),
}

impl ExpansionCoefficient {
    pub fn table(temperatures: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if temperatures.len() < 2 || temperatures.len() != values.len() {
            return Err(Error::InvalidInput(
                "expansion table needs at least two rows of equal length".into(),
            ));
        }
        crate::spectrum::check_strictly_increasing(&temperatures)?;
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "expansion coefficient must be non-negative, got {v}"
            )));
        }
        Ok(ExpansionCoefficient::Table { temperatures, values })
    }

    /// Parses `temperature_K,e_per_K` CSV text; `#` lines are comments.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = rows.next().ok_or_else(|| Error::Parse("empty expansion table".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["temperature_K", "e_per_K"] {
            return Err(Error::Parse(format!(
                "expansion table header must be 'temperature_K,e_per_K', got '{header}'"
            )));
        }
        let mut temperatures = Vec::new();
        let mut values = Vec::new();
        for (i, line) in rows.enumerate() {
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("row {}: missing column", i + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
            };
            temperatures.push(parse(it.next())?);
            values.push(parse(it.next())?);
        }
        Self::table(temperatures, values)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let p = ExpansionCoefficient::Polynomial(coeffs);
        // Diamond does not contract over the range of interest.
        for i in 0..=1000 {
            let v = p.value(i as f64)?;
            if !(v >= -1e-18) {
                return Err(Error::InvalidInput(format!(
                    "expansion polynomial is negative ({v:e}) at {i} K"
                )));
            }
        }
        Ok(p)
    }

    /// Shipped diamond table (0–700 K).
    pub fn diamond() -> Self {
        Self::parse_csv(DEFAULT_TABLE).expect("bundled expansion table parses")
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        match self {
            ExpansionCoefficient::Polynomial(c) => Ok(c.iter().rev().fold(0.0, |acc, &k| acc * t + k)),
            ExpansionCoefficient::Table { temperatures, values } => {
                let (first, last) = (temperatures[0], temperatures[temperatures.len() - 1]);
                if t < first || t > last {
                    return Err(Error::OutOfRange {
                        quantity: "temperature (expansion table)",
                        value: t,
                        min: first,
                        max: last,
                    });
                }
                let i = temperatures.partition_point(|&x| x <= t).clamp(1, temperatures.len() - 1);
                let (t0, t1) = (temperatures[i - 1], temperatures[i]);
                let w = (t - t0) / (t1 - t0);
                Ok(values[i - 1] * (1.0 - w) + values[i] * w)
            }
        }
    }

    /// Breakpoints of the piecewise form inside (0, t).
    fn knots_below(&self, t: f64) -> Vec<f64> {
        match self {
            ExpansionCoefficient::Polynomial(_) => vec![],
            ExpansionCoefficient::Table { temperatures, .. } => {
                temperatures.iter().copied().filter(|&k| k > 0.0 && k < t).collect()
            }
        }
    }
}

/// Bulk modulus and expansion coefficient of the host crystal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionModel {
    /// GPa.
    pub bulk_modulus: f64,
    pub coefficient: ExpansionCoefficient,
}

impl ExpansionModel {
    pub fn new(bulk_modulus: f64, coefficient: ExpansionCoefficient) -> Result<Self> {
        if !(bulk_modulus > 0.0 && bulk_modulus.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bulk modulus must be positive, got {bulk_modulus}"
            )));
        }
        Ok(ExpansionModel {
            bulk_modulus,
            coefficient,
        })
    }

    /// Diamond with the shipped e(T) table.
    pub fn diamond() -> Self {
        ExpansionModel {
            bulk_modulus: DIAMOND_BULK_MODULUS_GPA,
            coefficient: ExpansionCoefficient::diamond(),
        }
    }

    /// Effective pressure of thermal expansion P(T) = B∫₀ᵀ e(t)dt, GPa.
    pub fn pressure(&self, t: f64) -> Result<f64> {
        thermal_pressure(t, self)
    }
}

pub fn thermal_pressure(t: f64, em: &ExpansionModel) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("temperature must be non-negative, got {t}")));
    }
    if t == 0.0 {
        // still require coverage of T = 0
        em.coefficient.value(0.0)?;
        return Ok(0.0);
    }
    em.coefficient.value(0.0)?;
    em.coefficient.value(t)?;
    let mut points = vec![0.0];
    points.extend(em.coefficient.knots_below(t));
    points.push(t);
    let f = |x: f64| em.coefficient.value(x).unwrap_or(f64::NAN);
    let integral = Quadrature::default().integrate_pieces(&f, &points)?;
    Ok(em.bulk_modulus * integral)
}

/// Thermal-expansion shift Γ·P(T), MHz.
pub fn shift_expansion(t: f64, gamma: f64, em: &ExpansionModel) -> Result<f64> {
    Ok(gamma * thermal_pressure(t, em)?)
}

/// Bose–Einstein occupation 1/(e^{ħω/k_BT} − 1) for a phonon of energy `omega` meV.
pub fn bose_einstein(omega: f64, t: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!("phonon energy must be positive, got {omega}")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / (K_B_MEV_PER_K * t)).exp_m1())
}

/// Combined electron-phonon spectral function δ(ω)ρ(ω) = Σ c_k ω^k (MHz/meV) on (0, Ω].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronPhononSpectral {
    pub coeffs: Vec<f64>,
    /// Cutoff Ω, meV.
    pub omega_max: f64,
}

impl Default for ElectronPhononSpectral {
    fn default() -> Self {
        ElectronPhononSpectral {
            coeffs: vec![],
            omega_max: DIAMOND_PHONON_CUTOFF_MEV,
        }
    }
}

impl ElectronPhononSpectral {
    pub fn value(&self, omega: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &k| acc * omega + k)
    }
}

/// ∫₀^Ω n(ω,T)·f(ω)dω for an arbitrary spectral function; `breakpoints` mark
/// discontinuities of `f` inside (0, Ω).
pub fn electron_phonon_integral<F: Fn(f64) -> f64>(
    t: f64,
    spectral: F,
    omega_max: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    if !(omega_max > 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff must be positive, got {omega_max}")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let kt = K_B_MEV_PER_K * t;
    let integrand = |w: f64| {
        let f = spectral(w);
        if f == 0.0 {
            0.0
        } else {
            f / (w / kt).exp_m1()
        }
    };
    let mut points = vec![0.0];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < omega_max).collect();
    inner.sort_by(f64::total_cmp);
    points.extend(inner);
    points.push(omega_max);
    Quadrature::default().integrate_pieces(&integrand, &points)
}

/// Quadratic electron-phonon shift, MHz.
pub fn shift_electron_phonon(t: f64, sf: &ElectronPhononSpectral) -> Result<f64> {
    electron_phonon_integral(t, |w| sf.value(w), sf.omega_max, &[])
}

/// Two-contribution temperature shift of a zero-field splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftModel {
    /// Hydrostatic pressure shift Γ, MHz/GPa.
    pub gamma: f64,
    pub expansion: ExpansionModel,
    pub electron_phonon: ElectronPhononSpectral,
}

impl ShiftModel {
    /// Total shift ΔD(T), MHz.
    pub fn shift(&self, t: f64) -> Result<f64> {
        Ok(shift_expansion(t, self.gamma, &self.expansion)? + shift_electron_phonon(t, &self.electron_phonon)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant(c: f64) -> ExpansionModel {
        ExpansionModel::new(442.0, ExpansionCoefficient::Polynomial(vec![c])).unwrap()
    }

    #[test]
    fn zero_expansion_means_zero_pressure() {
        assert_eq!(thermal_pressure(300.0, &constant(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn constant_and_linear_are_exact() {
        assert_relative_eq!(thermal_pressure(300.0, &constant(1e-6)).unwrap(), 442.0 * 3e-4, max_relative = 1e-14);
        let lin = ExpansionModel::new(442.0, ExpansionCoefficient::Polynomial(vec![0.0, 2e-8])).unwrap();
        assert_relative_eq!(
            thermal_pressure(500.0, &lin).unwrap(),
            442.0 * 2e-8 * 500.0 * 500.0 / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn shift_expansion_examples() {
        assert_eq!(shift_expansion(0.0, 14.58, &constant(1e-6)).unwrap(), 0.0);
        assert_eq!(shift_expansion(300.0, 0.0, &constant(1e-6)).unwrap(), 0.0);
        assert_relative_eq!(shift_expansion(300.0, 14.58, &constant(1e-6)).unwrap(), 14.58 * 442.0 * 3e-4, max_relative = 1e-13);
    }

    #[test]
    fn table_coverage_gap() {
        let em = ExpansionModel::diamond();
        assert!(matches!(thermal_pressure(750.0, &em), Err(Error::OutOfRange { .. })));
        let shifted = ExpansionModel::new(
            442.0,
            ExpansionCoefficient::table(vec![10.0, 700.0], vec![0.0, 1e-6]).unwrap(),
        )
        .unwrap();
        assert!(thermal_pressure(300.0, &shifted).is_err());
    }

    #[test]
    fn table_pressure_matches_trapezoid() {
        // linear interpolation integrates exactly by the trapezoid rule
        let ExpansionCoefficient::Table { temperatures, values } = ExpansionCoefficient::diamond() else {
            unreachable!()
        };
        let upto = temperatures.iter().position(|&t| t == 600.0).unwrap();
        let trap: f64 = (1..=upto)
            .map(|i| 0.5 * (values[i] + values[i - 1]) * (temperatures[i] - temperatures[i - 1]))
            .sum();
        let p = thermal_pressure(600.0, &ExpansionModel::diamond()).unwrap();
        assert_relative_eq!(p, 442.0 * trap, max_relative = 1e-12);
    }

    #[test]
    fn csv_parsing() {
        assert!(ExpansionCoefficient::parse_csv("t,e\n0,0\n1,1").is_err());
        assert!(ExpansionCoefficient::parse_csv("temperature_K,e_per_K\n0,0\n0,1").is_err());
        assert!(ExpansionCoefficient::parse_csv("temperature_K,e_per_K\n0,0\n1,-1").is_err());
        let ok = ExpansionCoefficient::parse_csv("# c\ntemperature_K,e_per_K\n0,0\n10,1e-6\n").unwrap();
        assert_relative_eq!(ok.value(5.0).unwrap(), 5e-7);
    }

    #[test]
    fn bose_einstein_values() {
        let t = 300.0;
        let w = K_B_MEV_PER_K * t * 2f64.ln();
        assert_relative_eq!(bose_einstein(w, t).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(bose_einstein(10.0, 0.0).unwrap(), 0.0);
        let small = 0.01 * K_B_MEV_PER_K * t;
        let classical = K_B_MEV_PER_K * t / small;
        assert!((bose_einstein(small, t).unwrap() / classical - 1.0).abs() < 0.01);
        assert!(bose_einstein(0.0, t).is_err());
    }

    #[test]
    fn electron_phonon_limits() {
        let zero = ElectronPhononSpectral::default();
        assert_eq!(shift_electron_phonon(300.0, &zero).unwrap(), 0.0);
        let quad = ElectronPhononSpectral { coeffs: vec![0.0, 0.0, 1e-4], omega_max: 168.0 };
        assert_eq!(shift_electron_phonon(0.0, &quad).unwrap(), 0.0);
        assert!(shift_electron_phonon(300.0, &quad).unwrap() > 0.0);
    }

    #[test]
    fn divergent_spectral_function_is_numerical_error() {
        let bad = ElectronPhononSpectral { coeffs: vec![1.0], omega_max: 168.0 };
        assert!(matches!(shift_electron_phonon(300.0, &bad), Err(Error::Numerical(_))));
    }
}

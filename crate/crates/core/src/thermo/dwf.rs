//! Debye-model Debye–Waller factor and the shot-noise sensitivity of DWF thermometry.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Electron-phonon coupling strength and Debye temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwfModel {
    pub s: f64,
    /// K.
    pub t_debye: f64,
}

/// Fraction of the Debye temperature above which the low-temperature model is refused.
pub const VALIDITY_FRACTION: f64 = 0.5;

impl DwfModel {
    pub fn new(s: f64, t_debye: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling strength S must be positive, got {s}")));
        }
        if !(t_debye > 0.0 && t_debye.is_finite()) {
            return Err(Error::InvalidParameter(format!("Debye temperature must be positive, got {t_debye}")));
        }
        Ok(DwfModel { s, t_debye })
    }

    /// Oven calibration of nano-diamond NV- centres.
    pub fn reference() -> Self {
        DwfModel {
            s: crate::constants::DWF_S_OVEN,
            t_debye: crate::constants::DWF_DEBYE_OVEN_K,
        }
    }

    pub fn max_temperature(&self) -> f64 {
        VALIDITY_FRACTION * self.t_debye
    }

    fn check_temperature(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.max_temperature() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                quantity: "temperature",
                value: t,
                min: 0.0,
                max: self.max_temperature(),
            })
        }
    }

    /// Exponent factor 1 + (2/3)π²T²/T_D².
    fn thermal_factor(&self, t: f64) -> f64 {
        let ratio = t / self.t_debye;
        1.0 + 2.0 / 3.0 * PI * PI * ratio * ratio
    }

    /// DWF(T) = exp(−S(1 + (2/3)π²T²/T_D²)).
    pub fn dwf(&self, t: f64) -> Result<f64> {
        self.check_temperature(t)?;
        Ok((-self.s * self.thermal_factor(t)).exp())
    }

    /// dDWF/dT = −DWF·S·(4/3)π²T/T_D², 1/K.
    pub fn dwf_derivative(&self, t: f64) -> Result<f64> {
        let d = self.dwf(t)?;
        Ok(-d * self.s * 4.0 / 3.0 * PI * PI * t / (self.t_debye * self.t_debye))
    }

    /// Closed-form inverse of [`DwfModel::dwf`].
    pub fn temperature_from_dwf(&self, value: f64) -> Result<f64> {
        let hi = (-self.s).exp();
        let lo = (-self.s * self.thermal_factor(self.max_temperature())).exp();
        if !(value >= lo && value <= hi) {
            return Err(Error::OutOfRange {
                quantity: "DWF",
                value,
                min: lo,
                max: hi,
            });
        }
        let excess = (-value.ln() / self.s - 1.0).max(0.0);
        Ok(self.t_debye * (3.0 / (2.0 * PI * PI) * excess).sqrt())
    }

    /// Φ = |DWF/(dDWF/dT)| = 3T_D²/(4π²ST), K.
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.check_temperature(t)?;
        if t == 0.0 {
            return Err(Error::OutOfRange {
                quantity: "temperature",
                value: t,
                min: f64::MIN_POSITIVE,
                max: self.max_temperature(),
            });
        }
        Ok(3.0 * self.t_debye * self.t_debye / (4.0 * PI * PI * self.s * t))
    }
}

/// Linear laser-heating calibration T = T₀ + b·P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationLine {
    /// K.
    pub t0: f64,
    /// K/mW.
    pub b: f64,
}

impl CalibrationLine {
    pub fn reference() -> Self {
        CalibrationLine {
            t0: crate::constants::ROOM_TEMPERATURE_K,
            b: crate::constants::LASER_HEATING_K_PER_MW,
        }
    }

    pub fn temperature(&self, p_las: f64) -> Result<f64> {
        laser_to_temperature(p_las, self)
    }
}

pub fn laser_to_temperature(p_las: f64, c: &CalibrationLine) -> Result<f64> {
    if !(p_las >= 0.0 && p_las.is_finite()) {
        return Err(Error::InvalidInput(format!("laser power must be non-negative, got {p_las}")));
    }
    Ok(c.t0 + c.b * p_las)
}

/// Which form of the minimum detectable temperature to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotNoiseForm {
    /// (DWF + √DWF)/√N · |dDWF/dT|⁻¹
    Exact,
    /// √DWF/√N · |dDWF/dT|⁻¹
    Approximate,
}

/// Noise inflation from a uniform background at ratio `r` to the ZPL peak.
pub fn background_factor(r: f64) -> f64 {
    (1.0 + 3.0 * r).sqrt()
}

/// Minimum detectable temperature change from `n_photons` collected photons,
/// given the DWF value and its slope at the operating point.
pub fn delta_t_min_from(dwf: f64, slope: f64, n_photons: f64, r: f64, form: ShotNoiseForm) -> Result<f64> {
    if !(n_photons > 0.0) {
        return Err(Error::InvalidInput(format!("photon number must be positive, got {n_photons}")));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("background ratio must be non-negative, got {r}")));
    }
    if slope == 0.0 {
        return Err(Error::OutOfRange {
            quantity: "dDWF/dT",
            value: 0.0,
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        });
    }
    let numerator = match form {
        ShotNoiseForm::Exact => dwf + dwf.sqrt(),
        ShotNoiseForm::Approximate => dwf.sqrt(),
    };
    Ok(background_factor(r) * numerator / n_photons.sqrt() / slope.abs())
}

/// Minimum detectable temperature change at temperature `t` under the Debye model.
pub fn delta_t_min(n_photons: f64, r: f64, t: f64, m: &DwfModel, form: ShotNoiseForm) -> Result<f64> {
    delta_t_min_from(m.dwf(t)?, m.dwf_derivative(t)?, n_photons, r, form)
}

/// Detector-side parameters of a DWF thermometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInput {
    pub n_centers: f64,
    /// Collection efficiency μ.
    pub collection_eff: f64,
    /// Single-centre photon emission rate γ, photons/s.
    pub emission_rate: f64,
    /// Background-to-ZPL-peak ratio r.
    pub background_ratio: f64,
    pub dwf: f64,
}

impl SensitivityInput {
    /// Room-temperature single-centre estimate with no background.
    pub fn reference() -> Self {
        use crate::constants::*;
        SensitivityInput {
            n_centers: 1.0,
            collection_eff: COLLECTION_EFFICIENCY,
            emission_rate: NV_EMISSION_RATE_HZ,
            background_ratio: 0.0,
            dwf: DWF_TYPICAL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_centers", self.n_centers),
            ("collection_eff", self.collection_eff),
            ("emission_rate", self.emission_rate),
            ("background_ratio", self.background_ratio),
            ("dwf", self.dwf),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.collection_eff > 1.0 {
            return Err(Error::InvalidInput(format!(
                "collection efficiency cannot exceed 1, got {}",
                self.collection_eff
            )));
        }
        Ok(())
    }

    /// Total detected photon rate nμγ, photons/s.
    pub fn photon_rate(&self) -> f64 {
        self.n_centers * self.collection_eff * self.emission_rate
    }

    /// Detected ZPL photon rate C_ZPL = nμγ·DWF.
    pub fn c_zpl(&self) -> f64 {
        self.photon_rate() * self.dwf
    }
}

/// η_T = √(1+3r)·Φ/√C_ZPL with an explicit Φ, K·Hz^(−1/2).
pub fn noise_floor_with_phi(inp: &SensitivityInput, phi: f64) -> Result<f64> {
    inp.validate()?;
    let c = inp.c_zpl();
    if !(c > 0.0) {
        return Err(Error::InvalidInput("ZPL photon rate must be positive".into()));
    }
    Ok(background_factor(inp.background_ratio) * phi / c.sqrt())
}

/// η_T with Φ taken from the Debye model at temperature `t`.
pub fn noise_floor(inp: &SensitivityInput, t: f64, m: &DwfModel) -> Result<f64> {
    inp.validate()?;
    if !(inp.c_zpl() > 0.0) {
        return Err(Error::InvalidInput("ZPL photon rate must be positive".into()));
    }
    noise_floor_with_phi(inp, m.phi(t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> DwfModel {
        DwfModel::new(4.57, 1614.0).unwrap()
    }

    #[test]
    fn validity_guard() {
        let m = reference();
        assert!(m.dwf(-1.0).is_err());
        assert!(m.dwf(807.0).is_ok());
        assert!(matches!(m.dwf(807.1), Err(Error::OutOfRange { .. })));
        assert!(DwfModel::new(0.0, 1.0).is_err());
    }

    #[test]
    fn no_coupling_means_unit_dwf() {
        let m = DwfModel { s: 0.0, t_debye: 1614.0 };
        for t in [0.0, 100.0, 500.0] {
            assert_eq!(m.dwf(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn derivative_vanishes_at_zero_and_is_negative() {
        let m = reference();
        assert_eq!(m.dwf_derivative(0.0).unwrap(), 0.0);
        for t in [1.0, 100.0, 600.0] {
            assert!(m.dwf_derivative(t).unwrap() < 0.0);
        }
    }

    #[test]
    fn inverse_edges() {
        let m = reference();
        assert_eq!(m.temperature_from_dwf((-4.57f64).exp()).unwrap(), 0.0);
        assert!(m.temperature_from_dwf(0.5).is_err());
        assert!(m.temperature_from_dwf(1e-9).is_err());
    }

    #[test]
    fn phi_scaling() {
        let m = reference();
        let p = m.phi(294.0).unwrap();
        let doubled_s = DwfModel::new(9.14, 1614.0).unwrap();
        assert_relative_eq!(doubled_s.phi(294.0).unwrap(), p / 2.0, max_relative = 1e-14);
        assert_relative_eq!(m.phi(588.0).unwrap(), p / 2.0, max_relative = 1e-14);
        assert!(m.phi(0.0).is_err());
    }

    #[test]
    fn shot_noise_scaling() {
        let m = reference();
        let a = delta_t_min(1e6, 0.0, 294.0, &m, ShotNoiseForm::Exact).unwrap();
        let b = delta_t_min(4e6, 0.0, 294.0, &m, ShotNoiseForm::Exact).unwrap();
        assert_relative_eq!(a / b, 2.0, max_relative = 1e-14);
        let r1 = delta_t_min(1e6, 1.0, 294.0, &m, ShotNoiseForm::Approximate).unwrap();
        let r0 = delta_t_min(1e6, 0.0, 294.0, &m, ShotNoiseForm::Approximate).unwrap();
        assert_relative_eq!(r1 / r0, 2.0, max_relative = 1e-14);
        assert!(delta_t_min(0.0, 0.0, 294.0, &m, ShotNoiseForm::Exact).is_err());
    }

    #[test]
    fn zero_zpl_rate_rejected() {
        let inp = SensitivityInput { dwf: 0.0, ..SensitivityInput::reference() };
        assert!(noise_floor(&inp, 294.0, &reference()).is_err());
        assert!(noise_floor_with_phi(&inp, 154.0).is_err());
    }

    #[test]
    fn laser_line() {
        let c = CalibrationLine::reference();
        assert_eq!(c.temperature(0.0).unwrap(), 294.0);
        assert!(c.temperature(-1.0).is_err());
        let flat = CalibrationLine { t0: 294.0, b: 0.0 };
        assert_eq!(flat.temperature(250.0).unwrap(), 294.0);
    }
}

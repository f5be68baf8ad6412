//! Thermal orbital averaging of the excited-state strain splitting.

use crate::constants::K_B_MEV_PER_K;
use crate::error::{Error, Result};
use crate::spin::average_splitting;
use serde::{Deserialize, Serialize};

/// Transverse spin-spin interaction and orbital strain splitting of the ³E level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalStrainModel {
    /// MHz.
    pub d_perp_es: f64,
    /// hξ⊥, meV.
    pub strain_energy: f64,
}

impl OrbitalStrainModel {
    pub fn new(d_perp_es: f64, strain_energy: f64) -> Result<Self> {
        if !(d_perp_es > 0.0 && d_perp_es.is_finite()) {
            return Err(Error::InvalidParameter(format!("D⊥ must be positive, got {d_perp_es}")));
        }
        if !(strain_energy > 0.0 && strain_energy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strain energy must be positive, got {strain_energy}"
            )));
        }
        Ok(OrbitalStrainModel {
            d_perp_es,
            strain_energy,
        })
    }

    pub fn reference() -> Self {
        OrbitalStrainModel {
            d_perp_es: crate::constants::D_PERP_ES_MHZ,
            strain_energy: crate::constants::STRAIN_ENERGY_MEV,
        }
    }
}

/// R(T) = tanh(hξ⊥ / 2k_BT); equals 1 at T = 0.
pub fn reduction_factor(t: f64, strain_energy: f64) -> Result<f64> {
    if !(strain_energy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "strain energy must be positive, got {strain_energy}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok((strain_energy / (2.0 * K_B_MEV_PER_K * t)).tanh())
}

/// E_es(T) = D⊥·R(T), MHz.
pub fn e_es_of_t(t: f64, osm: &OrbitalStrainModel) -> Result<f64> {
    Ok(osm.d_perp_es * reduction_factor(t, osm.strain_energy)?)
}

/// Hyperfine-weighted half-splitting ε_es(T), MHz.
pub fn epsilon_es_of_t(t: f64, osm: &OrbitalStrainModel, a_par: f64) -> Result<f64> {
    Ok(average_splitting(e_es_of_t(t, osm)?, a_par))
}

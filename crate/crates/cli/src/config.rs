//! Run configuration: a TOML file with sections and unit-suffixed keys.
//!
//! Every key is optional; missing keys take the built-in defaults. Unknown
//! keys are rejected.

use crate::error::{CliError, CliResult};
use nv_thermo::constants::*;
use nv_thermo::fit::{EMISSION_BAND_NM, ZPL_WINDOW_NM};
use nv_thermo::spin::SpinParams;
use nv_thermo::thermo::{CalibrationLine, DwfModel, ExpansionCoefficient, ExpansionModel, OrbitalStrainModel, SensitivityInput};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateConfig {
    pub d_mhz: f64,
    pub e_mhz: f64,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
    pub odmr_width_mhz: f64,
    pub odmr_contrast: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        GroundStateConfig {
            d_mhz: D_GS_MHZ,
            e_mhz: 0.0,
            a_par_mhz: A_PAR_GS_MHZ,
            a_perp_mhz: A_PERP_GS_MHZ,
            odmr_width_mhz: 5.0,
            odmr_contrast: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitedStateConfig {
    pub d_mhz: f64,
    pub e_mhz: f64,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
    pub d_perp_mhz: f64,
    pub strain_energy_mev: f64,
    pub gamma_mhz_per_gpa: f64,
    pub odmr_width_mhz: f64,
    pub odmr_contrast: f64,
}

impl Default for ExcitedStateConfig {
    fn default() -> Self {
        ExcitedStateConfig {
            d_mhz: D_ES_MHZ,
            e_mhz: 0.0,
            a_par_mhz: A_ES_MHZ,
            a_perp_mhz: A_ES_MHZ,
            d_perp_mhz: D_PERP_ES_MHZ,
            strain_energy_mev: STRAIN_ENERGY_MEV,
            gamma_mhz_per_gpa: GAMMA_ES_MHZ_PER_GPA,
            odmr_width_mhz: 20.0,
            odmr_contrast: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwfConfig {
    pub s: f64,
    pub t_debye_k: f64,
    pub laser_s: f64,
    pub laser_t0_k: f64,
    pub laser_b_k_per_mw: f64,
}

impl Default for DwfConfig {
    fn default() -> Self {
        DwfConfig {
            s: DWF_S_OVEN,
            t_debye_k: DWF_DEBYE_OVEN_K,
            laser_s: DWF_S_LASER,
            laser_t0_k: ROOM_TEMPERATURE_K,
            laser_b_k_per_mw: LASER_HEATING_K_PER_MW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionConfig {
    pub bulk_modulus_gpa: f64,
    /// CSV `temperature_K,e_per_K`; the shipped diamond table when absent.
    pub table_path: Option<PathBuf>,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            bulk_modulus_gpa: DIAMOND_BULK_MODULUS_GPA,
            table_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub zpl_window_nm: [f64; 2],
    pub band_nm: [f64; 2],
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            zpl_window_nm: [ZPL_WINDOW_NM.0, ZPL_WINDOW_NM.1],
            band_nm: [EMISSION_BAND_NM.0, EMISSION_BAND_NM.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub collection_eff: f64,
    pub emission_rate_hz: f64,
    pub dwf: f64,
    pub phi_k: f64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            collection_eff: COLLECTION_EFFICIENCY,
            emission_rate_hz: NV_EMISSION_RATE_HZ,
            dwf: DWF_TYPICAL,
            phi_k: PHI_ROOM_K,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RngConfig {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Directory searched by `reproduce` for digitized point tables.
    pub digitized_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            digitized_dir: PathBuf::from("data/digitized"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub ground_state: GroundStateConfig,
    pub excited_state: ExcitedStateConfig,
    pub dwf: DwfConfig,
    pub expansion: ExpansionConfig,
    pub fit: FitConfig,
    pub sensitivity: SensitivityConfig,
    pub rng: RngConfig,
    pub paths: PathsConfig,
}

fn invalid(msg: String) -> CliError {
    CliError::Validation(msg)
}

impl Config {
    /// Reads `path`, resolves relative file paths against its directory and validates.
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &cfg.expansion.table_path {
            if t.is_relative() {
                cfg.expansion.table_path = Some(base.join(t));
            }
        }
        if cfg.paths.digitized_dir.is_relative() && text.contains("digitized_dir") {
            cfg.paths.digitized_dir = base.join(&cfg.paths.digitized_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.ground_params()?;
        self.excited_params()?;
        self.dwf_model()?;
        self.osm()?;
        self.expansion_model()?;
        let positive = [
            ("ground_state.odmr_width_mhz", self.ground_state.odmr_width_mhz),
            ("excited_state.odmr_width_mhz", self.excited_state.odmr_width_mhz),
            ("dwf.laser_s", self.dwf.laser_s),
            ("sensitivity.emission_rate_hz", self.sensitivity.emission_rate_hz),
            ("sensitivity.phi_k", self.sensitivity.phi_k),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("ground_state.odmr_contrast", self.ground_state.odmr_contrast),
            ("excited_state.odmr_contrast", self.excited_state.odmr_contrast),
            ("sensitivity.collection_eff", self.sensitivity.collection_eff),
            ("sensitivity.dwf", self.sensitivity.dwf),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.dwf.laser_t0_k >= 0.0 && self.dwf.laser_b_k_per_mw >= 0.0) {
            return Err(invalid("dwf.laser_t0_k and dwf.laser_b_k_per_mw must be non-negative".into()));
        }
        for (name, [lo, hi]) in [("fit.zpl_window_nm", self.fit.zpl_window_nm), ("fit.band_nm", self.fit.band_nm)] {
            if !(lo < hi && lo > 0.0) {
                return Err(invalid(format!("{name} must be an increasing positive pair, got [{lo}, {hi}]")));
            }
        }
        let ([wl, wh], [bl, bh]) = (self.fit.zpl_window_nm, self.fit.band_nm);
        if bl > wl || bh < wh {
            return Err(invalid("fit.band_nm must contain fit.zpl_window_nm".into()));
        }
        Ok(())
    }

    pub fn ground_params(&self) -> CliResult<SpinParams> {
        let g = &self.ground_state;
        Ok(SpinParams::new(g.d_mhz, g.e_mhz, g.a_par_mhz, g.a_perp_mhz)?)
    }

    pub fn excited_params(&self) -> CliResult<SpinParams> {
        let x = &self.excited_state;
        Ok(SpinParams::new(x.d_mhz, x.e_mhz, x.a_par_mhz, x.a_perp_mhz)?)
    }

    pub fn dwf_model(&self) -> CliResult<DwfModel> {
        Ok(DwfModel::new(self.dwf.s, self.dwf.t_debye_k)?)
    }

    pub fn laser_line(&self) -> CalibrationLine {
        CalibrationLine { t0: self.dwf.laser_t0_k, b: self.dwf.laser_b_k_per_mw }
    }

    pub fn osm(&self) -> CliResult<OrbitalStrainModel> {
        Ok(OrbitalStrainModel::new(self.excited_state.d_perp_mhz, self.excited_state.strain_energy_mev)?)
    }

    pub fn expansion_model(&self) -> CliResult<ExpansionModel> {
        let coefficient = match &self.expansion.table_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("expansion table {}: {e}", p.display())))?;
                ExpansionCoefficient::parse_csv(&text)?
            }
            None => ExpansionCoefficient::diamond(),
        };
        Ok(ExpansionModel::new(self.expansion.bulk_modulus_gpa, coefficient)?)
    }

    pub fn sensitivity_input(&self) -> SensitivityInput {
        SensitivityInput {
            n_centers: 1.0,
            collection_eff: self.sensitivity.collection_eff,
            emission_rate: self.sensitivity.emission_rate_hz,
            background_ratio: 0.0,
            dwf: self.sensitivity.dwf,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.fit.zpl_window_nm[0], self.fit.zpl_window_nm[1])
    }

    pub fn band(&self) -> (f64, f64) {
        (self.fit.band_nm[0], self.fit.band_nm[1])
    }

    /// Canonical JSON of the resolved configuration, used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

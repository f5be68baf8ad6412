//! Physical constants and reference values used across the crate.
//!
//! Energies of phonons and strain splittings are carried in meV so that
//! Planck's constant never appears explicitly; temperatures are in kelvin.

/// Boltzmann constant, meV/K.
pub const K_B_MEV_PER_K: f64 = 0.086_173_33;

/// Bulk modulus of diamond, GPa.
pub const DIAMOND_BULK_MODULUS_GPA: f64 = 442.0;

/// Highest vibrational energy of diamond, meV.
pub const DIAMOND_PHONON_CUTOFF_MEV: f64 = 168.0;

/// Debye temperature of bulk diamond, K (context only).
pub const DIAMOND_BULK_DEBYE_K: f64 = 2220.0;

/// Visible NV- zero-phonon-line energy, eV (context only).
pub const NV_VISIBLE_ZPL_EV: f64 = 1.946;

/// Infrared NV- zero-phonon-line energy, eV (context only).
pub const NV_INFRARED_ZPL_EV: f64 = 1.19;

/// Nominal NV- visible ZPL wavelength, nm.
pub const NV_MINUS_ZPL_NM: f64 = 637.0;

/// NV0 zero-phonon-line wavelength, nm.
pub const NV_ZERO_ZPL_NM: f64 = 575.0;

/// Room temperature, K.
pub const ROOM_TEMPERATURE_K: f64 = 294.0;

/// Ground-state zero-field splitting at room temperature, MHz.
pub const D_GS_MHZ: f64 = 2870.0;
/// Ground-state axial 14N hyperfine, MHz.
pub const A_PAR_GS_MHZ: f64 = -2.14;
/// Ground-state transverse 14N hyperfine, MHz.
pub const A_PERP_GS_MHZ: f64 = -2.70;
/// Excited-state zero-field splitting at room temperature, MHz.
pub const D_ES_MHZ: f64 = 1420.0;
/// Excited-state 14N hyperfine (isotropic), MHz.
pub const A_ES_MHZ: f64 = 40.0;
/// Low-temperature excited-state transverse spin-spin interaction, MHz.
pub const D_PERP_ES_MHZ: f64 = 775.0;
/// Excited-state orbital strain splitting, meV.
pub const STRAIN_ENERGY_MEV: f64 = 4.7;

/// Hydrostatic pressure shift of the ground-state splitting, MHz/GPa.
pub const GAMMA_GS_MHZ_PER_GPA: f64 = 14.58;
/// Hydrostatic pressure shift of the excited-state splitting, MHz/GPa.
pub const GAMMA_ES_MHZ_PER_GPA: f64 = 11.0;

/// Electron-phonon coupling strength from the oven calibration.
pub const DWF_S_OVEN: f64 = 4.57;
/// Debye temperature from the oven calibration, K.
pub const DWF_DEBYE_OVEN_K: f64 = 1614.0;
/// Electron-phonon coupling strength from the laser-heating calibration.
pub const DWF_S_LASER: f64 = 4.79;
/// Laser-heating coefficient, K/mW.
pub const LASER_HEATING_K_PER_MW: f64 = 0.51;

/// Sample-averaged DWF/(dDWF/dT) at room temperature, K.
pub const PHI_ROOM_K: f64 = 154.0;
/// Single-centre emission rate, photons/s.
pub const NV_EMISSION_RATE_HZ: f64 = 40e6;
/// Optical collection efficiency.
pub const COLLECTION_EFFICIENCY: f64 = 0.021;
/// Typical room-temperature DWF used for sensitivity estimates.
pub const DWF_TYPICAL: f64 = 0.005;

/// Quadratic fit of the ground-state splitting versus temperature: (a MHz, b MHz/K, c MHz/K^2).
pub const D_GS_QUADRATIC: (f64, f64, f64) = (2870.0, 6e-2, -2.3e-4);

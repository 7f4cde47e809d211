//! Physical constants and unit conversions.
//!
//! Energies are in cm⁻¹ with ħ = 1, times in ps. A transition frequency of
//! `x` cm⁻¹ corresponds to an angular frequency of `x * WAVENUMBER_TO_ANGULAR_PS`
//! rad/ps (that factor is 2πc with c in cm/ps).

/// Boltzmann constant in cm⁻¹/K.
pub const KB: f64 = 0.695_034_8;

/// 2πc in rad·ps⁻¹ per cm⁻¹.
pub const WAVENUMBER_TO_ANGULAR_PS: f64 = 0.188_365_156_7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    pub kb: f64,
    pub wavenumber_to_angular_ps: f64,
}

impl UnitSystem {
    pub const STANDARD: UnitSystem = UnitSystem {
        kb: KB,
        wavenumber_to_angular_ps: WAVENUMBER_TO_ANGULAR_PS,
    };
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// cm⁻¹ → rad/ps (also converts rates expressed in cm⁻¹ into ps⁻¹).
#[inline]
pub fn wavenumber_to_angular_ps(x: f64) -> f64 {
    x * WAVENUMBER_TO_ANGULAR_PS
}

/// rad/ps → cm⁻¹.
#[inline]
pub fn angular_ps_to_wavenumber(x: f64) -> f64 {
    x / WAVENUMBER_TO_ANGULAR_PS
}

/// Thermal energy k_B·T in cm⁻¹.
#[inline]
pub fn thermal_energy(temperature_k: f64) -> f64 {
    KB * temperature_k
}

//! Environmental spectral densities J(ω) and thermal occupation numbers.
//!
//! All frequencies and densities are in cm⁻¹.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::units::KB;
use crate::{Error, Result};

/// Quasi-Lorentzian density peaked near `omega_h`:
///
/// J(ω) = 2βωω_H⁴ / [(ω² − ω_H²)² + (Γω)²]
///
/// with β = λΓ/(πω_H²), so that ∫₀^∞ J(ω)/ω dω = πω_H²β/Γ = λ exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianBath {
    #[serde(rename = "omega_H")]
    pub omega_h: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl LorentzianBath {
    pub fn new(omega_h: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let b = Self { omega_h, gamma, lambda };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega_H", self.omega_h)?;
        positive("gamma", self.gamma)?;
        positive("lambda", self.lambda)
    }

    /// Dimensionless amplitude β.
    pub fn beta(&self) -> f64 {
        self.lambda * self.gamma / (PI * self.omega_h * self.omega_h)
    }

    /// Unchecked evaluation; `omega` must be ≥ 0.
    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        let wh2 = self.omega_h * self.omega_h;
        let d = omega * omega - wh2;
        let w = self.gamma * omega;
        2.0 * self.beta() * omega * wh2 * wh2 / (d * d + w * w)
    }

    /// Same width and reorganization energy, peak moved to `omega_h`.
    pub fn shifted(&self, omega_h: f64) -> Result<Self> {
        Self::new(omega_h, self.gamma, self.lambda)
    }

    /// Frequency of the maximum of J(ω), from d/dω[ω/((ω²−a²)² + Γ²ω²)] = 0.
    pub fn peak_frequency(&self) -> f64 {
        let a2 = self.omega_h * self.omega_h;
        let b = 2.0 * a2 - self.gamma * self.gamma;
        ((b + (b * b + 12.0 * a2 * a2).sqrt()) / 6.0).sqrt()
    }
}

fn default_ar_lambda() -> f64 {
    35.0
}
fn default_ar_omega_1() -> f64 {
    0.5
}
fn default_ar_omega_2() -> f64 {
    1.95
}
fn default_ar_s_h() -> f64 {
    0.22
}
fn default_ar_omega_h() -> f64 {
    180.0
}
fn default_ar_gamma_h() -> f64 {
    60.0
}

/// Two super-ohmic background components plus one Lorentzian-broadened
/// high-frequency vibrational mode:
///
/// J(ω) = λ[1000ω⁵e^{−√(ω/ω₁)} + 4.3ω⁵e^{−√(ω/ω₂)}] / [9!(1000ω₁⁵ + 4.3ω₂⁵)]
///        + (S_Hω_H²/π)·Γ_H / [(ω − ω_H)² + Γ_H²]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdolphsRengerBath {
    #[serde(default = "default_ar_lambda")]
    pub lambda: f64,
    #[serde(default = "default_ar_omega_1")]
    pub omega_1: f64,
    #[serde(default = "default_ar_omega_2")]
    pub omega_2: f64,
    #[serde(rename = "S_H", default = "default_ar_s_h")]
    pub s_h: f64,
    #[serde(rename = "omega_H", default = "default_ar_omega_h")]
    pub omega_h: f64,
    #[serde(rename = "gamma_H", default = "default_ar_gamma_h")]
    pub gamma_h: f64,
}

impl Default for AdolphsRengerBath {
    fn default() -> Self {
        Self {
            lambda: default_ar_lambda(),
            omega_1: default_ar_omega_1(),
            omega_2: default_ar_omega_2(),
            s_h: default_ar_s_h(),
            omega_h: default_ar_omega_h(),
            gamma_h: default_ar_gamma_h(),
        }
    }
}

/// 9!
const FACT9: f64 = 362_880.0;

impl AdolphsRengerBath {
    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        positive("omega_1", self.omega_1)?;
        positive("omega_2", self.omega_2)?;
        positive("S_H", self.s_h)?;
        positive("omega_H", self.omega_h)?;
        positive("gamma_H", self.gamma_h)
    }

    /// Super-ohmic background alone.
    #[inline]
    pub fn background(&self, omega: f64) -> f64 {
        let w5 = omega.powi(5);
        let num = 1000.0 * w5 * (-(omega / self.omega_1).sqrt()).exp()
            + 4.3 * w5 * (-(omega / self.omega_2).sqrt()).exp();
        let norm = FACT9 * (1000.0 * self.omega_1.powi(5) + 4.3 * self.omega_2.powi(5));
        self.lambda * num / norm
    }

    /// Lorentzian vibrational term alone.
    #[inline]
    pub fn vibrational(&self, omega: f64) -> f64 {
        let d = omega - self.omega_h;
        self.s_h * self.omega_h * self.omega_h / PI * self.gamma_h / (d * d + self.gamma_h * self.gamma_h)
    }

    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        self.background(omega) + self.vibrational(omega)
    }

    /// Moves only the vibrational peak; the background is untouched.
    pub fn shifted(&self, omega_h: f64) -> Result<Self> {
        positive("omega_H", omega_h)?;
        Ok(Self { omega_h, ..*self })
    }
}

/// Piecewise-linear density through user-supplied samples; zero outside the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedBath {
    pub omega: Vec<f64>,
    #[serde(rename = "J")]
    pub values: Vec<f64>,
}

impl TabulatedBath {
    pub fn validate(&self) -> Result<()> {
        if self.omega.len() != self.values.len() || self.omega.len() < 2 {
            return Err(Error::param("J", "tabulated bath needs ≥ 2 samples and matching lengths"));
        }
        if !self.omega.windows(2).all(|w| w[0] < w[1]) || self.omega[0] < 0.0 {
            return Err(Error::param("omega", "must be non-negative and strictly ascending"));
        }
        if self.values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("J", "values must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let w = &self.omega;
        if omega < w[0] || omega > w[w.len() - 1] {
            return 0.0;
        }
        let i = w.partition_point(|&x| x <= omega).clamp(1, w.len() - 1);
        let t = (omega - w[i - 1]) / (w[i] - w[i - 1]);
        self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
    }
}

/// Any spectral density the rate and sweep machinery can consume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectralDensity {
    Lorentzian(LorentzianBath),
    AdolphsRenger(AdolphsRengerBath),
    Tabulated(TabulatedBath),
}

impl SpectralDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::Lorentzian(b) => b.validate(),
            SpectralDensity::AdolphsRenger(b) => b.validate(),
            SpectralDensity::Tabulated(b) => b.validate(),
        }
    }

    /// Unchecked evaluation for ω ≥ 0.
    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            SpectralDensity::Lorentzian(b) => b.eval(omega),
            SpectralDensity::AdolphsRenger(b) => b.eval(omega),
            SpectralDensity::Tabulated(b) => b.eval(omega),
        }
    }

    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        check_frequency(omega)?;
        Ok(self.eval(omega))
    }

    /// Peak parameter ω_H, when the density has one.
    pub fn omega_h(&self) -> Option<f64> {
        match self {
            SpectralDensity::Lorentzian(b) => Some(b.omega_h),
            SpectralDensity::AdolphsRenger(b) => Some(b.omega_h),
            SpectralDensity::Tabulated(_) => None,
        }
    }

    /// Reorganization energy parameter λ, when the density has one.
    pub fn lambda(&self) -> Option<f64> {
        match self {
            SpectralDensity::Lorentzian(b) => Some(b.lambda),
            SpectralDensity::AdolphsRenger(b) => Some(b.lambda),
            SpectralDensity::Tabulated(_) => None,
        }
    }

    pub fn shifted(&self, omega_h: f64) -> Result<Self> {
        match self {
            SpectralDensity::Lorentzian(b) => Ok(SpectralDensity::Lorentzian(b.shifted(omega_h)?)),
            SpectralDensity::AdolphsRenger(b) => Ok(SpectralDensity::AdolphsRenger(b.shifted(omega_h)?)),
            SpectralDensity::Tabulated(_) => Err(Error::param("omega_H", "a tabulated bath has no peak to shift")),
        }
    }
}

impl From<LorentzianBath> for SpectralDensity {
    fn from(b: LorentzianBath) -> Self {
        SpectralDensity::Lorentzian(b)
    }
}

impl From<AdolphsRengerBath> for SpectralDensity {
    fn from(b: AdolphsRengerBath) -> Self {
        SpectralDensity::AdolphsRenger(b)
    }
}

pub fn lorentzian_j(bath: &LorentzianBath, omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    Ok(bath.eval(omega))
}

pub fn adolphs_renger_j(bath: &AdolphsRengerBath, omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    Ok(bath.eval(omega))
}

/// Bath temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalBathContext {
    temperature: f64,
}

impl ThermalBathContext {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::param("temperature", format!("must be finite and ≥ 0 K, got {temperature}")));
        }
        Ok(Self { temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Bose–Einstein occupation; the caller guarantees ω > 0.
    #[inline]
    pub fn occupation(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            return 0.0;
        }
        let x = omega / (KB * self.temperature);
        1.0 / x.exp_m1()
    }
}

/// n(ω) = 1/(e^{ω/k_BT} − 1), exactly zero at T = 0.
pub fn bose_occupation(ctx: &ThermalBathContext, omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::param("omega", format!("occupation needs ω > 0, got {omega}")));
    }
    Ok(ctx.occupation(omega))
}

/// Returns a copy of `bath` whose peak sits at `new_omega_h`.
pub fn shifted_bath(bath: &SpectralDensity, new_omega_h: f64) -> Result<SpectralDensity> {
    bath.shifted(new_omega_h)
}

fn check_frequency(omega: f64) -> Result<()> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::param("omega", format!("spectral density needs ω ≥ 0, got {omega}")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

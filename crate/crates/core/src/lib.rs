//! Exciton energy transport through structured vibrational environments.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`], [`eigen`], [`ode`] and [`units`]: small dense complex linear
//!   algebra, a Jacobi eigensolver, a fixed-step RK4 integrator and the unit
//!   conventions shared by everything else.
//! - [`spectral`]: bath spectral densities and Bose–Einstein occupations.
//! - [`network`]: site Hamiltonians, exciton bases and secular Redfield rates.
//! - [`kinetics`]: population master-equation propagation towards the sink.
//! - [`lindblad`]: explicit vibronic model with damped oscillators per site.
//! - [`sweep`]: parameter sweeps, efficiency landscapes and the antenna
//!   figure of merit.
//! - [`models`]: built-in presets and the JSON model-file format.
//!
//! Energies, rates and spectral densities are kept in cm⁻¹ and times in ps.
//! The conversion to angular frequency happens inside the propagators only.

pub mod eigen;
pub mod error;
pub mod kinetics;
pub mod lindblad;
pub mod matrix;
pub mod models;
pub mod network;
pub mod ode;
pub mod spectral;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

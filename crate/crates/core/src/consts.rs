#![allow(non_upper_case_globals)]

//! Physical constants (CODATA 2018), SI units.

use std::f64::consts::PI;

/// Planck constant (J s), exact.
pub const h: f64 = 6.62607015e-34;

/// reduced Planck constant (J s), exact.
pub const hbar: f64 = h / 2.0 / PI;

/// Bohr magneton (J T^-1).
pub const uB: f64 = 9.2740100783e-24;

/// unified atomic mass unit (kg).
pub const amu: f64 = 1.66053906660e-27;

/// one gauss in tesla.
pub const GAUSS: f64 = 1e-4;

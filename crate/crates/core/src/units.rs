//! Conversions between experimental parameters and model parameters.
//!
//! Everything here is a pure function over SI values. Dimensionless internal
//! unit systems (recoil units in the lattice module, ħ = 1 rates in the
//! Fock-space modules) connect to experimental reality only through these
//! conversions.

use crate::atoms::AtomSpecies;
use crate::consts::{hbar, uB};
use crate::error::Error;
use crate::Result;
use std::f64::consts::PI;

/// A rate stored as a magnitude with its sign kept as metadata.
///
/// Couplings and splittings enter the model Hamiltonians through terms whose
/// spectra are invariant under sign flips, so the magnitude is the physical
/// parameter and the sign is bookkeeping (e.g. the site-to-site alternation
/// of the coupling sign in some lattice geometries).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SignedRate {
    /// Magnitude (rad/s).
    pub magnitude: f64,
    /// Sign, ±1 (or +1 for a zero magnitude).
    pub sign: i8,
}

impl SignedRate {
    fn new(value: f64) -> SignedRate {
        SignedRate {
            magnitude: value.abs(),
            sign: if value < 0.0 { -1 } else { 1 },
        }
    }

    /// The signed value.
    pub fn signed(&self) -> f64 {
        self.magnitude * self.sign as f64
    }
}

/// Recoil energy E_r = ħ²k²/(2M) of a lattice of wavelength `lambda` (J).
pub fn recoil_energy(lambda: f64, species: &AtomSpecies) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {lambda:e}"
        )));
    }
    let k = 2.0 * PI / lambda;
    Ok(hbar * hbar * k * k / (2.0 * species.mass))
}

/// Harmonic trap frequency ω = 2√(V₀E_r)/ħ (rad/s) of a lattice site of
/// depth `v0_er` (in units of E_r, with `e_r` in J).
pub fn trap_frequency(v0_er: f64, e_r: f64) -> Result<f64> {
    if v0_er < 0.0 {
        return Err(Error::Domain(format!(
            "lattice depth must be non-negative, got {v0_er}"
        )));
    }
    if !(e_r > 0.0) {
        return Err(Error::Domain(format!(
            "recoil energy must be positive, got {e_r:e}"
        )));
    }
    Ok(2.0 * (v0_er * e_r * e_r).sqrt() / hbar)
}

/// Oscillator length x₀ = √(ħ/(2Mω)) (m).
pub fn oscillator_length(omega: f64, species: &AtomSpecies) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "trap frequency must be positive, got {omega:e}"
        )));
    }
    Ok((hbar / (2.0 * species.mass * omega)).sqrt())
}

/// Field gradient b_x = 2 B_x k_c (T/m) near the zero crossings of the
/// coupling-lattice field of amplitude `bx` (T) and wavelength `lambda_c`.
pub fn gradient_from_amplitude(bx: f64, lambda_c: f64) -> Result<f64> {
    if !(lambda_c > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {lambda_c:e}"
        )));
    }
    Ok(2.0 * bx * 2.0 * PI / lambda_c)
}

/// Coupling strength g = μ_B g_F b_x x₀ / (2ħ) (rad/s), magnitude plus sign.
pub fn coupling_strength(b_grad: f64, g_f: f64, x0: f64) -> Result<SignedRate> {
    if !(x0 > 0.0) {
        return Err(Error::Domain(format!(
            "oscillator length must be positive, got {x0:e}"
        )));
    }
    Ok(SignedRate::new(uB * g_f * b_grad * x0 / (2.0 * hbar)))
}

/// Two-level splitting ω₀ = μ_B g_F B_z / ħ (rad/s), magnitude plus sign.
pub fn tls_frequency(bz: f64, g_f: f64) -> SignedRate {
    SignedRate::new(uB * g_f * bz / hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::species;
    use crate::consts::{h, GAUSS};

    const RB87: f64 = 86.909180531 * 1.66053906660e-27; // kg

    #[test]
    fn recoil_energy_examples() {
        let rb = species("87Rb:F=1").unwrap();
        let er = recoil_energy(787e-9, rb).unwrap();
        // independent evaluation of ħ²(2π/λ)²/(2M) with CODATA constants
        let k = 2.0 * PI / 787e-9;
        let oracle = hbar * hbar * k * k / (2.0 * RB87);
        assert!((er / oracle - 1.0).abs() < 1e-9);
        // E_r/h ≈ 3.71 kHz
        assert!((er / h - 3706.2).abs() < 1.0, "E_r/h = {}", er / h);

        // doubling the wavelength divides E_r by four
        let er2 = recoil_energy(2.0 * 787e-9, rb).unwrap();
        assert!((er / er2 - 4.0).abs() < 1e-12);

        // ratio identity for the two trapping wavelengths used in practice
        let er1185 = recoil_energy(1185e-9, rb).unwrap();
        assert!((er1185 / er - (787.0f64 / 1185.0).powi(2)).abs() < 1e-12);

        assert!(recoil_energy(0.0, rb).is_err());
        assert!(recoil_energy(-1e-9, rb).is_err());
    }

    #[test]
    fn trap_frequency_examples() {
        let rb = species("87Rb:F=1").unwrap();
        let er = recoil_energy(787e-9, rb).unwrap();

        // V₀ = 100 E_r → ħω = 20 E_r
        let w = trap_frequency(100.0, er).unwrap();
        assert!((hbar * w / (20.0 * er) - 1.0).abs() < 1e-12);

        // V₀ = 1e5 E_r → ω/2π ≈ 2.34 MHz
        let w5 = trap_frequency(1e5, er).unwrap();
        assert!(
            (w5 / (2.0 * PI) - 2.3440e6).abs() < 1e3,
            "omega/2pi = {}",
            w5 / (2.0 * PI)
        );

        assert_eq!(trap_frequency(0.0, er).unwrap(), 0.0);
        assert!(trap_frequency(-1.0, er).is_err());
    }

    #[test]
    fn oscillator_length_examples() {
        let rb = species("87Rb:F=1").unwrap();
        let er = recoil_energy(787e-9, rb).unwrap();
        let w = trap_frequency(1e5, er).unwrap();

        let x0 = oscillator_length(w, rb).unwrap();
        // direct formula evaluation
        let oracle = (hbar / (2.0 * RB87 * w)).sqrt();
        assert!((x0 / oracle - 1.0).abs() < 1e-9);
        assert!((x0 - 4.98e-9).abs() < 0.01e-9, "x0 = {x0:e}");

        // quadrupling ω halves x₀
        let x0q = oscillator_length(4.0 * w, rb).unwrap();
        assert!((x0 / x0q - 2.0).abs() < 1e-12);

        // x₀√ω is constant for a fixed species
        let a = oscillator_length(w, rb).unwrap() * w.sqrt();
        let b = oscillator_length(17.3 * w, rb).unwrap() * (17.3 * w).sqrt();
        assert!((a / b - 1.0).abs() < 1e-12);

        assert!(oscillator_length(0.0, rb).is_err());
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(gradient_from_amplitude(0.0, 790.04e-9).unwrap(), 0.0);
        let b1 = gradient_from_amplitude(1.0 * GAUSS, 790.04e-9).unwrap();
        let b2 = gradient_from_amplitude(2.0 * GAUSS, 790.04e-9).unwrap();
        assert!((b2 / b1 - 2.0).abs() < 1e-12);
        // b_x = 4π/λ_c per gauss of amplitude
        assert!((b1 - 4.0 * PI * GAUSS / 790.04e-9).abs() < 1e-12 * b1);
        assert!(gradient_from_amplitude(1.0, 0.0).is_err());
    }

    #[test]
    fn coupling_examples() {
        let x0 = 5e-9;
        assert_eq!(coupling_strength(0.0, -0.5, x0).unwrap().magnitude, 0.0);
        let g1 = coupling_strength(1.0, -0.5, x0).unwrap();
        let g3 = coupling_strength(3.0, -0.5, x0).unwrap();
        assert!((g3.magnitude / g1.magnitude - 3.0).abs() < 1e-12);
        // sign metadata tracks the sign of g_F·b_x
        assert_eq!(g1.sign, -1);
        assert_eq!(coupling_strength(-1.0, -0.5, x0).unwrap().sign, 1);
        assert!(coupling_strength(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn tls_frequency_examples() {
        assert_eq!(tls_frequency(0.0, 0.5).magnitude, 0.0);
        // B_z = 4 G, |g_F| = 1/2 → ω₀/2π ≈ 2.80 MHz  (μ_B/h = 1.39962 MHz/G)
        let w0 = tls_frequency(4.0 * GAUSS, 0.5);
        let mhz = w0.magnitude / (2.0 * PI) / 1e6;
        assert!((mhz - 2.79924).abs() < 1e-4, "omega0/2pi = {mhz} MHz");
        // within 5% of the effective trap frequency of the lin-θ-lin setup
        assert!((mhz - 2.9).abs() / 2.9 < 0.05);
        assert_eq!(tls_frequency(1.0 * GAUSS, -0.5).sign, -1);
    }

    #[test]
    fn dimensional_round_trip() {
        // x₀²·2Mω = ħ to 1e-12 relative, chaining all three conversions
        let rb = species("87Rb:F=1").unwrap();
        for &(lam, v0) in &[(787e-9, 1e5), (1185e-9, 2e5), (1064e-9, 3.3e3)] {
            let er = recoil_energy(lam, rb).unwrap();
            let w = trap_frequency(v0, er).unwrap();
            let x0 = oscillator_length(w, rb).unwrap();
            assert!((x0 * x0 * 2.0 * rb.mass * w / hbar - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conversions_are_monotone() {
        let rb = species("87Rb:F=1").unwrap();
        let er = recoil_energy(787e-9, rb).unwrap();
        let mut prev = -1.0;
        for i in 0..50 {
            let v0 = 10.0 * (i as f64 + 1.0);
            let w = trap_frequency(v0, er).unwrap();
            assert!(w > prev);
            prev = w;
        }
        let x0 = 5e-9;
        let mut prev_g = -1.0;
        for i in 0..50 {
            let grad = 0.02 * (i as f64 + 1.0);
            let g = coupling_strength(grad, 0.5, x0).unwrap().magnitude;
            assert!(g > prev_g);
            prev_g = g;
        }
        let mut prev_w0 = -1.0;
        for i in 0..50 {
            let bz = GAUSS * (i as f64 + 1.0);
            let w0 = tls_frequency(bz, 0.5).magnitude;
            assert!(w0 > prev_w0);
            prev_w0 = w0;
        }
    }

    #[test]
    fn recoil_scaling_invariant() {
        // E_r(λ)·λ² is species-constant to 1e-12 relative
        let rb = species("87Rb:F=1").unwrap();
        let base = recoil_energy(787e-9, rb).unwrap() * 787e-9 * 787e-9;
        for &lam in &[200e-9, 532e-9, 790.04e-9, 1185e-9, 10.6e-6] {
            let v = recoil_energy(lam, rb).unwrap() * lam * lam;
            assert!((v / base - 1.0).abs() < 1e-12);
        }
    }
}

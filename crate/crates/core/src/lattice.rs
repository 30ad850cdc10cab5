//! Real-space treatment of a single site of the combined trapping/coupling
//! lattice: potential profiles, a finite-difference Hamiltonian, extraction
//! of the effective model parameters (ω_eff, g_eff) from the branch
//! potential, and the inverse map from a target coupling to the field
//! amplitude.
//!
//! Internally everything is dimensionless (E_r = 1, k_t = 1); SI enters and
//! leaves through the conversions in [`crate::units`]. The kinetic term is
//! discretized with second-order central differences on a uniform grid with
//! Dirichlet walls at the two potential maxima flanking the site.

use crate::atoms::AtomSpecies;
use crate::consts::{hbar, uB};
use crate::eigen::Spectrum;
use crate::error::Error;
use crate::models::{PositionStates, PositionWavefunction};
use crate::operators::{Basis, OperatorMatrix, PositionBasis, SymBanded};
use crate::units;
use crate::Result;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wavelength arrangement of the two lattices.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeGeometry {
    /// Single pair of beams, λ_c = λ_t.
    LinThetaLin,
    /// Independent lattices with λ_t = 2 λ_c.
    TwoLattice2to1,
    /// Independent lattices with λ_t = (3/2) λ_c; the coupling sign
    /// alternates from site to site.
    TwoLattice3to2,
}

impl LatticeGeometry {
    pub fn expected_wavelength_ratio(self) -> f64 {
        match self {
            LatticeGeometry::LinThetaLin => 1.0,
            LatticeGeometry::TwoLattice2to1 => 2.0,
            LatticeGeometry::TwoLattice3to2 => 1.5,
        }
    }

    pub fn parse(s: &str) -> Result<LatticeGeometry> {
        match s {
            "LinThetaLin" => Ok(LatticeGeometry::LinThetaLin),
            "TwoLattice2to1" => Ok(LatticeGeometry::TwoLattice2to1),
            "TwoLattice3to2" => Ok(LatticeGeometry::TwoLattice3to2),
            _ => Err(Error::Validation(format!(
                "unknown configuration `{s}`; expected LinThetaLin, TwoLattice2to1 or TwoLattice3to2"
            ))),
        }
    }
}

/// Full specification of the lattice realization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub species: AtomSpecies,
    /// Trapping-lattice wavelength (m).
    pub lambda_t: f64,
    /// Coupling-lattice wavelength (m).
    pub lambda_c: f64,
    /// Trap depth in units of the trapping-lattice recoil energy.
    pub v0_er: f64,
    /// Coupling-field amplitude (T).
    pub bx: f64,
    /// Homogeneous offset field along z (T).
    pub bz: f64,
    /// Homogeneous field along x (T), the drive term.
    pub eps: f64,
    /// Phase offset of the coupling lattice (rad); 0 aligns the field zero
    /// crossings with the trap minima (linear coupling), π/2 aligns the
    /// field extrema with the minima (quadratic coupling).
    pub phase: f64,
    pub geometry: LatticeGeometry,
}

impl LatticeConfig {
    pub fn new(
        species: &AtomSpecies,
        geometry: LatticeGeometry,
        lambda_t: f64,
        lambda_c: f64,
        v0_er: f64,
    ) -> Result<LatticeConfig> {
        let cfg = LatticeConfig {
            species: species.clone(),
            lambda_t,
            lambda_c,
            v0_er,
            bx: 0.0,
            bz: 0.0,
            eps: 0.0,
            phase: 0.0,
            geometry,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_t > 0.0) || !(self.lambda_c > 0.0) {
            return Err(Error::Domain("wavelengths must be positive".into()));
        }
        if !(self.v0_er > 0.0) {
            return Err(Error::Validation(format!(
                "trap depth must be positive, got {} E_r",
                self.v0_er
            )));
        }
        let expected = self.geometry.expected_wavelength_ratio();
        let ratio = self.lambda_t / self.lambda_c;
        if (ratio / expected - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "wavelength ratio λ_t/λ_c = {ratio} inconsistent with {:?} (expected {expected})",
                self.geometry
            )));
        }
        for (name, v) in [("bx", self.bx), ("bz", self.bz), ("eps", self.eps)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn with_bx(&self, bx: f64) -> LatticeConfig {
        LatticeConfig { bx, ..self.clone() }
    }

    pub fn with_bz(&self, bz: f64) -> LatticeConfig {
        LatticeConfig { bz, ..self.clone() }
    }

    pub fn with_v0(&self, v0_er: f64) -> LatticeConfig {
        LatticeConfig {
            v0_er,
            ..self.clone()
        }
    }

    pub fn k_t(&self) -> f64 {
        2.0 * PI / self.lambda_t
    }

    pub fn k_c(&self) -> f64 {
        2.0 * PI / self.lambda_c
    }

    /// Recoil energy of the trapping lattice (J).
    pub fn recoil(&self) -> Result<f64> {
        units::recoil_energy(self.lambda_t, &self.species)
    }

    /// Harmonic frequency of the bare trap, 2√(V₀E_r)/ħ (rad/s).
    pub fn bare_trap_frequency(&self) -> Result<f64> {
        units::trap_frequency(self.v0_er, self.recoil()?)
    }
}

/// Uniform single-site grid; `n_points` interior points between Dirichlet
/// walls at `x_min` and `x_max`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Grid> {
        if !(x_max > x_min) {
            return Err(Error::Validation("grid extent must be positive".into()));
        }
        if n_points < 128 || !n_points.is_power_of_two() {
            return Err(Error::Validation(format!(
                "n_points must be a power of two ≥ 128, got {n_points}"
            )));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_points,
        })
    }

    /// The site around x = 0.
    pub fn single_site(config: &LatticeConfig, n_points: usize) -> Result<Grid> {
        Grid::site(config, 0, n_points)
    }

    /// The site centered at `index`·λ_t/2, walls at the adjacent maxima.
    pub fn site(config: &LatticeConfig, index: i64, n_points: usize) -> Result<Grid> {
        let center = index as f64 * config.lambda_t / 2.0;
        let half = config.lambda_t / 4.0;
        Grid::new(center - half, center + half, n_points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points as f64 + 1.0)
    }

    /// Interior points (the walls carry ψ = 0).
    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points)
            .map(|i| self.x_min + (i as f64 + 1.0) * dx)
            .collect()
    }
}

/// Effective model parameters extracted from the branch potential.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct EffectiveParams {
    /// √(V″(x*)/M) (rad/s).
    pub omega_eff: f64,
    /// |x*|·ω_eff/(4F·x0_eff) (rad/s).
    pub g_eff: f64,
    /// Branch-potential minimum (m).
    pub x_star: f64,
    /// V″(x*) (J/m²).
    pub curvature: f64,
    /// Stretched m_F of the high-field-seeking branch.
    pub branch_m: f64,
}

impl EffectiveParams {
    /// Oscillator length of the effective mode (m).
    pub fn x0_eff(&self, species: &AtomSpecies) -> f64 {
        (hbar / (2.0 * species.mass * self.omega_eff)).sqrt()
    }
}

/// Trap potential (J) and fictitious-field x-component (T, including the
/// homogeneous ε) at position `x`.
pub fn potential_profile(config: &LatticeConfig, x: f64) -> (f64, f64) {
    let er = units::recoil_energy(config.lambda_t, &config.species).expect("validated wavelength");
    let scalar = config.v0_er * er / 2.0 * (1.0 - (2.0 * config.k_t() * x).cos());
    let field = config.bx * (2.0 * config.k_c() * x + config.phase).sin() + config.eps;
    (scalar, field)
}

/// Dimensionless branch potential of the high-field-seeking Zeeman
/// sub-state (B_z = 0): W(x̃) = (Ṽ₀/2)(1−cos 2x̃) + c_b·sin(2κx̃ + φ),
/// with x̃ = k_t x and c_b = g_F μ_B B_x m* / E_r.
struct BranchPotential {
    v0: f64,
    kc2: f64, // 2 k_c/k_t
    phase: f64,
    c_b: f64,
}

impl BranchPotential {
    fn deriv(&self, x: f64) -> f64 {
        self.v0 * (2.0 * x).sin() + self.c_b * self.kc2 * (self.kc2 * x + self.phase).cos()
    }

    fn second(&self, x: f64) -> f64 {
        2.0 * self.v0 * (2.0 * x).cos()
            - self.c_b * self.kc2 * self.kc2 * (self.kc2 * x + self.phase).sin()
    }
}

/// Fit-free effective-parameter extraction: locate the minimum of the
/// high-field-seeking branch potential by root-finding on its analytic
/// derivative, read ω_eff from the analytic curvature and g_eff from the
/// position of the minimum.
pub fn extract_effective_params(config: &LatticeConfig) -> Result<EffectiveParams> {
    config.validate()?;
    let er = config.recoil()?;
    let f = config.species.spin.f();
    let g_c = config.species.g_f * uB / er; // dimensionless per tesla

    // high-field-seeking stretched state
    let m_star = if config.bx == 0.0 {
        -f
    } else {
        -f * (config.species.g_f * config.bx).signum()
    };
    let branch = BranchPotential {
        v0: config.v0_er,
        kc2: 2.0 * config.k_c() / config.k_t(),
        phase: config.phase,
        c_b: g_c * config.bx * m_star,
    };

    let x_star_tilde = if config.bx == 0.0 {
        0.0
    } else {
        find_branch_minimum(&branch)?
    };
    let w2 = branch.second(x_star_tilde);
    if !(w2 > 0.0) {
        return Err(Error::NoInteriorMinimum);
    }

    let kt = config.k_t();
    let curvature = w2 * er * kt * kt;
    let omega_eff = (curvature / config.species.mass).sqrt();
    let x_star = x_star_tilde / kt;
    let x0_eff = (hbar / (2.0 * config.species.mass * omega_eff)).sqrt();
    let g_eff = x_star.abs() * omega_eff / (4.0 * f * x0_eff);

    Ok(EffectiveParams {
        omega_eff,
        g_eff,
        x_star,
        curvature,
        branch_m: m_star,
    })
}

fn find_branch_minimum(branch: &BranchPotential) -> Result<f64> {
    let scale = branch.v0.abs() + branch.c_b.abs() * branch.kc2;
    let d0 = branch.deriv(0.0);
    if d0.abs() <= 1e-14 * scale {
        if branch.second(0.0) > 0.0 {
            return Ok(0.0);
        }
        return Err(Error::NoInteriorMinimum);
    }
    let dir = -d0.signum();
    let step = PI / 4096.0;
    let mut prev_x = 0.0;
    let mut prev_d = d0;
    for i in 1..=2048 {
        let x = dir * step * i as f64;
        let d = branch.deriv(x);
        if prev_d * d <= 0.0 {
            // bisection; tolerance 1e-12·λ_t, i.e. 2π·1e-12 in k_t x
            let (mut lo, mut hi) = (prev_x, x);
            let mut d_lo = prev_d;
            while (hi - lo).abs() > 2.0 * PI * 1e-12 {
                let mid = 0.5 * (lo + hi);
                let dm = branch.deriv(mid);
                if d_lo * dm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    d_lo = dm;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_d = d;
    }
    Err(Error::NoInteriorMinimum)
}

/// Discretize the single-site Hamiltonian on `grid`: kinetic term by
/// second-order central differences with Dirichlet walls, trap and Zeeman
/// terms evaluated pointwise. Returns a block-banded Hermitian matrix in
/// rad/s, position-major ordering.
pub fn build_lattice_hamiltonian(config: &LatticeConfig, grid: &Grid) -> Result<OperatorMatrix> {
    config.validate()?;
    if grid.n_points < 128 || !grid.n_points.is_power_of_two() {
        return Err(Error::Validation(format!(
            "n_points must be a power of two ≥ 128, got {}",
            grid.n_points
        )));
    }
    // the grid must span exactly one site, walls on the adjacent maxima
    let center = 0.5 * (grid.x_min + grid.x_max);
    let site = center / (config.lambda_t / 2.0);
    if (site - site.round()).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "grid center {center:e} m is not on a trap minimum"
        )));
    }
    let width = grid.x_max - grid.x_min;
    if (width / (config.lambda_t / 2.0) - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "grid width {width:e} m must equal half the trapping wavelength"
        )));
    }

    let er = config.recoil()?;
    let spin = config.species.spin;
    let ds = spin.dim();
    let f = spin.f();
    let n = grid.n_points;
    let dim = n * ds;
    let kt = config.k_t();
    let dx = grid.dx();
    let dxt = kt * dx;
    let inv = 1.0 / (dxt * dxt);
    let g_c = config.species.g_f * uB / er;
    let beta_z = g_c * config.bz;

    let ladder: Vec<f64> = (0..ds.saturating_sub(1))
        .map(|s| {
            let m = spin.m_of_index(s);
            0.5 * (f * (f + 1.0) - m * (m + 1.0)).sqrt()
        })
        .collect();

    let mut mat = SymBanded::zeros(dim, ds);
    let points = grid.points();
    for (i, &x) in points.iter().enumerate() {
        let xt = kt * x;
        let vtrap = config.v0_er / 2.0 * (1.0 - (2.0 * xt).cos());
        let field = config.bx * (2.0 * config.k_c() * x + config.phase).sin() + config.eps;
        let beta_x = g_c * field;
        for s in 0..ds {
            let idx = i * ds + s;
            mat.add(idx, 0, 2.0 * inv + vtrap + beta_z * spin.m_of_index(s));
        }
        for (s, &c) in ladder.iter().enumerate() {
            mat.add(i * ds + s, 1, beta_x * c);
        }
        if i + 1 < n {
            for s in 0..ds {
                mat.add(i * ds + s, ds, -inv);
            }
        }
    }
    mat.scale(er / hbar);

    let basis = Basis::Position(PositionBasis {
        n_points: n,
        spin,
        x_first: grid.x_min + dx,
        dx,
    });
    Ok(OperatorMatrix::banded(mat, basis))
}

/// Unpack the eigenvectors of a position-basis spectrum into grid
/// wavefunctions with the Σ|ψ|²Δx = 1 convention.
pub fn position_states(spectrum: &Spectrum) -> Result<PositionStates> {
    let pb = match spectrum.basis {
        Basis::Position(pb) => pb,
        _ => {
            return Err(Error::Mismatch(
                "spectrum is not in a position basis".into(),
            ))
        }
    };
    let ds = pb.spin.dim();
    let grid = pb.points();
    let scale = 1.0 / pb.dx.sqrt();
    let mut states = Vec::with_capacity(spectrum.states.ncols());
    for col in 0..spectrum.states.ncols() {
        let v = spectrum.states.column(col);
        let mut amp = DMatrix::from_element(pb.n_points, ds, C64::new(0.0, 0.0));
        for i in 0..pb.n_points {
            for s in 0..ds {
                amp[(i, s)] = v[i * ds + s] * scale;
            }
        }
        states.push(PositionWavefunction::new(grid.clone(), amp)?);
    }
    Ok(PositionStates {
        energies: spectrum.energies.clone(),
        states,
    })
}

/// Field amplitude B_x that makes the extracted g_eff hit `g_target`
/// (rad/s) to 1e-3 relative, by bisection over the monotone map B_x → g_eff.
pub fn amplitude_for_target_g(config: &LatticeConfig, g_target: f64) -> Result<f64> {
    solve_bx(config, g_target, |eff| eff.g_eff)
}

/// Field amplitude B_x that makes the extracted ratio g_eff/ω_eff hit
/// `ratio` to 1e-3 relative; this is what coupling sweeps drive.
pub fn amplitude_for_target_ratio(config: &LatticeConfig, ratio: f64) -> Result<f64> {
    solve_bx(config, ratio, |eff| eff.g_eff / eff.omega_eff)
}

fn solve_bx(
    config: &LatticeConfig,
    target: f64,
    objective: impl Fn(&EffectiveParams) -> f64,
) -> Result<f64> {
    if target < 0.0 {
        return Err(Error::Domain(format!("target must be ≥ 0, got {target:e}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    config.validate()?;
    let er = config.recoil()?;
    let eval = |bx: f64| -> Result<f64> {
        let eff = extract_effective_params(&config.with_bx(bx))?;
        Ok(objective(&eff))
    };

    // linear-regime guess from g = μ_B|g_F| B_x k_c x₀ / ħ; for the ratio
    // objective the same scale works since g_eff/ω_eff ≈ g_eff/ω at small B_x
    let omega_bare = config.bare_trap_frequency()?;
    let x0 = units::oscillator_length(omega_bare, &config.species)?;
    let g_per_tesla = uB * config.species.g_f.abs() * config.k_c() * x0 / hbar;
    // physical search cap: Zeeman amplitude ≤ 1e9 E_r
    let bx_cap = 1e9 * er / (uB * config.species.g_f.abs());
    let guess = (target / g_per_tesla).max(target * omega_bare / g_per_tesla);
    let mut hi = guess.max(1e-9).min(bx_cap);

    let mut f_hi = eval(hi)?;
    let mut best = f_hi;
    let mut grow = 0;
    while f_hi < target {
        hi *= 2.0;
        if hi > bx_cap {
            return Err(Error::TargetUnreachable {
                target,
                max_attainable: best,
            });
        }
        f_hi = eval(hi)?;
        best = best.max(f_hi);
        grow += 1;
        if grow > 120 {
            return Err(Error::TargetUnreachable {
                target,
                max_attainable: best,
            });
        }
    }

    let mut lo = 0.0f64;
    let mut mid = hi;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if (f_mid - target).abs() <= 1e-3 * target {
            return Ok(mid);
        }
        if f_mid < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-15 * hi {
            break;
        }
    }
    Ok(mid)
}

/// Consecutive trap minima and the sign of the local fictitious-field
/// gradient at each; the spacing is λ_t/2.
pub fn site_minima(config: &LatticeConfig, n_sites: usize) -> Result<Vec<(f64, i8)>> {
    if n_sites < 1 {
        return Err(Error::Domain("n_sites must be at least 1".into()));
    }
    config.validate()?;
    let bx_sign = if config.bx < 0.0 { -1.0 } else { 1.0 };
    let out = (0..n_sites)
        .map(|n| {
            let x = n as f64 * config.lambda_t / 2.0;
            let slope = (2.0 * config.k_c() * x + config.phase).cos() * bx_sign;
            (x, if slope >= 0.0 { 1i8 } else { -1i8 })
        })
        .collect();
    Ok(out)
}

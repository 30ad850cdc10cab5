//! Fock ⊗ spin model Hamiltonians and position-space synthesis of their
//! eigenfunctions.
//!
//! All builders share one spin convention: the linear coupling is written
//! 2g(â+â†)F̂x, which reduces to g(â+â†)(σ̂⁺+σ̂⁻) at F = 1/2. Rates are
//! ħ = 1 angular frequencies (rad/s); matrices are real symmetric banded in
//! the Fock-major ordering of [`BasisSpec`].

use crate::eigen::{hermitian_eigensolve, EigenRange, Spectrum};
use crate::error::Error;
use crate::hermite::hermite_table;
use crate::operators::{Basis, BasisSpec, OperatorMatrix, SymBanded};
use crate::spin::Spin;
use crate::Result;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Hard cap for the cutoff doubling schedule.
pub const DEFAULT_CUTOFF_CAP: usize = 4096;

/// Parameters of a Fock-space model Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Bosonic mode frequency (rad/s).
    pub omega: f64,
    /// Linear coupling strength (rad/s).
    pub g: f64,
    /// Two-level (Zeeman) splitting (rad/s).
    pub omega0: f64,
    /// Drive term strength (rad/s).
    pub g_eps: f64,
    /// Quadratic coupling strength (rad/s).
    pub g2: f64,
    /// Spin F of the particle.
    pub spin: Spin,
    /// Fock-space truncation.
    pub fock_cutoff: usize,
}

impl ModelParams {
    /// A QRM parameter set (drive and quadratic terms zero).
    pub fn qrm(omega: f64, g: f64, omega0: f64, spin: Spin, fock_cutoff: usize) -> ModelParams {
        ModelParams {
            omega,
            g,
            omega0,
            g_eps: 0.0,
            g2: 0.0,
            spin,
            fock_cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::Domain(format!(
                "mode frequency must be positive, got {:e}",
                self.omega
            )));
        }
        for (name, v) in [
            ("g", self.g),
            ("omega0", self.omega0),
            ("g_eps", self.g_eps),
            ("g2", self.g2),
        ] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        if self.fock_cutoff < 2 {
            return Err(Error::Domain(format!(
                "Fock cutoff must be at least 2, got {}",
                self.fock_cutoff
            )));
        }
        Ok(())
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> ModelParams {
        ModelParams {
            fock_cutoff,
            ..self.clone()
        }
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::new(self.fock_cutoff, self.spin)
    }

    /// True when the quadratic coupling makes a spin branch unbounded below
    /// at infinite cutoff (4 F |g₂| ≥ ω).
    pub fn past_collapse(&self) -> bool {
        4.0 * self.spin.f() * self.g2.abs() >= self.omega
    }
}

fn build_terms(p: &ModelParams, with_drive: bool, with_quadratic: bool) -> Result<OperatorMatrix> {
    p.validate()?;
    let basis = p.basis()?;
    let ds = p.spin.dim();
    let nf = p.fock_cutoff;
    let f = p.spin.f();
    let quad = with_quadratic && p.g2 != 0.0;
    let half_bw = if quad { 2 * ds + 1 } else { ds + 1 };
    let mut m = SymBanded::zeros(basis.dim(), half_bw);

    // spin ladder coefficients connecting s and s+1
    let ladder: Vec<f64> = (0..ds.saturating_sub(1))
        .map(|s| {
            let mm = p.spin.m_of_index(s);
            0.5 * (f * (f + 1.0) - mm * (mm + 1.0)).sqrt()
        })
        .collect();

    for n in 0..nf {
        for s in 0..ds {
            let idx = n * ds + s;
            m.add(idx, 0, p.omega * n as f64 + p.omega0 * p.spin.m_of_index(s));
        }
        for (s, &c) in ladder.iter().enumerate() {
            let col0 = n * ds + s;
            // 2g(â+â†)F̂x: n ↔ n+1, s ↔ s+1
            if n + 1 < nf && p.g != 0.0 {
                let amp = 2.0 * p.g * ((n + 1) as f64).sqrt() * c;
                m.add(col0 + 1, ds - 1, amp); // (n+1, s) ← (n, s+1)
                m.add(col0, ds + 1, amp); // (n+1, s+1) ← (n, s)
            }
            if with_drive && p.g_eps != 0.0 {
                m.add(col0, 1, p.g_eps * c);
            }
            if quad {
                // (â+â†)² = â² + â†² + 2â†â + 1
                m.add(col0, 1, p.g2 * (2.0 * n as f64 + 1.0) * c);
                if n + 2 < nf {
                    let amp = p.g2 * (((n + 1) * (n + 2)) as f64).sqrt() * c;
                    m.add(col0 + 1, 2 * ds - 1, amp); // (n+2, s) ← (n, s+1)
                    m.add(col0, 2 * ds + 1, amp); // (n+2, s+1) ← (n, s)
                }
            }
        }
    }

    let mut out = OperatorMatrix::banded(m, Basis::FockSpin(basis));
    if quad && p.past_collapse() {
        out.collapse_flag = true;
    }
    Ok(out)
}

/// H = ω â†â + ω₀ F̂z + 2g(â+â†)F̂x; at F = 1/2 this is the quantum Rabi
/// model ω â†â + (ω₀/2)σ̂z + g(â+â†)σ̂x. Drive and quadratic parameters in
/// `p` are ignored here.
pub fn build_qrm(p: &ModelParams) -> Result<OperatorMatrix> {
    build_terms(p, false, false)
}

/// Driven QRM: H_QRM + g_ε F̂x. Breaks the parity symmetry for g_ε ≠ 0.
pub fn build_driven_qrm(p: &ModelParams) -> Result<OperatorMatrix> {
    build_terms(p, true, false)
}

/// Quadratic-coupling model: H_QRM + g₂(â+â†)²F̂x (the linear coupling is
/// included whenever `p.g` is set). Past 4F|g₂| ≥ ω a spin branch becomes
/// unbounded below; the result then carries [`OperatorMatrix::collapse_flag`].
pub fn build_quadratic_qrm(p: &ModelParams) -> Result<OperatorMatrix> {
    build_terms(p, false, true)
}

/// All terms: H_QRM + g_ε F̂x + g₂(â+â†)²F̂x.
pub fn build_full(p: &ModelParams) -> Result<OperatorMatrix> {
    build_terms(p, true, true)
}

/// Dicke model of `n_spins` two-level systems coupled to one mode, in the
/// pseudo-spin F = N/2 representation:
/// H = ω â†â + ω₀ F̂z + (2g/√N)(â+â†)F̂x.
pub fn build_dicke(
    n_spins: usize,
    omega: f64,
    omega0: f64,
    g: f64,
    fock_cutoff: usize,
) -> Result<OperatorMatrix> {
    if n_spins < 1 {
        return Err(Error::Domain(format!(
            "Dicke model needs at least one spin, got {n_spins}"
        )));
    }
    let spin = Spin::from_twice(n_spins as u32)?;
    let p = ModelParams::qrm(
        omega,
        g / (n_spins as f64).sqrt(),
        omega0,
        spin,
        fock_cutoff,
    );
    build_qrm(&p)
}

/// Outcome of the cutoff doubling schedule.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct CutoffResult {
    /// Adequate cutoff (smallest of the schedule whose lowest energies are
    /// stable against doubling), or the cap when not converged.
    pub cutoff: usize,
    pub converged: bool,
}

/// Find the smallest cutoff from a doubling schedule such that the lowest
/// `n_states` energies change by less than `tol` (relative) between
/// consecutive cutoffs. Uses the full Hamiltonian (all terms in `p`).
pub fn check_cutoff_convergence(
    p: &ModelParams,
    n_states: usize,
    tol: f64,
) -> Result<CutoffResult> {
    check_cutoff_convergence_with_cap(p, n_states, tol, DEFAULT_CUTOFF_CAP)
}

pub fn check_cutoff_convergence_with_cap(
    p: &ModelParams,
    n_states: usize,
    tol: f64,
    cap: usize,
) -> Result<CutoffResult> {
    if n_states < 1 {
        return Err(Error::Domain("n_states must be at least 1".into()));
    }
    let ds = p.spin.dim();
    let mut cutoff = 16usize
        .max((n_states + 2).div_ceil(ds))
        .next_power_of_two();
    let mut prev = lowest_energies(p, cutoff, n_states)?;
    let mut last_change = f64::INFINITY;
    while 2 * cutoff <= cap {
        let next = 2 * cutoff;
        let cur = lowest_energies(p, next, n_states)?;
        last_change = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs() / b.abs().max(p.omega))
            .fold(0.0f64, f64::max);
        if last_change < tol {
            return Ok(CutoffResult {
                cutoff,
                converged: true,
            });
        }
        cutoff = next;
        prev = cur;
    }
    // In the collapse vicinity the result is cutoff-dependent by nature;
    // report the cap with a non-converged flag instead of failing.
    if 4.0 * p.spin.f() * p.g2.abs() >= 0.95 * p.omega {
        return Ok(CutoffResult {
            cutoff: cap,
            converged: false,
        });
    }
    Err(Error::CutoffCap {
        cap,
        last_change,
        tol,
    })
}

fn lowest_energies(p: &ModelParams, cutoff: usize, n_states: usize) -> Result<Vec<f64>> {
    let h = build_full(&p.with_cutoff(cutoff))?;
    let k = n_states.min(h.dim());
    let s = hermitian_eigensolve(&h, EigenRange::Lowest(k))?;
    Ok(s.energies)
}

/// A wavefunction sampled on a uniform position grid, one complex amplitude
/// per (grid point, m_F) pair; grid-norm convention Σ|ψ|²·Δx = 1.
#[derive(Clone, Debug)]
pub struct PositionWavefunction {
    /// Grid abscissae (m), strictly increasing, uniform.
    pub grid: Vec<f64>,
    /// Amplitudes, one row per grid point, one column per m_F (ascending).
    pub amplitudes: DMatrix<C64>,
    /// Grid spacing (m).
    pub dx: f64,
}

impl PositionWavefunction {
    pub fn new(grid: Vec<f64>, amplitudes: DMatrix<C64>) -> Result<PositionWavefunction> {
        if grid.len() < 2 || amplitudes.nrows() != grid.len() {
            return Err(Error::Validation(
                "wavefunction grid and amplitude shapes disagree".into(),
            ));
        }
        let dx = grid[1] - grid[0];
        if !(dx > 0.0) {
            return Err(Error::Validation("grid must be strictly increasing".into()));
        }
        for w in grid.windows(2) {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx {
                return Err(Error::Validation("grid must be uniform".into()));
            }
        }
        let wf = PositionWavefunction {
            grid,
            amplitudes,
            dx,
        };
        let norm = wf.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "wavefunction grid-norm is {norm}, expected 1"
            )));
        }
        Ok(wf)
    }

    /// Grid norm √(Σ|ψ|²·Δx).
    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx).sqrt()
    }

    /// Grid inner product ⟨self|other⟩ = Σ ψ*χ·Δx.
    pub fn inner(&self, other: &PositionWavefunction) -> Result<C64> {
        if self.grid.len() != other.grid.len()
            || (self.dx - other.dx).abs() > 1e-12 * self.dx
            || (self.grid[0] - other.grid[0]).abs() > 1e-9 * self.dx
        {
            return Err(Error::Mismatch("wavefunction grids differ".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(other.amplitudes.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc * self.dx)
    }

    /// Normalized squared overlap |⟨self|other⟩|² / (‖self‖²‖other‖²).
    pub fn overlap2(&self, other: &PositionWavefunction) -> Result<f64> {
        let ip = self.inner(other)?;
        let n1 = self.norm();
        let n2 = other.norm();
        Ok(ip.norm_sqr() / (n1 * n1 * n2 * n2))
    }

    /// Position expectation value Σ x|ψ(x)|²Δx / ‖ψ‖².
    pub fn centroid(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &x) in self.grid.iter().enumerate() {
            let w: f64 = (0..self.amplitudes.ncols())
                .map(|s| self.amplitudes[(i, s)].norm_sqr())
                .sum();
            num += x * w;
            den += w;
        }
        num / den
    }

    /// Population per m_F level.
    pub fn spin_populations(&self) -> Vec<f64> {
        let ds = self.amplitudes.ncols();
        let mut out = vec![0.0; ds];
        for s in 0..ds {
            out[s] = self
                .amplitudes
                .column(s)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                * self.dx;
        }
        out
    }
}

/// A set of eigenstates expressed on a position grid, paired with energies.
#[derive(Clone, Debug)]
pub struct PositionStates {
    pub energies: Vec<f64>,
    pub states: Vec<PositionWavefunction>,
}

/// Map the Fock ⊗ spin eigenvectors of `spectrum` onto a position grid:
/// ψ(x, m_F) = Σ_n c_{n,m_F} φ_n((x − x_center)/(√2·x₀)) / (√2·x₀)^{1/2},
/// with φ_n the orthonormal Hermite functions, i.e. onto the eigenfunctions
/// of a harmonic oscillator of length scale x₀ = √(ħ/2Mω) centered at
/// `x_center`.
pub fn synthesize_position_states(
    p: &ModelParams,
    spectrum: &Spectrum,
    x_center: f64,
    x0: f64,
    grid: &[f64],
) -> Result<Vec<PositionWavefunction>> {
    let basis = match spectrum.basis {
        Basis::FockSpin(b) => b,
        _ => {
            return Err(Error::Mismatch(
                "spectrum is not in a Fock ⊗ spin basis".into(),
            ))
        }
    };
    if basis.spin != p.spin {
        return Err(Error::Mismatch("spin of params and spectrum differ".into()));
    }
    if !(x0 > 0.0) {
        return Err(Error::Domain("oscillator length must be positive".into()));
    }
    if grid.len() < 2 {
        return Err(Error::Validation("grid needs at least two points".into()));
    }
    let dx = grid[1] - grid[0];
    for w in grid.windows(2) {
        if !(w[1] > w[0]) || ((w[1] - w[0]) - dx).abs() > 1e-9 * dx {
            return Err(Error::Validation(
                "grid must be strictly increasing and uniform".into(),
            ));
        }
    }

    let ds = basis.spin.dim();
    let k = spectrum.states.ncols();
    // highest Fock order carrying weight in any requested state
    let mut n_occ = 0usize;
    for col in 0..k {
        let v = spectrum.states.column(col);
        for n in (0..basis.fock_cutoff).rev() {
            let w: f64 = (0..ds).map(|s| v[n * ds + s].norm_sqr()).sum();
            if w.sqrt() > 1e-8 {
                n_occ = n_occ.max(n);
                break;
            }
        }
    }

    let sigma = std::f64::consts::SQRT_2 * x0;
    let turning = sigma * (2.0 * n_occ as f64 + 1.0).sqrt();
    let required = turning + 4.0 * sigma;
    let available = (x_center - grid[0]).min(grid[grid.len() - 1] - x_center);
    if available < required {
        return Err(Error::Coverage {
            required_m: required,
            available_m: available,
        });
    }
    if dx / sigma * (2.0 * n_occ as f64 + 1.0).sqrt() > 1.5 {
        return Err(Error::Validation(format!(
            "grid spacing {dx:e} m too coarse for Fock orders up to {n_occ}"
        )));
    }

    let u: Vec<f64> = grid.iter().map(|&x| (x - x_center) / sigma).collect();
    let table = hermite_table(basis.fock_cutoff - 1, &u);
    let prefactor = 1.0 / sigma.sqrt();

    let mut out = Vec::with_capacity(k);
    for col in 0..k {
        let v = spectrum.states.column(col);
        let mut amp = DMatrix::from_element(grid.len(), ds, C64::new(0.0, 0.0));
        for n in 0..basis.fock_cutoff {
            let phi = table.column(n);
            for s in 0..ds {
                let c = v[n * ds + s];
                if c.norm_sqr() > 0.0 {
                    for (i, &p_ni) in phi.iter().enumerate() {
                        amp[(i, s)] += c * p_ni;
                    }
                }
            }
        }
        amp *= C64::new(prefactor, 0.0);
        out.push(PositionWavefunction::new(grid.to_vec(), amp)?);
    }
    Ok(out)
}

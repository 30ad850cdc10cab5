//! Unitary time evolution under piecewise-constant Hamiltonians, quench
//! protocols, and adiabatic ramps.
//!
//! Propagation is exact per segment: ψ(t) = V e^{−iEt} V†ψ₀ from the full
//! eigendecomposition, so there is no step-size tuning and observables can
//! be sampled at arbitrary times. Motional read-out of lattice states is
//! reported in the effective-oscillator basis (projection onto synthesized
//! Hermite modes), mirroring how trap populations are measured.

use crate::eigen::{hermitian_eigensolve, EigenRange, Spectrum};
use crate::error::Error;
use crate::hermite::hermite_table;
use crate::lattice::{build_lattice_hamiltonian, Grid, LatticeConfig};
use crate::models::{build_full, ModelParams};
use crate::operators::{parity_diagonal, Basis, OperatorMatrix};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Hamiltonian of one protocol segment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SegmentHamiltonian {
    Model(ModelParams),
    Lattice { config: LatticeConfig, grid: Grid },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    /// Duration (s); zero-duration segments only hand their state over.
    pub duration: f64,
    pub hamiltonian: SegmentHamiltonian,
}

/// How the initial state is prepared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// |n⟩ ⊗ |m_F⟩ with m_F given as 2·m_F.
    FockSpin { n: usize, two_m: i32 },
    /// Ground state of the segment-0 Hamiltonian.
    Ground,
    /// Coherent state |α⟩ ⊗ |m_F⟩ (real displacement amplitude).
    Coherent { alpha: f64, two_m: i32 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuenchProtocol {
    pub segments: Vec<Segment>,
    pub initial: InitialState,
}

impl QuenchProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Validation("protocol needs at least one segment".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration >= 0.0) || !seg.duration.is_finite() {
                return Err(Error::Validation(format!(
                    "segment {i}: duration must be finite and ≥ 0"
                )));
            }
        }
        Ok(())
    }
}

/// Observable record of an evolution.
#[derive(Clone, Debug, Serialize)]
pub struct EvolutionResult {
    /// Sample times (s).
    pub times: Vec<f64>,
    /// Population per m_F level (ascending m_F), one row per sample.
    pub populations: Vec<Vec<f64>>,
    /// Occupation of the lowest mode-basis levels, one row per sample;
    /// empty when no mode basis applies.
    pub motional: Vec<Vec<f64>>,
    /// |⟨ψ(0)|ψ(t)⟩|².
    pub fidelity: Vec<f64>,
    /// ⟨Π⟩; empty for position-basis evolutions.
    pub parity: Vec<f64>,
}

/// Optional knobs for observable extraction.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Number of mode-basis levels reported in `motional`.
    pub motional_levels: usize,
    /// Oscillator basis (center, x₀) for motional read-out of lattice
    /// states; ignored for Fock ⊗ spin bases.
    pub mode_basis: Option<(f64, f64)>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            motional_levels: 8,
            mode_basis: None,
        }
    }
}

/// Evolve `psi0` under a constant Hamiltonian, sampling observables at
/// `times` (negative times run the evolution backwards).
pub fn evolve_constant(
    h: &OperatorMatrix,
    psi0: &DVector<C64>,
    times: &[f64],
) -> Result<EvolutionResult> {
    evolve_constant_with(h, psi0, times, &EvolveOptions::default())
}

pub fn evolve_constant_with(
    h: &OperatorMatrix,
    psi0: &DVector<C64>,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let spectrum = hermitian_eigensolve(h, EigenRange::All)?;
    let prop = Propagator::new(&spectrum, psi0, opts)?;
    let mut rec = Recorder::new(&spectrum.basis, psi0, opts)?;
    for &t in times {
        let psi = prop.at(t);
        rec.push(t, &psi);
    }
    Ok(rec.finish())
}

struct Propagator {
    states: DMatrix<C64>,
    energies: Vec<f64>,
    coeffs: DVector<C64>,
}

impl Propagator {
    fn new(spectrum: &Spectrum, psi0: &DVector<C64>, _opts: &EvolveOptions) -> Result<Propagator> {
        let norm = psi0.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "initial state norm is {norm}, expected 1"
            )));
        }
        if psi0.len() != spectrum.states.nrows() {
            return Err(Error::Mismatch("state and Hamiltonian dimensions differ".into()));
        }
        let coeffs = spectrum.states.adjoint() * psi0;
        Ok(Propagator {
            states: spectrum.states.clone(),
            energies: spectrum.energies.clone(),
            coeffs,
        })
    }

    fn at(&self, t: f64) -> DVector<C64> {
        let phased: DVector<C64> = DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs
                .iter()
                .zip(&self.energies)
                .map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
        );
        &self.states * phased
    }
}

/// Accumulates observable rows; owns the basis-specific projection tables.
struct Recorder {
    ds: usize,
    psi0: DVector<C64>,
    parity_diag: Option<Vec<f64>>,
    /// (levels × dim) projection rows onto the motional basis.
    mode_proj: Option<DMatrix<C64>>,
    times: Vec<f64>,
    populations: Vec<Vec<f64>>,
    motional: Vec<Vec<f64>>,
    fidelity: Vec<f64>,
    parity: Vec<f64>,
}

impl Recorder {
    fn new(basis: &Basis, psi0: &DVector<C64>, opts: &EvolveOptions) -> Result<Recorder> {
        let (ds, parity_diag, mode_proj) = match basis {
            Basis::FockSpin(bs) => {
                let k = opts.motional_levels.min(bs.fock_cutoff);
                let ds = bs.spin.dim();
                let mut proj = DMatrix::from_element(k, bs.dim(), C64::new(0.0, 0.0));
                for n in 0..k {
                    for s in 0..ds {
                        proj[(n, n * ds + s)] = C64::new(1.0, 0.0);
                    }
                }
                (ds, Some(parity_diagonal(bs)), Some(proj))
            }
            Basis::Position(pb) => {
                let ds = pb.spin.dim();
                let proj = opts.mode_basis.map(|(center, x0)| {
                    let sigma = std::f64::consts::SQRT_2 * x0;
                    let u: Vec<f64> = pb
                        .points()
                        .iter()
                        .map(|&x| (x - center) / sigma)
                        .collect();
                    let k = opts.motional_levels;
                    let table = hermite_table(k.saturating_sub(1), &u);
                    let w = (pb.dx / sigma).sqrt();
                    let mut proj = DMatrix::from_element(k, pb.dim(), C64::new(0.0, 0.0));
                    for n in 0..k {
                        for (i, _) in u.iter().enumerate() {
                            let v = table[(i, n)] * w;
                            for s in 0..ds {
                                proj[(n, i * ds + s)] = C64::new(v, 0.0);
                            }
                        }
                    }
                    proj
                });
                (ds, None, proj)
            }
            Basis::Plain(_) => (1, None, None),
        };
        Ok(Recorder {
            ds,
            psi0: psi0.clone(),
            parity_diag,
            mode_proj,
            times: Vec::new(),
            populations: Vec::new(),
            motional: Vec::new(),
            fidelity: Vec::new(),
            parity: Vec::new(),
        })
    }

    fn push(&mut self, t: f64, psi: &DVector<C64>) {
        self.times.push(t);
        let mut pops = vec![0.0f64; self.ds];
        for (i, z) in psi.iter().enumerate() {
            pops[i % self.ds] += z.norm_sqr();
        }
        self.populations.push(pops);
        self.fidelity.push(self.psi0.dotc(psi).norm_sqr());
        if let Some(diag) = &self.parity_diag {
            let p: f64 = diag
                .iter()
                .zip(psi.iter())
                .map(|(d, z)| d * z.norm_sqr())
                .sum();
            self.parity.push(p);
        }
        if let Some(proj) = &self.mode_proj {
            // per-level occupation: sum of |amplitude|² over the spin index
            let k = proj.nrows();
            let mut occ = vec![0.0f64; k];
            for n in 0..k {
                // rows of `proj` act per spin component; accumulate separately
                let mut per_spin = vec![C64::new(0.0, 0.0); self.ds];
                for (j, z) in psi.iter().enumerate() {
                    let w = proj[(n, j)];
                    if w != C64::new(0.0, 0.0) {
                        per_spin[j % self.ds] += w * z;
                    }
                }
                occ[n] = per_spin.iter().map(|z| z.norm_sqr()).sum();
            }
            self.motional.push(occ);
        }
    }

    fn finish(self) -> EvolutionResult {
        EvolutionResult {
            times: self.times,
            populations: self.populations,
            motional: self.motional,
            fidelity: self.fidelity,
            parity: self.parity,
        }
    }
}

fn build_segment(h: &SegmentHamiltonian) -> Result<OperatorMatrix> {
    match h {
        SegmentHamiltonian::Model(p) => build_full(p),
        SegmentHamiltonian::Lattice { config, grid } => build_lattice_hamiltonian(config, grid),
    }
}

/// Construct the initial state of a protocol in the basis of its first
/// segment.
pub fn initial_state(
    spec0: &Spectrum,
    basis: &Basis,
    initial: &InitialState,
) -> Result<DVector<C64>> {
    let dim = spec0.states.nrows();
    match initial {
        InitialState::Ground => Ok(spec0.states.column(0).into_owned()),
        InitialState::FockSpin { n, two_m } => {
            let bs = match basis {
                Basis::FockSpin(bs) => bs,
                _ => {
                    return Err(Error::Validation(
                        "Fock ⊗ spin initial states need a Fock ⊗ spin segment".into(),
                    ))
                }
            };
            let s = bs.spin.index_of_two_m(*two_m).ok_or_else(|| {
                Error::Validation(format!("m_F = {}/2 is not a level of F = {}", two_m, bs.spin))
            })?;
            if *n >= bs.fock_cutoff {
                return Err(Error::Validation(format!(
                    "Fock index {n} outside the cutoff {}",
                    bs.fock_cutoff
                )));
            }
            let mut v = DVector::from_element(dim, C64::new(0.0, 0.0));
            v[bs.index(*n, s)] = C64::new(1.0, 0.0);
            Ok(v)
        }
        InitialState::Coherent { alpha, two_m } => {
            let bs = match basis {
                Basis::FockSpin(bs) => bs,
                _ => {
                    return Err(Error::Validation(
                        "coherent initial states need a Fock ⊗ spin segment".into(),
                    ))
                }
            };
            let s = bs.spin.index_of_two_m(*two_m).ok_or_else(|| {
                Error::Validation(format!("m_F = {}/2 is not a level of F = {}", two_m, bs.spin))
            })?;
            let mut v = DVector::from_element(dim, C64::new(0.0, 0.0));
            let mut amp = (-(alpha * alpha) / 2.0).exp();
            let mut norm2 = 0.0;
            for n in 0..bs.fock_cutoff {
                v[bs.index(n, s)] = C64::new(amp, 0.0);
                norm2 += amp * amp;
                amp *= alpha / ((n + 1) as f64).sqrt();
            }
            if (norm2 - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "coherent state α = {alpha} is truncated by the cutoff {} (norm² = {norm2})",
                    bs.fock_cutoff
                )));
            }
            Ok(v)
        }
    }
}

/// Run a quench protocol: exact segment-wise evolution with state handoff,
/// observables sampled uniformly every `sample_dt` across the whole record.
pub fn run_protocol(p: &QuenchProtocol, sample_dt: f64) -> Result<EvolutionResult> {
    run_protocol_with(p, sample_dt, &EvolveOptions::default())
}

pub fn run_protocol_with(
    p: &QuenchProtocol,
    sample_dt: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    p.validate()?;
    if !(sample_dt > 0.0) {
        return Err(Error::Validation("sample_dt must be positive".into()));
    }

    let mut spectra = Vec::with_capacity(p.segments.len());
    for (i, seg) in p.segments.iter().enumerate() {
        let h = build_segment(&seg.hamiltonian).map_err(|e| {
            Error::Validation(format!("segment {i}: {e}"))
        })?;
        spectra.push(hermitian_eigensolve(&h, EigenRange::All)?);
    }
    let dim = spectra[0].states.nrows();
    for (i, s) in spectra.iter().enumerate() {
        if s.states.nrows() != dim {
            return Err(Error::Mismatch(format!(
                "segment {i} dimension {} differs from segment 0 dimension {dim}",
                s.states.nrows()
            )));
        }
    }

    let psi0 = initial_state(&spectra[0], &spectra[0].basis, &p.initial)?;
    let total: f64 = p.segments.iter().map(|s| s.duration).sum();
    let mut times = Vec::new();
    let mut t = 0.0;
    while t < total - 1e-15 * total.max(1.0) {
        times.push(t);
        t += sample_dt;
    }
    times.push(total);

    let mut rec = Recorder::new(&spectra[0].basis, &psi0, opts)?;
    let mut seg_start_state = psi0.clone();
    let mut seg_start_time = 0.0;
    let mut seg_idx = 0usize;
    let mut prop = Propagator::new(&spectra[0], &seg_start_state, opts)?;
    for &tt in &times {
        // advance the segment pointer, handing the state across boundaries
        while seg_idx + 1 < p.segments.len()
            && tt > seg_start_time + p.segments[seg_idx].duration + 1e-15 * total.max(1.0)
        {
            let dur = p.segments[seg_idx].duration;
            seg_start_state = prop.at(dur);
            seg_start_time += dur;
            seg_idx += 1;
            // renormalize against accumulated roundoff before the next leg
            let n = seg_start_state.norm();
            seg_start_state /= C64::new(n, 0.0);
            prop = Propagator::new(&spectra[seg_idx], &seg_start_state, opts)?;
        }
        let psi = prop.at(tt - seg_start_time);
        rec.push(tt, &psi);
    }
    Ok(rec.finish())
}

/// Result of an adiabatic parameter ramp.
#[derive(Clone, Debug, Serialize)]
pub struct RampResult {
    pub evolution: EvolutionResult,
    /// Squared overlap of the final state with the target ground state
    /// (summed over the ground cluster when it is degenerate).
    pub final_overlap: f64,
    /// Von Neumann entropy of the reduced spin state at the end point.
    pub spin_entropy: f64,
}

/// Ramp model parameters linearly from `from` to `to` over `total_time`
/// using `n_steps` piecewise-constant segments (midpoint sampling).
pub fn adiabatic_ramp(
    from: &ModelParams,
    to: &ModelParams,
    total_time: f64,
    n_steps: usize,
) -> Result<RampResult> {
    if n_steps < 10 {
        return Err(Error::Validation(format!(
            "adiabatic ramp needs at least 10 steps, got {n_steps}"
        )));
    }
    if from.spin != to.spin || from.fock_cutoff != to.fock_cutoff {
        return Err(Error::Mismatch(
            "ramp endpoints must share spin and cutoff".into(),
        ));
    }
    if !(total_time >= 0.0) {
        return Err(Error::Validation("ramp time must be ≥ 0".into()));
    }

    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let mut segments = Vec::with_capacity(n_steps);
    for i in 0..n_steps {
        let s = (i as f64 + 0.5) / n_steps as f64;
        segments.push(Segment {
            duration: total_time / n_steps as f64,
            hamiltonian: SegmentHamiltonian::Model(ModelParams {
                omega: lerp(from.omega, to.omega, s),
                g: lerp(from.g, to.g, s),
                omega0: lerp(from.omega0, to.omega0, s),
                g_eps: lerp(from.g_eps, to.g_eps, s),
                g2: lerp(from.g2, to.g2, s),
                spin: from.spin,
                fock_cutoff: from.fock_cutoff,
            }),
        });
    }
    // ground-state preparation in the starting Hamiltonian
    let h_from = build_full(from)?;
    let spec_from = hermitian_eigensolve(&h_from, EigenRange::All)?;
    let psi0 = spec_from.states.column(0).into_owned();

    let protocol = QuenchProtocol {
        segments,
        initial: InitialState::Ground,
    };
    // reuse the machinery; sampling at step boundaries
    let sample_dt = if total_time > 0.0 {
        total_time / n_steps as f64
    } else {
        1.0
    };
    let evolution = run_protocol(&protocol, sample_dt)?;

    // final state: rebuild it exactly the way the protocol did
    let mut psi = psi0;
    for seg in &protocol.segments {
        if seg.duration == 0.0 {
            continue;
        }
        let h = build_segment(&seg.hamiltonian)?;
        let spec = hermitian_eigensolve(&h, EigenRange::All)?;
        let prop = Propagator::new(&spec, &psi, &EvolveOptions::default())?;
        psi = prop.at(seg.duration);
        let n = psi.norm();
        psi /= C64::new(n, 0.0);
    }

    let h_to = build_full(to)?;
    let spec_to = hermitian_eigensolve(&h_to, EigenRange::All)?;
    let clusters = spec_to.clusters(1e-9);
    let (g0, g1) = clusters[0];
    let mut overlap = 0.0;
    for i in g0..g1 {
        overlap += spec_to.states.column(i).dotc(&psi).norm_sqr();
    }

    let spin_entropy = spin_entropy(&psi, to.spin.dim());

    Ok(RampResult {
        evolution,
        final_overlap: overlap,
        spin_entropy,
    })
}

/// Von Neumann entropy of the reduced spin state of a Fock-major vector.
pub fn spin_entropy(psi: &DVector<C64>, spin_dim: usize) -> f64 {
    let nf = psi.len() / spin_dim;
    let mut rho = DMatrix::from_element(spin_dim, spin_dim, C64::new(0.0, 0.0));
    for n in 0..nf {
        for s1 in 0..spin_dim {
            for s2 in 0..spin_dim {
                rho[(s1, s2)] += psi[n * spin_dim + s1] * psi[n * spin_dim + s2].conj();
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(rho);
    eig.eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.ln())
        .sum()
}

//! Fock and spin operator construction, tensor products, the parity
//! operator, and the matrix carrier shared by all modules.
//!
//! Matrices are stored either as dense complex arrays or, for the large
//! block-banded Hamiltonians produced by the lattice and model builders, in
//! a real symmetric banded layout. Both storages sit behind
//! [`OperatorMatrix`] so that the eigensolver can pick the appropriate path.

use crate::error::Error;
use crate::spin::Spin;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::io::{Read, Write};

/// Relative Hermiticity tolerance: max|H - H†| ≤ HERMITICITY_TOL · max|H|.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Basis layout of a Fock ⊗ spin space.
///
/// Ordering is Fock-major: index = n·(2F+1) + s with the spin index
/// s = 0 corresponding to m_F = -F.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BasisSpec {
    pub fock_cutoff: usize,
    pub spin: Spin,
}

impl BasisSpec {
    pub fn new(fock_cutoff: usize, spin: Spin) -> Result<BasisSpec> {
        if fock_cutoff < 2 {
            return Err(Error::Domain(format!(
                "Fock cutoff must be at least 2, got {fock_cutoff}"
            )));
        }
        Ok(BasisSpec { fock_cutoff, spin })
    }

    pub fn dim(&self) -> usize {
        self.fock_cutoff * self.spin.dim()
    }

    /// Flat index of |n⟩ ⊗ |spin index s⟩.
    pub fn index(&self, n: usize, s: usize) -> usize {
        n * self.spin.dim() + s
    }
}

/// Uniform position grid ⊗ spin basis (position-major).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PositionBasis {
    pub n_points: usize,
    pub spin: Spin,
    /// First interior grid point (m).
    pub x_first: f64,
    /// Grid spacing (m).
    pub dx: f64,
}

impl PositionBasis {
    pub fn dim(&self) -> usize {
        self.n_points * self.spin.dim()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_first + i as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }
}

/// Which space a matrix acts on.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Basis {
    FockSpin(BasisSpec),
    Position(PositionBasis),
    Plain(usize),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::FockSpin(b) => b.dim(),
            Basis::Position(p) => p.dim(),
            Basis::Plain(d) => *d,
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Basis::Plain(_) => 0,
            Basis::FockSpin(_) => 1,
            Basis::Position(_) => 2,
        }
    }
}

/// Real symmetric banded matrix; `bands[d·dim + i] = A[i + d, i]` for
/// diagonals d = 0..=half_bw.
#[derive(Clone, Debug)]
pub struct SymBanded {
    dim: usize,
    half_bw: usize,
    bands: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(dim: usize, half_bw: usize) -> SymBanded {
        SymBanded {
            dim,
            half_bw,
            bands: vec![0.0; (half_bw + 1) * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bw
    }

    /// Add `v` to A[i+d, i] (and implicitly to A[i, i+d]).
    pub fn add(&mut self, i: usize, d: usize, v: f64) {
        debug_assert!(d <= self.half_bw && i + d < self.dim);
        self.bands[d * self.dim + i] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.half_bw {
            0.0
        } else {
            self.bands[d * self.dim + lo]
        }
    }

    /// y = A x for real vectors.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        let diag = &self.bands[0..n];
        for i in 0..n {
            y[i] = diag[i] * x[i];
        }
        for d in 1..=self.half_bw {
            let band = &self.bands[d * n..(d + 1) * n];
            for i in 0..n - d {
                let b = band[i];
                if b != 0.0 {
                    y[i + d] += b * x[i];
                    y[i] += b * x[i + d];
                }
            }
        }
    }

    /// y = A x for complex vectors (A is real).
    pub fn apply_complex(&self, x: &[C64], y: &mut [C64]) {
        let n = self.dim;
        let diag = &self.bands[0..n];
        for i in 0..n {
            y[i] = diag[i] * x[i];
        }
        for d in 1..=self.half_bw {
            let band = &self.bands[d * n..(d + 1) * n];
            for i in 0..n - d {
                let b = band[i];
                if b != 0.0 {
                    y[i + d] += b * x[i];
                    y[i] += b * x[i + d];
                }
            }
        }
    }

    /// Multiply every entry by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.bands {
            *v *= factor;
        }
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for d in 0..=self.half_bw {
            for i in 0..n - d {
                let v = self.bands[d * n + i];
                m[(i + d, i)] = v;
                m[(i, i + d)] = v;
            }
        }
        m
    }

    /// Max row sum of absolute values; upper bound for the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        let n = self.dim;
        let mut sums = vec![0.0f64; n];
        for d in 0..=self.half_bw {
            for i in 0..n - d {
                let a = self.bands[d * n + i].abs();
                sums[i] += a;
                if d > 0 {
                    sums[i + d] += a;
                }
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(DMatrix<C64>),
    Banded(SymBanded),
}

/// Dense or banded matrix with basis labels.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    storage: Storage,
    basis: Basis,
    hermitian: bool,
    /// Set by builders whose parameters are at or past a regime where the
    /// spectrum is unbounded below at infinite cutoff (quadratic coupling
    /// collapse); results are then cutoff-dependent by nature.
    pub collapse_flag: bool,
}

impl OperatorMatrix {
    /// Wrap a dense matrix that is expected to be Hermitian; fails if the
    /// Hermiticity defect exceeds [`HERMITICITY_TOL`] relative to max|H|.
    pub fn dense_hermitian(m: DMatrix<C64>, basis: Basis) -> Result<OperatorMatrix> {
        if m.nrows() != m.ncols() || m.nrows() != basis.dim() {
            return Err(Error::Mismatch(format!(
                "matrix is {}x{} but basis dimension is {}",
                m.nrows(),
                m.ncols(),
                basis.dim()
            )));
        }
        let max = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let defect = hermiticity_defect(&m);
        let bound = HERMITICITY_TOL * max.max(f64::MIN_POSITIVE);
        if defect > bound {
            return Err(Error::NonHermitian { defect, bound });
        }
        Ok(OperatorMatrix {
            storage: Storage::Dense(m),
            basis,
            hermitian: true,
            collapse_flag: false,
        })
    }

    /// Wrap a dense matrix without claiming Hermiticity (ladder operators etc.).
    pub fn dense(m: DMatrix<C64>, basis: Basis) -> OperatorMatrix {
        OperatorMatrix {
            storage: Storage::Dense(m),
            basis,
            hermitian: false,
            collapse_flag: false,
        }
    }

    /// Wrap a real symmetric banded matrix (Hermitian by construction).
    pub fn banded(b: SymBanded, basis: Basis) -> OperatorMatrix {
        OperatorMatrix {
            storage: Storage::Banded(b),
            basis,
            hermitian: true,
            collapse_flag: false,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Banded(b) => b.dim(),
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn as_banded(&self) -> Option<&SymBanded> {
        match &self.storage {
            Storage::Banded(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_dense(&self) -> Option<&DMatrix<C64>> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Banded(b) => C64::new(b.get(i, j), 0.0),
        }
    }

    /// Materialize as a dense complex matrix.
    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Banded(b) => b.to_dense_real().map(|v| C64::new(v, 0.0)),
        }
    }

    /// y = H x.
    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        match &self.storage {
            Storage::Dense(m) => m * x,
            Storage::Banded(b) => {
                let mut y = DVector::from_element(b.dim(), C64::new(0.0, 0.0));
                b.apply_complex(x.as_slice(), y.as_mut_slice());
                y
            }
        }
    }

    /// If every entry is exactly real, the real part as an owned matrix.
    pub fn real_view(&self) -> Option<DMatrix<f64>> {
        match &self.storage {
            Storage::Banded(b) => Some(b.to_dense_real()),
            Storage::Dense(m) => {
                if m.iter().all(|z| z.im == 0.0) {
                    Some(m.map(|z| z.re))
                } else {
                    None
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.iter().fold(0.0f64, |acc, z| acc.max(z.norm())),
            Storage::Banded(b) => b.max_abs(),
        }
    }

    /// Max row sum of absolute values; cheap upper bound for ‖H‖₂ of a
    /// Hermitian matrix.
    pub fn norm_estimate(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut best = 0.0f64;
                for i in 0..n {
                    let s: f64 = (0..n).map(|j| m[(i, j)].norm()).sum();
                    best = best.max(s);
                }
                best
            }
            Storage::Banded(b) => b.inf_norm(),
        }
    }

    /// max|H - H†| over all entries (0 for banded storage).
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => hermiticity_defect(m),
            Storage::Banded(_) => 0.0,
        }
    }
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Annihilation and creation operators on |0⟩..|N_f−1⟩:
/// ⟨n−1|a|n⟩ = √n, a† = aᵀ.
pub fn fock_ladder(n_f: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if n_f < 2 {
        return Err(Error::Domain(format!(
            "Fock cutoff must be at least 2, got {n_f}"
        )));
    }
    let mut a = DMatrix::from_element(n_f, n_f, C64::new(0.0, 0.0));
    for n in 1..n_f {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let basis = Basis::Plain(n_f);
    Ok((
        OperatorMatrix::dense(a, basis),
        OperatorMatrix::dense(adag, basis),
    ))
}

/// Dimensionless spin angular momentum matrices (F̂x, F̂y, F̂z) for spin F.
///
/// F̂z is diagonal with m = -F..F (ascending with the basis index) and the
/// ladder elements are ⟨m±1|F̂±|m⟩ = √(F(F+1) − m(m±1)).
pub fn spin_operators(spin: Spin) -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let d = spin.dim();
    let f = spin.f();
    let mut fx = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    let mut fy = fx.clone();
    let mut fz = fx.clone();
    for s in 0..d {
        let m = spin.m_of_index(s);
        fz[(s, s)] = C64::new(m, 0.0);
        if s + 1 < d {
            // raising element connecting m to m+1
            let c = (f * (f + 1.0) - m * (m + 1.0)).sqrt();
            fx[(s + 1, s)] = C64::new(c / 2.0, 0.0);
            fx[(s, s + 1)] = C64::new(c / 2.0, 0.0);
            fy[(s + 1, s)] = C64::new(0.0, -c / 2.0);
            fy[(s, s + 1)] = C64::new(0.0, c / 2.0);
        }
    }
    let basis = Basis::Plain(d);
    (
        OperatorMatrix::dense(fx, basis),
        OperatorMatrix::dense(fy, basis),
        OperatorMatrix::dense(fz, basis),
    )
}

/// Parity operator Π = exp(iπ a†a) ⊗ exp(iπ(F̂z + F)) on a Fock ⊗ spin basis.
///
/// Diagonal with entries ±1; Π² = I exactly, and Π commutes with the QRM
/// Hamiltonian for any (ω, g, ω₀).
pub fn parity_operator(basis: &BasisSpec) -> OperatorMatrix {
    let dim = basis.dim();
    let ds = basis.spin.dim();
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for n in 0..basis.fock_cutoff {
        for s in 0..ds {
            // (-1)^n · (-1)^(m+F) with m+F = s an integer
            let v = if (n + s) % 2 == 0 { 1.0 } else { -1.0 };
            let i = basis.index(n, s);
            m[(i, i)] = C64::new(v, 0.0);
        }
    }
    OperatorMatrix::dense_hermitian(m, Basis::FockSpin(*basis)).expect("diagonal is hermitian")
}

/// Diagonal of the parity operator as a real vector.
pub fn parity_diagonal(basis: &BasisSpec) -> Vec<f64> {
    let ds = basis.spin.dim();
    let mut d = Vec::with_capacity(basis.dim());
    for n in 0..basis.fock_cutoff {
        for s in 0..ds {
            d.push(if (n + s) % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    d
}

/// Kronecker (tensor) product, row-major convention:
/// (A ⊗ B)[(i_a·m_b + i_b), (j_a·n_b + j_b)] = A[i_a, j_a]·B[i_b, j_b].
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ma, na) = a.shape();
    let (mb, nb) = b.shape();
    let mut out = DMatrix::from_element(ma * mb, na * nb, C64::new(0.0, 0.0));
    for ia in 0..ma {
        for ja in 0..na {
            let f = a[(ia, ja)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..mb {
                for jb in 0..nb {
                    out[(ia * mb + ib, ja * nb + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    out
}

const DUMP_MAGIC: &[u8; 8] = b"RABIMAT\0";

/// Debug dump: 32-byte header (magic, dim, basis tag, reserved) followed by
/// the dense entries column-major as little-endian (re, im) f64 pairs.
pub fn write_matrix_dump<W: Write>(m: &OperatorMatrix, mut w: W) -> std::io::Result<()> {
    let dense = m.to_dense();
    let dim = dense.nrows() as u64;
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&m.basis().tag().to_le_bytes())?;
    w.write_all(&0u64.to_le_bytes())?;
    for j in 0..dense.ncols() {
        for i in 0..dense.nrows() {
            let z = dense[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a matrix dump back; returns the dense matrix and the basis tag.
pub fn read_matrix_dump<R: Read>(mut r: R) -> std::io::Result<(DMatrix<C64>, u64)> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[0..8] != DUMP_MAGIC {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "bad matrix dump magic",
        ));
    }
    let dim = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let tag = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut buf = vec![0u8; dim * dim * 16];
    r.read_exact(&mut buf)?;
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let mut off = 0;
    for j in 0..dim {
        for i in 0..dim {
            let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
            m[(i, j)] = C64::new(re, im);
            off += 16;
        }
    }
    Ok((m, tag))
}

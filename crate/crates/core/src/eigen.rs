//! Hermitian eigensolver with explicit accuracy contracts.
//!
//! Every solve returns a [`Spectrum`] carrying per-pair residuals and the
//! orthonormality defect, checked against the contracts below before the
//! result is handed out:
//!
//! - energies ascending;
//! - ‖V†V − I‖_max ≤ 1e-10;
//! - ‖Hv − Ev‖ ≤ 1e-10·‖H‖-estimate for every pair.
//!
//! Dense solves go through nalgebra's symmetric eigendecomposition (real or
//! complex as needed). Partial solves of large real matrices use the
//! filtered-subspace path in [`crate::subspace`], which must agree with the
//! dense path within the same contracts. Eigenvectors are gauge-fixed
//! (largest-magnitude entry real positive), which makes repeated solves
//! bitwise identical.

use crate::error::Error;
use crate::subspace::{self, FilterOptions};
use crate::operators::{Basis, OperatorMatrix, Storage};
use crate::Result;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

/// Residual and orthonormality contract, relative to the norm estimate.
pub const SOLVE_TOL: f64 = 1e-10;

/// How much of the spectrum to compute.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EigenRange {
    All,
    Lowest(usize),
}

/// Result of a Hermitian eigensolve.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Column-orthonormal eigenvectors, one column per energy.
    pub states: DMatrix<C64>,
    /// Per-pair residual norms ‖Hv − Ev‖.
    pub residuals: Vec<f64>,
    /// max |V†V − I| over the computed columns.
    pub orthonormality_defect: f64,
    /// Norm estimate used to scale the contracts.
    pub norm_estimate: f64,
    /// Basis of the operator that was solved.
    pub basis: Basis,
    /// Propagated from the operator (quadratic-coupling collapse vicinity).
    pub collapse_flag: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Check the accuracy contracts.
    pub fn verify(&self) -> Result<()> {
        let scale = self.norm_estimate.max(f64::MIN_POSITIVE);
        for w in self.energies.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Validation("energies not ascending".into()));
            }
        }
        let worst = self.residuals.iter().cloned().fold(0.0f64, f64::max);
        if worst > SOLVE_TOL * scale {
            return Err(Error::NonConvergence {
                context: format!(
                    "residual {worst:.3e} exceeds {:.3e}",
                    SOLVE_TOL * scale
                ),
                iterations: 0,
            });
        }
        if self.orthonormality_defect > SOLVE_TOL {
            return Err(Error::NonConvergence {
                context: format!(
                    "orthonormality defect {:.3e} exceeds {SOLVE_TOL:.3e}",
                    self.orthonormality_defect
                ),
                iterations: 0,
            });
        }
        Ok(())
    }

    /// Group indices into near-degenerate clusters: consecutive energies are
    /// clustered when their gap is below `rel_gap` times the spread of the
    /// computed energies. Returns half-open index ranges.
    pub fn clusters(&self, rel_gap: f64) -> Vec<(usize, usize)> {
        cluster_ranges(&self.energies, rel_gap)
    }
}

/// Cluster ascending energies by relative gap; shared with the comparison
/// module which applies it to matched spectra.
pub fn cluster_ranges(energies: &[f64], rel_gap: f64) -> Vec<(usize, usize)> {
    let n = energies.len();
    if n == 0 {
        return Vec::new();
    }
    let spread = (energies[n - 1] - energies[0]).abs();
    let tol = rel_gap * spread.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..n {
        if energies[i] - energies[i - 1] > tol {
            out.push((start, i));
            start = i;
        }
    }
    out.push((start, n));
    out
}

/// Diagonalize a Hermitian operator.
pub fn hermitian_eigensolve(h: &OperatorMatrix, range: EigenRange) -> Result<Spectrum> {
    if !h.is_hermitian() {
        let defect = h.hermiticity_defect();
        return Err(Error::NonHermitian {
            defect,
            bound: 1e-12 * h.max_abs(),
        });
    }
    let n = h.dim();
    let k = match range {
        EigenRange::All => n,
        EigenRange::Lowest(k) => {
            if k == 0 || k > n {
                return Err(Error::Domain(format!(
                    "requested {k} of {n} eigenpairs"
                )));
            }
            k
        }
    };
    let norm_est = h.norm_estimate();

    // Partial path: large real problems with few requested states.
    let partial_viable = k < n && n >= 400 && 6 * k <= n;
    let (energies, states_real, states_complex) = if partial_viable {
        match h.storage() {
            Storage::Banded(b) => {
                let out = subspace::lowest_k(b, k, norm_est, &FilterOptions::default())?;
                (out.energies, Some(out.vectors), None)
            }
            Storage::Dense(_) => match h.real_view() {
                Some(real) => {
                    let out = subspace::lowest_k(&real, k, norm_est, &FilterOptions::default())?;
                    (out.energies, Some(out.vectors), None)
                }
                None => dense_solve(h, k)?,
            },
        }
    } else {
        dense_solve(h, k)?
    };

    // Assemble complex state matrix and gauge-fix.
    let mut states = match (states_real, states_complex) {
        (Some(r), None) => r.map(|v| C64::new(v, 0.0)),
        (None, Some(c)) => c,
        _ => unreachable!(),
    };
    gauge_fix(&mut states);

    // Residuals and orthonormality defect.
    let mut residuals = Vec::with_capacity(k);
    for (i, e) in energies.iter().enumerate() {
        let v = states.column(i).into_owned();
        let hv = h.apply(&v);
        let mut acc = 0.0f64;
        for j in 0..n {
            acc += (hv[j] - v[j] * C64::new(*e, 0.0)).norm_sqr();
        }
        residuals.push(acc.sqrt());
    }
    let gram = states.adjoint() * &states;
    let mut orth = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }

    let spectrum = Spectrum {
        energies,
        states,
        residuals,
        orthonormality_defect: orth,
        norm_estimate: norm_est,
        basis: *h.basis(),
        collapse_flag: h.collapse_flag,
    };
    spectrum.verify()?;
    Ok(spectrum)
}

type SolveParts = (Vec<f64>, Option<DMatrix<f64>>, Option<DMatrix<C64>>);

fn dense_solve(h: &OperatorMatrix, k: usize) -> Result<SolveParts> {
    match h.real_view() {
        Some(real) => {
            let eig = SymmetricEigen::new(real);
            let order = sort_order(eig.eigenvalues.as_slice());
            let n = eig.eigenvalues.len();
            let mut energies = Vec::with_capacity(k);
            let mut states = DMatrix::<f64>::zeros(n, k);
            for (col, &idx) in order.iter().take(k).enumerate() {
                energies.push(eig.eigenvalues[idx]);
                states.set_column(col, &eig.eigenvectors.column(idx));
            }
            Ok((energies, Some(states), None))
        }
        None => {
            let m = h.to_dense();
            let eig = SymmetricEigen::new(m);
            let order = sort_order(eig.eigenvalues.as_slice());
            let n = eig.eigenvalues.len();
            let mut energies = Vec::with_capacity(k);
            let mut states = DMatrix::<C64>::zeros(n, k);
            for (col, &idx) in order.iter().take(k).enumerate() {
                energies.push(eig.eigenvalues[idx]);
                states.set_column(col, &eig.eigenvectors.column(idx));
            }
            Ok((energies, None, Some(states)))
        }
    }
}

fn sort_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Make each column's largest-magnitude entry real positive (first index on
/// ties), fixing the gauge deterministically.
fn gauge_fix(states: &mut DMatrix<C64>) {
    for mut col in states.column_iter_mut() {
        let mut best = 0usize;
        let mut best_norm = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let nz = z.norm_sqr();
            if nz > best_norm {
                best_norm = nz;
                best = i;
            }
        }
        let z = col[best];
        let r = z.norm();
        if r > 0.0 {
            let phase = C64::new(z.re / r, -z.im / r);
            for v in col.iter_mut() {
                *v *= phase;
            }
        }
    }
}

//! Numerical workbench for the quantum Rabi model (QRM), its common
//! generalizations, and a cold-atom optical-lattice realization of it.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`consts`], [`atoms`], [`units`]: physical constants, the atomic species
//!   registry, and all conversions between experimental parameters (fields,
//!   wavelengths, lattice depths) and model parameters (ω, g, ω₀).
//! - [`operators`], [`eigen`]: Fock/spin operator construction, tensor
//!   products, the parity operator, and a dense Hermitian eigensolver with an
//!   optional banded/partial path for large matrices.
//! - [`models`]: Fock⊗spin Hamiltonians for the QRM, the driven QRM, the
//!   QRM with quadratic coupling, and the Dicke model in the pseudo-spin
//!   representation, plus position-space synthesis of their eigenfunctions.
//! - [`lattice`]: real-space discretization of a single trapping site of the
//!   combined trapping/coupling lattice, effective-parameter extraction, and
//!   the inverse map from a target coupling strength to a field amplitude.
//! - [`compare`]: state matching and the mean energy-discrepancy /
//!   state-infidelity metrics between the ideal model and the lattice
//!   implementation, plus a sweep engine over coupling ratios and depths.
//! - [`dynamics`]: unitary time evolution under piecewise-constant
//!   Hamiltonians, quench protocols, and adiabatic ramps.
//!
//! All public quantities are SI (rates in rad/s, lengths in m, fields in T)
//! unless a function documents otherwise; lattice depths are expressed in
//! units of the trapping-lattice recoil energy.

pub mod atoms;
pub mod compare;
pub mod consts;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod hermite;
pub mod subspace;
pub mod lattice;
pub mod models;
pub mod operators;
pub mod spin;
pub mod units;

pub use atoms::{registry, species, AtomSpecies};
pub use eigen::{hermitian_eigensolve, EigenRange, Spectrum};
pub use error::Error;
pub use models::ModelParams;
pub use spin::Spin;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

//! Simulation kernels for a first-quantized eigensolver on a real-space qubit
//! grid: a charged particle in a uniform magnetic field, evolved by
//! probabilistic imaginary-time evolution (PITE).
//!
//! The crate is organised bottom-up:
//!
//! - [`units`] and [`grid`]: physical constants, the simulation cell and the
//!   branch-structured register state (system register plus ancilla branches).
//! - [`spectral`]: radix-2 FFT, the centered QFT and the cyclic shift unitary.
//! - [`hamiltonian`]: potentials, the Landau gauge, matrix-free and dense
//!   Hamiltonians, the Lanczos diagonalization oracle and Fock–Darwin levels.
//! - [`evolution`]: diagonal phase operators, their gate-sequence forms and
//!   Trotterized real-time evolution.
//! - [`pite`], [`filtration`]: the probabilistic ancilla circuits.
//! - [`observables`]: density, one-electron density matrix, current densities
//!   and the derivative-distribution reconstruction.
//! - [`resources`]: subroutine call counts and CNOT-count model.
//!
//! Units throughout: ħ = 1, energies in meV, lengths in nm, times in meV⁻¹.

pub mod error;
pub mod evolution;
pub mod export;
pub mod filtration;
pub mod grid;
pub mod hamiltonian;
pub mod observables;
pub mod pite;
pub mod resources;
pub mod scenario;
pub mod spectral;
pub mod units;

pub use error::{FqeError, Result};
pub use grid::{BranchMask, BranchState, Grid, Repr};
pub use num_complex::Complex64 as C64;

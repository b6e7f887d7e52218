//! Spectral laboratory for the focusing nonlocal NLS
//! `i∂t u - ∂x²u = u² u⋆`, `u⋆(x) = conj(u(-x))`, near its ground state.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`field`]: periodic grid, sampled fields, spectral calculus.
//! * [`solitons`]: closed-form solutions and the root-space profiles.
//! * [`invariants`]: quasipower, Hamiltonian, symplectic forms, `d(u, Q)`.
//! * [`dynamics`]: time stepping and blow-up detection.
//! * [`modulation`]: the `(θ, α)` fit and the even/odd root-space coordinates.
//! * [`linops`]: linearised operators, identities and dense spectra.
//! * [`rhs`]: evolution formulas for the modulation parameters.
//! * [`experiments`]: config-driven scenarios, sweeps and reports.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod invariants;
pub mod io;
pub mod linops;
pub mod modulation;
pub mod rhs;
pub mod solitons;

pub use error::{Error, Result};
pub use field::{Field, SpectralField};
pub use grid::Grid;

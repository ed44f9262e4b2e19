//! Exact non-Markovian dynamics of one or two quantum emitters above a planar
//! Drude metal surface, with Feibelman d-parameter surface corrections.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`materials`]: Drude permittivity and d-parameter sources.
//! * [`interface`]: wave-vector branches and p-polarised scattering coefficients.
//! * [`green`]: Im G_zz between emitters via Sommerfeld quadrature.
//! * [`spectral`]: the N x N spectral-density matrix on a frequency grid.
//! * [`spectrum`]: bound states below the continuum and their residue weights.
//! * [`dynamics`]: memory kernel, Volterra time stepper, Markov reference.
//! * [`entanglement`]: two-emitter density matrix and Wootters concurrence.
//!
//! Units throughout: hbar = 1, energies and frequencies in eV, lengths in nm,
//! times in hbar/eV.

// Negated comparisons such as `!(x > 0.0)` reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod green;
pub mod interface;
pub mod materials;
pub mod quadrature;
pub mod spectral;
pub mod spectrum;

mod csvio;

pub use error::{Error, Result};

/// Library version, recorded in run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// hbar * c in eV nm.
pub const HBAR_C: f64 = 197.326_980_4;

/// Vacuum wavenumber (nm^-1) of a photon with energy `omega` (eV).
#[inline]
pub fn wavenumber(omega: f64) -> f64 {
    omega / HBAR_C
}

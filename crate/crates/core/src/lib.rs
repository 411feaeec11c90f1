//! Quantum-jump (Monte-Carlo wavefunction) simulation core.
//!
//! The crate is `no_std` with `alloc` and carries no IO. It covers dense
//! complex linear algebra for small open systems ([`linalg`]), the single-
//! and two-atom model builders ([`models`]), stochastic trajectory solvers
//! ([`trajectory`]), the Lindblad reference evolver ([`master`]), discrete
//! photon statistics ([`photonstats`]) and the light/dark period analytics
//! of dipole-coupled atom pairs ([`darkperiods`]).
//!
//! All quantities are in units rescaled by the single-atom decay rate Γ with
//! ħ = 1, so times are in 1/Γ.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod darkperiods;
mod error;
pub mod linalg;
pub(crate) mod math;
pub mod master;
pub mod models;
pub mod ode;
pub mod photonstats;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, SpectralData, C64};
pub use models::{AtomParams, DipoleGeometry, EigenCoeffs, ModelKind, ModelSpec};

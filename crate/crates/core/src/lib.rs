//! Numerical laboratory for propagation bounds in chains of coupled
//! (an)harmonic oscillators.
//!
//! The crate verifies, at desk scale, the constructive machinery behind
//! light-cone estimates for oscillator lattices: explicit dispersion
//! bounds on circles, Laurent-coefficient decay, closed-form harmonic
//! evolution matrices, truncated Fock representations with Weyl
//! operators, finite-volume Heisenberg dynamics, and threshold-crossing
//! cone fits.  Every numeric claim is backed either by an independent
//! closed-form oracle or by a second computational route.

pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod harmonic;
pub mod lightcone;
pub mod linalg;
pub mod model;
pub mod ode;

pub use error::CoreError;

//! Stimulated conversion between atomic and molecular Bose-Einstein condensates
//! under a linear sweep through a Feshbach resonance.
//!
//! The crate has two independent halves that check each other:
//!
//! * closed forms: transition distributions built from q-Pochhammer symbols,
//!   their large-N limits, the multi-resonance cascade with its Gibbs structure,
//!   Landau-Zener scattering phases and the adiabatic cat state;
//! * a Schrödinger-equation propagator for the conserved-sector Hamiltonian
//!   `H(t) = A + tB`, used as a numerical oracle at small particle numbers.
//!
//! ```
//! use bec_sweep::exact::{reverse_distribution, SweepParams};
//!
//! let p = SweepParams::from_lambda(0.3).unwrap();
//! let d = reverse_distribution(1, 0, &p);
//! // Two-state Landau-Zener: survival x, transition 1 - x.
//! assert!((d.prob(0) - p.x()).abs() < 1e-15);
//! ```

pub mod cascade;
pub mod cat;
pub mod cli;
pub mod config;
pub mod error;
pub mod exact;
pub mod output;
pub mod sector;
pub mod special;
pub mod tdse;
pub mod validation;

pub use error::{Error, Result};

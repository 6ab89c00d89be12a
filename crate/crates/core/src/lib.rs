//! Collapse, revival and cat-state generation for a qubit coupled to a
//! collective spin of `N` two-level systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`dicke`]: the symmetric (Dicke) subspace, collective operators and
//!   spin coherent states, plus the Fock-space embedding used for
//!   comparisons with a harmonic mode.
//! - [`hamiltonians`]: the qubit + big-spin exchange Hamiltonian and its
//!   Jaynes-Cummings counterpart, with the 2x2 block decomposition.
//! - [`dynamics`]: time evolution, reduced states, linear entropy and
//!   envelope analysis.
//! - [`cat`]: the conditional-evolution cat state and its fidelity to the
//!   exact big-spin state at the attractor time.
//! - [`metrology`]: quantum Fisher information for a `J_y` rotation.
//! - [`wigner`]: the spin Wigner function on the sphere.
//! - [`sweep`]: deterministic parallel parameter sweeps with CSV output.

pub mod angular;
pub mod cat;
pub mod dicke;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod metrology;
pub mod sweep;
pub mod wigner;

pub use error::{Result, RevivalError};
pub use linalg::{Operator, C64};

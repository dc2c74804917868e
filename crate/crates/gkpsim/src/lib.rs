//! Truncated-Fock-basis simulation of Gottesman-Kitaev-Preskill (GKP)
//! bosonic code states in the vibrational modes of optically trapped
//! neutral atoms.
//!
//! The crate is organized in layers:
//!
//! * [`fock`] — dense operators, states, tensor structure and time
//!   evolution on a truncated oscillator basis;
//! * [`gkp`] — GKP code objects, finite code states, the effective
//!   squeezing metric and Wigner-function export;
//! * [`protocols`] — gate-level preparation and error-correction channels
//!   built from conditional displacements and ancilla reset;
//! * [`trap`] — optical tweezer and lattice potentials and the oscillator
//!   parameters extracted from them;
//! * [`pulse`] — hardware-level pulse simulation: quench squeezing,
//!   tune-out-beam displacements and the full lattice preparation run;
//! * [`io`] — run artifacts: state containers, CSV grids and manifests.
//!
//! Quadrature convention: `q = (a† + a)/√2`, `p = i(a† − a)/√2`, so
//! `[q, p] = i`. Displacements follow the grid-code convention
//! `D(α) = exp[(α a† − α* a)/√2]`, shifting `q` by `Re α` and `p` by
//! `Im α`. Hamiltonians are expressed in angular-frequency units (`H/ħ`).

pub mod constants;
pub mod error;
pub mod fock;
pub mod gkp;
pub mod linalg;
pub mod protocols;
pub mod pulse;
pub mod trap;
pub mod warn;

pub use error::{GkpError, Result};

//! Truncated Fock-space simulation of dissipatively prepared mechanical
//! pair-coherent states, their nonclassicality metrics, and remote cat-state
//! preparation by homodyne conditioning.
//!
//! Units: the first mechanical frequency is 1; times are in its inverse.
//! Mode order is (cavity, mechanics 1, mechanics 2) for three-mode spaces and
//! (mechanics 1, mechanics 2) for two-mode states. Basis indices are row-major
//! with mode 0 leftmost.

pub mod conditioning;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod sparse;
pub mod states;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, HilbertSpace, Operator, PureState};

pub type C64 = num_complex::Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

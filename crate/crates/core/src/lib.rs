//! Desk-scale simulation of dissipatively prepared multimode squeezed
//! motional states and their use in simultaneous displacement estimation.
//!
//! Conventions: `hbar = 1`, dimensionless quadratures, rates in rad/s and
//! durations in seconds. Joint bases are ordered spins first, then modes,
//! with the last mode least significant. Spin bit 0 is down, `sigma_z` on
//! down is `-1`, and `sigma_plus` maps down to up.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod metrology;
pub mod reservoir;
pub mod sideband;
pub mod squeeze;

pub use error::{Error, Result};
pub use fock::{
    DensityOperator, HilbertLayout, KronOperator, LinearOperator, OperatorMatrix, QuantumState,
    StateVector,
};

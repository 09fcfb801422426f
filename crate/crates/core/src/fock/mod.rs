//! Truncated Fock spaces of bosonic modes coupled to spins.

mod evolve;
mod kron;
mod layout;
mod operator;
mod ops;
mod state;

pub use evolve::{conjugate, evolve, evolve_state_action, expm_action, Evolve, Propagator};
pub use kron::{KronOperator, KronTerm, LocalOp};
pub use layout::{BasisLabel, HilbertLayout, Spin, DEFAULT_MAX_DIM, DENSE_LIMIT};
pub use operator::{check_dense, LinearOperator, OperatorMatrix, HERMITIAN_TOL};
pub use ops::{
    annihilation_kron, build_annihilation, build_number, build_quadratures, build_spin_ops, pauli,
    quadratures_kron, spin_ops_kron, SpinOperators,
};
pub use state::{
    expectation, thermal_state, variance, DensityOperator, QuantumState, StateVector,
    TruncationWarning, DENSITY_HERMITIAN_TOL, NORM_TOL, TRUNCATION_LIMIT,
};

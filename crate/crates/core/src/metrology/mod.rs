//! Displacement sensing with squeezed probes: encoding, Fisher information,
//! Monte-Carlo estimation, spin readout, and entanglement witnesses.

pub mod encode;
pub mod epr;
pub mod estimation;
pub mod qfi;
pub mod readout;

pub use encode::{
    collective_quadratures, collective_quadratures_kron, displacement_encode,
    spin_conditioned_encode, CollectiveQuadratures, DisplacementParams,
};
pub use epr::{axis_gains, duan_epr, three_mode_axes, three_mode_epr_quadratures, three_mode_gains, EPRReport};
pub use estimation::{
    joint_pdf, log_grid, loglog_slope, sample_joint_measurement, sample_joint_measurement_batched,
    sample_outcomes, sweep_enhancement_db, variance_sweep, EstimationRecord, SweepPoint,
};
pub use qfi::{
    analytic_enhancement_db, classical_variance, qfi_matrix_analytic, qfi_matrix_numeric,
    variance_analytic, Matrix2,
};
pub use readout::{
    moment_from_curve, moments_from_curves, prepare_spin, spin_readout_curve, ReadoutCurve,
    ReadoutAxis, SpinPrep,
};

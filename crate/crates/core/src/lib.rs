//! A 1-D quantum wave-packet laboratory.
//!
//! The crate propagates the time-dependent Schrödinger equation with two
//! independent schemes (Crank-Nicolson and split-step Fourier), extracts
//! the local observable fields carried by the modulus and phase of the
//! wave function (momentum, wave number, frequency, kinetic and total
//! energy, probability flux, and the energy-flux function Q), and
//! numerically verifies the pointwise identities that connect them:
//! continuity, `hbar omega = E`, `p = hbar k`, the local balance
//! `w E_x + p j_x = w V_x + Q_x`, and the Ehrenfest equation.
//!
//! Scenario files drive full runs; see the `scenario` and `output` modules
//! and the `wavefield` CLI.

pub mod eigen;
pub mod error;
pub mod exec;
pub mod fields;
pub mod grid;
pub mod output;
pub mod plot;
pub mod potential;
pub mod propagator;
pub mod scenario;
pub mod state;
pub mod stencil;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{
    energy_field, expectation, flux_field, frequency_field, kinetic_field, local_field,
    momentum_field, q_field, wave_kinetic_from_density, wavenumber_field, DerivativeRoute,
    Expectation, FieldConfig, FieldLabel, ObservableField, OperatorStencil,
};
pub use grid::{make_grid, Grid};
pub use potential::{eval_potential, PotentialField, PotentialSpec};
pub use propagator::{
    step_crank_nicolson, step_split_fourier, Boundary, CrankNicolson, Propagator,
    PropagatorConfig, Scheme, SplitFourier,
};
pub use scenario::{parse_scenario, run_scenario, RunOutcome, Scenario, StateSpec};
pub use state::{
    decompose, gaussian_packet, normalize, plane_wave, wrap_to_pi, ModulusPhaseField,
    PreparedState, WaveFunction,
};
pub use verify::{
    build_report, build_report_with, continuity_residual, ehrenfest_check,
    energy_frequency_residual, local_balance_residual, momentum_balance_residual,
    q_boundary_check, residual_field, residual_norms, EhrenfestCheck, IdentityEntry, IdentityTag,
    QBoundaryCheck, QDiagnostics, ResidualNorms, RunHistory, Tolerances, VerificationReport,
};
pub use eigen::{apply_hamiltonian, solve_stationary, EigenSolution};

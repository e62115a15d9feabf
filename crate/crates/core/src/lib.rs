//! Necessary run-time bounds for adiabatic evolution under
//! `H_λ = H_0 + λ(H_1 - H_0)`, and the machinery to check them.
//!
//! * [`hilbert`]: states, Hermitian operators (dense or identity-plus-projectors),
//!   ground states, expectation values.
//! * [`schedule`]: monotone schedules `λ(t)` and paths of rescaled schedules.
//! * [`propagator`]: exponential-midpoint Schrödinger propagation recording
//!   the adiabatic fidelity `F` and ground-state overlap `C`.
//! * [`bounds`]: the driving-term uncertainty `δV`, the necessary condition
//!   `t_f ≥ (1 - ε - C(1))/δV`, and audits of `|F - C| ≤ δV ∫λ dt`.
//! * [`grover`]: adiabatic Grover search, its closed forms, and an exact
//!   two-dimensional reduction.
//! * [`experiments`]: first-crossing minimal run-time search and sweeps.

// Negated float comparisons are used so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod grover;
pub mod hilbert;
pub mod propagator;
mod quadrature;
pub mod schedule;

pub use bounds::{
    audit_inequality, audit_inequality_running, driving_uncertainty, meets_allowance, necessary_run_time, BoundReport,
    InequalityAudit,
};
pub use error::{Error, Result};
pub use experiments::{min_run_time, sweep, Model, SearchRange, SweepConfig, SweepRecord};
pub use grover::{
    build_full, build_reduced, grover_bound, grover_c_final, grover_delta_v, grover_gap, propagate_reduced,
    GroverInstance, TwoDimReduction,
};
pub use hilbert::{
    evaluate_hamiltonian, expectation, ground_state, overlap_sq, variance, EigenPair, HermitianOperator,
    InterpolatedHamiltonian, StateVector, C64,
};
pub use propagator::{fidelity_curve, propagate, PropagatorConfig, Sample, Trajectory};
pub use schedule::{Path, Profile, Schedule};

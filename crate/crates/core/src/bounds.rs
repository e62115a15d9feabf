//! The necessary adiabatic condition and the fidelity–overlap audit.
//!
//! For `H_λ = H_0 + λV` the adiabatic fidelity `F` and the ground-state overlap
//! `C` obey `|F_λ - C_λ| ≤ δV · ∫₀^{t_f} λ dt`. Since `λ ≤ 1` the integral is at
//! most `t_f`, and `1 - F(1) < ε` then forces `t_f ≥ (1 - ε - C(1)) / δV`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ground_state, overlap_sq, variance, InterpolatedHamiltonian};
use crate::propagator::Sample;

/// Audits report a violation when the minimum residual drops below this.
pub const VIOLATION_THRESHOLD: f64 = -1e-7;
/// `1 - F(1) ≤ ε - SUCCESS_MARGIN` counts as meeting the allowance.
pub const SUCCESS_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta_v: f64,
    pub c_final: f64,
    pub epsilon: f64,
    pub t_f_lower: f64,
}

impl BoundReport {
    pub fn new(delta_v: f64, c_final: f64, epsilon: f64) -> Result<Self> {
        let t_f_lower = necessary_run_time(delta_v, c_final, epsilon)?;
        Ok(Self { delta_v, c_final, epsilon, t_f_lower })
    }

    /// Bound report for a Hamiltonian pair: `C(1) = |⟨Φ_1|Φ_0⟩|²`.
    pub fn for_pair(ih: &InterpolatedHamiltonian, epsilon: f64) -> Result<Self> {
        let delta_v = driving_uncertainty(ih)?;
        let phi0 = ground_state(ih.h0())?.state;
        let phi1 = ground_state(ih.h1())?.state;
        Self::new(delta_v, overlap_sq(&phi1, &phi0)?, epsilon)
    }

    /// The unclamped bound `1 - ε - C(1)` is nonpositive, so the bound says nothing.
    pub fn is_vacuous(&self) -> bool {
        1.0 - self.epsilon - self.c_final <= 0.0
    }
}

/// `δV_N = (⟨V²⟩_0 - ⟨V⟩_0²)^{1/2}` with `V = H_1 - H_0`, averaged in the ground state of `H_0`.
pub fn driving_uncertainty(ih: &InterpolatedHamiltonian) -> Result<f64> {
    let phi0 = ground_state(ih.h0())?.state;
    Ok(variance(&ih.driving_term(), &phi0)?.sqrt())
}

/// `max(0, (1 - ε - C(1)) / δV)`.
pub fn necessary_run_time(delta_v: f64, c_final: f64, epsilon: f64) -> Result<f64> {
    if !(delta_v >= 0.0 && delta_v.is_finite()) {
        return Err(Error::Domain(format!("delta_v must be finite and nonnegative, got {delta_v}")));
    }
    if !(0.0..=1.0).contains(&c_final) {
        return Err(Error::Domain(format!("c_final = {c_final} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    let numerator = 1.0 - epsilon - c_final;
    if numerator <= 0.0 {
        return Ok(0.0);
    }
    if delta_v == 0.0 {
        return Err(Error::VacuouslyUnbounded { numerator });
    }
    Ok(numerator / delta_v)
}

/// Whether a final fidelity meets allowance `ε`.
pub fn meets_allowance(final_fidelity: f64, epsilon: f64) -> bool {
    1.0 - final_fidelity <= epsilon - SUCCESS_MARGIN
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityAudit {
    pub records: Vec<AuditRecord>,
    pub min_residual: f64,
}

impl InequalityAudit {
    fn from_records(records: Vec<AuditRecord>) -> Self {
        let min_residual = records.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        Self { records, min_residual }
    }

    pub fn is_violated(&self) -> bool {
        self.min_residual < VIOLATION_THRESHOLD
    }

    /// The sample with the smallest residual.
    pub fn tightest(&self) -> Option<&AuditRecord> {
        self.records.iter().min_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// Checks `|F - C| ≤ δV · ∫₀^{t_f} λ dt` at every sample.
pub fn audit_inequality(samples: impl AsRef<[Sample]>, delta_v: f64) -> InequalityAudit {
    let samples = samples.as_ref();
    let total = samples.last().map_or(0.0, |s| s.int_lambda_dt);
    let rhs = delta_v * total;
    InequalityAudit::from_records(samples.iter().map(|s| record(s, rhs)).collect())
}

/// Stricter variant: the right-hand side uses the running integral `∫₀^t λ dt'`.
pub fn audit_inequality_running(samples: impl AsRef<[Sample]>, delta_v: f64) -> InequalityAudit {
    let samples = samples.as_ref();
    InequalityAudit::from_records(samples.iter().map(|s| record(s, delta_v * s.int_lambda_dt)).collect())
}

fn record(s: &Sample, rhs: f64) -> AuditRecord {
    let lhs = (s.fidelity - s.overlap).abs();
    AuditRecord { lambda: s.lambda, lhs, rhs, residual: rhs - lhs }
}

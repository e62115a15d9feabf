//! Adiabatic Grover search: `H_0 = 𝟙 - |χ⟩⟨χ|`, `H_1 = 𝟙 - |m⟩⟨m|`.
//!
//! Both projectors act inside `span{|m⟩, |χ⟩} = span{|m⟩, |r⟩}`, with `|r⟩`
//! the normalized uniform superposition of the unmarked entries. The span is
//! invariant under every `H_λ` and the evolution starts inside it, so the
//! whole problem reduces exactly to a 2×2 family; the orthogonal complement
//! carries eigenvalue 1 with multiplicity `N - 2`.

use nalgebra::{DVector, Matrix2};

use crate::error::{Error, Result};
use crate::hilbert::{EigenPair, HermitianOperator, InterpolatedHamiltonian, StateVector, C64, DEGENERACY_THRESHOLD};
use crate::propagator::{propagate_dynamics, Dynamics, PropagatorConfig, Stepper, Trajectory};
use crate::schedule::{grover_gap_sq, Schedule};

/// Largest `N` for which [`build_full`] materializes `N`-dimensional vectors.
pub const FULL_DIM_LIMIT: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroverInstance {
    n: u64,
    marked: u64,
}

impl GroverInstance {
    /// `marked` is one-based, `1 ≤ marked ≤ n`.
    pub fn new(n: u64, marked: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("Grover search needs N >= 2, got {n}")));
        }
        if marked < 1 || marked > n {
            return Err(Error::Domain(format!("marked entry {marked} outside [1, {n}]")));
        }
        Ok(Self { n, marked })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn marked(&self) -> u64 {
        self.marked
    }

    /// `|m⟩`.
    pub fn marked_state(&self) -> Result<StateVector> {
        self.guard()?;
        StateVector::basis(self.n as usize, (self.marked - 1) as usize)
    }

    /// `|χ⟩ = N^{-1/2} Σ_j |j⟩`.
    pub fn uniform_state(&self) -> Result<StateVector> {
        self.guard()?;
        StateVector::uniform(self.n as usize)
    }

    /// `|r⟩`, the uniform superposition over unmarked entries.
    pub fn rest_state(&self) -> Result<StateVector> {
        self.guard()?;
        let n = self.n as usize;
        let a = C64::new(1.0 / ((n - 1) as f64).sqrt(), 0.0);
        let mut amps = vec![a; n];
        amps[(self.marked - 1) as usize] = C64::new(0.0, 0.0);
        StateVector::normalized(amps)
    }

    fn guard(&self) -> Result<()> {
        if self.n > FULL_DIM_LIMIT {
            return Err(Error::TooLargeForDense { dim: self.n as usize, limit: FULL_DIM_LIMIT as usize });
        }
        Ok(())
    }
}

/// Full `N`-dimensional pair, each endpoint stored as `𝟙 - |v⟩⟨v|`.
/// Call [`InterpolatedHamiltonian::densified`] for explicit matrices.
pub fn build_full(g: &GroverInstance) -> Result<InterpolatedHamiltonian> {
    let h0 = HermitianOperator::rank_one(1.0, -1.0, &g.uniform_state()?)?;
    let h1 = HermitianOperator::rank_one(1.0, -1.0, &g.marked_state()?)?;
    InterpolatedHamiltonian::new(h0, h1)
}

/// `H_λ` compressed onto `span{|m⟩, |r⟩}`, in that basis order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoDimReduction {
    n: u64,
    h0: Matrix2<f64>,
    h1: Matrix2<f64>,
}

pub fn build_reduced(g: &GroverInstance) -> Result<TwoDimReduction> {
    TwoDimReduction::new(g.n)
}

impl TwoDimReduction {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("Grover search needs N >= 2, got {n}")));
        }
        let (c, s) = Self::chi_components(n);
        // 𝟙 - |χ⟩⟨χ| with |χ⟩ = c|m⟩ + s|r⟩, written as [[s², -cs], [-cs, c²]].
        let h0 = Matrix2::new(s * s, -c * s, -c * s, c * c);
        let h1 = Matrix2::new(0.0, 0.0, 0.0, 1.0);
        Ok(Self { n, h0, h1 })
    }

    /// `(c, s) = (N^{-1/2}, (1 - 1/N)^{1/2})`.
    pub fn chi_components(n: u64) -> (f64, f64) {
        let nf = n as f64;
        (1.0 / nf.sqrt(), (1.0 - 1.0 / nf).sqrt())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn matrix(&self, lambda: f64) -> Result<Matrix2<f64>> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda = {lambda} outside [0, 1]")));
        }
        Ok(self.h0 * (1.0 - lambda) + self.h1 * lambda)
    }

    /// Eigenvalues `(low, high)` of the 2×2 block.
    pub fn eigenvalues(&self, lambda: f64) -> Result<(f64, f64)> {
        let m = self.matrix(lambda)?;
        let rot = Rotation::of(&m);
        Ok((rot.mean - rot.omega, rot.mean + rot.omega))
    }

    /// Maps a reduced state `(a, b)` to `a|m⟩ + b|r⟩` in the full space.
    pub fn lift(&self, g: &GroverInstance, state: &StateVector) -> Result<StateVector> {
        if state.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: state.dim() });
        }
        let m = g.marked_state()?.into_inner();
        let r = g.rest_state()?.into_inner();
        let amps = state.amplitudes();
        StateVector::from_vector(m * amps[0] + r * amps[1])
    }
}

/// `H = mean·𝟙 + ω·R(α)` with `R(α)` the reflection `[[cos α, sin α], [sin α, -cos α]]`.
struct Rotation {
    mean: f64,
    omega: f64,
    cos: f64,
    sin: f64,
}

impl Rotation {
    fn of(m: &Matrix2<f64>) -> Self {
        let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
        let delta = 0.5 * (m[(0, 0)] - m[(1, 1)]);
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        let omega = delta.hypot(b);
        let (cos, sin) = if omega > 0.0 { (delta / omega, b / omega) } else { (1.0, 0.0) };
        Self { mean, omega, cos, sin }
    }

    /// Eigenvector of eigenvalue `mean - ω`.
    fn ground_vector(&self) -> (f64, f64) {
        let half = 0.5 * self.sin.atan2(self.cos);
        (-half.sin(), half.cos())
    }
}

impl Dynamics for TwoDimReduction {
    fn dim(&self) -> usize {
        2
    }

    /// Same estimate as the full structured pair (`|1| + |-1|`), so both
    /// representations start from the same step.
    fn norm_estimate(&self) -> f64 {
        2.0
    }

    /// The gap is the block splitting `2ω`, which is also the full gap because
    /// the upper block level `(1 + Δ)/2` never exceeds the complement level 1.
    fn ground_state(&self, lambda: f64) -> Result<EigenPair> {
        let rot = Rotation::of(&self.matrix(lambda)?);
        let gap = 2.0 * rot.omega;
        let norm = (rot.mean.abs() + rot.omega).max(1.0);
        let threshold = DEGENERACY_THRESHOLD * norm;
        if gap < threshold {
            return Err(Error::DegenerateGroundState { gap, threshold });
        }
        let (a, b) = rot.ground_vector();
        let state = StateVector::normalized(vec![C64::new(a, 0.0), C64::new(b, 0.0)])?.fix_phase();
        Ok(EigenPair { energy: rot.mean - rot.omega, state, gap })
    }

    fn stepper(&self) -> Result<Box<dyn Stepper + '_>> {
        Ok(Box::new(ReducedStepper { h0: self.h0, h1: self.h1 }))
    }
}

struct ReducedStepper {
    h0: Matrix2<f64>,
    h1: Matrix2<f64>,
}

impl Stepper for ReducedStepper {
    /// `exp(-ihH) = e^{-ih·mean} (cos(hω) 𝟙 - i sin(hω) R(α))`.
    fn step(&mut self, lambda: f64, h: f64, psi: &mut DVector<C64>) {
        let rot = Rotation::of(&(self.h0 * (1.0 - lambda) + self.h1 * lambda));
        let (s, c) = (h * rot.omega).sin_cos();
        let global = C64::from_polar(1.0, -h * rot.mean);
        let (x, y) = (psi[0], psi[1]);
        let minus_is = C64::new(0.0, -s);
        let rx = x * rot.cos + y * rot.sin;
        let ry = x * rot.sin - y * rot.cos;
        psi[0] = global * (x * c + minus_is * rx);
        psi[1] = global * (y * c + minus_is * ry);
    }
}

/// Propagation inside the invariant 2D subspace, starting from `|χ⟩ = (c, s)`.
pub fn propagate_reduced(g: &GroverInstance, s: &Schedule, cfg: &PropagatorConfig) -> Result<Trajectory> {
    let red = build_reduced(g)?;
    propagate_dynamics(&red, s, cfg, None)
}

/// `Δ(λ) = (1 - 4λ(1-λ)(1 - 1/N))^{1/2}`.
pub fn grover_gap(n: u64, lambda: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("Grover search needs N >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("lambda = {lambda} outside [0, 1]")));
    }
    Ok(grover_gap_sq(n, lambda).max(0.0).sqrt())
}

/// `δV_N = N^{-1/2} (1 - 1/N)^{1/2}`.
pub fn grover_delta_v(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("Grover search needs N >= 2, got {n}")));
    }
    let nf = n as f64;
    Ok((1.0 / nf.sqrt()) * (1.0 - 1.0 / nf).sqrt())
}

/// `C(1) = 1/N`.
pub fn grover_c_final(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("Grover search needs N >= 2, got {n}")));
    }
    Ok(1.0 / n as f64)
}

/// `√N (1-ε) (1 - N^{-1}(1-ε)^{-1}) / (1 - N^{-1})^{1/2}`, clamped at zero.
pub fn grover_bound(n: u64, epsilon: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("Grover search needs N >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    let nf = n as f64;
    let keep = 1.0 - epsilon;
    if keep <= 1.0 / nf {
        return Ok(0.0);
    }
    let value = nf.sqrt() * keep * (1.0 - 1.0 / (nf * keep)) / (1.0 - 1.0 / nf).sqrt();
    Ok(value.max(0.0))
}

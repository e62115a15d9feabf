//! Time-dependent Schrödinger propagation `i dΨ/dt = H_{λ(t)} Ψ`, `Ψ(0) = Φ_0`.
//!
//! Stepping uses the exponential midpoint rule: over `[t, t+h]`,
//! `Ψ ← exp(-i h H_{λ(t+h/2)}) Ψ`, with the exponential applied exactly through
//! an eigendecomposition. The scheme is second order and unitary to round-off.
//!
//! With the convergence check enabled, every run is repeated at half the step
//! and the step is refined until `F(1)` moves by no more than the tolerance;
//! the finer of the final pair is reported.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    ground_state, overlap_sq, EigenPair, HermitianOperator, InterpolatedHamiltonian, Representation, StateVector, C64,
};
use crate::schedule::Schedule;

/// Largest admissible step relative to `1/‖H‖_est`.
pub const STEP_NORM_FACTOR: f64 = 0.1;
/// The default step never exceeds `t_f / MIN_STEPS`.
pub const MIN_STEPS: usize = 1000;
pub const DEFAULT_SAMPLES: usize = 200;
/// Allowed change of `F(1)` when the step is halved.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;
/// Allowed `|‖Ψ‖ - 1|` at every sample.
pub const NORM_DEVIATION_LIMIT: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PropagatorConfig {
    /// Base step `h`; `None` selects `min(0.1/‖H‖_est, t_f/1000)`. Always capped at `0.1/‖H‖_est`.
    pub step: Option<f64>,
    /// Number of recorded samples, including `t = 0` and `t = t_f`.
    pub samples: usize,
    pub convergence_check: bool,
    pub tolerance: f64,
    /// Refinement gives up (with [`Error::StepSizeTooCoarse`]) beyond this many steps per run.
    pub max_steps: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            step: None,
            samples: DEFAULT_SAMPLES,
            convergence_check: true,
            tolerance: CONVERGENCE_TOLERANCE,
            max_steps: 1 << 27,
        }
    }
}

impl PropagatorConfig {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn unchecked(mut self) -> Self {
        self.convergence_check = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Domain(format!("need at least 2 samples, got {}", self.samples)));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Domain(format!("step must be positive, got {h}")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain("convergence tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Step actually used as the starting point for a run of length `t_f`.
    pub fn base_step(&self, norm_estimate: f64, run_time: f64) -> f64 {
        let cap = STEP_NORM_FACTOR / norm_estimate.max(f64::MIN_POSITIVE);
        match self.step {
            Some(h) => h.min(cap),
            None => cap.min(run_time / MIN_STEPS as f64),
        }
    }
}

/// One recorded point of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    #[serde(rename = "lambda")]
    pub lambda: f64,
    #[serde(rename = "F")]
    pub fidelity: f64,
    #[serde(rename = "C")]
    pub overlap: f64,
    pub int_lambda_dt: f64,
    pub norm_dev: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: StateVector,
    pub run_time: f64,
    /// Step of the reported run.
    pub step: f64,
    /// `|F(1)_h - F(1)_{h/2}|` from the last convergence check.
    pub convergence_change: Option<f64>,
}

impl Trajectory {
    pub fn final_fidelity(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.fidelity)
    }

    pub fn final_overlap(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.overlap)
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_dev).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_samples_csv(&self.samples, w)
    }
}

impl AsRef<[Sample]> for Trajectory {
    fn as_ref(&self) -> &[Sample] {
        &self.samples
    }
}

/// Header: `t,lambda,F,C,int_lambda_dt,norm_dev`.
pub fn write_samples_csv<W: Write>(samples: &[Sample], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for s in samples {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<Sample>> {
    let mut rdr = csv::Reader::from_reader(r);
    let expected = ["t", "lambda", "F", "C", "int_lambda_dt", "norm_dev"];
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!("unexpected trajectory header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let samples: Vec<Sample> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if samples.len() < 2 {
        return Err(Error::Parse("trajectory needs at least two samples".into()));
    }
    Ok(samples)
}

/// `(λ, F, C)` triples in sample order.
pub fn fidelity_curve(tr: &Trajectory) -> Vec<(f64, f64, f64)> {
    tr.samples.iter().map(|s| (s.lambda, s.fidelity, s.overlap)).collect()
}

/// Anything that can be stepped by the exponential midpoint rule.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;

    /// Upper bound on `‖H_λ‖` over `λ ∈ [0, 1]`.
    fn norm_estimate(&self) -> f64;

    fn ground_state(&self, lambda: f64) -> Result<EigenPair>;

    /// Prepares whatever per-run state the stepper needs.
    fn stepper(&self) -> Result<Box<dyn Stepper + '_>>;
}

pub trait Stepper {
    /// `psi ← exp(-i h H_λ) psi`.
    fn step(&mut self, lambda: f64, h: f64, psi: &mut DVector<C64>);
}

impl Dynamics for InterpolatedHamiltonian {
    fn dim(&self) -> usize {
        InterpolatedHamiltonian::dim(self)
    }

    fn norm_estimate(&self) -> f64 {
        InterpolatedHamiltonian::norm_estimate(self)
    }

    fn ground_state(&self, lambda: f64) -> Result<EigenPair> {
        ground_state(&self.evaluate(lambda)?)
    }

    fn stepper(&self) -> Result<Box<dyn Stepper + '_>> {
        match (self.h0().representation(), self.h1().representation()) {
            (Representation::Structured { .. }, Representation::Structured { .. }) => {
                Ok(Box::new(SpanStepper::new(self.h0(), self.h1())))
            }
            _ => Ok(Box::new(DenseStepper { h0: self.h0().to_dense(), h1: self.h1().to_dense() })),
        }
    }
}

struct DenseStepper {
    h0: DMatrix<C64>,
    h1: DMatrix<C64>,
}

impl Stepper for DenseStepper {
    fn step(&mut self, lambda: f64, h: f64, psi: &mut DVector<C64>) {
        let m = self.h0.scale(1.0 - lambda) + self.h1.scale(lambda);
        let eig = SymmetricEigen::new(m);
        let mut c = eig.eigenvectors.adjoint() * &*psi;
        c.iter_mut().zip(eig.eigenvalues.iter()).for_each(|(ci, &e)| *ci *= C64::from_polar(1.0, -h * e));
        *psi = &eig.eigenvectors * c;
    }
}

/// Both endpoints are `a·𝟙 + Σ b|v⟩⟨v|`, so every `H_λ` acts as a small block on
/// the fixed span of all the `v` and as a multiple of the identity off it.
struct SpanStepper {
    basis: DMatrix<C64>,
    block0: DMatrix<C64>,
    block1: DMatrix<C64>,
    shift0: f64,
    shift1: f64,
}

impl SpanStepper {
    fn new(h0: &HermitianOperator, h1: &HermitianOperator) -> Self {
        let (Representation::Structured { shift: shift0, terms: t0 }, Representation::Structured { shift: shift1, terms: t1 }) =
            (h0.representation(), h1.representation())
        else {
            unreachable!("SpanStepper needs structured operators")
        };
        let dim = h0.dim();
        let mut cols: Vec<DVector<C64>> = Vec::new();
        for v in t0.iter().chain(t1.iter()).map(|(_, v)| v) {
            let mut w = v.clone();
            for _ in 0..2 {
                for q in &cols {
                    let c = q.dotc(&w);
                    w.axpy(-c, q, C64::new(1.0, 0.0));
                }
            }
            let n = w.norm();
            if n > 1e-10 {
                cols.push(w.unscale(n));
            }
        }
        let basis = if cols.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(&cols) };
        let block = |terms: &[(f64, DVector<C64>)]| {
            let k = basis.ncols();
            let mut b = DMatrix::<C64>::zeros(k, k);
            for (coef, v) in terms {
                let w = basis.adjoint() * v;
                b += (&w * w.adjoint()).scale(*coef);
            }
            (&b + b.adjoint()).unscale(2.0)
        };
        Self { block0: block(t0), block1: block(t1), basis, shift0: *shift0, shift1: *shift1 }
    }
}

impl Stepper for SpanStepper {
    fn step(&mut self, lambda: f64, h: f64, psi: &mut DVector<C64>) {
        let shift = (1.0 - lambda) * self.shift0 + lambda * self.shift1;
        let phase = C64::from_polar(1.0, -h * shift);
        if self.basis.ncols() == 0 {
            psi.iter_mut().for_each(|x| *x *= phase);
            return;
        }
        let m = self.block0.scale(1.0 - lambda) + self.block1.scale(lambda);
        let eig = SymmetricEigen::new(m);
        let inside = self.basis.adjoint() * &*psi;
        let mut c = eig.eigenvectors.adjoint() * &inside;
        c.iter_mut().zip(eig.eigenvalues.iter()).for_each(|(ci, &e)| *ci *= C64::from_polar(1.0, -h * (e + shift)));
        let evolved = &eig.eigenvectors * c;
        // psi = Q·evolved + phase·(psi - Q·inside)
        let delta = evolved - &inside * phase;
        psi.iter_mut().for_each(|x| *x *= phase);
        psi.gemv(C64::new(1.0, 0.0), &self.basis, &delta, C64::new(1.0, 0.0));
    }
}

/// Propagates from the ground state of `H_0`.
pub fn propagate(ih: &InterpolatedHamiltonian, s: &Schedule, cfg: &PropagatorConfig) -> Result<Trajectory> {
    propagate_dynamics(ih, s, cfg, None)
}

/// Like [`propagate`], starting from `initial` instead of `Φ_0`. The overlap
/// column is still measured against `Φ_0`.
pub fn propagate_from(
    ih: &InterpolatedHamiltonian,
    s: &Schedule,
    cfg: &PropagatorConfig,
    initial: &StateVector,
) -> Result<Trajectory> {
    propagate_dynamics(ih, s, cfg, Some(initial))
}

/// Generic driver shared by the full and reduced representations.
pub fn propagate_dynamics<D: Dynamics + ?Sized>(
    dynamics: &D,
    s: &Schedule,
    cfg: &PropagatorConfig,
    initial: Option<&StateVector>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let t_f = s.run_time();
    let phi0 = dynamics.ground_state(0.0)?.state;
    let psi0 = match initial {
        Some(state) => {
            if state.dim() != dynamics.dim() {
                return Err(Error::DimensionMismatch { expected: dynamics.dim(), found: state.dim() });
            }
            state.clone()
        }
        None => phi0.clone(),
    };

    let intervals = cfg.samples - 1;
    let sample_times: Vec<f64> = (0..cfg.samples).map(|k| t_f * k as f64 / intervals as f64).collect();
    let mut frames = Vec::with_capacity(cfg.samples);
    for &t in &sample_times {
        let lambda = s.evaluate(t)?;
        let ground = dynamics.ground_state(lambda)?.state;
        let overlap = overlap_sq(&ground, &phi0)?;
        frames.push(Frame { t, lambda, ground, overlap, integral: s.integral_of_lambda(t)? });
    }

    let base = cfg.base_step(dynamics.norm_estimate(), t_f);
    if !cfg.convergence_check {
        return run(dynamics, s, &frames, &psi0, base, cfg);
    }

    let mut h = base;
    loop {
        let coarse = run(dynamics, s, &frames, &psi0, h, cfg)?;
        let fine = run(dynamics, s, &frames, &psi0, coarse.step / 2.0, cfg)?;
        let change = (coarse.final_fidelity() - fine.final_fidelity()).abs();
        if change <= cfg.tolerance {
            return Ok(Trajectory { convergence_change: Some(change), ..fine });
        }
        // Second order: the change scales like h², so aim just below the tolerance.
        let next = (coarse.step * 0.8 * (cfg.tolerance / change).sqrt()).min(coarse.step / 2.0);
        if steps_for(t_f, next, intervals) > cfg.max_steps {
            return Err(Error::StepSizeTooCoarse { change, tolerance: cfg.tolerance });
        }
        log::debug!("refining step {:e} -> {:e} (F(1) change {change:e})", coarse.step, next);
        h = next;
    }
}

struct Frame {
    t: f64,
    lambda: f64,
    ground: StateVector,
    overlap: f64,
    integral: f64,
}

fn steps_for(t_f: f64, h: f64, intervals: usize) -> usize {
    let per_interval = ((t_f / h) / intervals as f64).ceil().max(1.0);
    per_interval as usize * intervals
}

fn run<D: Dynamics + ?Sized>(
    dynamics: &D,
    s: &Schedule,
    frames: &[Frame],
    psi0: &StateVector,
    h_target: f64,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    let t_f = s.run_time();
    let intervals = frames.len() - 1;
    let per_interval = steps_for(t_f, h_target, intervals) / intervals;
    if per_interval * intervals > cfg.max_steps {
        return Err(Error::StepSizeTooCoarse { change: f64::NAN, tolerance: cfg.tolerance });
    }
    let n_steps = per_interval * intervals;
    let h = t_f / n_steps as f64;

    let mut stepper = dynamics.stepper()?;
    let mut psi = psi0.amplitudes().clone();
    let mut samples = Vec::with_capacity(frames.len());
    let record = |frame: &Frame, psi: &DVector<C64>| -> Sample {
        let norm = psi.norm();
        let amp = frame.ground.amplitudes().dotc(psi);
        Sample {
            t: frame.t,
            lambda: frame.lambda,
            fidelity: amp.norm_sqr().min(1.0),
            overlap: frame.overlap,
            int_lambda_dt: frame.integral,
            norm_dev: (norm - 1.0).abs(),
        }
    };
    samples.push(record(&frames[0], &psi));
    let mut step_index = 0usize;
    for frame in &frames[1..] {
        for _ in 0..per_interval {
            let t_mid = (step_index as f64 + 0.5) * h;
            let lambda = s.evaluate(t_mid.min(t_f))?;
            stepper.step(lambda, h, &mut psi);
            step_index += 1;
        }
        samples.push(record(frame, &psi));
    }

    let worst = samples.iter().map(|s| s.norm_dev).fold(0.0, f64::max);
    if worst > NORM_DEVIATION_LIMIT {
        return Err(Error::NumericalConsistency(format!("norm drifted by {worst:e}")));
    }
    Ok(Trajectory {
        samples,
        final_state: StateVector::from_raw(psi),
        run_time: t_f,
        step: h,
        convergence_change: None,
    })
}

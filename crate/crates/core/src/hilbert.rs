//! Finite-dimensional Hilbert-space primitives.
//!
//! Operators come in two representations: a dense Hermitian matrix, or a
//! structured form `a·𝟙 + Σ_k b_k |v_k⟩⟨v_k|` with real coefficients and unit
//! vectors. The structured form stores `O(N·k)` numbers and is diagonalised
//! inside the span of its vectors, so large-`N` problems built from a few
//! projectors never touch an `N×N` matrix. Every operation accepts either
//! representation and the two agree with each other to round-off.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the Euclidean norm of a [`StateVector`].
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Tolerance on `|M_ij - conj(M_ji)|` for dense operators, relative to `max(1, max|M_ij|)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// The ground state is declared degenerate when `gap < DEGENERACY_THRESHOLD · max(1, ‖H‖)`.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Imaginary parts of expectation values below this are discarded silently.
const IMAG_DISCARD: f64 = 1e-12;
/// Imaginary parts (and negative variances) beyond this are an error.
const CONSISTENCY_LIMIT: f64 = 1e-10;
/// Gram-Schmidt drops directions whose residual norm falls below this.
const RANK_TOLERANCE: f64 = 1e-10;

/// A normalized vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized within [`NORM_TOLERANCE`].
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("state vector must have dim >= 1".into()));
        }
        let amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(amps))
    }

    pub fn from_vector(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("state vector must have dim >= 1".into()));
        }
        let norm = amps.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Domain(format!("cannot normalize vector of norm {norm}")));
        }
        Ok(Self { amps: amps.unscale(norm) })
    }

    /// Computational basis state `|index⟩` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 || index >= dim {
            return Err(Error::Domain(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Uniform superposition `N^{-1/2} Σ_j |j⟩`.
    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("state vector must have dim >= 1".into()));
        }
        let a = 1.0 / (dim as f64).sqrt();
        Ok(Self { amps: DVector::from_element(dim, C64::new(a, 0.0)) })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// Multiplies by the unit-modulus phase `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let phase = C64::from_polar(1.0, phi);
        Self { amps: self.amps.map(|a| a * phase) }
    }

    /// Rotates the global phase so the largest-magnitude amplitude is real and nonnegative.
    pub(crate) fn fix_phase(mut self) -> Self {
        let pivot = self
            .amps
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (i, a)| if a.norm() > best.1 { (i, a.norm()) } else { best })
            .0;
        let a = self.amps[pivot];
        if a.norm() > 0.0 {
            let phase = a.conj() / a.norm();
            self.amps.iter_mut().for_each(|x| *x *= phase);
            self.amps[pivot] = C64::new(self.amps[pivot].re, 0.0);
        }
        self
    }

    pub(crate) fn from_raw(amps: DVector<C64>) -> Self {
        Self { amps }
    }
}

/// Storage for a [`HermitianOperator`].
#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Dense(DMatrix<C64>),
    /// `shift·𝟙 + Σ coeff·|v⟩⟨v|` with unit vectors `v`.
    Structured { shift: f64, terms: Vec<(f64, DVector<C64>)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    repr: Representation,
}

impl HermitianOperator {
    /// Validates Hermiticity and stores the exactly symmetrized matrix.
    pub fn dense(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::Domain("operator must have dim >= 1".into()));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        let deviation = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if !(deviation <= HERMITIAN_TOLERANCE * scale) {
            return Err(Error::NotHermitian { deviation });
        }
        let sym = (&m + m.adjoint()).unscale(2.0);
        Ok(Self { dim: m.nrows(), repr: Representation::Dense(sym) })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self::dense(DMatrix::from_diagonal(&d))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::structured(dim, 1.0, Vec::new())
    }

    /// `a·𝟙 + b·|v⟩⟨v|`.
    pub fn rank_one(a: f64, b: f64, v: &StateVector) -> Result<Self> {
        Self::structured(v.dim(), a, vec![(b, v.clone())])
    }

    /// `shift·𝟙 + Σ coeff·|v⟩⟨v|`.
    pub fn structured(dim: usize, shift: f64, terms: Vec<(f64, StateVector)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("operator must have dim >= 1".into()));
        }
        for (_, v) in &terms {
            check_dim(dim, v.dim())?;
        }
        let terms = terms.into_iter().map(|(b, v)| (b, v.into_inner())).collect();
        Ok(Self { dim, repr: Representation::Structured { shift, terms } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_structured(&self) -> bool {
        matches!(self.repr, Representation::Structured { .. })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.repr {
            Representation::Dense(m) => m.clone(),
            Representation::Structured { shift, terms } => {
                let mut m = DMatrix::<C64>::identity(self.dim, self.dim).scale(*shift);
                for (b, v) in terms {
                    m += (v * v.adjoint()).scale(*b);
                }
                m
            }
        }
    }

    /// Converts to the dense representation.
    pub fn densified(&self) -> Self {
        let m = self.to_dense();
        let sym = (&m + m.adjoint()).unscale(2.0);
        Self { dim: self.dim, repr: Representation::Dense(sym) }
    }

    /// `H·x`.
    pub fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.repr {
            Representation::Dense(m) => m * x,
            Representation::Structured { shift, terms } => {
                let mut y = x.scale(*shift);
                for (b, v) in terms {
                    let c = v.dotc(x) * *b;
                    y.axpy(c, v, C64::new(1.0, 0.0));
                }
                y
            }
        })
    }

    /// Cheap upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        match &self.repr {
            Representation::Dense(m) => m
                .row_iter()
                .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            Representation::Structured { shift, terms } => {
                shift.abs() + terms.iter().map(|(b, _)| b.abs()).sum::<f64>()
            }
        }
    }

    /// `alpha·A + beta·B`; stays structured when both inputs are.
    pub fn combine(alpha: f64, a: &Self, beta: f64, b: &Self) -> Result<Self> {
        check_dim(a.dim, b.dim)?;
        let repr = match (&a.repr, &b.repr) {
            (
                Representation::Structured { shift: sa, terms: ta },
                Representation::Structured { shift: sb, terms: tb },
            ) => {
                let terms = ta
                    .iter()
                    .map(|(c, v)| (alpha * c, v))
                    .chain(tb.iter().map(|(c, v)| (beta * c, v)))
                    .filter(|(c, _)| *c != 0.0)
                    .map(|(c, v)| (c, v.clone()))
                    .collect();
                Representation::Structured { shift: alpha * sa + beta * sb, terms }
            }
            _ => {
                let m = a.to_dense().scale(alpha) + b.to_dense().scale(beta);
                Representation::Dense((&m + m.adjoint()).unscale(2.0))
            }
        };
        Ok(Self { dim: a.dim, repr })
    }

    /// Full eigenstructure, eigenvalues ascending.
    pub(crate) fn spectrum(&self) -> Result<Spectrum> {
        match &self.repr {
            Representation::Dense(m) => {
                let eig = SymmetricEigen::new(m.clone());
                let mut order: Vec<usize> = (0..self.dim).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
                let values = DVector::from_iterator(self.dim, order.iter().map(|&i| eig.eigenvalues[i]));
                let vectors = DMatrix::from_columns(
                    &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
                );
                Ok(Spectrum::Dense { values, vectors })
            }
            Representation::Structured { shift, terms } => {
                let basis = orthonormal_span(self.dim, terms.iter().map(|(_, v)| v));
                let k = basis.ncols();
                let mut block = DMatrix::<C64>::identity(k, k).scale(*shift);
                for (b, v) in terms {
                    let w = basis.adjoint() * v;
                    block += (&w * w.adjoint()).scale(*b);
                }
                let block = (&block + block.adjoint()).unscale(2.0);
                if k == 0 {
                    return Ok(Spectrum::Structured {
                        dim: self.dim,
                        basis,
                        values: DVector::zeros(0),
                        vectors: DMatrix::zeros(0, 0),
                        complement: *shift,
                    });
                }
                let eig = SymmetricEigen::new(block);
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
                let values = DVector::from_iterator(k, order.iter().map(|&i| eig.eigenvalues[i]));
                let vectors = DMatrix::from_columns(
                    &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
                );
                Ok(Spectrum::Structured {
                    dim: self.dim,
                    basis,
                    values,
                    vectors,
                    complement: *shift,
                })
            }
        }
    }

    /// `exp(-i·h·H)·x`, applied through the eigendecomposition.
    pub fn exp_apply(&self, h: f64, x: &DVector<C64>) -> Result<DVector<C64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.spectrum()?.evolve(h, x))
    }
}

/// Eigendecomposition of a [`HermitianOperator`].
#[derive(Clone, Debug)]
pub(crate) enum Spectrum {
    Dense {
        values: DVector<f64>,
        vectors: DMatrix<C64>,
    },
    /// Eigenpairs inside the span `basis` (N×k, orthonormal columns) and the
    /// constant eigenvalue `complement` on its orthogonal complement.
    Structured {
        dim: usize,
        basis: DMatrix<C64>,
        values: DVector<f64>,
        vectors: DMatrix<C64>,
        complement: f64,
    },
}

impl Spectrum {
    fn evolve(&self, h: f64, x: &DVector<C64>) -> DVector<C64> {
        let phase = |e: f64| C64::from_polar(1.0, -h * e);
        match self {
            Spectrum::Dense { values, vectors } => {
                let mut c = vectors.adjoint() * x;
                c.iter_mut().zip(values.iter()).for_each(|(ci, &e)| *ci *= phase(e));
                vectors * c
            }
            Spectrum::Structured { basis, values, vectors, complement, .. } => {
                let inside = basis.adjoint() * x;
                let outside = x - basis * &inside;
                let mut c = vectors.adjoint() * inside;
                c.iter_mut().zip(values.iter()).for_each(|(ci, &e)| *ci *= phase(e));
                basis * (vectors * c) + outside * phase(*complement)
            }
        }
    }

    /// Spectral norm.
    fn norm(&self) -> f64 {
        match self {
            Spectrum::Dense { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Spectrum::Structured { dim, basis, values, complement, .. } => {
                let inner = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if basis.ncols() < *dim {
                    inner.max(complement.abs())
                } else {
                    inner
                }
            }
        }
    }

    /// Lowest two eigenvalues and the ground eigenvector.
    fn ground(&self) -> (f64, f64, DVector<C64>) {
        match self {
            Spectrum::Dense { values, vectors } => {
                let second = if values.len() > 1 { values[1] } else { f64::INFINITY };
                (values[0], second, vectors.column(0).into_owned())
            }
            Spectrum::Structured { dim, basis, values, vectors, complement } => {
                let k = values.len();
                let extra = dim - k;
                // Merge the span eigenvalues with `extra` copies of `complement`.
                let mut levels: Vec<(f64, Option<usize>)> =
                    values.iter().enumerate().map(|(i, &v)| (v, Some(i))).collect();
                levels.extend(std::iter::repeat_n((*complement, None), extra.min(2)));
                levels.sort_by(|a, b| a.0.total_cmp(&b.0));
                let second = levels.get(1).map_or(f64::INFINITY, |l| l.0);
                let state = match levels[0].1 {
                    Some(i) => basis * vectors.column(i),
                    None => complement_vector(basis, *dim),
                };
                (levels[0].0, second, state)
            }
        }
    }
}

/// Orthonormal basis (as columns) of the span of `vectors`, by modified
/// Gram-Schmidt with one reorthogonalization pass.
fn orthonormal_span<'a>(dim: usize, vectors: impl Iterator<Item = &'a DVector<C64>>) -> DMatrix<C64> {
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&w);
                w.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let n = w.norm();
        if n > RANK_TOLERANCE * v.norm().max(1.0) {
            cols.push(w.unscale(n));
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// A unit vector orthogonal to the columns of `basis`.
fn complement_vector(basis: &DMatrix<C64>, dim: usize) -> DVector<C64> {
    let mut best = DVector::zeros(dim);
    let mut best_norm = -1.0;
    for j in 0..dim {
        let mut e = DVector::<C64>::zeros(dim);
        e[j] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            let c = basis.adjoint() * &e;
            e -= basis * c;
        }
        let n = e.norm();
        if n > best_norm {
            best_norm = n;
            best = e.unscale(n);
        }
        if n > 0.5 {
            break;
        }
    }
    best
}

/// `H_λ = (1-λ)·H_0 + λ·H_1`, which equals `H_0 + λ(H_1 - H_0)` and
/// reproduces both endpoints bit-exactly.
#[derive(Clone, Debug)]
pub struct InterpolatedHamiltonian {
    h0: HermitianOperator,
    h1: HermitianOperator,
}

impl InterpolatedHamiltonian {
    pub fn new(h0: HermitianOperator, h1: HermitianOperator) -> Result<Self> {
        check_dim(h0.dim(), h1.dim())?;
        Ok(Self { h0, h1 })
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn h1(&self) -> &HermitianOperator {
        &self.h1
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// The driving term `V = H_1 - H_0`.
    pub fn driving_term(&self) -> HermitianOperator {
        HermitianOperator::combine(1.0, &self.h1, -1.0, &self.h0).expect("dims checked at construction")
    }

    pub fn evaluate(&self, lambda: f64) -> Result<HermitianOperator> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda = {lambda} outside [0, 1]")));
        }
        if lambda == 0.0 {
            return Ok(self.h0.clone());
        }
        if lambda == 1.0 {
            return Ok(self.h1.clone());
        }
        HermitianOperator::combine(1.0 - lambda, &self.h0, lambda, &self.h1)
    }

    /// Same pair with both endpoints stored densely.
    pub fn densified(&self) -> Self {
        Self { h0: self.h0.densified(), h1: self.h1.densified() }
    }

    /// Largest endpoint norm bound; `‖H_λ‖ ≤` this for all λ in [0,1].
    pub fn norm_estimate(&self) -> f64 {
        self.h0.norm_bound().max(self.h1.norm_bound())
    }
}

/// Ground energy, ground state and gap to the first excited level.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub energy: f64,
    pub state: StateVector,
    /// `+∞` for one-dimensional operators.
    pub gap: f64,
}

pub fn evaluate_hamiltonian(ih: &InterpolatedHamiltonian, lambda: f64) -> Result<HermitianOperator> {
    ih.evaluate(lambda)
}

/// Lowest eigenpair of `h`, phase-fixed so the largest amplitude is real and
/// nonnegative. Fails with [`Error::DegenerateGroundState`] when the gap is
/// below `1e-8·max(1, ‖H‖)`.
pub fn ground_state(h: &HermitianOperator) -> Result<EigenPair> {
    let spectrum = h.spectrum()?;
    let (energy, second, state) = spectrum.ground();
    let gap = second - energy;
    let threshold = DEGENERACY_THRESHOLD * spectrum.norm().max(1.0);
    if gap < threshold {
        return Err(Error::DegenerateGroundState { gap, threshold });
    }
    let state = StateVector::from_vector(state)?.fix_phase();
    Ok(EigenPair { energy, state, gap })
}

fn checked_real(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() > CONSISTENCY_LIMIT {
        return Err(Error::NumericalConsistency(format!("{what} has imaginary part {:e}", z.im)));
    }
    if z.im.abs() > IMAG_DISCARD {
        log::debug!("{what}: discarding imaginary residue {:e}", z.im);
    }
    Ok(z.re)
}

/// `⟨ψ|H|ψ⟩`.
pub fn expectation(h: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    let hpsi = h.apply(psi.amplitudes())?;
    checked_real(psi.amplitudes().dotc(&hpsi), "expectation value")
}

/// `⟨H²⟩ - ⟨H⟩²` in state `psi`.
pub fn variance(h: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    let hpsi = h.apply(psi.amplitudes())?;
    let mean = checked_real(psi.amplitudes().dotc(&hpsi), "expectation value")?;
    let second = hpsi.norm_squared();
    let raw = second - mean * mean;
    if raw < -CONSISTENCY_LIMIT {
        return Err(Error::NumericalConsistency(format!("variance is negative: {raw:e}")));
    }
    if raw < -IMAG_DISCARD {
        log::debug!("clamping negative variance {raw:e}");
    }
    Ok(raw.max(0.0))
}

/// `|⟨a|b⟩|²`.
pub fn overlap_sq(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

//! Minimal-run-time search and parameter sweeps.
//!
//! "Minimal `t_f`" is the first crossing of the success criterion
//! `1 - F(1) < ε` along a path: a geometric scan (16 points per decade) finds
//! the first grid point that succeeds, then bisection narrows the interval
//! between it and the preceding failure. The adiabatic fidelity oscillates in
//! `t_f`, so later crossings are ignored.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{audit_inequality, driving_uncertainty, meets_allowance, BoundReport};
use crate::error::{Error, Result};
use crate::grover::{grover_bound, grover_c_final, grover_delta_v, propagate_reduced, GroverInstance};
use crate::hilbert::{HermitianOperator, InterpolatedHamiltonian, C64};
use crate::propagator::{propagate, PropagatorConfig, Trajectory};
use crate::schedule::{Path, Profile, Schedule};

pub const GRID_POINTS_PER_DECADE: f64 = 16.0;
pub const MAX_BRACKET_DOUBLINGS: u32 = 20;
pub const MIN_TIME_DEFINITION: &str =
    "first crossing of 1 - F(1) < epsilon on a geometric grid (16 points per decade), refined by bisection";

/// A Hamiltonian pair to search over.
#[derive(Clone, Debug)]
pub enum Model {
    /// Propagated through the exact two-dimensional reduction.
    Grover(GroverInstance),
    Pair(InterpolatedHamiltonian),
}

impl Model {
    pub fn dim(&self) -> u64 {
        match self {
            Model::Grover(g) => g.n(),
            Model::Pair(ih) => ih.dim() as u64,
        }
    }

    pub fn propagate(&self, s: &Schedule, cfg: &PropagatorConfig) -> Result<Trajectory> {
        match self {
            Model::Grover(g) => propagate_reduced(g, s, cfg),
            Model::Pair(ih) => propagate(ih, s, cfg),
        }
    }

    pub fn delta_v(&self) -> Result<f64> {
        match self {
            Model::Grover(g) => grover_delta_v(g.n()),
            Model::Pair(ih) => driving_uncertainty(ih),
        }
    }

    /// Closed forms for Grover; ground-state overlap for a general pair.
    pub fn bound_report(&self, epsilon: f64) -> Result<BoundReport> {
        match self {
            Model::Grover(g) => {
                let mut r = BoundReport::new(grover_delta_v(g.n())?, grover_c_final(g.n())?, epsilon)?;
                r.t_f_lower = grover_bound(g.n(), epsilon)?;
                Ok(r)
            }
            Model::Pair(ih) => BoundReport::for_pair(ih, epsilon),
        }
    }
}

/// Search window for [`min_run_time`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRange {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Relative tolerance of the returned `t_f`.
    pub tolerance: f64,
}

impl Default for SearchRange {
    fn default() -> Self {
        Self { t_lo: 0.1, t_hi: 10.0, tolerance: 1e-3 }
    }
}

impl SearchRange {
    fn validate(&self) -> Result<()> {
        if !(self.t_lo >= 0.0 && self.t_hi > self.t_lo && self.t_hi.is_finite()) {
            return Err(Error::Domain(format!("invalid search range [{}, {}]", self.t_lo, self.t_hi)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Domain(format!("search tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MinTime {
    pub t_f: f64,
    /// Trajectory at the returned `t_f` (absent when `t_f = 0`).
    pub trajectory: Option<Trajectory>,
    /// `t_f·(1 - tolerance)` was re-simulated and fails the criterion.
    pub verified: bool,
    pub evaluations: usize,
}

impl MinTime {
    pub fn final_fidelity(&self) -> f64 {
        self.trajectory.as_ref().map_or(f64::NAN, Trajectory::final_fidelity)
    }
}

struct Probe<'a> {
    path: &'a Path,
    model: &'a Model,
    epsilon: f64,
    cfg: &'a PropagatorConfig,
    evaluations: usize,
}

impl Probe<'_> {
    fn run(&mut self, t_f: f64) -> Result<(bool, Trajectory)> {
        self.evaluations += 1;
        let tr = self.model.propagate(&self.path.at_run_time(t_f)?, self.cfg)?;
        Ok((meets_allowance(tr.final_fidelity(), self.epsilon), tr))
    }
}

/// Smallest run time along `path` that meets allowance `epsilon`, by first crossing.
///
/// Returns `t_lo` when the criterion already holds there. With `t_lo = 0` the
/// sudden limit `F(1) = C(1)` is tested instead of a zero-length run.
pub fn min_run_time(
    path: &Path,
    model: &Model,
    epsilon: f64,
    range: &SearchRange,
    cfg: &PropagatorConfig,
) -> Result<MinTime> {
    range.validate()?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    let mut probe = Probe { path, model, epsilon, cfg, evaluations: 0 };

    let start = if range.t_lo > 0.0 {
        let (ok, tr) = probe.run(range.t_lo)?;
        if ok {
            return Ok(MinTime { t_f: range.t_lo, trajectory: Some(tr), verified: true, evaluations: probe.evaluations });
        }
        range.t_lo
    } else {
        let c_final = model.bound_report(epsilon)?.c_final;
        if meets_allowance(c_final, epsilon) {
            return Ok(MinTime { t_f: 0.0, trajectory: None, verified: true, evaluations: 0 });
        }
        range.t_hi * 1e-6
    };

    let mut t_hi = range.t_hi;
    let mut doublings = 0;
    while !probe.run(t_hi)?.0 {
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::BracketNotFound { t_hi });
        }
        t_hi *= 2.0;
        doublings += 1;
    }

    // First success on the geometric grid.
    let ratio = 10f64.powf(1.0 / GRID_POINTS_PER_DECADE);
    let mut lo = start;
    let (mut hi, mut hi_tr) = loop {
        let next = (lo * ratio).min(t_hi);
        let (ok, tr) = probe.run(next)?;
        if ok {
            break (next, tr);
        }
        lo = next;
        if next >= t_hi {
            // Only reachable if the t_hi probe disagreed with itself.
            return Err(Error::BracketNotFound { t_hi });
        }
    };

    // Stop a little inside the tolerance so that t_f·(1 - tolerance) lies below `lo`.
    while hi - lo > 0.5 * range.tolerance * hi {
        let mid = 0.5 * (lo + hi);
        let (ok, tr) = probe.run(mid)?;
        if ok {
            hi = mid;
            hi_tr = tr;
        } else {
            lo = mid;
        }
    }

    let verified = !probe.run(hi * (1.0 - range.tolerance))?.0;
    Ok(MinTime { t_f: hi, trajectory: Some(hi_tr), verified, evaluations: probe.evaluations })
}

/// Which family of schedules a sweep searches along.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathSpec {
    Linear,
    Power { exponent: f64 },
    TanhRamp { steepness: f64 },
    /// Local-adiabatic Grover schedule for the cell's `N`.
    LocalAdiabatic,
    Tabulated { file: PathBuf },
}

impl PathSpec {
    pub fn to_path(&self, n: u64) -> Result<Path> {
        Ok(match self {
            PathSpec::Linear => Path::new(Profile::Linear),
            PathSpec::Power { exponent } => Path::new(Profile::power(*exponent)?),
            PathSpec::TanhRamp { steepness } => Path::new(Profile::tanh_ramp(*steepness)?),
            PathSpec::LocalAdiabatic => Path::new(Profile::local_adiabatic_grover(n)?),
            PathSpec::Tabulated { file } => Path::from(Schedule::from_table_file(file)?),
        })
    }

    pub fn label(&self) -> String {
        match self {
            PathSpec::Linear => "linear".into(),
            PathSpec::Power { exponent } => format!("power({exponent})"),
            PathSpec::TanhRamp { steepness } => format!("tanh-ramp({steepness})"),
            PathSpec::LocalAdiabatic => "local-adiabatic".into(),
            PathSpec::Tabulated { file } => format!("tabulated({})", file.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Grover {
        n: Vec<u64>,
        #[serde(default = "default_marked")]
        marked: u64,
    },
    MatrixPair { path: PathBuf },
}

fn default_marked() -> u64 {
    1
}

fn default_workers() -> usize {
    1
}

fn default_samples() -> usize {
    crate::propagator::DEFAULT_SAMPLES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub schedule: PathSpec,
    pub epsilon: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub csv_out: Option<PathBuf>,
    #[serde(default)]
    pub json_out: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1e-3
}

impl SweepConfig {
    pub fn from_json_file(path: impl AsRef<FsPath>) -> Result<Self> {
        let cfg: Self = serde_json::from_reader(std::fs::File::open(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        SearchRange { t_lo: self.t_lo, t_hi: self.t_hi, tolerance: self.tolerance }.validate()?;
        if let Some(e) = self.epsilon.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Domain(format!("epsilon = {e} outside [0, 1]")));
        }
        if let ModelSpec::Grover { n, marked } = &self.model {
            if let Some(bad) = n.iter().find(|&&n| n < 2) {
                return Err(Error::Domain(format!("N = {bad} below 2")));
            }
            if let Some(bad) = n.iter().find(|&&n| *marked > n) {
                return Err(Error::Domain(format!("marked entry {marked} exceeds N = {bad}")));
            }
        }
        if self.workers == 0 {
            return Err(Error::Domain("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn range(&self) -> SearchRange {
        SearchRange { t_lo: self.t_lo, t_hi: self.t_hi, tolerance: self.tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "N")]
    pub n: u64,
    pub epsilon: f64,
    pub schedule: String,
    pub t_f_min: f64,
    pub lower_bound: f64,
    pub slack_ratio: f64,
    pub final_fidelity: f64,
    pub audit_min_residual: f64,
    pub verified: bool,
    pub error: String,
}

impl SweepRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_empty()
    }
}

/// Least-squares fit of `ln t_f = a + b ln N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub std_error: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::Domain(format!("need at least two points to fit, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive data".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs at least two distinct abscissae".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let std_error = if logs.len() > 2 {
        let rss: f64 = logs.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(ScalingFit { exponent, std_error, intercept, points: logs.len() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schedule: String,
    pub min_time_definition: String,
    pub records: Vec<SweepRecord>,
    /// Exponent of measured `t_f` against `N`, keyed by epsilon.
    pub fits: BTreeMap<String, ScalingFit>,
    /// Exponent of the lower bound itself against `N`, keyed by epsilon.
    pub bound_fits: BTreeMap<String, ScalingFit>,
}

/// Runs every `(N, ε)` cell; per-cell failures are recorded, not raised.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let models: Vec<Model> = match &cfg.model {
        ModelSpec::Grover { n, marked } => {
            n.iter().map(|&n| GroverInstance::new(n, *marked).map(Model::Grover)).collect::<Result<_>>()?
        }
        ModelSpec::MatrixPair { path } => vec![Model::Pair(load_matrix_pair(path)?)],
    };
    let cells: Vec<(&Model, f64)> =
        models.iter().flat_map(|m| cfg.epsilon.iter().map(move |&e| (m, e))).collect();

    let prop_cfg = PropagatorConfig::default().with_samples(cfg.samples);
    let range = cfg.range();
    let label = cfg.schedule.label();
    let run_cell = |&(model, epsilon): &(&Model, f64)| -> SweepRecord {
        let n = model.dim();
        let mut rec = SweepRecord {
            n,
            epsilon,
            schedule: label.clone(),
            t_f_min: f64::NAN,
            lower_bound: f64::NAN,
            slack_ratio: f64::NAN,
            final_fidelity: f64::NAN,
            audit_min_residual: f64::NAN,
            verified: false,
            error: String::new(),
        };
        let outcome = (|| -> Result<()> {
            rec.lower_bound = model.bound_report(epsilon)?.t_f_lower;
            let path = cfg.schedule.to_path(n)?;
            let found = min_run_time(&path, model, epsilon, &range, &prop_cfg)?;
            rec.t_f_min = found.t_f;
            rec.verified = found.verified;
            rec.slack_ratio = if rec.lower_bound > 0.0 { found.t_f / rec.lower_bound } else { f64::INFINITY };
            if let Some(tr) = &found.trajectory {
                rec.final_fidelity = tr.final_fidelity();
                rec.audit_min_residual = audit_inequality(tr, model.delta_v()?).min_residual;
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            rec.error = e.to_string();
        }
        rec
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let mut records: Vec<SweepRecord> = pool.install(|| cells.par_iter().map(run_cell).collect());
    records.sort_by(|a, b| a.n.cmp(&b.n).then(a.epsilon.total_cmp(&b.epsilon)));

    let mut fits = BTreeMap::new();
    let mut bound_fits = BTreeMap::new();
    for &eps in &cfg.epsilon {
        let cell: Vec<&SweepRecord> = records.iter().filter(|r| r.epsilon == eps && r.succeeded()).collect();
        let measured: Vec<(f64, f64)> = cell.iter().filter(|r| r.t_f_min > 0.0).map(|r| (r.n as f64, r.t_f_min)).collect();
        if let Ok(fit) = fit_power_law(&measured) {
            fits.insert(eps.to_string(), fit);
        }
        let bounds: Vec<(f64, f64)> = cell.iter().filter(|r| r.lower_bound > 0.0).map(|r| (r.n as f64, r.lower_bound)).collect();
        if let Ok(fit) = fit_power_law(&bounds) {
            bound_fits.insert(eps.to_string(), fit);
        }
    }
    Ok(SweepSummary {
        schedule: label,
        min_time_definition: MIN_TIME_DEFINITION.into(),
        records,
        fits,
        bound_fits,
    })
}

impl SweepSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// `{"dim": N, "h0": [[[re, im], ...], ...], "h1": ...}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixPairFile {
    pub dim: usize,
    pub h0: Vec<Vec<[f64; 2]>>,
    pub h1: Vec<Vec<[f64; 2]>>,
}

impl MatrixPairFile {
    pub fn into_hamiltonian(self) -> Result<InterpolatedHamiltonian> {
        let to_op = |rows: Vec<Vec<[f64; 2]>>, name: &str| -> Result<HermitianOperator> {
            if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                return Err(Error::Parse(format!("{name} is not a {0}x{0} matrix", self.dim)));
            }
            let m = DMatrix::from_fn(self.dim, self.dim, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
            HermitianOperator::dense(m)
        };
        let h0 = to_op(self.h0.clone(), "h0")?;
        let h1 = to_op(self.h1.clone(), "h1")?;
        InterpolatedHamiltonian::new(h0, h1)
    }

    pub fn from_hamiltonian(ih: &InterpolatedHamiltonian) -> Self {
        let rows = |op: &HermitianOperator| {
            let m = op.to_dense();
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
        };
        Self { dim: ih.dim(), h0: rows(ih.h0()), h1: rows(ih.h1()) }
    }
}

pub fn load_matrix_pair(path: impl AsRef<FsPath>) -> Result<InterpolatedHamiltonian> {
    let file: MatrixPairFile = serde_json::from_reader(std::fs::File::open(path)?)?;
    file.into_hamiltonian()
}

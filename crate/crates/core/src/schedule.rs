//! Monotone schedules `λ(t)` on `[0, t_f]` and the paths they belong to.
//!
//! A [`Schedule`] is a run time plus a [`Profile`], the map `s ↦ λ` on the
//! normalized time `s = t / t_f`. Rescaling the time axis changes the run time
//! and leaves the profile alone, so a [`Path`] is just a profile carried at
//! `t_f = 1`.

use std::io::Read;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Endpoint tolerance for `profile(0) = 0` and `profile(1) = 1`.
pub const ENDPOINT_TOLERANCE: f64 = 1e-12;
/// Relative accuracy of [`Schedule::integral_of_lambda`] where no closed form exists.
pub const INTEGRAL_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Linear,
    /// `s^p`, `p > 0`.
    Power { exponent: f64 },
    /// Rescaled `tanh(k(2s - 1))`, `k > 0`.
    TanhRamp { steepness: f64 },
    /// Rate proportional to the squared gap of the `N`-entry Grover Hamiltonian.
    LocalAdiabaticGrover { n: u64 },
    /// Piecewise-linear interpolation through `(s, λ)` knots.
    Tabulated { knots: Arc<[(f64, f64)]> },
}

impl Profile {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidSchedule(format!("power exponent must be > 0, got {exponent}")));
        }
        Ok(Profile::Power { exponent })
    }

    pub fn tanh_ramp(steepness: f64) -> Result<Self> {
        if !(steepness > 0.0 && steepness.is_finite()) {
            return Err(Error::InvalidSchedule(format!("tanh steepness must be > 0, got {steepness}")));
        }
        Ok(Profile::TanhRamp { steepness })
    }

    pub fn local_adiabatic_grover(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("local-adiabatic Grover schedule needs N >= 2, got {n}")));
        }
        Ok(Profile::LocalAdiabaticGrover { n })
    }

    /// Knots `(s, λ)` with `s` strictly increasing from 0 to 1 and `λ`
    /// nondecreasing from 0 to 1.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidSchedule("tabulated profile needs at least two rows".into()));
        }
        let (s0, l0) = knots[0];
        let (s1, l1) = knots[knots.len() - 1];
        if s0.abs() > ENDPOINT_TOLERANCE || (s1 - 1.0).abs() > ENDPOINT_TOLERANCE {
            return Err(Error::InvalidSchedule(format!("time must run from 0 to t_f, got [{s0}, {s1}]")));
        }
        if l0.abs() > ENDPOINT_TOLERANCE || (l1 - 1.0).abs() > ENDPOINT_TOLERANCE {
            return Err(Error::InvalidSchedule(format!("lambda must run from 0 to 1, got {l0} .. {l1}")));
        }
        for (i, w) in knots.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidSchedule(format!("time not strictly increasing at row {}", i + 1)));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidSchedule(format!("lambda decreases at row {}", i + 1)));
            }
        }
        if knots.iter().any(|&(s, l)| !s.is_finite() || !l.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite value in table".into()));
        }
        let mut knots = knots;
        let last = knots.len() - 1;
        knots[0] = (0.0, 0.0);
        knots[last] = (1.0, 1.0);
        Ok(Profile::Tabulated { knots: knots.into() })
    }

    /// `λ` at normalized time `s ∈ [0, 1]`.
    pub fn at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Profile::Linear => s,
            Profile::Power { exponent } => s.powf(*exponent),
            Profile::TanhRamp { steepness } => {
                let k = *steepness;
                let v = 0.5 * (1.0 + (k * (2.0 * s - 1.0)).tanh() / k.tanh());
                v.clamp(0.0, 1.0)
            }
            Profile::LocalAdiabaticGrover { n } => {
                // Inverse of the normalized antiderivative of 1/Δ²(λ).
                let root = ((*n - 1) as f64).sqrt();
                let theta = root.atan();
                let v = 0.5 + ((2.0 * s - 1.0) * theta).tan() / (2.0 * root);
                v.clamp(0.0, 1.0)
            }
            Profile::Tabulated { knots } => interpolate(knots, s),
        }
    }

    /// `dλ/ds`, where it exists.
    pub fn slope(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Profile::Linear => 1.0,
            Profile::Power { exponent } => exponent * s.powf(exponent - 1.0),
            Profile::TanhRamp { steepness } => {
                let k = *steepness;
                let c = (k * (2.0 * s - 1.0)).cosh();
                k / (k.tanh() * c * c)
            }
            Profile::LocalAdiabaticGrover { n } => {
                let root = ((*n - 1) as f64).sqrt();
                let theta = root.atan();
                let c = ((2.0 * s - 1.0) * theta).cos();
                theta / (root * c * c)
            }
            Profile::Tabulated { knots } => {
                let i = knots.partition_point(|&(x, _)| x <= s).clamp(1, knots.len() - 1);
                let (a, b) = (knots[i - 1], knots[i]);
                (b.1 - a.1) / (b.0 - a.0)
            }
        }
    }

    /// `∫₀^u profile(s) ds`.
    pub fn integral(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return 0.0;
        }
        match self {
            Profile::Linear => 0.5 * u * u,
            Profile::Power { exponent } => u.powf(exponent + 1.0) / (exponent + 1.0),
            Profile::Tabulated { knots } => {
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if a.0 >= u {
                        break;
                    }
                    let hi = b.0.min(u);
                    let l_hi = interpolate(&[a, b], hi);
                    acc += 0.5 * (a.1 + l_hi) * (hi - a.0);
                }
                acc
            }
            _ => adaptive_simpson(|s| self.at(s), 0.0, u, INTEGRAL_RTOL),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Linear => "linear".into(),
            Profile::Power { exponent } => format!("power({exponent})"),
            Profile::TanhRamp { steepness } => format!("tanh-ramp({steepness})"),
            Profile::LocalAdiabaticGrover { n } => format!("local-adiabatic-grover({n})"),
            Profile::Tabulated { knots } => format!("tabulated({} rows)", knots.len()),
        }
    }
}

fn interpolate(knots: &[(f64, f64)], s: f64) -> f64 {
    let i = knots.partition_point(|&(x, _)| x < s);
    if i == 0 {
        return knots[0].1;
    }
    if i >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (a, b) = (knots[i - 1], knots[i]);
    let w = (s - a.0) / (b.0 - a.0);
    a.1 + w * (b.1 - a.1)
}

/// A schedule `λ(t) = profile(t / t_f)` on `[0, t_f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    run_time: f64,
    profile: Profile,
}

impl Schedule {
    pub fn new(profile: Profile, run_time: f64) -> Result<Self> {
        if !(run_time > 0.0 && run_time.is_finite()) {
            return Err(Error::Domain(format!("run time must be positive and finite, got {run_time}")));
        }
        Ok(Self { run_time, profile })
    }

    pub fn linear(run_time: f64) -> Result<Self> {
        Self::new(Profile::Linear, run_time)
    }

    /// Local-adiabatic schedule for Grover search over `n` entries.
    pub fn local_adiabatic_grover(n: u64, run_time: f64) -> Result<Self> {
        Self::new(Profile::local_adiabatic_grover(n)?, run_time)
    }

    /// Reads the two-column `t,lambda` text format.
    pub fn from_table<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "lambda" {
            return Err(Error::Parse(format!("expected header \"t,lambda\", got {:?}", headers.iter().collect::<Vec<_>>())));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column", i + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
            };
            rows.push((parse(0)?, parse(1)?));
        }
        let run_time = rows.last().map_or(0.0, |r| r.0);
        if !(run_time > 0.0) {
            return Err(Error::InvalidSchedule("table must end at a positive t_f".into()));
        }
        let knots = rows.into_iter().map(|(t, l)| (t / run_time, l)).collect();
        Self::new(Profile::tabulated(knots)?, run_time)
    }

    pub fn from_table_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_table(std::fs::File::open(path)?)
    }

    pub fn run_time(&self) -> f64 {
        self.run_time
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Same profile, different run time.
    pub fn with_run_time(&self, run_time: f64) -> Result<Self> {
        Self::new(self.profile.clone(), run_time)
    }

    fn normalized_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.run_time;
        if !(t >= -slack && t <= self.run_time + slack) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.run_time)));
        }
        Ok((t / self.run_time).clamp(0.0, 1.0))
    }

    /// `λ(t)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.profile.at(self.normalized_time(t)?))
    }

    /// `∫₀^{t_upper} λ(t) dt`.
    pub fn integral_of_lambda(&self, t_upper: f64) -> Result<f64> {
        let u = self.normalized_time(t_upper)?;
        Ok(self.run_time * self.profile.integral(u))
    }
}

/// All linear time rescalings of one profile; stored as its `t_f = 1` member.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    base: Schedule,
}

impl Path {
    pub fn new(profile: Profile) -> Self {
        Self { base: Schedule { run_time: 1.0, profile } }
    }

    pub fn base(&self) -> &Schedule {
        &self.base
    }

    pub fn profile(&self) -> &Profile {
        &self.base.profile
    }

    /// `λ̃(t) = λ(η t)`, with run time `1/η`.
    pub fn rescale(&self, eta: f64) -> Result<Schedule> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("rescaling factor must be positive, got {eta}")));
        }
        Schedule::new(self.base.profile.clone(), 1.0 / eta)
    }

    /// The member of the path with the given run time.
    pub fn at_run_time(&self, run_time: f64) -> Result<Schedule> {
        self.base.with_run_time(run_time)
    }
}

impl From<Schedule> for Path {
    fn from(s: Schedule) -> Self {
        Self::new(s.profile)
    }
}

/// Gap-squared of the Grover Hamiltonian, `Δ²(λ) = 1 - 4λ(1-λ)(1 - 1/N)`.
pub(crate) fn grover_gap_sq(n: u64, lambda: f64) -> f64 {
    1.0 - 4.0 * lambda * (1.0 - lambda) * (1.0 - 1.0 / n as f64)
}

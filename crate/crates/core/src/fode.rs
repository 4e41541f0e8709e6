//! Scalar fractional Cauchy problem ^C D^α v = f(v), v(0) = v0.
//!
//! The problem is marched in its Volterra form
//! v(t) = v0 + (1/Γ(α)) ∫_0^t f(v(τ)) (t - τ)^(α-1) dτ
//! with a fractional Adams predictor–corrector: product-rectangle weights
//! for the predictor and product-trapezoid weights for the corrector. The
//! whole history is kept, so a run of N steps costs O(N²). At α = 1 the
//! classical fourth-order Runge–Kutta step is used instead.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::upper_bound_b;
use crate::error::{Error, Result};
use crate::frac_ops::{FractionalOrder, KernelWeights, SampledFunction, TimeGrid};
use crate::specfun::gamma_unchecked;
use crate::sum::CompensatedSum;

pub const DEFAULT_ESCAPE_THRESHOLD: f64 = 1e6;

/// Right-hand side f of ^C D^α v = f(v).
#[derive(Clone)]
pub enum Nonlinearity {
    /// f(r) = r²
    Square,
    /// f(r) = min(r², M²)
    CappedSquare(f64),
    /// f ≡ 0
    Zero,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Nonlinearity {
    pub fn capped(cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidConfig(format!("cap must be positive, got {cap}")));
        }
        Ok(Self::CappedSquare(cap))
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Square => r * r,
            Self::CappedSquare(cap) => (r * r).min(cap * cap),
            Self::Zero => 0.0,
            Self::Custom(f) => f(r),
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Square => write!(f, "Square"),
            Self::CappedSquare(cap) => write!(f, "CappedSquare({cap})"),
            Self::Zero => write!(f, "Zero"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: f64,
    pub horizon: f64,
    pub escape_threshold: f64,
    pub corrector_sweeps: usize,
}

impl SolverConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            escape_threshold: DEFAULT_ESCAPE_THRESHOLD,
            corrector_sweeps: 1,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.escape_threshold = threshold;
        self
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.corrector_sweeps = sweeps;
        self
    }

    fn validate(&self, v0: f64) -> Result<TimeGrid> {
        if !(self.step > 0.0 && self.horizon > 0.0 && self.step < self.horizon) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < step < horizon, got step {} and horizon {}",
                self.step, self.horizon
            )));
        }
        if !v0.is_finite() {
            return Err(Error::InvalidConfig(format!("initial value must be finite, got {v0}")));
        }
        if !(self.escape_threshold > v0.abs()) {
            return Err(Error::InvalidConfig(format!(
                "escape threshold {} must exceed |v0| = {}",
                self.escape_threshold,
                v0.abs()
            )));
        }
        TimeGrid::covering(self.step, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// `node` is the first node whose value exceeded the threshold or was not finite.
    Escaped { node: usize },
}

/// A solved trajectory. After an escape at node j the samples cover nodes
/// 0..=j when the value at j is finite and 0..j when it is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: SampledFunction,
    status: Status,
}

impl Trajectory {
    pub fn samples(&self) -> &SampledFunction {
        &self.samples
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.samples.grid()
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn escape_time(&self) -> Option<f64> {
        match self.status {
            Status::Completed => None,
            Status::Escaped { node } => Some(self.grid().node(node)),
        }
    }

    /// Linear interpolation of v; `None` outside the computed nodes.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.samples.interpolate(t)
    }
}

fn finish(grid: TimeGrid, mut values: Vec<f64>, status: Status) -> Result<Trajectory> {
    if let Status::Escaped { node } = status {
        if values.len() > node && !values[node].is_finite() {
            values.truncate(node);
        }
    }
    let samples = SampledFunction::new(grid.truncated(values.len() - 1), values)?;
    Ok(Trajectory { samples, status })
}

#[inline]
fn escaped(value: f64, threshold: f64) -> bool {
    !value.is_finite() || value.abs() > threshold
}

/// Solves ^C D^α v = f(v), v(0) = v0 up to the horizon or the first node
/// whose value leaves [-threshold, threshold].
pub fn solve(
    f: &Nonlinearity,
    v0: f64,
    order: FractionalOrder,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let grid = config.validate(v0)?;
    if order.is_classical() {
        solve_classical(f, v0, grid, config.escape_threshold)
    } else {
        solve_fractional(f, v0, order.alpha(), grid, config)
    }
}

fn solve_classical(f: &Nonlinearity, v0: f64, grid: TimeGrid, threshold: f64) -> Result<Trajectory> {
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.len());
    values.push(v0);
    let mut v = v0;
    for n in 1..=grid.steps() {
        let k1 = f.eval(v);
        let k2 = f.eval(v + 0.5 * h * k1);
        let k3 = f.eval(v + 0.5 * h * k2);
        let k4 = f.eval(v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        values.push(v);
        if escaped(v, threshold) {
            return finish(grid, values, Status::Escaped { node: n });
        }
    }
    finish(grid, values, Status::Completed)
}

fn solve_fractional(
    f: &Nonlinearity,
    v0: f64,
    alpha: f64,
    grid: TimeGrid,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let weights = KernelWeights::new(alpha, grid.steps());
    let hpow = grid.step().powf(alpha);
    let predictor_scale = hpow / gamma_unchecked(alpha + 1.0);
    let corrector_scale = hpow / gamma_unchecked(alpha + 2.0);

    let mut values = Vec::with_capacity(grid.len());
    let mut forcing = Vec::with_capacity(grid.len());
    values.push(v0);
    forcing.push(f.eval(v0));

    for n in 0..grid.steps() {
        let m = n + 1;
        let mut predictor = CompensatedSum::new();
        let mut corrector = CompensatedSum::new();
        predictor.add(weights.rectangle()[n] * forcing[0]);
        corrector.add(weights.trapezoid_start()[m] * forcing[0]);
        for (j, &fj) in forcing.iter().enumerate().skip(1) {
            predictor.add(weights.rectangle()[n - j] * fj);
            corrector.add(weights.trapezoid()[m - j] * fj);
        }
        let history = corrector.value();
        let mut v = v0 + predictor_scale * predictor.value();
        for _ in 0..config.corrector_sweeps {
            v = v0 + corrector_scale * (history + f.eval(v));
        }
        values.push(v);
        if escaped(v, config.escape_threshold) {
            return finish(grid, values, Status::Escaped { node: m });
        }
        forcing.push(f.eval(v));
    }
    finish(grid, values, Status::Completed)
}

/// Solves the capped problem ^C D^α v = min(v², M²) for M >= 4.
pub fn solve_capped(
    cap: f64,
    v0: f64,
    order: FractionalOrder,
    config: &SolverConfig,
) -> Result<Trajectory> {
    if !(cap >= 4.0 && cap.is_finite()) {
        return Err(Error::InvalidConfig(format!("cap must be >= 4, got {cap}")));
    }
    solve(&Nonlinearity::CappedSquare(cap), v0, order, config)
}

/// Largest relative deviation between a fractional trajectory and the
/// product-trapezoid Volterra right-hand side evaluated on that trajectory.
pub fn volterra_residual(
    f: &Nonlinearity,
    v0: f64,
    order: FractionalOrder,
    trajectory: &Trajectory,
) -> Result<f64> {
    if order.is_classical() {
        return Err(Error::InvalidOrder {
            alpha: 1.0,
            detail: "the classical path is not a product-integration scheme",
        });
    }
    let alpha = order.alpha();
    let grid = *trajectory.grid();
    let values = trajectory.values();
    let weights = KernelWeights::new(alpha, grid.steps());
    let scale = grid.step().powf(alpha) / gamma_unchecked(alpha + 2.0);
    let forcing: Vec<f64> = values.iter().map(|&v| f.eval(v)).collect();
    let mut worst = 0.0f64;
    for m in 1..values.len() {
        let mut acc = CompensatedSum::new();
        acc.add(weights.trapezoid_start()[m] * forcing[0]);
        for j in 1..m {
            acc.add(weights.trapezoid()[m - j] * forcing[j]);
        }
        acc.add(forcing[m]);
        let rhs = v0 + scale * acc.value();
        worst = worst.max(((rhs - values[m]) / values[m].abs().max(f64::MIN_POSITIVE)).abs());
    }
    Ok(worst)
}

/// Refinement ladder for [`estimate_blowup`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupConfig {
    /// Coarsest step; the ladder halves it `halvings` times.
    pub base_step: f64,
    pub halvings: usize,
    /// Smallest threshold; each further level multiplies it by [`THRESHOLD_FACTOR`].
    pub base_threshold: f64,
    pub threshold_levels: usize,
    /// Marching horizon. `None` uses 1.05 times the upper bound for the order plus ten coarse steps.
    pub horizon: Option<f64>,
    pub corrector_sweeps: usize,
}

pub const THRESHOLD_FACTOR: f64 = 100.0;

impl Default for BlowupConfig {
    fn default() -> Self {
        Self {
            base_step: 8e-4,
            halvings: 3,
            base_threshold: DEFAULT_ESCAPE_THRESHOLD,
            threshold_levels: 3,
            horizon: None,
            corrector_sweeps: 1,
        }
    }
}

impl BlowupConfig {
    pub fn finest_step(&self) -> f64 {
        self.base_step / 2f64.powi(self.halvings as i32)
    }

    pub fn thresholds(&self) -> Vec<f64> {
        (0..self.threshold_levels)
            .map(|i| self.base_threshold * THRESHOLD_FACTOR.powi(i as i32))
            .collect()
    }

    pub fn horizon_for(&self, order: FractionalOrder) -> f64 {
        self.horizon
            .unwrap_or_else(|| 1.05 * upper_bound_b(order) + 10.0 * self.base_step)
    }

    fn validate(&self) -> Result<()> {
        if self.halvings < 3 {
            return Err(Error::InvalidConfig(format!(
                "the ladder needs at least 3 step halvings, got {}",
                self.halvings
            )));
        }
        if self.threshold_levels < 3 {
            return Err(Error::InvalidConfig(format!(
                "the ladder needs at least 3 threshold levels, got {}",
                self.threshold_levels
            )));
        }
        if !(self.base_step > 0.0 && self.base_threshold > 1.0) {
            return Err(Error::InvalidConfig(
                "base step must be positive and base threshold above 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub step: f64,
    pub threshold: f64,
    /// First node time at which v exceeded the threshold, if it did.
    pub escape_time: Option<f64>,
}

/// Bracket [t_lo, t_hi] for the blow-up time with the runs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_lo: f64,
    pub t_hi: f64,
    pub finest_step: f64,
    /// Escape time at the finest step and largest threshold.
    pub finest_escape_time: f64,
    /// Step-extrapolated escape time, when the last three ladder rungs converge geometrically.
    pub extrapolated: Option<f64>,
    pub observed_order: Option<f64>,
    pub refinement_trace: Vec<RefinementRecord>,
}

impl BlowupEstimate {
    /// The extrapolated time when available, otherwise the bracket midpoint.
    pub fn point(&self) -> f64 {
        self.extrapolated
            .unwrap_or(0.5 * (self.t_lo + self.t_hi))
    }
}

/// Brackets the blow-up time of ^C D^α v = v², v(0) = 1.
pub fn estimate_blowup(order: FractionalOrder, config: &BlowupConfig) -> Result<BlowupEstimate> {
    estimate_blowup_from(1.0, order, config)
}

/// [`estimate_blowup`] for an arbitrary initial value v0 > 0.
pub fn estimate_blowup_from(
    v0: f64,
    order: FractionalOrder,
    config: &BlowupConfig,
) -> Result<BlowupEstimate> {
    config.validate()?;
    if !(v0 > 0.0) {
        return Err(Error::InvalidConfig(format!("blow-up needs v0 > 0, got {v0}")));
    }
    let thresholds = config.thresholds();
    let top = *thresholds.last().expect("at least three levels");
    let horizon = config.horizon_for(order);
    let steps: Vec<f64> = (0..=config.halvings)
        .map(|k| config.base_step / 2f64.powi(k as i32))
        .collect();

    // One run per step at the top threshold; first crossings of the lower
    // thresholds are read off the same trajectory.
    let runs: Vec<Trajectory> = steps
        .par_iter()
        .map(|&step| {
            let cfg = SolverConfig::new(step, horizon)
                .with_threshold(top)
                .with_sweeps(config.corrector_sweeps);
            solve(&Nonlinearity::Square, v0, order, &cfg)
        })
        .collect::<Result<_>>()?;

    let mut trace = Vec::with_capacity(steps.len() * thresholds.len());
    let mut top_escapes = Vec::with_capacity(steps.len());
    for (run, &step) in runs.iter().zip(&steps) {
        for &threshold in &thresholds {
            let escape_time = run
                .values()
                .iter()
                .position(|v| v.abs() > threshold)
                .map(|j| run.grid().node(j))
                .or_else(|| run.escape_time().filter(|_| threshold == top));
            trace.push(RefinementRecord {
                step,
                threshold,
                escape_time,
            });
        }
        top_escapes.push(run.escape_time());
    }

    let finest_step = steps[steps.len() - 1];
    let finest = top_escapes[top_escapes.len() - 1].ok_or(Error::NoBlowup { horizon })?;
    let t_hi = finest + finest_step;

    let k = top_escapes.len();
    let (extrapolated, observed_order, correction) =
        match (top_escapes[k - 3], top_escapes[k - 2]) {
            (Some(e0), Some(e1)) => {
                let d0 = e0 - e1;
                let d1 = e1 - finest;
                if d1 > 0.0 && d0 > d1 {
                    let ratio = d0 / d1;
                    let correction = d1 / (ratio - 1.0);
                    (Some(finest - correction), Some(ratio.log2()), correction)
                } else {
                    (None, None, d0.abs() + d1.abs())
                }
            }
            _ => (None, None, finest),
        };
    let t_lo = (finest - correction.max(0.0) - finest_step).max(finest_step.min(finest));

    Ok(BlowupEstimate {
        t_lo,
        t_hi,
        finest_step,
        finest_escape_time: finest,
        extrapolated,
        observed_order,
        refinement_trace: trace,
    })
}

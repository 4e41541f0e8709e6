//! Discrete fractional operators on uniform time grids.
//!
//! * [`caputo_left`] is the L1 scheme: the exact Caputo derivative of the
//!   piecewise-linear interpolant of the samples.
//! * [`rl_fractional_integral`] is the product-trapezoid rule for the
//!   Riemann–Liouville integral, exact for piecewise-linear integrands.
//! * [`PowerTestFunction`] carries the closed forms for the right
//!   Riemann–Liouville derivative of (1 - t/T)^λ.
//!
//! Kernel weights are differences of powers of the node index. They are
//! evaluated with `expm1`/`ln_1p` or with a binomial series so that no
//! catastrophic cancellation occurs for large indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{gamma_ratio, gamma_unchecked};
use crate::sum::CompensatedSum;

/// Order α of a fractional operator, 0 < α <= 1.
///
/// α = 1 is the classical limit and is routed to first-order operators.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub const CLASSICAL: FractionalOrder = FractionalOrder(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidOrder {
                alpha,
                detail: "order must lie in (0, 1]",
            })
        }
    }

    /// Order restricted to the open interval (0, 1).
    pub fn fractional(alpha: f64) -> Result<Self> {
        let order = Self::new(alpha)?;
        if order.is_classical() {
            return Err(Error::InvalidOrder {
                alpha,
                detail: "order must lie in the open interval (0, 1)",
            });
        }
        Ok(order)
    }

    #[inline]
    pub fn alpha(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(order: FractionalOrder) -> f64 {
        order.0
    }
}

impl std::fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Uniform time nodes t_j = j * step, j = 0..=steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    step: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(step: f64, steps: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "time step must be positive, got {step}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("time grid needs at least 2 nodes".into()));
        }
        Ok(Self { step, steps })
    }

    /// Smallest grid with the given step whose last node reaches `horizon`
    /// (up to a relative slack of 1e-9).
    pub fn covering(step: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let steps = (horizon / step - 1e-9).ceil().max(1.0) as usize;
        Self::new(step, steps)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps; the grid has `steps() + 1` nodes.
    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.node(j))
    }

    pub fn horizon(&self) -> f64 {
        self.node(self.steps)
    }

    /// The same step truncated to `steps` steps.
    pub fn truncated(&self, steps: usize) -> Self {
        Self {
            step: self.step,
            steps: steps.min(self.steps),
        }
    }
}

/// Real values attached to the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite sample at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    /// Builds a sampled function from explicit (t, value) columns. The times
    /// must start at 0 and be uniformly spaced to a relative tolerance of 1e-9.
    pub fn from_samples(times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 samples with matching columns, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::NonUniformGrid { node: 0 });
        }
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (j, &t) in times.iter().enumerate() {
            if (t - j as f64 * step).abs() > 1e-9 * step.max(t.abs()) {
                return Err(Error::NonUniformGrid { node: j });
            }
        }
        Self::new(TimeGrid::new(step, times.len() - 1)?, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Linear interpolation between nodes; `None` outside the grid.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        if !(t >= 0.0) || t > self.grid.horizon() * (1.0 + 1e-12) {
            return None;
        }
        if self.grid.steps == 0 {
            return Some(self.values[0]);
        }
        let pos = t / self.grid.step;
        let j = (pos.floor() as usize).min(self.grid.steps - 1);
        let theta = (pos - j as f64).clamp(0.0, 1.0);
        Some(self.values[j] + theta * (self.values[j + 1] - self.values[j]))
    }
}

/// (k + 1)^p - k^p without cancellation.
pub(crate) fn power_increment(k: usize, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    k.powf(p) * (p * (1.0 / k).ln_1p()).exp_m1()
}

/// (k + 1)^p - 2 k^p + (k - 1)^p for k >= 1.
pub(crate) fn power_second_difference(k: usize, p: f64) -> f64 {
    debug_assert!(k >= 1);
    if k < 8 {
        let kf = k as f64;
        return (kf + 1.0).powf(p) - 2.0 * kf.powf(p) + (kf - 1.0).powf(p);
    }
    // k^p * 2 * sum_{j even >= 2} C(p, j) k^-j
    let x = 1.0 / k as f64;
    let x2 = x * x;
    let mut coeff = 1.0;
    let mut pow = 1.0;
    let mut acc = 0.0;
    for j in 1..60 {
        coeff *= (p - (j - 1) as f64) / j as f64;
        if j % 2 == 1 {
            continue;
        }
        pow *= x2;
        let term = coeff * pow;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    2.0 * (k as f64).powf(p) * acc
}

/// Weight of the initial node in the product-trapezoid rule at node m >= 1:
/// (m - 1)^(α+1) - (m - 1 - α) m^α.
pub(crate) fn trapezoid_start_weight(m: usize, alpha: f64) -> f64 {
    debug_assert!(m >= 1);
    let p = alpha + 1.0;
    if m < 8 {
        let mf = m as f64;
        return (mf - 1.0).powf(p) - (mf - 1.0 - alpha) * mf.powf(alpha);
    }
    // m^p * sum_{j >= 2} C(p, j) (-1/m)^j
    let x = -1.0 / m as f64;
    let mut coeff = 1.0;
    let mut pow = 1.0;
    let mut acc = 0.0;
    for j in 1..60 {
        coeff *= (p - (j - 1) as f64) / j as f64;
        pow *= x;
        if j < 2 {
            continue;
        }
        let term = coeff * pow;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    (m as f64).powf(p) * acc
}

/// Quadrature weights of the L1 scheme and of the fractional Adams
/// predictor–corrector for one (α, N) pair.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    alpha: f64,
    /// (k+1)^(1-α) - k^(1-α), k = 0..N
    l1: Vec<f64>,
    /// (k+1)^α - k^α, k = 0..N
    rectangle: Vec<f64>,
    /// (k+1)^(α+1) - 2k^(α+1) + (k-1)^(α+1), k = 0..=N (entry 0 unused)
    trapezoid: Vec<f64>,
    /// start weight for target node m, m = 0..=N (entry 0 unused)
    trapezoid_start: Vec<f64>,
}

impl KernelWeights {
    pub fn new(alpha: f64, steps: usize) -> Self {
        let l1 = (0..steps).map(|k| power_increment(k, 1.0 - alpha)).collect();
        let rectangle = (0..steps).map(|k| power_increment(k, alpha)).collect();
        let trapezoid = std::iter::once(0.0)
            .chain((1..=steps).map(|k| power_second_difference(k, alpha + 1.0)))
            .collect();
        let trapezoid_start = std::iter::once(0.0)
            .chain((1..=steps).map(|m| trapezoid_start_weight(m, alpha)))
            .collect();
        Self {
            alpha,
            l1,
            rectangle,
            trapezoid,
            trapezoid_start,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l1(&self) -> &[f64] {
        &self.l1
    }

    pub fn rectangle(&self) -> &[f64] {
        &self.rectangle
    }

    pub fn trapezoid(&self) -> &[f64] {
        &self.trapezoid
    }

    pub fn trapezoid_start(&self) -> &[f64] {
        &self.trapezoid_start
    }
}

/// Left Caputo derivative of order α ∈ (0, 1) by the L1 scheme.
///
/// The value at t_0 is 0 by convention.
pub fn caputo_left(f: &SampledFunction, order: FractionalOrder) -> Result<SampledFunction> {
    if order.is_classical() {
        return Err(Error::InvalidOrder {
            alpha: 1.0,
            detail: "use classical_derivative for the classical limit",
        });
    }
    let alpha = order.alpha();
    let grid = *f.grid();
    let n_steps = grid.steps();
    let weights: Vec<f64> = (0..n_steps)
        .map(|k| power_increment(k, 1.0 - alpha))
        .collect();
    let scale = grid.step().powf(-alpha) / gamma_unchecked(2.0 - alpha);
    let diffs: Vec<f64> = f.values().windows(2).map(|w| w[1] - w[0]).collect();

    let mut out = Vec::with_capacity(grid.len());
    out.push(0.0);
    for n in 1..=n_steps {
        // diffs[n - 1 - k] is f_{n-k} - f_{n-k-1}
        let acc: CompensatedSum = (0..n).map(|k| weights[k] * diffs[n - 1 - k]).collect();
        out.push(scale * acc.value());
    }
    SampledFunction::new(grid, out)
}

/// Backward differences (f_n - f_{n-1}) / h; 0 at t_0.
pub fn classical_derivative(f: &SampledFunction) -> SampledFunction {
    let h = f.grid().step();
    let values = std::iter::once(0.0)
        .chain(f.values().windows(2).map(|w| (w[1] - w[0]) / h))
        .collect();
    SampledFunction {
        grid: *f.grid(),
        values,
    }
}

/// Riemann–Liouville integral (1/Γ(α)) ∫_0^t g(τ)(t - τ)^(α-1) dτ by product
/// trapezoids. At α = 1 this is the composite trapezoid rule.
pub fn rl_fractional_integral(g: &SampledFunction, order: FractionalOrder) -> SampledFunction {
    let alpha = order.alpha();
    let grid = *g.grid();
    let weights = KernelWeights::new(alpha, grid.steps());
    let scale = grid.step().powf(alpha) / gamma_unchecked(alpha + 2.0);
    let gv = g.values();

    let mut out = Vec::with_capacity(grid.len());
    out.push(0.0);
    for n in 1..=grid.steps() {
        let mut acc = CompensatedSum::new();
        acc.add(weights.trapezoid_start[n] * gv[0]);
        for j in 1..n {
            acc.add(weights.trapezoid[n - j] * gv[j]);
        }
        acc.add(gv[n]);
        out.push(scale * acc.value());
    }
    SampledFunction { grid, values: out }
}

/// The test function φ(t) = (1 - t/T)^λ on [0, T], extended by 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTestFunction {
    lambda: f64,
    horizon: f64,
}

impl PowerTestFunction {
    pub fn new(lambda: f64, horizon: f64) -> Result<Self> {
        if !(lambda >= 2.0 && lambda.is_finite()) {
            return Err(Error::Domain {
                function: "PowerTestFunction",
                detail: format!("lambda must be >= 2, got {lambda}"),
            });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain {
                function: "PowerTestFunction",
                detail: format!("horizon must be > 0, got {horizon}"),
            });
        }
        Ok(Self { lambda, horizon })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

pub fn phi_value(phi: &PowerTestFunction, t: f64) -> f64 {
    if t > phi.horizon {
        0.0
    } else {
        (1.0 - t / phi.horizon).powf(phi.lambda)
    }
}

/// Right Riemann–Liouville derivative of φ at t ∈ [0, T):
/// Γ(λ+1)/Γ(λ+1-α) T^(-α) (1 - t/T)^(λ-α).
pub fn rl_right_derivative_phi(
    phi: &PowerTestFunction,
    order: FractionalOrder,
    t: f64,
) -> Result<f64> {
    if order.is_classical() {
        return Err(Error::InvalidOrder {
            alpha: 1.0,
            detail: "right derivative is defined here for α in (0, 1)",
        });
    }
    if !(t >= 0.0 && t < phi.horizon) {
        return Err(Error::Domain {
            function: "rl_right_derivative_phi",
            detail: format!("t must lie in [0, {}), got {t}", phi.horizon),
        });
    }
    let (lambda, alpha, big_t) = (phi.lambda, order.alpha(), phi.horizon);
    Ok(gamma_ratio(lambda + 1.0, lambda + 1.0 - alpha)
        * big_t.powf(-alpha)
        * (1.0 - t / big_t).powf(lambda - alpha))
}

fn l12_preconditions(phi: &PowerTestFunction, order: FractionalOrder) -> Result<(f64, f64, f64)> {
    if order.is_classical() {
        return Err(Error::InvalidOrder {
            alpha: 1.0,
            detail: "test-function integrals need α in (0, 1)",
        });
    }
    let (lambda, alpha) = (phi.lambda, order.alpha());
    if !(lambda > 2.0 * alpha - 1.0 && lambda - alpha > 0.0 && lambda - 2.0 * alpha + 1.0 > 0.0) {
        return Err(Error::Domain {
            function: "phi_integrals",
            detail: format!("Gamma arguments nonpositive for lambda={lambda}, alpha={alpha}"),
        });
    }
    Ok((lambda, alpha, phi.horizon))
}

/// The pair (∫_0^T D φ dt, ∫_0^T |D φ|²/φ dt) in the form quoted from the
/// literature:
/// I1 = λΓ(λ-α) / ((λ-α+1) Γ(λ-2α+1)) T^(1-α),
/// I2 = λ²/(λ+1-2α) (Γ(λ-α)/Γ(λ+1-2α))² T^(1-2α).
///
/// These do not agree with [`phi_integrals_direct`]; both scale identically in T.
pub fn phi_integrals_l12(phi: &PowerTestFunction, order: FractionalOrder) -> Result<(f64, f64)> {
    let (lambda, alpha, big_t) = l12_preconditions(phi, order)?;
    let ratio = gamma_ratio(lambda - alpha, lambda - 2.0 * alpha + 1.0);
    let i1 = lambda * ratio / (lambda - alpha + 1.0) * big_t.powf(1.0 - alpha);
    let i2 = lambda * lambda / (lambda + 1.0 - 2.0 * alpha) * ratio * ratio
        * big_t.powf(1.0 - 2.0 * alpha);
    Ok((i1, i2))
}

/// The same pair obtained by integrating [`rl_right_derivative_phi`] in closed form:
/// I1 = Γ(λ+1)/((λ+1-α)Γ(λ+1-α)) T^(1-α),
/// I2 = (Γ(λ+1)/Γ(λ+1-α))² T^(1-2α) / (λ+1-2α).
pub fn phi_integrals_direct(
    phi: &PowerTestFunction,
    order: FractionalOrder,
) -> Result<(f64, f64)> {
    let (lambda, alpha, big_t) = l12_preconditions(phi, order)?;
    let ratio = gamma_ratio(lambda + 1.0, lambda + 1.0 - alpha);
    let i1 = ratio / (lambda + 1.0 - alpha) * big_t.powf(1.0 - alpha);
    let i2 = ratio * ratio / (lambda + 1.0 - 2.0 * alpha) * big_t.powf(1.0 - 2.0 * alpha);
    Ok((i1, i2))
}

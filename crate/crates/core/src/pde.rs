//! Explicit solver for the time-fractional conservation laws
//!
//! ```text
//! ^C D^α u + ∂ₓ(u²/2) = 0          (Burgers form)
//! ^C D^α ρ = ∂ₓ(c̃ ρ (ρ_max - ρ))    (market density form)
//! ```
//!
//! Time is discretized with the L1 scheme, space with a first-order Godunov
//! flux. Every node keeps its full history because of the Caputo memory.
//! With u = 2ρ - 1 (ρ_max = c̃ = 1) the two forms are affine images of each
//! other, and so are their discretizations.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fode::{Status, Trajectory, DEFAULT_ESCAPE_THRESHOLD};
use crate::frac_ops::{FractionalOrder, KernelWeights, TimeGrid};
use crate::specfun::gamma_unchecked;

/// Uniform spatial grid on [x_min, x_max] with `cells` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    cells: usize,
}

impl SpatialGrid {
    pub const MIN_CELLS: usize = 8;

    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::InvalidConfig(format!(
                "spatial interval [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if cells < Self::MIN_CELLS {
            return Err(Error::InvalidConfig(format!(
                "at least {} cells required, got {cells}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            cells,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    /// Node positions for a boundary rule: cells + 1 nodes including both
    /// endpoints for Dirichlet data, `cells` nodes (x_max identified with
    /// x_min) for periodic data.
    pub fn nodes(&self, periodic: bool) -> Vec<f64> {
        let count = if periodic { self.cells } else { self.cells + 1 };
        (0..count).map(|i| self.node(i)).collect()
    }

    pub fn sample(&self, periodic: bool, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes(periodic).into_iter().map(f).collect()
    }
}

/// Boundary treatment. Dirichlet data is a callback `(x, t) -> value`
/// evaluated at both endpoints.
#[derive(Clone)]
pub enum BoundaryRule {
    Dirichlet(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    Periodic,
}

impl BoundaryRule {
    pub fn dirichlet(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryRule::Dirichlet(Arc::new(f))
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryRule::Periodic)
    }

    fn eval(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            BoundaryRule::Dirichlet(f) => {
                let v = f(x, t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::BoundaryUnavailable { x, t })
                }
            }
            BoundaryRule::Periodic => unreachable!("periodic rule has no boundary data"),
        }
    }
}

impl fmt::Debug for BoundaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryRule::Dirichlet(_) => f.write_str("Dirichlet(<callback>)"),
            BoundaryRule::Periodic => f.write_str("Periodic"),
        }
    }
}

/// Market parameters. `beta` is the kernel exponent 1 - α; it is 0 in the
/// classical limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketParams {
    pub rho_max: f64,
    pub c_tilde: f64,
    pub beta: f64,
}

impl MarketParams {
    pub fn new(order: FractionalOrder, rho_max: f64, c_tilde: f64) -> Result<Self> {
        if !(rho_max > 0.0 && rho_max.is_finite() && c_tilde > 0.0 && c_tilde.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rho_max and c_tilde must be positive, got {rho_max} and {c_tilde}"
            )));
        }
        Ok(Self {
            rho_max,
            c_tilde,
            beta: 1.0 - order.alpha(),
        })
    }

    /// ρ_max = c̃ = 1.
    pub fn normalized(order: FractionalOrder) -> Self {
        Self {
            rho_max: 1.0,
            c_tilde: 1.0,
            beta: 1.0 - order.alpha(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeConfig {
    pub step: f64,
    pub horizon: f64,
    pub escape_threshold: f64,
}

impl PdeConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            escape_threshold: DEFAULT_ESCAPE_THRESHOLD,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.escape_threshold = threshold;
        self
    }

    fn time_grid(&self) -> Result<TimeGrid> {
        if !(self.escape_threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "escape threshold must be positive, got {}",
                self.escape_threshold
            )));
        }
        TimeGrid::covering(self.step, self.horizon)
    }
}

/// Largest admissible value of Δt^α · max|wave speed| / (Γ(2-α) Δx).
///
/// Below α ≈ 0.415 the L1 weight left on the latest slice, 2 - 2^(1-α), is
/// smaller than 1/2 and becomes the binding constraint.
pub fn cfl_limit(order: FractionalOrder) -> f64 {
    let alpha = order.alpha();
    (2.0 - (1.0 - alpha).exp2()).min(0.5)
}

/// Time step at which the CFL number equals `safety · cfl_limit` for the
/// given maximal wave speed.
pub fn stable_step(order: FractionalOrder, spatial: &SpatialGrid, max_speed: f64, safety: f64) -> f64 {
    let alpha = order.alpha();
    let target = safety * cfl_limit(order) * gamma_unchecked(2.0 - alpha) * spatial.dx() / max_speed;
    target.powf(1.0 / alpha)
}

/// Solution slices, one per retained time node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldHistory {
    spatial: SpatialGrid,
    periodic: bool,
    x: Vec<f64>,
    time: TimeGrid,
    slices: Vec<Vec<f64>>,
    status: Status,
}

impl FieldHistory {
    pub fn spatial(&self) -> &SpatialGrid {
        &self.spatial
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Time grid covering the retained slices only.
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        &self.slices[n]
    }

    pub fn last_slice(&self) -> &[f64] {
        self.slices.last().expect("history holds the initial slice")
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Spatial sum times Δx.
    pub fn mass(&self, n: usize) -> f64 {
        self.slices[n].iter().sum::<f64>() * self.spatial.dx()
    }

    /// Bilinear interpolation; `None` outside the computed region.
    pub fn value_at(&self, x: f64, t: f64) -> Option<f64> {
        let h = self.time.step();
        let tn = t / h;
        if !(tn >= -1e-12 && tn <= self.time.steps() as f64 + 1e-12) {
            return None;
        }
        let (n0, wt) = bracket(tn, self.time.steps());

        let dx = self.spatial.dx();
        let xs = (x - self.spatial.x_min) / dx;
        let last = self.x.len() - 1;
        let (i0, i1, wx) = if self.periodic {
            let cells = self.spatial.cells as f64;
            let xs = xs.rem_euclid(cells);
            let i0 = (xs.floor() as usize).min(last);
            (i0, (i0 + 1) % self.x.len(), xs - i0 as f64)
        } else {
            if !(xs >= -1e-12 && xs <= last as f64 + 1e-12) {
                return None;
            }
            let (i0, w) = bracket(xs, last);
            (i0, (i0 + 1).min(last), w)
        };
        let at = |n: usize| {
            let s = &self.slices[n];
            s[i0] + wx * (s[i1] - s[i0])
        };
        let lo = at(n0);
        if wt == 0.0 {
            return Some(lo);
        }
        Some(lo + wt * (at(n0 + 1) - lo))
    }
}

fn bracket(s: f64, last: usize) -> (usize, f64) {
    let s = s.clamp(0.0, last as f64);
    let i = (s.floor() as usize).min(last);
    if i == last {
        (i, 0.0)
    } else {
        (i, s - i as f64)
    }
}

/// Convex flux with its minimiser and wave speed.
struct Flux {
    g: Box<dyn Fn(f64) -> f64>,
    minimiser: f64,
    speed: Box<dyn Fn(f64) -> f64>,
}

impl Flux {
    fn godunov(&self, left: f64, right: f64) -> f64 {
        if left <= right {
            (self.g)(self.minimiser.clamp(left, right))
        } else {
            (self.g)(left).max((self.g)(right))
        }
    }
}

/// ^C D^α u + ∂ₓ(u²/2) = 0.
pub fn solve_u(
    u0: &[f64],
    order: FractionalOrder,
    spatial: &SpatialGrid,
    bc: &BoundaryRule,
    config: &PdeConfig,
) -> Result<FieldHistory> {
    let flux = Flux {
        g: Box::new(|u| 0.5 * u * u),
        minimiser: 0.0,
        speed: Box::new(f64::abs),
    };
    march(u0, order, spatial, bc, config, &flux)
}

/// ^C D^α ρ = ∂ₓ(c̃ ρ (ρ_max - ρ)), written with the convex flux
/// c̃ (ρ² - ρ_max ρ).
pub fn solve_rho(
    rho0: &[f64],
    order: FractionalOrder,
    spatial: &SpatialGrid,
    bc: &BoundaryRule,
    params: &MarketParams,
    config: &PdeConfig,
) -> Result<FieldHistory> {
    let MarketParams {
        rho_max,
        c_tilde,
        beta,
    } = *params;
    if !(rho_max > 0.0 && c_tilde > 0.0) {
        return Err(Error::InvalidConfig(
            "rho_max and c_tilde must be positive".into(),
        ));
    }
    if (beta - (1.0 - order.alpha())).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "kernel exponent {beta} does not match 1 - alpha = {}",
            1.0 - order.alpha()
        )));
    }
    let flux = Flux {
        g: Box::new(move |r| c_tilde * (r * r - rho_max * r)),
        minimiser: 0.5 * rho_max,
        speed: Box::new(move |r| c_tilde * (2.0 * r - rho_max).abs()),
    };
    march(rho0, order, spatial, bc, config, &flux)
}

fn march(
    initial: &[f64],
    order: FractionalOrder,
    spatial: &SpatialGrid,
    bc: &BoundaryRule,
    config: &PdeConfig,
    flux: &Flux,
) -> Result<FieldHistory> {
    let periodic = bc.is_periodic();
    let x = spatial.nodes(periodic);
    let m = x.len();
    if initial.len() != m {
        return Err(Error::InvalidConfig(format!(
            "initial datum has {} values, grid has {m} nodes",
            initial.len()
        )));
    }
    if !initial.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidConfig("initial datum is not finite".into()));
    }
    let grid = config.time_grid()?;
    let alpha = order.alpha();
    let h = grid.step();
    let dx = spatial.dx();
    let weights = KernelWeights::new(alpha, grid.steps());
    let b = weights.l1();
    let cfl_scale = h.powf(alpha) / (gamma_unchecked(2.0 - alpha) * dx);
    let limit = cfl_limit(order);
    // Γ(2-α) h^α / Δx: inverse of the leading L1 coefficient over Δx
    let mu = gamma_unchecked(2.0 - alpha) * h.powf(alpha) / dx;

    let mut slices: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(grid.steps());
    slices.push(initial.to_vec());
    let mut status = Status::Completed;
    let mut interface = vec![0.0; m + 1];
    let mut next = vec![0.0; m];

    for n in 0..grid.steps() {
        let current = &slices[n];
        if let Some((node, number)) = current
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, cfl_scale * (flux.speed)(v)))
            .find(|&(_, number)| number > limit)
        {
            return Err(Error::Cfl {
                node,
                step: n,
                number,
                limit,
            });
        }

        // interface[i] is the flux between nodes i - 1 and i
        if periodic {
            for i in 0..=m {
                let left = current[(i + m - 1) % m];
                let right = current[i % m];
                interface[i] = flux.godunov(left, right);
            }
        } else {
            for i in 1..m {
                interface[i] = flux.godunov(current[i - 1], current[i]);
            }
        }

        // memory part: u^n - Σ_{k=1}^{n} b_k (u^{n+1-k} - u^{n-k})
        next.copy_from_slice(current);
        for k in 1..=n {
            let bk = b[k];
            for (v, d) in next.iter_mut().zip(&diffs[n - k]) {
                *v -= bk * d;
            }
        }

        let t_next = grid.node(n + 1);
        if periodic {
            for i in 0..m {
                next[i] -= mu * (interface[i + 1] - interface[i]);
            }
        } else {
            for i in 1..m - 1 {
                next[i] -= mu * (interface[i + 1] - interface[i]);
            }
            next[0] = bc.eval(x[0], t_next)?;
            next[m - 1] = bc.eval(x[m - 1], t_next)?;
        }

        if next
            .iter()
            .any(|v| !v.is_finite() || v.abs() > config.escape_threshold)
        {
            status = Status::Escaped { node: n + 1 };
            break;
        }
        diffs.push(next.iter().zip(current).map(|(a, c)| a - c).collect());
        slices.push(next.clone());
    }

    Ok(FieldHistory {
        spatial: *spatial,
        periodic,
        x,
        time: grid.truncated(slices.len() - 1),
        slices,
        status,
    })
}

/// u = 2ρ - 1, slice by slice.
pub fn rho_to_u(rho: &FieldHistory) -> FieldHistory {
    map_field(rho, |r| 2.0 * r - 1.0)
}

/// ρ = (u + 1) / 2, slice by slice.
pub fn u_to_rho(u: &FieldHistory) -> FieldHistory {
    map_field(u, |v| 0.5 * (v + 1.0))
}

fn map_field(field: &FieldHistory, f: impl Fn(f64) -> f64) -> FieldHistory {
    FieldHistory {
        slices: field
            .slices
            .iter()
            .map(|s| s.iter().map(|&v| f(v)).collect())
            .collect(),
        ..field.clone()
    }
}

fn trajectory_value(v: &Trajectory, t: f64, function: &'static str) -> Result<f64> {
    v.value_at(t).ok_or_else(|| Error::Domain {
        function,
        detail: format!(
            "t = {t} outside the computed range [0, {}]",
            v.grid().horizon()
        ),
    })
}

/// u(x, t) = -x v(t).
pub fn separable_solution(v: &Trajectory, x: f64, t: f64) -> Result<f64> {
    Ok(-x * trajectory_value(v, t, "separable_solution")?)
}

/// ρ(x, t) = (1 - x v(t)) / 2.
pub fn market_density(v: &Trajectory, x: f64, t: f64) -> Result<f64> {
    Ok(0.5 * (1.0 - x * trajectory_value(v, t, "market_density")?))
}

/// u^(λ)(x, t) = u(λ^α x, λ t), described lazily over a computed field.
#[derive(Debug, Clone, Copy)]
pub struct RescaledField<'a> {
    field: &'a FieldHistory,
    lambda: f64,
    alpha: f64,
}

pub fn rescale_field(
    field: &FieldHistory,
    order: FractionalOrder,
    lambda: f64,
) -> Result<RescaledField<'_>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain {
            function: "rescale_field",
            detail: format!("lambda must be positive, got {lambda}"),
        });
    }
    Ok(RescaledField {
        field,
        lambda,
        alpha: order.alpha(),
    })
}

impl RescaledField<'_> {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// λ^α
    pub fn space_factor(&self) -> f64 {
        self.lambda.powf(self.alpha)
    }

    /// Point of the original field read by (x, t).
    pub fn source_point(&self, x: f64, t: f64) -> (f64, f64) {
        (self.space_factor() * x, self.lambda * t)
    }

    /// Computed x-range of the rescaled field.
    pub fn x_range(&self) -> (f64, f64) {
        let s = self.field.spatial();
        let k = self.space_factor();
        (s.x_min() / k, s.x_max() / k)
    }

    /// Computed time horizon of the rescaled field.
    pub fn horizon(&self) -> f64 {
        self.field.time().horizon() / self.lambda
    }

    /// Bilinear interpolation of the original field at the source point.
    pub fn value(&self, x: f64, t: f64) -> Option<f64> {
        let (xs, ts) = self.source_point(x, t);
        self.field.value_at(xs, ts)
    }

    pub fn blowup_time(&self, t_star: f64) -> f64 {
        t_star / self.lambda
    }

    /// x ↦ u0(λ^α x).
    pub fn initial_datum<'f>(&self, u0: impl Fn(f64) -> f64 + 'f) -> impl Fn(f64) -> f64 + 'f {
        let k = self.space_factor();
        move |x| u0(k * x)
    }
}

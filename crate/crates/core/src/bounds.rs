//! Closed-form bounds on the blow-up time of ^C D^α v = v², v(0) = 1, and the
//! comparison envelopes that produce them.
//!
//! Two different constants are both called "b" in the derivations. Here the
//! upper bound (1/Γ(2-α))^(1/α) is [`upper_bound_b`] and the constant of the
//! lower-bound construction lives in [`LowerBoundConstants::lbc_b`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_ops::FractionalOrder;
use crate::specfun::{euler_mascheroni, gamma_unchecked, ln_gamma_unchecked};

/// Relative tolerance for the agreement of the two lower-bound expressions.
pub const LOWER_BOUND_IDENTITY_TOL: f64 = 1e-10;

/// Upper bound (1/Γ(2-α))^(1/α) on the blow-up time.
///
/// The classical order returns exactly 1, the limit of the formula as α → 1.
pub fn upper_bound_b(order: FractionalOrder) -> f64 {
    if order.is_classical() {
        return 1.0;
    }
    let alpha = order.alpha();
    (-ln_gamma_unchecked(2.0 - alpha) / alpha).exp()
}

/// Upper bound valid for every α ∈ (0, 1): e^(1-γ), the α → 0 limit of [`upper_bound_b`].
pub fn limit_upper_bound() -> f64 {
    (1.0 - euler_mascheroni()).exp()
}

/// Constants of the lower-bound construction for given α ∈ (0, 1) and δ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundConstants {
    pub alpha: f64,
    pub delta: f64,
    /// sqrt(1 + δ) - 1
    pub kappa: f64,
    /// (1 + κ)² / κ²
    pub eta: f64,
    /// (Γ(2-α) κ η (1 + η))^(-1/α)
    pub d: f64,
    /// Γ(2-α) / d^(1-α)
    pub a: f64,
    /// (1 + κ) a
    pub lbc_b: f64,
    /// 1/b - (1 + η) d, the lower bound on the blow-up time
    #[serde(rename = "T")]
    pub horizon: f64,
    /// κ³ / ((1 + κ)² (1 + 2κ + 2κ²))
    pub c_delta: f64,
}

impl LowerBoundConstants {
    /// z(t) = b/(a(1 - b t)) + 1 - b/a. The formula is defined on [0, 1/b);
    /// only [0, T) carries the comparison with the solution.
    pub fn envelope_z(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.a, self.lbc_b);
        if !(t >= 0.0 && t * b < 1.0) {
            return Err(Error::Domain {
                function: "envelope_z",
                detail: format!("t must lie in [0, {}), got {t}", 1.0 / b),
            });
        }
        let ratio = b / a;
        Ok(ratio / (1.0 - b * t) + 1.0 - ratio)
    }

    /// c_δ^((1-α)/α) / (Γ(2-α)^(1/α) (1 + δ)), the compact form of [`Self::horizon`].
    pub fn horizon_closed_form(&self) -> f64 {
        let alpha = self.alpha;
        let log = (1.0 - alpha) / alpha * self.c_delta.ln()
            - ln_gamma_unchecked(2.0 - alpha) / alpha
            - self.delta.ln_1p();
        log.exp()
    }
}

/// Computes the lower-bound constants and checks that 1/b - (1 + η) d agrees
/// with its compact form to [`LOWER_BOUND_IDENTITY_TOL`].
pub fn lower_bound_constants(order: FractionalOrder, delta: f64) -> Result<LowerBoundConstants> {
    if order.is_classical() {
        return Err(Error::InvalidOrder {
            alpha: 1.0,
            detail: "lower-bound constants need α in (0, 1)",
        });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain {
            function: "lower_bound_constants",
            detail: format!("delta must be > 0, got {delta}"),
        });
    }
    let alpha = order.alpha();
    let g = gamma_unchecked(2.0 - alpha);
    // sqrt(1+δ) - 1 without cancellation for small δ
    let kappa = delta / ((1.0 + delta).sqrt() + 1.0);
    let eta = (1.0 + kappa).powi(2) / (kappa * kappa);
    let d = (g * kappa * eta * (1.0 + eta)).powf(-1.0 / alpha);
    let a = g / d.powf(1.0 - alpha);
    let lbc_b = (1.0 + kappa) * a;
    let horizon = 1.0 / lbc_b - (1.0 + eta) * d;
    let c_delta = kappa.powi(3) / ((1.0 + kappa).powi(2) * (1.0 + 2.0 * kappa + 2.0 * kappa * kappa));

    let constants = LowerBoundConstants {
        alpha,
        delta,
        kappa,
        eta,
        d,
        a,
        lbc_b,
        horizon,
        c_delta,
    };
    let closed = constants.horizon_closed_form();
    let relative = ((horizon - closed) / closed).abs();
    if !(relative <= LOWER_BOUND_IDENTITY_TOL) {
        return Err(Error::Inconsistent {
            what: "lower-bound horizon",
            left: horizon,
            right: closed,
            relative,
        });
    }
    Ok(constants)
}

/// Lower bound on the blow-up time for the given δ > 0.
pub fn lower_bound_t(order: FractionalOrder, delta: f64) -> Result<f64> {
    lower_bound_constants(order, delta).map(|c| c.horizon)
}

/// Subsolution w(t) = b/(b - t) with b = [`upper_bound_b`]; v >= w where both exist.
pub fn envelope_w(order: FractionalOrder, t: f64) -> Result<f64> {
    let b = upper_bound_b(order);
    if !(t >= 0.0 && t < b) {
        return Err(Error::Domain {
            function: "envelope_w",
            detail: format!("t must lie in [0, {b}), got {t}"),
        });
    }
    Ok(b / (b - t))
}

/// Supersolution z(t) = b/(a(1 - b t)) + 1 - b/a built from the
/// lower-bound constants for (α, δ); v <= z on [0, T).
pub fn envelope_z(order: FractionalOrder, delta: f64, t: f64) -> Result<f64> {
    lower_bound_constants(order, delta)?.envelope_z(t)
}

/// Whether [`upper_bound_b`] is strictly decreasing on a uniform grid of
/// `samples` orders spanning [0.01, 0.99].
pub fn monotonicity_scan_b(samples: usize) -> Result<bool> {
    if samples < 10 {
        return Err(Error::InvalidConfig(format!(
            "monotonicity scan needs at least 10 samples, got {samples}"
        )));
    }
    let h = 0.98 / (samples - 1) as f64;
    let values: Vec<f64> = (0..samples)
        .map(|i| {
            let alpha = if i + 1 == samples { 0.99 } else { 0.01 + i as f64 * h };
            upper_bound_b(FractionalOrder::new(alpha).expect("grid lies in (0, 1)"))
        })
        .collect();
    Ok(values.windows(2).all(|w| w[1] < w[0]))
}

//! Closed-form solutions of ^C D^α u = Σ_k δ(t - p_k), u(0) = 0.
//!
//! For α = 1 the solution counts the impulses already passed. For α < 1 it
//! is (1/Γ(α)) Σ_{p_k < t} (t - p_k)^(α-1), which is singular just right of
//! every impulse and decays back toward zero afterwards.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frac_ops::{FractionalOrder, TimeGrid};
use crate::specfun::gamma_unchecked;

/// Impulse times 0 < p_1 < ... < p_N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseTrain {
    times: Vec<f64>,
}

impl ImpulseTrain {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidConfig("impulse train is empty".into()));
        }
        if !times.iter().all(|&p| p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidConfig(
                "impulse times must be finite and positive".into(),
            ));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "impulse times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times })
    }

    /// p_k = k for k = 1..=4.
    pub fn figure_default() -> Self {
        Self {
            times: vec![1.0, 2.0, 3.0, 4.0],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Orders of the default dataset: 1/10, 1/4, 1/2, 3/4, 7/8, 9/10, 99/100 and 1.
pub const FIGURE_ALPHAS: [f64; 8] = [0.1, 0.25, 0.5, 0.75, 0.875, 0.9, 0.99, 1.0];

/// Number of impulses strictly before t.
pub fn step_solution(train: &ImpulseTrain, t: f64) -> usize {
    train.times.iter().take_while(|&&p| p < t).count()
}

/// (1/Γ(α)) Σ_{p_k < t} (t - p_k)^(α-1) for α ∈ (0, 1).
pub fn fractional_impulse_solution(
    train: &ImpulseTrain,
    order: FractionalOrder,
    t: f64,
) -> Result<f64> {
    if order.is_classical() {
        return Err(Error::InvalidOrder {
            alpha: 1.0,
            detail: "use step_solution for the classical order",
        });
    }
    if !(t >= 0.0) {
        return Err(Error::Domain {
            function: "fractional_impulse_solution",
            detail: format!("t must be >= 0, got {t}"),
        });
    }
    if train.times.contains(&t) {
        return Err(Error::Divergence { t });
    }
    let alpha = order.alpha();
    let sum: f64 = train
        .times
        .iter()
        .take_while(|&&p| p < t)
        .map(|&p| (t - p).powf(alpha - 1.0))
        .sum();
    Ok(sum / gamma_unchecked(alpha))
}

/// Tabulated impulse solutions, one column per order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseTable {
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    /// `columns[i][j]` is the solution for `alphas[i]` at `times[j]`.
    pub columns: Vec<Vec<f64>>,
}

impl ImpulseTable {
    pub fn header(&self) -> Vec<String> {
        std::iter::once("t".to_string())
            .chain(self.alphas.iter().map(|a| format!("alpha={a}")))
            .collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.times.iter().enumerate().map(|(j, &t)| {
            std::iter::once(t)
                .chain(self.columns.iter().map(|c| c[j]))
                .collect()
        })
    }
}

fn hits_impulse(train: &ImpulseTrain, t: f64, tol: f64) -> bool {
    train.times.iter().any(|&p| (t - p).abs() <= tol)
}

/// Evaluates every order on the grid nodes. When a node coincides with an
/// impulse time, all nodes are shifted right by half a step.
pub fn figure1_dataset(
    train: &ImpulseTrain,
    alphas: &[FractionalOrder],
    grid: &TimeGrid,
) -> Result<ImpulseTable> {
    let tol = 1e-9 * grid.step();
    let mut times: Vec<f64> = grid.nodes().collect();
    if times.iter().any(|&t| hits_impulse(train, t, tol)) {
        let half = 0.5 * grid.step();
        times = grid.nodes().map(|t| t + half).collect();
        if let Some(&t) = times.iter().find(|&&t| hits_impulse(train, t, tol)) {
            return Err(Error::Divergence { t });
        }
    }
    let columns = alphas
        .iter()
        .map(|&order| {
            times
                .iter()
                .map(|&t| {
                    if order.is_classical() {
                        Ok(step_solution(train, t) as f64)
                    } else {
                        fractional_impulse_solution(train, order, t)
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImpulseTable {
        alphas: alphas.iter().map(|o| o.alpha()).collect(),
        times,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn train_validation() {
        assert!(ImpulseTrain::new(vec![]).is_err());
        assert!(ImpulseTrain::new(vec![0.0, 1.0]).is_err());
        assert!(ImpulseTrain::new(vec![1.0, 1.0]).is_err());
        assert!(ImpulseTrain::new(vec![2.0, 1.0]).is_err());
        assert!(ImpulseTrain::new(vec![0.5, 1.0, 7.0]).is_ok());
    }

    #[test]
    fn step_counts() {
        let train = ImpulseTrain::figure_default();
        assert_eq!(step_solution(&train, 2.5), 2);
        assert_eq!(step_solution(&train, 0.0), 0);
        assert_eq!(step_solution(&train, 1.0), 0);
        assert_eq!(step_solution(&train, 1.0 + 1e-12), 1);
        assert_eq!(step_solution(&train, 10.0), 4);
    }

    #[test]
    fn fractional_values() {
        let single = ImpulseTrain::new(vec![1.0]).unwrap();
        let v = fractional_impulse_solution(&single, order(0.5), 2.0).unwrap();
        assert!((v - 0.564_189_583_547_756_3).abs() < 1e-15);
        assert_eq!(fractional_impulse_solution(&single, order(0.5), 0.5).unwrap(), 0.0);
        assert_eq!(
            fractional_impulse_solution(&single, order(0.5), 1.0),
            Err(Error::Divergence { t: 1.0 })
        );
        assert!(fractional_impulse_solution(&single, FractionalOrder::CLASSICAL, 2.0).is_err());

        let train = ImpulseTrain::figure_default();
        let v = fractional_impulse_solution(&train, order(0.99), 2.5).unwrap();
        assert!((v - 2.0).abs() < 0.1, "{v}");
    }

    #[test]
    fn superposition() {
        let train = ImpulseTrain::new(vec![0.3, 1.1, 2.7]).unwrap();
        for a in [0.2, 0.6] {
            for t in [0.5, 1.5, 3.0, 9.0] {
                let total = fractional_impulse_solution(&train, order(a), t).unwrap();
                let parts: f64 = train
                    .times()
                    .iter()
                    .map(|&p| {
                        let one = ImpulseTrain::new(vec![p]).unwrap();
                        fractional_impulse_solution(&one, order(a), t).unwrap()
                    })
                    .sum();
                assert!((total - parts).abs() <= 1e-14 * total.abs().max(1.0));
            }
        }
    }

    #[test]
    fn right_divergence() {
        let train = ImpulseTrain::figure_default();
        for a in [0.1, 0.25, 0.5] {
            for &p in train.times() {
                let v = fractional_impulse_solution(&train, order(a), p + 1e-8).unwrap();
                assert!(v > 1e3);
            }
        }
    }

    #[test]
    fn classical_limit_is_monotone() {
        let train = ImpulseTrain::figure_default();
        for t in [0.5, 1.5, 2.5, 3.3, 4.5, 7.0] {
            let step = step_solution(&train, t) as f64;
            let errs: Vec<f64> = [0.9, 0.99, 0.999]
                .iter()
                .map(|&a| (fractional_impulse_solution(&train, order(a), t).unwrap() - step).abs())
                .collect();
            assert!(errs.windows(2).all(|w| w[1] <= w[0]), "t={t}: {errs:?}");
        }
    }

    #[test]
    fn dataset_shape() {
        let train = ImpulseTrain::figure_default();
        let alphas: Vec<FractionalOrder> = FIGURE_ALPHAS.iter().map(|&a| order(a)).collect();
        let grid = TimeGrid::new(0.01, 800).unwrap();
        let table = figure1_dataset(&train, &alphas, &grid).unwrap();
        assert_eq!(table.columns.len(), 8);
        assert_eq!(table.header().len(), 9);
        // integer multiples of the step hit the impulses, so nodes are shifted
        assert!((table.times[0] - 0.005).abs() < 1e-15);
        let classical = &table.columns[7];
        assert!(classical.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*classical.last().unwrap(), 4.0);
        assert!(classical.iter().all(|v| v.fract() == 0.0));
    }

    #[test]
    fn long_time_decay() {
        let train = ImpulseTrain::figure_default();
        for &a in &FIGURE_ALPHAS[..7] {
            let late = fractional_impulse_solution(&train, order(a), 50.0).unwrap();
            let early = fractional_impulse_solution(&train, order(a), 4.5).unwrap();
            assert!(late < early);
        }
    }
}

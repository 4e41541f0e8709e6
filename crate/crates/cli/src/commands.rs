use std::fmt;
use std::sync::Arc;

use caputo_burgers::bounds::{
    limit_upper_bound, lower_bound_constants, upper_bound_b, LowerBoundConstants,
};
use caputo_burgers::fode::{
    estimate_blowup, solve, solve_capped, BlowupConfig, BlowupEstimate, Nonlinearity,
    SolverConfig, Status,
};
use caputo_burgers::frac_ops::{caputo_left, classical_derivative};
use caputo_burgers::impulse::{figure1_dataset, ImpulseTrain};
use caputo_burgers::pde::{
    solve_rho, solve_u, BoundaryRule, MarketParams, PdeConfig, SpatialGrid,
};
use caputo_burgers::{Error, SampledFunction, TimeGrid};
use serde::Serialize;

use crate::args::{
    BlowupArgs, Boundary, BoundsArgs, CaputoArgs, Command, Form, ImpulseArgs, Initial, PdeArgs,
    SolveArgs,
};
use crate::format;
use crate::manifest::GridDescription;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    NoBlowup(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::NoBlowup(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::NoBlowup(m) | CliError::Io(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain { .. }
            | Error::InvalidOrder { .. }
            | Error::NonUniformGrid { .. }
            | Error::InvalidConfig(_) => CliError::Usage(msg),
            Error::Cfl { .. }
            | Error::Divergence { .. }
            | Error::Inconsistent { .. }
            | Error::BoundaryUnavailable { .. } => CliError::Numerical(msg),
            Error::NoBlowup { .. } => CliError::NoBlowup(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Data produced by a command plus what goes into its manifest.
pub struct Output {
    pub data: Vec<u8>,
    pub grids: Vec<GridDescription>,
    pub status: Option<String>,
}

fn json(value: &impl Serialize) -> CliResult<Vec<u8>> {
    let mut data = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    data.push(b'\n');
    Ok(data)
}

fn status_text(status: Status) -> String {
    match status {
        Status::Completed => "completed".to_string(),
        Status::Escaped { node } => format!("escaped at node {node}"),
    }
}

pub fn execute(cmd: &Command) -> CliResult<Output> {
    match cmd {
        Command::Bounds(a) => bounds(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Blowup(a) => blowup(a),
        Command::Impulse(a) => impulse(a),
        Command::Caputo(a) => caputo(a),
        Command::Pde(a) => pde(a),
    }
}

#[derive(Serialize)]
struct LowerBoundReport {
    delta: f64,
    #[serde(rename = "lower_bound_T")]
    lower_bound_t: f64,
    constants: LowerBoundConstants,
}

#[derive(Serialize)]
struct BoundsReport {
    alpha: f64,
    upper_bound_b: f64,
    limit_upper_bound: f64,
    lower_bound: Option<LowerBoundReport>,
}

fn bounds(a: &BoundsArgs) -> CliResult<Output> {
    let lower_bound = a
        .delta
        .map(|delta| -> CliResult<_> {
            let constants = lower_bound_constants(a.alpha, delta)?;
            Ok(LowerBoundReport {
                delta,
                lower_bound_t: constants.horizon,
                constants,
            })
        })
        .transpose()?;
    let report = BoundsReport {
        alpha: a.alpha.alpha(),
        upper_bound_b: upper_bound_b(a.alpha),
        limit_upper_bound: limit_upper_bound(),
        lower_bound,
    };
    Ok(Output {
        data: json(&report)?,
        grids: vec![],
        status: None,
    })
}

fn solve_cmd(a: &SolveArgs) -> CliResult<Output> {
    let cfg = SolverConfig::new(a.h, a.t_max)
        .with_threshold(a.threshold)
        .with_sweeps(a.sweeps);
    let traj = match a.cap {
        Some(cap) => solve_capped(cap, a.v0, a.alpha, &cfg)?,
        None => solve(&Nonlinearity::Square, a.v0, a.alpha, &cfg)?,
    };
    let rows = traj
        .grid()
        .nodes()
        .zip(traj.values())
        .map(|(t, &v)| [t, v]);
    Ok(Output {
        data: format::csv(&["t".into(), "v".into()], rows)?,
        grids: vec![GridDescription::time("t", traj.grid())],
        status: Some(status_text(traj.status())),
    })
}

#[derive(Serialize)]
struct Sandwich {
    delta: f64,
    /// Absent for the classical order, where the construction does not apply.
    #[serde(rename = "lower_bound_T")]
    lower_bound_t: Option<f64>,
    upper_bound_b: f64,
}

#[derive(Serialize)]
struct BlowupReport {
    alpha: f64,
    estimate: BlowupEstimate,
    sandwich: Sandwich,
    bracket_within_sandwich: Option<bool>,
}

fn blowup(a: &BlowupArgs) -> CliResult<Output> {
    let cfg = BlowupConfig {
        base_step: a.base_step,
        halvings: a.refinements,
        base_threshold: a.threshold,
        horizon: a.horizon,
        ..BlowupConfig::default()
    };
    let upper = upper_bound_b(a.alpha);
    let lower = if a.alpha.is_classical() {
        None
    } else {
        Some(lower_bound_constants(a.alpha, a.delta)?.horizon)
    };
    let estimate = estimate_blowup(a.alpha, &cfg)?;
    let within = lower.map(|lo| lo <= estimate.t_lo && estimate.t_hi <= upper);
    let grids = estimate
        .refinement_trace
        .iter()
        .filter(|r| r.threshold == a.threshold)
        .map(|r| {
            let grid = TimeGrid::covering(r.step, cfg.horizon_for(a.alpha))?;
            Ok(GridDescription::time("t", &grid))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = BlowupReport {
        alpha: a.alpha.alpha(),
        estimate,
        sandwich: Sandwich {
            delta: a.delta,
            lower_bound_t: lower,
            upper_bound_b: upper,
        },
        bracket_within_sandwich: within,
    };
    Ok(Output {
        data: json(&report)?,
        grids,
        status: None,
    })
}

fn impulse(a: &ImpulseArgs) -> CliResult<Output> {
    let train = ImpulseTrain::new(a.times.clone())?;
    let grid = TimeGrid::covering(a.h, a.t_max)?;
    let table = figure1_dataset(&train, &a.alphas, &grid)?;
    Ok(Output {
        data: format::csv(&table.header(), table.rows())?,
        grids: vec![GridDescription::time("t", &grid)],
        status: None,
    })
}

fn caputo(a: &CaputoArgs) -> CliResult<Output> {
    let mut reader = csv::Reader::from_path(&a.input)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Usage(format!("input needs a column named {name:?}")))
    };
    let (ti, fi) = (col("t")?, col("f")?);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(e.to_string()))?;
        let parse = |i: usize| -> CliResult<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Usage(format!("row {}: not a number", line + 2)))
        };
        times.push(parse(ti)?);
        values.push(parse(fi)?);
    }
    let f = SampledFunction::from_samples(&times, values)?;
    let d = if a.alpha.is_classical() {
        classical_derivative(&f)
    } else {
        caputo_left(&f, a.alpha)?
    };
    let rows = d.grid().nodes().zip(d.values()).map(|(t, &v)| [t, v]);
    Ok(Output {
        data: format::csv(&["t".into(), "caputo".into()], rows)?,
        grids: vec![GridDescription::time("t", d.grid())],
        status: None,
    })
}

fn pde(a: &PdeArgs) -> CliResult<Output> {
    let grid = SpatialGrid::new(a.x_min, a.x_max, a.cells)?;
    let periodic = a.bc == Boundary::Periodic;
    let to_form = move |u: f64| match a.form {
        Form::U => u,
        Form::Rho => 0.5 * (u + 1.0),
    };

    let initial: Vec<f64> = match a.initial {
        Initial::MinusX | Initial::MarketCritical => grid.sample(periodic, |x| to_form(-x)),
        Initial::Constant(c) => grid.sample(periodic, |_| c),
    };

    let bc = match (a.bc, a.initial) {
        (Boundary::Periodic, _) => BoundaryRule::Periodic,
        (Boundary::Dirichlet, Initial::Constant(c)) => BoundaryRule::dirichlet(move |_, _| c),
        (Boundary::Dirichlet, _) => {
            // exact separable data -x v(t) from a finer scalar solve
            let v = solve(
                &Nonlinearity::Square,
                1.0,
                a.alpha,
                &SolverConfig::new(a.h / 4.0, a.t_max).with_threshold(a.threshold),
            )?;
            let v = Arc::new(v);
            let form = a.form;
            BoundaryRule::dirichlet(move |x, t| {
                let u = -x * v.value_at(t).unwrap_or(f64::NAN);
                match form {
                    Form::U => u,
                    Form::Rho => 0.5 * (u + 1.0),
                }
            })
        }
    };

    let cfg = PdeConfig::new(a.h, a.t_max).with_threshold(a.threshold);
    let field = match a.form {
        Form::U => solve_u(&initial, a.alpha, &grid, &bc, &cfg)?,
        Form::Rho => solve_rho(
            &initial,
            a.alpha,
            &grid,
            &bc,
            &MarketParams::normalized(a.alpha),
            &cfg,
        )?,
    };
    let time = *field.time();
    let rows = field.slices().iter().enumerate().flat_map(|(n, slice)| {
        let t = time.node(n);
        field.x().iter().zip(slice).map(move |(&x, &v)| [t, x, v])
    });
    Ok(Output {
        data: format::csv(&["t".into(), "x".into(), "value".into()], rows)?,
        grids: vec![
            GridDescription::time("t", &time),
            GridDescription::space(&grid, field.x().len()),
        ],
        status: Some(status_text(field.status())),
    })
}

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use caputo_burgers::impulse::FIGURE_ALPHAS;
use caputo_burgers::FractionalOrder;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "caputo-burgers", version, about = "Blow-up numerics for the time-fractional Burgers equation")]
pub struct Cli {
    /// Write the data here and the run manifest to <OUT>.manifest.json.
    /// Without it data goes to stdout and the manifest to stderr.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Invocation,
}

#[derive(Debug, Subcommand)]
pub enum Invocation {
    #[command(flatten)]
    Run(Command),
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

/// Every data-producing subcommand. Stored verbatim in run manifests.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Upper bound b(α), its α → 0 limit and, with --delta, the lower-bound constants.
    Bounds(BoundsArgs),
    /// Solve ^C D^α v = v² (or the capped square) and print t,v.
    Solve(SolveArgs),
    /// Bracket the blow-up time and compare it with the theoretical bounds.
    Blowup(BlowupArgs),
    /// Closed-form solutions of the impulse-forced linear problem.
    Impulse(ImpulseArgs),
    /// Caputo derivative of a sampled function read from CSV (columns t,f).
    Caputo(CaputoArgs),
    /// Solve the Burgers or market-density form on a space-time grid.
    Pde(PdeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::Solve(_) => "solve",
            Command::Blowup(_) => "blowup",
            Command::Impulse(_) => "impulse",
            Command::Caputo(_) => "caputo",
            Command::Pde(_) => "pde",
        }
    }
}

fn parse_order(s: &str) -> Result<FractionalOrder, String> {
    let alpha: f64 = s.parse().map_err(|e| format!("{e}"))?;
    FractionalOrder::new(alpha).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub t_max: f64,
    /// Use min(v², M²) instead of v².
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub v0: f64,
    #[arg(long, default_value_t = 1e6)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1)]
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BlowupArgs {
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,
    /// Smallest escape threshold of the ladder.
    #[arg(long, default_value_t = 1e6)]
    pub threshold: f64,
    /// Number of step halvings.
    #[arg(long, default_value_t = 3)]
    pub refinements: usize,
    #[arg(long, default_value_t = 8e-4)]
    pub base_step: f64,
    /// Integration horizon; defaults to a margin past the upper bound.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// δ used for the lower end of the reported sandwich.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ImpulseArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_order,
          default_values_t = FIGURE_ALPHAS.map(|a| FractionalOrder::new(a).unwrap()))]
    pub alphas: Vec<FractionalOrder>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0])]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[arg(long, default_value_t = 6.0)]
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CaputoArgs {
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    U,
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Initial datum. `minus-x` is u0 = -x, `market-critical` is ρ0 = (1 - x)/2
/// (the same state in the other variable), `constant:<c>` is the constant c
/// in the variable of the chosen form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Initial {
    MinusX,
    MarketCritical,
    Constant(f64),
}

impl FromStr for Initial {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minus-x" => Ok(Initial::MinusX),
            "market-critical" => Ok(Initial::MarketCritical),
            _ => match s.strip_prefix("constant:") {
                Some(c) => c
                    .parse::<f64>()
                    .ok()
                    .filter(|c| c.is_finite())
                    .map(Initial::Constant)
                    .ok_or_else(|| format!("bad constant in {s:?}")),
                None => Err(format!(
                    "unknown initial datum {s:?}; expected minus-x, market-critical or constant:<c>"
                )),
            },
        }
    }
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initial::MinusX => f.write_str("minus-x"),
            Initial::MarketCritical => f.write_str("market-critical"),
            Initial::Constant(c) => write!(f, "constant:{c:?}"),
        }
    }
}

impl TryFrom<String> for Initial {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Initial> for String {
    fn from(i: Initial) -> String {
        i.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PdeArgs {
    #[arg(long, value_enum)]
    pub form: Form,
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,
    #[arg(long)]
    pub cells: usize,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, value_enum)]
    pub bc: Boundary,
    #[arg(long, default_value = "minus-x")]
    pub initial: Initial,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1e6)]
    pub threshold: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn initial_round_trip() {
        for s in ["minus-x", "market-critical", "constant:0.5", "constant:-2.0"] {
            let i: Initial = s.parse().unwrap();
            assert_eq!(i.to_string().parse::<Initial>().unwrap(), i);
        }
        assert!("constant:x".parse::<Initial>().is_err());
        assert!("plus-x".parse::<Initial>().is_err());
    }

    #[test]
    fn impulse_defaults() {
        let cli = Cli::try_parse_from(["caputo-burgers", "impulse"]).unwrap();
        let Invocation::Run(Command::Impulse(args)) = cli.command else {
            panic!()
        };
        assert_eq!(args.alphas.len(), 8);
        assert_eq!(args.times, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn commands_round_trip_through_json() {
        let cli = Cli::try_parse_from([
            "caputo-burgers", "pde", "--form", "rho", "--alpha", "0.3", "--cells", "16", "--h", "1e-7",
            "--t-max", "1e-5", "--bc", "periodic", "--initial", "constant:0.25", "--x-min", "-2",
        ])
        .unwrap();
        let Invocation::Run(cmd) = cli.command else {
            panic!()
        };
        let json = serde_json::to_string(&cmd).unwrap();
        let back: Command = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cmd);
        assert!(json.contains("\"subcommand\":\"pde\""));
    }

    #[test]
    fn rejects_bad_order() {
        assert!(Cli::try_parse_from(["caputo-burgers", "bounds", "--alpha", "1.5"]).is_err());
        assert!(Cli::try_parse_from(["caputo-burgers", "bounds", "--alpha", "0"]).is_err());
    }
}

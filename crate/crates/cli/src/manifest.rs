use std::path::{Path, PathBuf};

use caputo_burgers::frac_ops::TimeGrid;
use caputo_burgers::pde::SpatialGrid;
use serde::{Deserialize, Serialize};

use crate::args::Command;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridDescription {
    Time {
        name: String,
        step: f64,
        steps: usize,
        horizon: f64,
    },
    Space {
        x_min: f64,
        x_max: f64,
        cells: usize,
        nodes: usize,
    },
}

impl GridDescription {
    pub fn time(name: &str, grid: &TimeGrid) -> Self {
        GridDescription::Time {
            name: name.to_string(),
            step: grid.step(),
            steps: grid.steps(),
            horizon: grid.horizon(),
        }
    }

    pub fn space(grid: &SpatialGrid, nodes: usize) -> Self {
        GridDescription::Space {
            x_min: grid.x_min(),
            x_max: grid.x_max(),
            cells: grid.cells(),
            nodes,
        }
    }
}

/// Everything needed to reproduce a run. `params` alone determines the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Command,
    pub version: String,
    pub grids: Vec<GridDescription>,
    pub outputs: Vec<PathBuf>,
    pub status: Option<String>,
    pub wall_clock_seconds: f64,
    pub argv: Vec<String>,
}

/// `<out>.manifest.json` next to the data file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

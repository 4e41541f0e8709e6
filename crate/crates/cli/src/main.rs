mod args;
mod commands;
mod format;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command, Invocation};
use commands::{execute, CliError, CliResult};
use manifest::{manifest_path, RunManifest};

fn main() {
    std::process::exit(run(std::env::args_os().collect()));
}

fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    let command = match cli.command {
        Invocation::Run(command) => command,
        Invocation::Replay { manifest } => {
            let text = fs::read_to_string(&manifest)
                .map_err(|e| CliError::Usage(format!("{}: {e}", manifest.display())))?;
            let recorded: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", manifest.display())))?;
            recorded.params
        }
    };
    run_command(&command, cli.out, argv)
}

fn run_command(command: &Command, out: Option<std::path::PathBuf>, argv: Vec<String>) -> CliResult<()> {
    let start = Instant::now();
    let output = execute(command)?;
    let elapsed = start.elapsed().as_secs_f64();

    let manifest = RunManifest {
        subcommand: command.name().to_string(),
        params: command.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        grids: output.grids,
        outputs: out.iter().cloned().collect(),
        status: output.status,
        wall_clock_seconds: elapsed,
        argv,
    };
    let mut manifest_json =
        serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    manifest_json.push(b'\n');

    match out {
        Some(path) => {
            fs::write(&path, &output.data)?;
            fs::write(manifest_path(&path), &manifest_json)?;
        }
        None => {
            io::stdout().lock().write_all(&output.data)?;
            io::stderr().lock().write_all(&manifest_json)?;
        }
    }
    Ok(())
}

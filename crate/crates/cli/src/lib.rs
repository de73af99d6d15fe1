//! Command-line front end for the `kscc` clustering library.
//!
//! Exit codes: 0 success, 2 usage (including a kernel that does not fit the
//! data), 3 malformed input data, 4 numerical failure, 5 too few points for
//! the requested flat dimension.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod settings;

use args::{Cli, Command};
pub use error::{CliError, Result};
use settings::Settings;

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let file_settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let settings = file_settings.overlay(Settings { threads: cli.threads, ..Settings::default() });
    if let Some(threads) = settings.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Generate(a) => commands::generate_cmd(a, &settings),
        Command::Cluster(a) => commands::cluster_cmd(a, &settings),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Bench(a) => commands::bench_cmd(a, &settings),
    }
}

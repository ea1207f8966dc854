//! Command implementations behind the `pvol` binary.

pub mod args;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod output;
pub mod phantom;
pub mod select;
pub mod split;
pub mod svg;

pub use error::{CliError, Status, EXIT_ERROR};

use args::Command;

/// Runs one command on a thread pool of `--jobs` workers.
pub fn run(command: &Command) -> Result<Status, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(command.jobs())
        .build()?;
    pool.install(|| match command {
        Command::Estimate(a) => estimate::cmd_estimate(a),
        Command::Evaluate(a) => evaluate::cmd_evaluate(a),
        Command::Split(a) => split::cmd_split(a),
        Command::Phantom(a) => phantom::cmd_phantom(a),
    })
}

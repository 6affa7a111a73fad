//! Command-line driver: scenario files in, CSV/JSON artifacts and oracle
//! reports out, with a fixed exit-code contract.

pub mod error;
pub mod modes;
pub mod oracles;
pub mod output;
pub mod scenario_file;

pub use error::{exit, CliError};
pub use modes::{Mode, ModeOutcome, ModeRegistry, RunContext};

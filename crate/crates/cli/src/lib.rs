//! Scenario I/O, seeded ensembles and the `randspec` command surface.

pub mod commands;
pub mod ensemble;
pub mod error;
pub mod scenario;

pub use commands::{run, Cli, Status};
pub use ensemble::{generate_ensemble, EnsembleKind, EnsembleParams};
pub use error::CliError;
pub use scenario::{load_scenario, save_results, Scenario};

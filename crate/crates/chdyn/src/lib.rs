//! Configuration, scenarios, file formats and subcommands for `chdyn-core`.

pub mod app;
pub mod config;
pub mod error;
pub mod format;
pub mod scenario;
pub mod snapshot;
pub mod table;
pub mod verify;

pub use error::AppError;

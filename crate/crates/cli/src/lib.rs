//! Command-line front end and run store for `hwlab`.

pub mod commands;
pub mod fieldio;
pub mod store;

pub use commands::{run, Cli, Command};
pub use store::RunStore;

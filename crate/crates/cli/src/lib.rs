//! Command line and HTTP front end for value driver tree models.

pub mod cli;
pub mod registry;
pub mod server;

pub use cli::run;
pub use registry::{load_file, LoadError, ModelRegistry};

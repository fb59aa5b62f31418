//! Command-line front end and HTTP service over the shared experiment store.

pub mod api;
pub mod cli;
pub mod client;
pub mod error;
pub mod ops;
pub mod render;
pub mod service;

pub use error::{CliError, ErrorKind};

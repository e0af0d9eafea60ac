//! IO layer for `socrat-core`: black-box adapters (subprocess, HTTP), file
//! formats, renderers, experiment drivers and the `socrat` command line.

pub mod adapters;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod render;

pub use error::{AppError, Result};

//! File formats, the staged pipeline and the command-line front end on top
//! of `namefly-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod par;
pub mod pipeline;
pub mod report;

pub use error::{AppError, Result};

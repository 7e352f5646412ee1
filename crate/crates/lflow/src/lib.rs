//! File formats, configuration, parallel drivers and the `lflow` command
//! pipeline on top of [`lflow_core`].

pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use lflow_core;

//! Experiment harness for factorized matrix sensing: TOML configs, the
//! preset catalog, CSV traces, summaries and SVG plots.

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod svg;
pub mod toycheck;
pub mod trace_csv;

pub use error::{Error, Result};
pub use lrsense as core;

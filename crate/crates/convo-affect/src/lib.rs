//! File formats, dataset assembly and the command-line front end around
//! `convo-affect-core`.

pub mod ablation;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod container;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod parallel;
pub mod report;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};

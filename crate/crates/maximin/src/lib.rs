//! Experiment drivers, file formats and command-line front end for
//! maximin-secure Shapley allocation. The protocol machinery lives in
//! [`maximin_core`], re-exported as [`core`].

pub use maximin_core as core;

pub mod config;
pub mod csvout;
pub mod error;
pub mod experiments;
pub mod hgfile;

pub use config::ExperimentConfig;
pub use error::CliError;

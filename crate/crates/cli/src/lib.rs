//! Command-line front end: datasets, settings, experiment runs and report
//! files.

pub mod app;
pub mod config;
pub mod dataset;
pub mod report;

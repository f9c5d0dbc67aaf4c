//! Experiment driver: configuration, verification suites, figures and sweeps.

pub mod commands;
pub mod figures;
pub mod output;
pub mod settings;
pub mod svg;
pub mod verify;

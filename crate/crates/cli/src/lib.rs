//! Command-line workbench around `mixcert-core`: configuration, persistence,
//! reproducibility manifests and the eight pipeline commands
//! (simulate, generate, train, sensitivity, certify, dashboard, curves,
//! validate).

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod util;

//! Config-driven experiments on top of `ekch-core`.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod presets;
pub mod report;

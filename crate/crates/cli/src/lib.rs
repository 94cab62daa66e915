//! Command-line driver: configuration, series cache, JSON reports and the
//! expected-value table.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;
pub mod targets;

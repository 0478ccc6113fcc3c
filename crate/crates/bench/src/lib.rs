//! Benchmark harness around the surrogate-uncertainty library: declarative
//! method-by-series grids, calibration scoring, rank aggregation with
//! critical-difference statistics, and deterministic report files.

pub mod config;
pub mod ranks;
pub mod report;
pub mod runner;
pub mod stats;
pub mod svg;
pub mod sweep;
pub mod synth;

//! Surrogate uncertainty estimation for black-box time-series regressors.
//!
//! The crate provides exact Gaussian-process regression with a weighted
//! training loss that pulls the surrogate's posterior mean toward an existing
//! base model (BAMOES), plus the surrounding machinery a benchmark needs:
//! base-model adapters, time-series bootstrap ensembles, calibration metrics,
//! and lag-feature data handling. All numeric code is generic over the
//! floating-point scalar; `f64` aliases for the main types live at the crate
//! root.

pub mod adam;
pub mod base;
pub mod bootstrap;
pub mod calibration;
pub mod data;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod num;
pub mod rng;
pub mod stats;
pub mod surrogate;

pub use num::Scalar;

/// f64 aliases for the commonly used types.
pub type Mat64 = linalg::Mat<f64>;
pub type KernelSpec64 = kernel::KernelSpec<f64>;
pub type TrainSet64 = gp::TrainSet<f64>;
pub type GpPosterior64 = gp::GpPosterior<f64>;
pub type DoeSample64 = gp::DoeSample<f64>;
pub type AdamState64 = adam::AdamState<f64>;
pub type PredictionSet64 = calibration::PredictionSet<f64>;
pub type Series64 = data::Series<f64>;

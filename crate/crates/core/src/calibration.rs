//! PIT-based calibration curve and the four reported quality metrics.
//!
//! Conventions: one-sided PIT `Phi((y - mean) / stddev)`; observed coverage
//! at level `p` is the fraction of PIT values `<= p` on a 99-level grid
//! `0.01..0.99`. The miscalibration area integrates `|coverage(p) - p|`
//! exactly over `[0, 1]` using the piecewise-constant empirical CDF, which
//! the grid trapezoid approximates to within the documented discretization
//! bound.

use thiserror::Error;

use crate::num::{cast, to_f64, Scalar};
use crate::stats::normal_cdf;

/// Stddev floor applied at construction.
pub const STDDEV_FLOOR: f64 = 1e-12;

pub const GRID_LEVELS: usize = 99;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalibrationError {
    #[error("means, stddevs, and truths must share one length")]
    LengthMismatch,
    #[error("prediction set must be non-empty")]
    Empty,
    #[error("non-finite value in prediction set")]
    NonFinite,
    #[error("{bins} bins exceed {m} samples")]
    TooManyBins { bins: usize, m: usize },
}

/// (mean, stddev, truth) triples entering every metric; stddevs are floored
/// at `1e-12` during construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<T> {
    pub means: Vec<T>,
    pub stddevs: Vec<T>,
    pub truths: Vec<T>,
}

impl<T: Scalar> PredictionSet<T> {
    pub fn new(
        means: Vec<T>,
        mut stddevs: Vec<T>,
        truths: Vec<T>,
    ) -> Result<Self, CalibrationError> {
        if means.len() != stddevs.len() || means.len() != truths.len() {
            return Err(CalibrationError::LengthMismatch);
        }
        if means.is_empty() {
            return Err(CalibrationError::Empty);
        }
        let all_finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        if !all_finite(&means) || !all_finite(&stddevs) || !all_finite(&truths) {
            return Err(CalibrationError::NonFinite);
        }
        let floor = cast::<T>(STDDEV_FLOOR);
        for s in &mut stddevs {
            *s = s.max(floor);
        }
        Ok(PredictionSet {
            means,
            stddevs,
            truths,
        })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// The 99 quantile levels `0.01, 0.02, ..., 0.99`.
pub fn quantile_levels() -> Vec<f64> {
    (1..=GRID_LEVELS).map(|i| i as f64 / 100.0).collect()
}

/// Gaussian PIT `Phi((y - mean) / stddev)`, elementwise.
pub fn pit_values<T: Scalar>(preds: &PredictionSet<T>) -> Vec<f64> {
    preds
        .truths
        .iter()
        .zip(&preds.means)
        .zip(&preds.stddevs)
        .map(|((&y, &m), &s)| normal_cdf((to_f64(y) - to_f64(m)) / to_f64(s)))
        .collect()
}

/// Observed coverage `P(PIT <= p)` over the 99-level grid.
pub fn calibration_curve<T: Scalar>(preds: &PredictionSet<T>) -> (Vec<f64>, Vec<f64>) {
    let mut pit = pit_values(preds);
    pit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let levels = quantile_levels();
    let observed = levels.iter().map(|&p| empirical_cdf(&pit, p)).collect();
    (levels, observed)
}

/// Fraction of sorted values `<= p`.
fn empirical_cdf(sorted: &[f64], p: f64) -> f64 {
    let count = sorted.partition_point(|&u| u <= p);
    count as f64 / sorted.len() as f64
}

/// Exact integral of `|coverage(p) - p|` over `[0, 1]`; range `[0, 0.5]`.
pub fn miscalibration_area<T: Scalar>(preds: &PredictionSet<T>) -> f64 {
    let mut pit = pit_values(preds);
    pit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    miscalibration_area_from_sorted_pit(&pit)
}

/// The empirical CDF is constant at `j/m` between consecutive breakpoints,
/// so each segment integrates in closed form.
pub fn miscalibration_area_from_sorted_pit(sorted_pit: &[f64]) -> f64 {
    let m = sorted_pit.len();
    let mut points = Vec::with_capacity(m + 2);
    points.push(0.0);
    points.extend(sorted_pit.iter().map(|u| u.clamp(0.0, 1.0)));
    points.push(1.0);
    let mut area = 0.0;
    for j in 0..=m {
        let a = points[j];
        let b = points[j + 1];
        if b <= a {
            continue;
        }
        let c = j as f64 / m as f64;
        area += if c <= a {
            (b - c) * (b - c) / 2.0 - (a - c) * (a - c) / 2.0
        } else if c >= b {
            (c - a) * (c - a) / 2.0 - (c - b) * (c - b) / 2.0
        } else {
            (c - a) * (c - a) / 2.0 + (b - c) * (b - c) / 2.0
        };
    }
    area
}

/// Root-mean-square gap between observed and expected coverage over the
/// 99-level grid.
pub fn rmsce<T: Scalar>(preds: &PredictionSet<T>) -> f64 {
    let (levels, observed) = calibration_curve(preds);
    let sq: f64 = levels
        .iter()
        .zip(&observed)
        .map(|(&p, &o)| (o - p) * (o - p))
        .sum();
    (sq / levels.len() as f64).sqrt()
}

/// Default ENCE bin count: `min(10, m / 5)`, at least 1.
pub fn default_ence_bins(m: usize) -> usize {
    (m / 5).clamp(1, 10)
}

/// Expected normalized calibration error: sort by stddev (stable) into
/// equal-count bins, then average `|RMV - RMSE| / RMV` with
/// `RMV = sqrt(mean predicted variance)` and `RMSE = sqrt(mean squared
/// error)` per bin. Values above 1 are possible; there is no cap.
pub fn ence<T: Scalar>(preds: &PredictionSet<T>, bins: usize) -> Result<f64, CalibrationError> {
    let m = preds.len();
    if bins == 0 || bins > m {
        return Err(CalibrationError::TooManyBins { bins, m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        to_f64(preds.stddevs[a])
            .partial_cmp(&to_f64(preds.stddevs[b]))
            .unwrap()
    });

    let base = m / bins;
    let extra = m % bins;
    let mut start = 0;
    let mut total = 0.0;
    for b in 0..bins {
        let size = base + usize::from(b < extra);
        let idx = &order[start..start + size];
        start += size;
        let mv: f64 = idx
            .iter()
            .map(|&i| to_f64(preds.stddevs[i]).powi(2))
            .sum::<f64>()
            / size as f64;
        let mse: f64 = idx
            .iter()
            .map(|&i| (to_f64(preds.truths[i]) - to_f64(preds.means[i])).powi(2))
            .sum::<f64>()
            / size as f64;
        let rmv = mv.sqrt();
        total += (rmv - mse.sqrt()).abs() / rmv;
    }
    Ok(total / bins as f64)
}

/// Root mean squared error of the point predictions.
pub fn rmse<T: Scalar>(preds: &PredictionSet<T>) -> f64 {
    let sq: f64 = preds
        .truths
        .iter()
        .zip(&preds.means)
        .map(|(&y, &m)| (to_f64(y) - to_f64(m)).powi(2))
        .sum();
    (sq / preds.len() as f64).sqrt()
}

/// Quantile grid, observed coverage, and the four quality metrics for one
/// method on one series.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub quantile_levels: Vec<f64>,
    pub observed_coverage: Vec<f64>,
    pub miscal_area: f64,
    pub rmsce: f64,
    pub ence: f64,
    pub rmse: f64,
}

impl CalibrationReport {
    pub fn compute<T: Scalar>(
        preds: &PredictionSet<T>,
        ence_bins: usize,
    ) -> Result<Self, CalibrationError> {
        let (quantile_levels, observed_coverage) = calibration_curve(preds);
        Ok(CalibrationReport {
            quantile_levels,
            observed_coverage,
            miscal_area: miscalibration_area(preds),
            rmsce: rmsce(preds),
            ence: ence(preds, ence_bins)?,
            rmse: rmse(preds),
        })
    }
}

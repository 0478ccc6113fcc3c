//! Series ingestion, tail truncation, lag featurization, train/test
//! splitting, and train-statistics standardization.
//!
//! CSV formats (UTF-8, LF, header required):
//!   data file:     `series_id,t,value` with integer `t` strictly increasing
//!                  per series;
//!   metadata file: `series_id,horizon,lag`.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::gp::TrainSet;
use crate::linalg::Mat;
use crate::num::{cast, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("series `{series}`: no metadata row (need horizon and lag)")]
    MissingMetadata { series: String },
    #[error("series `{series}` too short: {len} values, need at least {needed}")]
    TooShort {
        series: String,
        len: usize,
        needed: usize,
    },
    #[error("series must be longer than the lag ({len} <= {lag})")]
    NotEnoughForLags { len: usize, lag: usize },
    #[error("io: {0}")]
    Io(String),
}

/// One univariate series with its forecasting horizon and lag order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T = f64> {
    pub id: String,
    pub values: Vec<T>,
    pub horizon_h: usize,
    pub lag_k: usize,
}

impl<T: Scalar> Series<T> {
    /// Minimum length for a legal train/test split:
    /// `lag + horizon + lag + 1` (train must yield at least one lag row
    /// beyond the `horizon + lag` test tail).
    pub fn min_len(&self) -> usize {
        2 * self.lag_k + self.horizon_h + 1
    }

    /// Enforced at split/benchmark time, not at load time, so short series
    /// can still be loaded and reported as failures.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.values.len() < self.min_len() {
            return Err(DataError::TooShort {
                series: self.id.clone(),
                len: self.values.len(),
                needed: self.min_len(),
            });
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(DataError::Parse {
                line: 0,
                msg: format!("series `{}` contains non-finite values", self.id),
            });
        }
        Ok(())
    }

    /// Tail-truncated copy: keeps the last `max(2 * lag, 200)` values.
    pub fn truncated(&self) -> Series<T> {
        Series {
            id: self.id.clone(),
            values: truncate_tail(&self.values, self.lag_k).to_vec(),
            horizon_h: self.horizon_h,
            lag_k: self.lag_k,
        }
    }
}

/// Keep the last `max(2 * lag, 200)` values; shorter input is unchanged.
pub fn truncate_tail<T>(values: &[T], lag_k: usize) -> &[T] {
    let keep = (2 * lag_k).max(200);
    if values.len() > keep {
        &values[values.len() - keep..]
    } else {
        values
    }
}

/// Lag featurization: row for time `t` has target `y_t` and features
/// `(y_{t-1}, ..., y_{t-k})`, most recent first. Produces `len - k` rows.
pub fn lag_featurize<T: Scalar>(values: &[T], lag_k: usize) -> Result<TrainSet<T>, DataError> {
    assert!(lag_k >= 1, "lag must be at least 1");
    if values.len() <= lag_k {
        return Err(DataError::NotEnoughForLags {
            len: values.len(),
            lag: lag_k,
        });
    }
    let n = values.len() - lag_k;
    let inputs = Mat::from_fn(n, lag_k, |row, j| values[row + lag_k - 1 - j]);
    let targets = values[lag_k..].to_vec();
    TrainSet::new(inputs, targets).map_err(|e| DataError::Io(e.to_string()))
}

/// Split into raw train values and the raw `horizon + lag` test tail.
/// Featurizing the tail alone yields exactly `horizon` one-step-ahead rows
/// whose features are true historical values (teacher forcing).
pub fn split_train_test<T: Scalar>(series: &Series<T>) -> Result<(&[T], &[T]), DataError> {
    series.validate()?;
    let tail = series.horizon_h + series.lag_k;
    let cut = series.values.len() - tail;
    Ok((&series.values[..cut], &series.values[cut..]))
}

/// Affine scaler fit on training data only (population mean/stddev; a zero
/// stddev degrades to scale 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler<T> {
    pub shift: T,
    pub scale: T,
}

impl<T: Scalar> Scaler<T> {
    pub fn fit(train: &[T]) -> Scaler<T> {
        assert!(!train.is_empty(), "cannot fit a scaler on an empty slice");
        let n = cast::<T>(train.len() as f64);
        let mean = train.iter().fold(T::zero(), |a, &v| a + v) / n;
        let var = train
            .iter()
            .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
            / n;
        let sd = var.sqrt();
        Scaler {
            shift: mean,
            scale: if sd > T::zero() { sd } else { T::one() },
        }
    }

    pub fn apply(&self, values: &[T]) -> Vec<T> {
        values
            .iter()
            .map(|&v| (v - self.shift) / self.scale)
            .collect()
    }

    pub fn invert(&self, value: T) -> T {
        value * self.scale + self.shift
    }

    /// Standard deviations transform by the scale alone.
    pub fn invert_stddev(&self, stddev: T) -> T {
        stddev * self.scale
    }
}

/// Z-score the train slice and any dependent slices using train statistics
/// only.
pub fn standardize<T: Scalar>(train: &[T], apply_to: &[&[T]]) -> (Vec<T>, Vec<Vec<T>>, Scaler<T>) {
    let scaler = Scaler::fit(train);
    let train_scaled = scaler.apply(train);
    let rest = apply_to.iter().map(|s| scaler.apply(s)).collect();
    (train_scaled, rest, scaler)
}

/// Load all series from a data CSV plus a metadata CSV. Series order follows
/// first appearance in the data file.
pub fn load_csv<P: AsRef<Path>>(data_path: P, meta_path: P) -> Result<Vec<Series<f64>>, DataError> {
    let meta = load_metadata(meta_path.as_ref())?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(data_path.as_ref())
        .map_err(|e| DataError::Io(e.to_string()))?;
    let (id_col, t_col, value_col) = {
        let headers = reader.headers().map_err(|e| DataError::Io(e.to_string()))?;
        (
            find_column(headers, "series_id")?,
            find_column(headers, "t")?,
            find_column(headers, "value")?,
        )
    };

    let mut order: Vec<String> = Vec::new();
    let mut values: HashMap<String, Vec<f64>> = HashMap::new();
    let mut last_t: HashMap<String, i64> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| DataError::Io(e.to_string()))?;
        let line = record.position().map_or(0, csv::Position::line);
        let id = record
            .get(id_col)
            .ok_or_else(|| parse_err(line, "missing series_id field"))?
            .to_string();
        let t: i64 = record
            .get(t_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(line, "t must be an integer"))?;
        let raw = record
            .get(value_col)
            .ok_or_else(|| parse_err(line, "missing value field"))?;
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_err(line, &format!("value `{raw}` is not numeric")))?;
        if !v.is_finite() {
            return Err(parse_err(line, &format!("value `{raw}` is not finite")));
        }
        match last_t.get(&id) {
            Some(&prev) if t == prev => {
                return Err(parse_err(
                    line,
                    &format!("duplicate timestamp {t} for series `{id}`"),
                ));
            }
            Some(&prev) if t < prev => {
                return Err(parse_err(
                    line,
                    &format!("t must be strictly increasing per series (got {t} after {prev})"),
                ));
            }
            _ => {}
        }
        last_t.insert(id.clone(), t);
        if !values.contains_key(&id) {
            order.push(id.clone());
        }
        values.entry(id).or_default().push(v);
    }

    order
        .into_iter()
        .map(|id| {
            let (horizon_h, lag_k) = *meta
                .get(&id)
                .ok_or_else(|| DataError::MissingMetadata { series: id.clone() })?;
            Ok(Series {
                values: values.remove(&id).unwrap_or_default(),
                id,
                horizon_h,
                lag_k,
            })
        })
        .collect()
}

fn load_metadata(path: &Path) -> Result<HashMap<String, (usize, usize)>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| DataError::Io(e.to_string()))?;
    let (id_col, h_col, k_col) = {
        let headers = reader.headers().map_err(|e| DataError::Io(e.to_string()))?;
        (
            find_column(headers, "series_id")?,
            find_column(headers, "horizon")?,
            find_column(headers, "lag")?,
        )
    };
    let mut meta = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Io(e.to_string()))?;
        let line = record.position().map_or(0, csv::Position::line);
        let id = record
            .get(id_col)
            .ok_or_else(|| parse_err(line, "missing series_id"))?
            .to_string();
        let h: usize = record
            .get(h_col)
            .and_then(|s| s.parse().ok())
            .filter(|&h| h >= 1)
            .ok_or_else(|| parse_err(line, "horizon must be a positive integer"))?;
        let k: usize = record
            .get(k_col)
            .and_then(|s| s.parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| parse_err(line, "lag must be a positive integer"))?;
        if meta.insert(id.clone(), (h, k)).is_some() {
            return Err(parse_err(line, &format!("duplicate metadata for `{id}`")));
        }
    }
    Ok(meta)
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Result<usize, DataError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DataError::MissingColumn(name.to_string()))
}

fn parse_err(line: u64, msg: &str) -> DataError {
    DataError::Parse {
        line,
        msg: msg.to_string(),
    }
}

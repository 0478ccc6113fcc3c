//! Time-series resampling schemes and ensemble-based uncertainty estimation.
//!
//! Index resamplers (naive, stationary block) act on featurized rows;
//! value resamplers (maximum-entropy, AR sieve) rebuild a raw series which is
//! then re-featurized with the same lag.
//!
//! Maximum-entropy bootstrap, normative construction used here:
//! 1. sort the series; let `x_(1) <= ... <= x_(n)`;
//! 2. knots `z_0 = x_(1) - trm`, `z_i = (x_(i) + x_(i+1))/2`,
//!    `z_n = x_(n) + trm`, with `trm` the mean absolute first difference of
//!    the series in time order;
//! 3. draw `n` uniforms; `u` in `[(i-1)/n, i/n)` maps linearly onto
//!    `[z_{i-1}, z_i]` (piecewise-linear quantile function);
//! 4. sort the mapped values and reattach them in the original series' rank
//!    order.
//!
//! A constant series has a degenerate envelope and is returned unchanged.
//!
//! AR-sieve bootstrap (BSAP): fit AR(p) with intercept by least squares for
//! `p = 1..=ar_order_max`, pick `p` by AIC, resample centered residuals
//! i.i.d., and regenerate the series forward from the original first `p`
//! values.

use thiserror::Error;

use crate::base::{BlackBoxModel, ModelError};
use crate::data::{lag_featurize, DataError};
use crate::gp::TrainSet;
use crate::linalg::Mat;
use crate::num::{cast, to_f64, Scalar};
use crate::rng::{DetRng, UniformStream};
use crate::surrogate::{interval, IntervalPrediction};

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("invalid bootstrap config: {0}")]
    InvalidConfig(String),
    #[error("training replica {replica} failed: {source}")]
    MemberTraining { replica: usize, source: ModelError },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapMethod {
    /// I.i.d. row resampling with repetition.
    Naive,
    /// Stationary block bootstrap: geometric block lengths, wrap-around.
    Sbb,
    /// Maximum-entropy bootstrap on the raw series.
    Meb,
    /// AR-sieve bootstrap on the raw series.
    Bsap,
}

impl BootstrapMethod {
    pub fn name(self) -> &'static str {
        match self {
            BootstrapMethod::Naive => "naive",
            BootstrapMethod::Sbb => "sbb",
            BootstrapMethod::Meb => "meb",
            BootstrapMethod::Bsap => "bsap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub method: BootstrapMethod,
    pub replicas_b: usize,
    /// Expected block length (SBB only); must exceed 1.
    pub mean_block_length: f64,
    /// Highest AR order the sieve may select (BSAP only).
    pub ar_order_max: usize,
    pub seed: u64,
}

impl BootstrapConfig {
    /// Defaults: B = 30, block length `n^(1/3)` supplied by the caller,
    /// AR order cap 5.
    pub fn new(method: BootstrapMethod, seed: u64) -> Self {
        BootstrapConfig {
            method,
            replicas_b: 30,
            mean_block_length: 2.0,
            ar_order_max: 5,
            seed,
        }
    }

    /// The usual SBB block-length default for `n` rows.
    pub fn default_block_length(n: usize) -> f64 {
        (n as f64).powf(1.0 / 3.0).max(1.0 + 1e-9)
    }

    pub fn validate(&self) -> Result<(), BootstrapError> {
        if self.replicas_b < 2 {
            return Err(BootstrapError::InvalidConfig(
                "replicas_b must be at least 2".into(),
            ));
        }
        match self.method {
            BootstrapMethod::Sbb
                if self.mean_block_length.is_nan() || self.mean_block_length <= 1.0 =>
            {
                Err(BootstrapError::InvalidConfig(
                    "mean_block_length must exceed 1".into(),
                ))
            }
            BootstrapMethod::Bsap if self.ar_order_max < 1 => Err(BootstrapError::InvalidConfig(
                "ar_order_max must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// `n` i.i.d. uniform indices in `[0, n)`.
pub fn resample_naive(n: usize, stream: &mut dyn UniformStream) -> Vec<usize> {
    assert!(n >= 1);
    (0..n).map(|_| stream.next_index(n)).collect()
}

/// Stationary block bootstrap indices: a block starts uniformly, continues
/// with probability `1 - 1/mean_block_length`, and wraps modulo `n`. Output
/// length is exactly `n`.
pub fn resample_sbb(
    n: usize,
    mean_block_length: f64,
    stream: &mut dyn UniformStream,
) -> Vec<usize> {
    assert!(n >= 2);
    assert!(mean_block_length >= 1.0);
    let p_continue = (1.0 - 1.0 / mean_block_length).clamp(0.0, 1.0);
    let mut out = Vec::with_capacity(n);
    let mut cur = stream.next_index(n);
    out.push(cur);
    for _ in 1..n {
        if stream.next_f64() < p_continue {
            cur = (cur + 1) % n;
        } else {
            cur = stream.next_index(n);
        }
        out.push(cur);
    }
    out
}

/// Maximum-entropy replicate of a raw series (see module docs for the
/// normative quantile map).
pub fn resample_meb<T: Scalar>(series: &[T], stream: &mut dyn UniformStream) -> Vec<T> {
    let n = series.len();
    assert!(n >= 3);
    let values: Vec<f64> = series.iter().map(|&v| to_f64(v)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    if sorted[0] == sorted[n - 1] {
        return series.to_vec();
    }

    let trm = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1) as f64;

    let mut knots = Vec::with_capacity(n + 1);
    knots.push(sorted[0] - trm);
    for i in 0..(n - 1) {
        knots.push((sorted[i] + sorted[i + 1]) / 2.0);
    }
    knots.push(sorted[n - 1] + trm);

    let mut draws: Vec<f64> = (0..n)
        .map(|_| {
            let u = stream.next_f64();
            let scaled = u * n as f64;
            let cell = (scaled as usize).min(n - 1);
            let frac = scaled - cell as f64;
            knots[cell] + frac * (knots[cell + 1] - knots[cell])
        })
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // reattach in the original rank order
    let mut out = vec![T::zero(); n];
    for (rank, &pos) in order.iter().enumerate() {
        out[pos] = cast::<T>(draws[rank]);
    }
    out
}

/// AR-sieve replicate: AIC-selected AR(p) with intercept, centered residual
/// pool, regeneration from the original first `p` values.
pub fn resample_bsap<T: Scalar>(
    series: &[T],
    ar_order_max: usize,
    stream: &mut dyn UniformStream,
) -> Vec<T> {
    let n = series.len();
    assert!(ar_order_max >= 1);
    assert!(n >= 4 * ar_order_max, "series too short for the AR sieve");

    let fit = select_ar_by_aic(series, ar_order_max);
    let (order, coeffs) = match fit {
        Some(f) => f,
        // singular fits all the way down: fall back to AR(1)
        None => match fit_ar(series, 1) {
            Some(f) => f,
            None => return series.to_vec(),
        },
    };

    // residual pool, centered
    let mut residuals = Vec::with_capacity(n - order);
    for t in order..n {
        residuals.push(to_f64(series[t]) - ar_predict(&coeffs, series, t));
    }
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    for r in &mut residuals {
        *r -= mean;
    }

    let mut out: Vec<f64> = series[..order].iter().map(|&v| to_f64(v)).collect();
    for _t in order..n {
        let mut next = coeffs[0];
        for (i, &phi) in coeffs[1..].iter().enumerate() {
            next += phi * out[out.len() - 1 - i];
        }
        next += residuals[stream.next_index(residuals.len())];
        out.push(next);
    }
    out.into_iter().map(cast::<T>).collect()
}

/// (order, [intercept, phi_1..phi_p]) minimizing AIC; `None` if every order
/// fails to fit.
fn select_ar_by_aic<T: Scalar>(series: &[T], ar_order_max: usize) -> Option<(usize, Vec<f64>)> {
    let n = series.len();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for p in 1..=ar_order_max {
        if n < 2 * p + 3 {
            break;
        }
        let Some((_, coeffs)) = fit_ar(series, p) else {
            continue;
        };
        let n_eff = (n - p) as f64;
        let rss: f64 = (p..n)
            .map(|t| {
                let e = to_f64(series[t]) - ar_predict(&coeffs, series, t);
                e * e
            })
            .sum();
        let aic = n_eff * (rss / n_eff).max(1e-300).ln() + 2.0 * (p + 1) as f64;
        if best.as_ref().is_none_or(|(b, _, _)| aic < *b) {
            best = Some((aic, p, coeffs));
        }
    }
    best.map(|(_, p, c)| (p, c))
}

fn fit_ar<T: Scalar>(series: &[T], p: usize) -> Option<(usize, Vec<f64>)> {
    let values: Vec<f64> = series.iter().map(|&v| to_f64(v)).collect();
    let data = lag_featurize(&values, p).ok()?;
    let model = crate::base::OlsModel::fit(&data).ok()?;
    Some((p, model.coefficients))
}

/// One-step AR prediction of `series[t]` from true lags (`coeffs` holds the
/// intercept first, then lag coefficients most-recent-first).
fn ar_predict<T: Scalar>(coeffs: &[f64], series: &[T], t: usize) -> f64 {
    let mut v = coeffs[0];
    for (i, &phi) in coeffs[1..].iter().enumerate() {
        v += phi * to_f64(series[t - 1 - i]);
    }
    v
}

/// Bag of base models fit on resampled data; uncertainty comes from the
/// member spread plus the mean in-sample residual variance (so intervals
/// cover aleatoric noise even when members nearly agree).
pub struct EnsembleUE<T> {
    pub members: Vec<Box<dyn BlackBoxModel<T>>>,
    pub residual_var: T,
}

pub type ModelFactory<T> =
    dyn Fn(&TrainSet<T>) -> Result<Box<dyn BlackBoxModel<T>>, ModelError> + Sync;

/// Fit B members: index methods resample featurized rows; series methods
/// resample the raw series and re-featurize with the same lag.
pub fn ensemble_fit<T: Scalar>(
    factory: &ModelFactory<T>,
    featurized: &TrainSet<T>,
    raw_series: &[T],
    lag_k: usize,
    config: &BootstrapConfig,
) -> Result<EnsembleUE<T>, BootstrapError> {
    config.validate()?;
    let n = featurized.len();
    match config.method {
        BootstrapMethod::Sbb if n < 2 => {
            return Err(BootstrapError::InvalidConfig(
                "sbb needs at least 2 rows".into(),
            ));
        }
        BootstrapMethod::Meb if raw_series.len() < 3 => {
            return Err(BootstrapError::InvalidConfig(
                "meb needs a raw series of length >= 3".into(),
            ));
        }
        BootstrapMethod::Bsap if raw_series.len() < 4 * config.ar_order_max => {
            return Err(BootstrapError::InvalidConfig(format!(
                "bsap needs a raw series of length >= {}",
                4 * config.ar_order_max
            )));
        }
        _ => {}
    }

    let mut members: Vec<Box<dyn BlackBoxModel<T>>> = Vec::with_capacity(config.replicas_b);
    for replica in 0..config.replicas_b {
        let mut stream = DetRng::for_task(
            config.seed,
            &["bootstrap", config.method.name()],
            replica as u64,
        );
        let replica_data = match config.method {
            BootstrapMethod::Naive => featurized.select(&resample_naive(n, &mut stream)),
            BootstrapMethod::Sbb => {
                featurized.select(&resample_sbb(n, config.mean_block_length, &mut stream))
            }
            BootstrapMethod::Meb => {
                let replicate = resample_meb(raw_series, &mut stream);
                lag_featurize(&replicate, lag_k)?
            }
            BootstrapMethod::Bsap => {
                let replicate = resample_bsap(raw_series, config.ar_order_max, &mut stream);
                lag_featurize(&replicate, lag_k)?
            }
        };
        let member = factory(&replica_data)
            .map_err(|source| BootstrapError::MemberTraining { replica, source })?;
        if member.input_dim() != featurized.input_dim() {
            return Err(BootstrapError::InvalidConfig(format!(
                "replica {replica} produced a model of dimension {} (expected {})",
                member.input_dim(),
                featurized.input_dim()
            )));
        }
        members.push(member);
    }

    // mean in-sample squared residual across members, on the original rows
    let b = cast::<T>(config.replicas_b as f64);
    let nf = cast::<T>(n as f64);
    let mut acc = T::zero();
    for (replica, member) in members.iter().enumerate() {
        let preds = member
            .predict(&featurized.inputs)
            .map_err(|source| BootstrapError::MemberTraining { replica, source })?;
        for (p, &y) in preds.iter().zip(&featurized.targets) {
            let e = *p - y;
            acc = acc + e * e;
        }
    }
    Ok(EnsembleUE {
        members,
        residual_var: acc / (b * nf),
    })
}

impl<T: Scalar> EnsembleUE<T> {
    /// Member-average mean; stddev from the unbiased member variance plus
    /// the residual variance; interval per the coverage convention.
    pub fn predict(&self, x: &[T], alpha: f64) -> Result<IntervalPrediction<T>, ModelError> {
        let inputs = Mat::from_rows(&[x.to_vec()]);
        let preds: Vec<T> = self
            .members
            .iter()
            .map(|m| m.predict(&inputs).map(|v| v[0]))
            .collect::<Result<_, _>>()?;
        let b = cast::<T>(preds.len() as f64);
        let mean = preds.iter().fold(T::zero(), |a, &p| a + p) / b;
        let spread = preds
            .iter()
            .fold(T::zero(), |a, &p| a + (p - mean) * (p - mean))
            / (b - T::one());
        let stddev = (spread + self.residual_var).sqrt();
        Ok(interval(mean, stddev, alpha))
    }
}

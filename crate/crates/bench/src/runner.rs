//! Grid execution: every (series, method) cell runs the full pipeline
//! (truncate, split, standardize, fit base, attach the uncertainty
//! estimator, predict the test window, score calibration) and failures are
//! recorded per cell without aborting the grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use bamoes::base::{BlackBoxModel, ExternalModel, ExternalModelEndpoint, OlsModel};
use bamoes::bootstrap::{ensemble_fit, BootstrapConfig};
use bamoes::calibration::{default_ence_bins, CalibrationReport, PredictionSet};
use bamoes::data::{lag_featurize, split_train_test, standardize, Series};
use bamoes::gp::TrainSet;
use bamoes::rng::task_key;
use bamoes::surrogate::{train_bamoes, train_variant, SurrogateConfig, SurrogateVariant};

use crate::config::{substitute_series, BaseModelSpec, MethodSpec, UeSpec};

/// Metric values for one successful cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub rmse: f64,
    pub miscal_area: f64,
    pub rmsce: f64,
    pub ence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    MiscalArea,
    Rmsce,
    Ence,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Rmse,
        Metric::MiscalArea,
        Metric::Rmsce,
        Metric::Ence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::MiscalArea => "miscal_area",
            Metric::Rmsce => "rmsce",
            Metric::Ence => "ence",
        }
    }
}

impl CellMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::MiscalArea => self.miscal_area,
            Metric::Rmsce => self.rmsce,
            Metric::Ence => self.ence,
        }
    }
}

#[derive(Debug, Clone)]
pub enum CellOutcome {
    Ok {
        metrics: CellMetrics,
        report: CalibrationReport,
    },
    Failed {
        reason: String,
    },
}

impl CellOutcome {
    pub fn metrics(&self) -> Option<&CellMetrics> {
        match self {
            CellOutcome::Ok { metrics, .. } => Some(metrics),
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, CellOutcome::Ok { .. })
    }
}

/// One row per (series, method); key order is (dataset order, config order).
#[derive(Debug, Clone)]
pub struct ResultsTable {
    pub series_ids: Vec<String>,
    pub methods: Vec<String>,
    pub cells: BTreeMap<(String, String), CellOutcome>,
}

impl ResultsTable {
    pub fn cell(&self, series: &str, method: &str) -> Option<&CellOutcome> {
        self.cells.get(&(series.to_string(), method.to_string()))
    }

    pub fn failed_count(&self) -> usize {
        self.cells.values().filter(|c| !c.is_ok()).count()
    }
}

/// Run the whole grid. Each cell derives its RNG key from
/// `(seed, series_id, method_name)`, so results are independent of the
/// parallel schedule; `jobs` only sets the thread-pool width.
pub fn run_benchmark(
    series: &[Series<f64>],
    methods: &[MethodSpec],
    seed: u64,
    jobs: usize,
) -> ResultsTable {
    use rayon::prelude::*;

    let cells: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|s| (0..methods.len()).map(move |m| (s, m)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<((String, String), CellOutcome)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(si, mi)| {
                let s = &series[si];
                let m = &methods[mi];
                // a cell may fail but never abort the grid
                let outcome =
                    std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_cell(s, m, seed)))
                        .unwrap_or_else(|payload| {
                            let msg = payload
                                .downcast_ref::<&str>()
                                .map(ToString::to_string)
                                .or_else(|| payload.downcast_ref::<String>().cloned())
                                .unwrap_or_else(|| "unknown panic".to_string());
                            Err(format!("panic: {msg}"))
                        })
                        .unwrap_or_else(|reason| CellOutcome::Failed { reason });
                ((s.id.clone(), m.name.clone()), outcome)
            })
            .collect()
    });

    ResultsTable {
        series_ids: series.iter().map(|s| s.id.clone()).collect(),
        methods: methods.iter().map(|m| m.name.clone()).collect(),
        cells: outcomes.into_iter().collect(),
    }
}

/// The per-cell pipeline; any error is stringified into the cell status.
pub fn run_cell(
    series: &Series<f64>,
    method: &MethodSpec,
    seed: u64,
) -> Result<CellOutcome, String> {
    let s = series.truncated();
    let k = s.lag_k;
    let h = s.horizon_h;

    let (train_raw, test_raw) = split_train_test(&s).map_err(|e| e.to_string())?;
    let (train_std, mut rest, scaler) = standardize(train_raw, &[test_raw]);
    let test_std = rest.pop().expect("one dependent slice");

    let train_set = lag_featurize(&train_std, k).map_err(|e| e.to_string())?;
    let test_set = lag_featurize(&test_std, k).map_err(|e| e.to_string())?;

    let base = build_base(&method.base, &train_set, &s.id).map_err(|e| e.to_string())?;
    let cell_seed = task_key(seed, &[&s.id, &method.name], 0);

    let (means_std, stds_std): (Vec<f64>, Vec<f64>) = match &method.ue {
        UeSpec::Builtin => {
            let means = base.predict(&test_set.inputs).map_err(|e| e.to_string())?;
            let stds = base
                .builtin_stddev(&test_set.inputs)
                .map_err(|e| e.to_string())?;
            (means, stds)
        }
        UeSpec::Bootstrap {
            method: bs_method,
            replicas,
            mean_block_length,
            ar_order_max,
        } => {
            if !method.base.is_trainable() {
                return Err("bootstrap refitting needs a trainable base model".into());
            }
            let cfg = BootstrapConfig {
                method: *bs_method,
                replicas_b: *replicas,
                mean_block_length: mean_block_length
                    .unwrap_or_else(|| BootstrapConfig::default_block_length(train_set.len())),
                ar_order_max: *ar_order_max,
                seed: cell_seed,
            };
            let factory = |data: &TrainSet<f64>| {
                OlsModel::fit(data).map(|m| Box::new(m) as Box<dyn BlackBoxModel<f64>>)
            };
            let ens = ensemble_fit(&factory, &train_set, &train_std, k, &cfg)
                .map_err(|e| e.to_string())?;
            let mut means = Vec::with_capacity(test_set.len());
            let mut stds = Vec::with_capacity(test_set.len());
            for row in test_set.inputs.rows_iter() {
                let p = ens.predict(row, 0.95).map_err(|e| e.to_string())?;
                means.push(p.mean);
                stds.push(p.stddev);
            }
            (means, stds)
        }
        UeSpec::Surrogate {
            variant,
            weight_c,
            doe_count,
            doe_factor,
            epochs,
            learning_rate,
            kernel,
        } => {
            let l = doe_count
                .unwrap_or_else(|| ((train_set.len() as f64) * doe_factor).round() as usize);
            let cfg = SurrogateConfig {
                weight_c: *weight_c,
                doe_count_l: l,
                epochs_m: *epochs,
                learning_rate: *learning_rate,
                seed: cell_seed,
                variant: *variant,
                kernel_family: *kernel,
            };
            let combined = if *variant == SurrogateVariant::Bamoes {
                train_bamoes(Arc::clone(&base), &train_set, &cfg)
            } else {
                train_variant(*variant, Arc::clone(&base), &train_set, &cfg)
            }
            .map_err(|e| e.to_string())?;
            let preds = combined
                .predict_with_uncertainty_batch(&test_set.inputs, 0.95)
                .map_err(|e| e.to_string())?;
            (
                preds.iter().map(|p| p.mean).collect(),
                preds.iter().map(|p| p.stddev).collect(),
            )
        }
    };

    // back to the original scale for scoring
    let means: Vec<f64> = means_std.iter().map(|&m| scaler.invert(m)).collect();
    let stds: Vec<f64> = stds_std.iter().map(|&s| scaler.invert_stddev(s)).collect();
    let truths: Vec<f64> = test_raw[k..].to_vec();

    let preds = PredictionSet::new(means, stds, truths).map_err(|e| e.to_string())?;
    let report =
        CalibrationReport::compute(&preds, default_ence_bins(h)).map_err(|e| e.to_string())?;
    let metrics = CellMetrics {
        rmse: report.rmse,
        miscal_area: report.miscal_area,
        rmsce: report.rmsce,
        ence: report.ence,
    };
    Ok(CellOutcome::Ok { metrics, report })
}

fn build_base(
    spec: &BaseModelSpec,
    train_set: &TrainSet<f64>,
    series_id: &str,
) -> Result<Arc<dyn BlackBoxModel<f64>>, String> {
    match spec {
        BaseModelSpec::Ols => {
            let model = OlsModel::fit(train_set).map_err(|e| e.to_string())?;
            Ok(Arc::new(model))
        }
        BaseModelSpec::Subprocess { command } => Ok(Arc::new(ExternalModel {
            endpoint: ExternalModelEndpoint::subprocess(substitute_series(command, series_id)),
            input_dim: train_set.input_dim(),
        })),
        BaseModelSpec::PredictionFile { path } => Ok(Arc::new(ExternalModel {
            endpoint: ExternalModelEndpoint::prediction_file(substitute_series(path, series_id)),
            input_dim: train_set.input_dim(),
        })),
    }
}

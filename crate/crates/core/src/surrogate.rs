//! Surrogate training: the weighted-loss procedure that pulls a GP posterior
//! mean toward a black-box base model (BAMOES), the four likelihood-only
//! baseline designs, and combined-model inference where the point prediction
//! comes from the base model and the variance from the surrogate.

use std::sync::Arc;

use thiserror::Error;

use crate::adam::AdamState;
use crate::base::{BlackBoxModel, ModelError};
use crate::gp::{bamoes_loss_and_gradient, DoeSample, GpError, GpPosterior, TrainSet};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::linalg::Mat;
use crate::num::{cast, Scalar};
use crate::rng::{DetRng, UniformStream};
use crate::stats::coverage_z;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("base model: {0}")]
    Model(#[from] ModelError),
    #[error("surrogate training diverged at epoch {epoch}: loss became non-finite")]
    Diverged { epoch: usize },
    #[error("invalid surrogate config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateVariant {
    /// Weighted likelihood + base-model matching loss on auxiliary points.
    Bamoes,
    /// Likelihood on the original data (the naive surrogate).
    SurrI,
    /// Likelihood on `(x_i, f(x_i))`.
    SurrII,
    /// Likelihood on `(x_i, f(x_i))` plus `(x'_i, f(x'_i))`.
    SurrIII,
    /// Likelihood on the original data plus `(x'_i, f(x'_i))`.
    SurrIV,
}

impl SurrogateVariant {
    pub fn name(self) -> &'static str {
        match self {
            SurrogateVariant::Bamoes => "bamoes",
            SurrogateVariant::SurrI => "surr1",
            SurrogateVariant::SurrII => "surr2",
            SurrogateVariant::SurrIII => "surr3",
            SurrogateVariant::SurrIV => "surr4",
        }
    }
}

/// Training configuration shared by all surrogate designs.
#[derive(Debug, Clone)]
pub struct SurrogateConfig {
    /// Mismatch weight C in [0, 1].
    pub weight_c: f64,
    /// Number of auxiliary points L.
    pub doe_count_l: usize,
    /// Adam epochs M (0 returns the initialization unchanged).
    pub epochs_m: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub variant: SurrogateVariant,
    pub kernel_family: KernelFamily,
}

impl SurrogateConfig {
    /// Recommended defaults: C = 0.7, M = 300, lr = 0.05, RBF kernel.
    /// `doe_count_l` is data-dependent (L = N is the usual choice), so it is
    /// passed explicitly.
    pub fn bamoes(doe_count_l: usize, seed: u64) -> Self {
        SurrogateConfig {
            weight_c: 0.7,
            doe_count_l,
            epochs_m: 300,
            learning_rate: 0.05,
            seed,
            variant: SurrogateVariant::Bamoes,
            kernel_family: KernelFamily::Rbf,
        }
    }

    pub fn variant(variant: SurrogateVariant, doe_count_l: usize, seed: u64) -> Self {
        SurrogateConfig {
            weight_c: 0.0,
            variant,
            ..Self::bamoes(doe_count_l, seed)
        }
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if !(0.0..=1.0).contains(&self.weight_c) {
            return Err(SurrogateError::InvalidConfig(format!(
                "weight_c = {} outside [0, 1]",
                self.weight_c
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(SurrogateError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.variant == SurrogateVariant::Bamoes && self.weight_c > 0.0 && self.doe_count_l == 0
        {
            return Err(SurrogateError::InvalidConfig(
                "bamoes with weight_c > 0 needs doe_count_l >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Draw `l` points coordinate-wise uniform inside the per-dimension
/// `[min, max]` box of the training inputs.
pub fn sample_doe<T: Scalar>(
    train_inputs: &Mat<T>,
    l: usize,
    stream: &mut dyn UniformStream,
) -> Mat<T> {
    let d = train_inputs.ncols();
    if l == 0 {
        return Mat::zeros(0, d);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in train_inputs.rows_iter() {
        for (j, v) in row.iter().enumerate() {
            let v = crate::num::to_f64(*v);
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    Mat::from_fn(l, d, |_, j| cast::<T>(stream.next_range(lo[j], hi[j])))
}

/// Base-model predictions paired with surrogate variance; the final
/// inference object.
pub struct CombinedModel<T> {
    pub base: Arc<dyn BlackBoxModel<T>>,
    pub surrogate: GpPosterior<T>,
}

/// Point prediction with a central interval per the Gaussian convention:
/// `mean +/- z * stddev` with `z = Phi^{-1}((1 + alpha) / 2)` so the interval
/// covers with probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPrediction<T> {
    pub mean: T,
    pub stddev: T,
    pub lower: T,
    pub upper: T,
}

/// Build the central interval for one (mean, stddev) pair.
pub fn interval<T: Scalar>(mean: T, stddev: T, alpha: f64) -> IntervalPrediction<T> {
    let z = cast::<T>(coverage_z(alpha));
    IntervalPrediction {
        mean,
        stddev,
        lower: mean - z * stddev,
        upper: mean + z * stddev,
    }
}

impl<T: Scalar> CombinedModel<T> {
    pub fn new(
        base: Arc<dyn BlackBoxModel<T>>,
        surrogate: GpPosterior<T>,
    ) -> Result<Self, SurrogateError> {
        if base.input_dim() != surrogate.input_dim() {
            return Err(SurrogateError::InvalidConfig(format!(
                "base model dimension {} != surrogate dimension {}",
                base.input_dim(),
                surrogate.input_dim()
            )));
        }
        Ok(CombinedModel { base, surrogate })
    }

    /// Mean from the base model, stddev from the surrogate's predictive
    /// variance, interval per the coverage convention.
    pub fn predict_with_uncertainty(
        &self,
        x: &[T],
        alpha: f64,
    ) -> Result<IntervalPrediction<T>, SurrogateError> {
        let inputs = Mat::from_rows(&[x.to_vec()]);
        let mean = self.base.predict(&inputs)?[0];
        let stddev = self.surrogate.mean_var(x)?.predictive_var.sqrt();
        Ok(interval(mean, stddev, alpha))
    }

    /// Batch form: one base-model call for all rows (so subprocess-backed
    /// models round-trip once), surrogate variance per row.
    pub fn predict_with_uncertainty_batch(
        &self,
        inputs: &Mat<T>,
        alpha: f64,
    ) -> Result<Vec<IntervalPrediction<T>>, SurrogateError> {
        let means = self.base.predict(inputs)?;
        means
            .into_iter()
            .zip(inputs.rows_iter())
            .map(|(mean, row)| {
                let stddev = self.surrogate.mean_var(row)?.predictive_var.sqrt();
                Ok(interval(mean, stddev, alpha))
            })
            .collect()
    }
}

/// Train the BAMOES surrogate: sample the auxiliary points once, query the
/// base model there, then minimize the weighted loss over all kernel
/// parameters with Adam. Returns the final-epoch parameters.
pub fn train_bamoes<T: Scalar>(
    base: Arc<dyn BlackBoxModel<T>>,
    data: &TrainSet<T>,
    config: &SurrogateConfig,
) -> Result<CombinedModel<T>, SurrogateError> {
    config.validate()?;
    if config.variant != SurrogateVariant::Bamoes {
        return Err(SurrogateError::InvalidConfig(format!(
            "train_bamoes called with variant {}",
            config.variant.name()
        )));
    }
    let mut stream = doe_stream(config);
    let xprime = sample_doe(&data.inputs, config.doe_count_l, &mut stream);
    // With C = 0 the mismatch term is inert, so the base model is not
    // queried at all.
    let extra = if config.weight_c > 0.0 && xprime.nrows() > 0 {
        let preds = base.predict(&xprime)?;
        DoeSample::new(xprime, preds)?
    } else {
        DoeSample::empty(data.input_dim())
    };
    let spec = optimize(data, &extra, config)?;
    let surrogate = GpPosterior::fit_exact(spec, data)?;
    CombinedModel::new(base, surrogate)
}

/// Train one of the likelihood-only baseline designs on its variant-specific
/// dataset (C is implicitly 0).
pub fn train_variant<T: Scalar>(
    variant: SurrogateVariant,
    base: Arc<dyn BlackBoxModel<T>>,
    data: &TrainSet<T>,
    config: &SurrogateConfig,
) -> Result<CombinedModel<T>, SurrogateError> {
    config.validate()?;
    if variant == SurrogateVariant::Bamoes {
        return Err(SurrogateError::InvalidConfig(
            "train_variant does not handle bamoes; call train_bamoes".into(),
        ));
    }
    let train_data = match variant {
        SurrogateVariant::SurrI => data.clone(),
        SurrogateVariant::SurrII => {
            let preds = base.predict(&data.inputs)?;
            TrainSet::new(data.inputs.clone(), preds)?
        }
        SurrogateVariant::SurrIII | SurrogateVariant::SurrIV => {
            let mut stream = doe_stream(config);
            let xprime = sample_doe(&data.inputs, config.doe_count_l, &mut stream);
            let augment = if xprime.nrows() > 0 {
                let preds = base.predict(&xprime)?;
                TrainSet::new(xprime, preds)?
            } else {
                TrainSet {
                    inputs: Mat::zeros(0, data.input_dim()),
                    targets: Vec::new(),
                }
            };
            let head = if variant == SurrogateVariant::SurrIII {
                let preds = base.predict(&data.inputs)?;
                TrainSet::new(data.inputs.clone(), preds)?
            } else {
                data.clone()
            };
            head.concat(&augment)?
        }
        SurrogateVariant::Bamoes => unreachable!(),
    };
    let empty = DoeSample::empty(train_data.input_dim());
    let mut cfg = config.clone();
    cfg.weight_c = 0.0;
    let spec = optimize(&train_data, &empty, &cfg)?;
    let surrogate = GpPosterior::fit_exact(spec, &train_data)?;
    CombinedModel::new(base, surrogate)
}

fn doe_stream(config: &SurrogateConfig) -> DetRng {
    DetRng::for_task(config.seed, &["doe"], 0)
}

/// Adam loop over the flat kernel parameters; single-threaded and fully
/// deterministic under a fixed seed.
fn optimize<T: Scalar>(
    data: &TrainSet<T>,
    extra: &DoeSample<T>,
    config: &SurrogateConfig,
) -> Result<KernelSpec<T>, SurrogateError> {
    let d = data.input_dim();
    let mut spec = KernelSpec::init_from_data(config.kernel_family, data);
    let mut state = AdamState::new(spec.to_params(), cast::<T>(config.learning_rate));
    for epoch in 0..config.epochs_m {
        let (loss, grad) = bamoes_loss_and_gradient(&spec, data, extra, config.weight_c)?;
        if !loss.is_finite() {
            return Err(SurrogateError::Diverged { epoch });
        }
        state = state.step(&grad)?;
        spec = KernelSpec::from_params(config.kernel_family, d, &state.params)
            .map_err(|_| SurrogateError::Diverged { epoch })?;
    }
    Ok(spec)
}

//! Declarative benchmark configuration (TOML).
//!
//! ```toml
//! data = "series.csv"
//! metadata = "meta.csv"
//! seed = 42
//! jobs = 2
//! out = "results"
//! alphas = [0.95]
//! cd_alpha = 0.05
//!
//! [[method]]
//! name = "ols-builtin"
//! base = "ols"
//! ue = "builtin"
//!
//! [[method]]
//! name = "bamoes"
//! base = "ols"
//! ue = "bamoes"
//! weight_c = 0.7
//! doe_factor = 1.0
//! epochs = 300
//! learning_rate = 0.05
//! kernel = "rbf"
//! ```
//!
//! `base` is `"ols"`, `{ subprocess = "cmd ..." }`, or
//! `{ prediction_file = "path" }`; a `{series}` placeholder in the command or
//! path is replaced by the series id. `ue` is one of `builtin`, `naive`,
//! `sbb`, `meb`, `bsap`, `surr1`..`surr4`, `bamoes`.

use std::path::{Path, PathBuf};

use bamoes::bootstrap::BootstrapMethod;
use bamoes::kernel::KernelFamily;
use bamoes::surrogate::SurrogateVariant;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("cannot parse config: {0}")]
    Toml(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    Named(String),
    External(ExternalBase),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalBase {
    pub subprocess: Option<String>,
    pub prediction_file: Option<String>,
}

/// One resolved base-model choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseModelSpec {
    Ols,
    Subprocess { command: String },
    PredictionFile { path: String },
}

impl BaseModelSpec {
    pub fn is_trainable(&self) -> bool {
        matches!(self, BaseModelSpec::Ols)
    }
}

/// One resolved uncertainty-estimator choice with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum UeSpec {
    Builtin,
    Bootstrap {
        method: BootstrapMethod,
        replicas: usize,
        /// SBB block length; defaults to `n^(1/3)` of the train rows.
        mean_block_length: Option<f64>,
        ar_order_max: usize,
    },
    Surrogate {
        variant: SurrogateVariant,
        weight_c: f64,
        /// Absolute auxiliary-sample size; wins over `doe_factor`.
        doe_count: Option<usize>,
        /// L = round(doe_factor * N) when no absolute count is given.
        doe_factor: f64,
        epochs: usize,
        learning_rate: f64,
        kernel: KernelFamily,
    },
}

#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub name: String,
    pub base: BaseModelSpec,
    pub ue: UeSpec,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub data: PathBuf,
    pub metadata: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    /// Interval coverage levels drawn as guides on the calibration plots.
    pub alphas: Vec<f64>,
    /// Significance level for the critical-difference cliques.
    pub cd_alpha: f64,
    pub methods: Vec<MethodSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: String,
    metadata: String,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<String>,
    alphas: Option<Vec<f64>>,
    cd_alpha: Option<f64>,
    #[serde(rename = "method")]
    methods: Vec<RawMethod>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    name: String,
    base: BaseSpec,
    ue: String,
    replicas: Option<usize>,
    mean_block_length: Option<f64>,
    ar_order_max: Option<usize>,
    weight_c: Option<f64>,
    doe_count: Option<usize>,
    doe_factor: Option<f64>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    kernel: Option<String>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_raw(raw, base_dir)
    }

    pub fn parse_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        Self::from_raw(raw, base_dir)
    }

    fn from_raw(raw: RawConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        let methods: Vec<MethodSpec> = raw
            .methods
            .into_iter()
            .map(resolve_method)
            .collect::<Result<_, _>>()?;
        if methods.is_empty() {
            return Err(ConfigError::Invalid("at least one method required".into()));
        }
        let mut names: Vec<&str> = methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("method names must be unique".into()));
        }
        for m in &methods {
            validate_combination(m)?;
        }
        let alphas = raw.alphas.unwrap_or_else(|| vec![0.95]);
        if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(ConfigError::Invalid("alphas must lie in (0, 1)".into()));
        }
        let cd_alpha = raw.cd_alpha.unwrap_or(0.05);
        if cd_alpha.is_nan() || cd_alpha <= 0.0 || cd_alpha >= 1.0 {
            return Err(ConfigError::Invalid("cd_alpha must lie in (0, 1)".into()));
        }
        Ok(BenchConfig {
            data: base_dir.join(raw.data),
            metadata: base_dir.join(raw.metadata),
            seed: raw.seed.unwrap_or(0),
            jobs: raw.jobs.unwrap_or(1).max(1),
            out: base_dir.join(raw.out.unwrap_or_else(|| "results".into())),
            alphas,
            cd_alpha,
            methods,
        })
    }
}

fn resolve_method(mut raw: RawMethod) -> Result<MethodSpec, ConfigError> {
    let base = match std::mem::replace(&mut raw.base, BaseSpec::Named(String::new())) {
        BaseSpec::Named(s) if s == "ols" => BaseModelSpec::Ols,
        BaseSpec::Named(s) => {
            return Err(ConfigError::Invalid(format!(
                "method `{}`: unknown base `{s}` (expected `ols` or an external table)",
                raw.name
            )));
        }
        BaseSpec::External(ext) => match (ext.subprocess, ext.prediction_file) {
            (Some(command), None) => BaseModelSpec::Subprocess { command },
            (None, Some(path)) => BaseModelSpec::PredictionFile { path },
            _ => {
                return Err(ConfigError::Invalid(format!(
                    "method `{}`: external base needs exactly one of `subprocess` or `prediction_file`",
                    raw.name
                )));
            }
        },
    };

    let surrogate = |variant: SurrogateVariant, raw: &RawMethod| -> Result<UeSpec, ConfigError> {
        let weight_c = raw.weight_c.unwrap_or(match variant {
            SurrogateVariant::Bamoes => 0.7,
            _ => 0.0,
        });
        if variant != SurrogateVariant::Bamoes && raw.weight_c.is_some_and(|c| c != 0.0) {
            return Err(ConfigError::Invalid(format!(
                "method `{}`: weight_c only applies to the bamoes variant",
                raw.name
            )));
        }
        let kernel = match raw.kernel.as_deref() {
            None | Some("rbf") => KernelFamily::Rbf,
            Some("matern52") => KernelFamily::Matern52,
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "method `{}`: unknown kernel `{other}`",
                    raw.name
                )));
            }
        };
        Ok(UeSpec::Surrogate {
            variant,
            weight_c,
            doe_count: raw.doe_count,
            doe_factor: raw.doe_factor.unwrap_or(1.0),
            epochs: raw.epochs.unwrap_or(300),
            learning_rate: raw.learning_rate.unwrap_or(0.05),
            kernel,
        })
    };

    let bootstrap = |method: BootstrapMethod, raw: &RawMethod| UeSpec::Bootstrap {
        method,
        replicas: raw.replicas.unwrap_or(30),
        mean_block_length: raw.mean_block_length,
        ar_order_max: raw.ar_order_max.unwrap_or(5),
    };

    let ue = match raw.ue.as_str() {
        "builtin" => UeSpec::Builtin,
        "naive" => bootstrap(BootstrapMethod::Naive, &raw),
        "sbb" => bootstrap(BootstrapMethod::Sbb, &raw),
        "meb" => bootstrap(BootstrapMethod::Meb, &raw),
        "bsap" => bootstrap(BootstrapMethod::Bsap, &raw),
        "surr1" => surrogate(SurrogateVariant::SurrI, &raw)?,
        "surr2" => surrogate(SurrogateVariant::SurrII, &raw)?,
        "surr3" => surrogate(SurrogateVariant::SurrIII, &raw)?,
        "surr4" => surrogate(SurrogateVariant::SurrIV, &raw)?,
        "bamoes" => surrogate(SurrogateVariant::Bamoes, &raw)?,
        other => {
            return Err(ConfigError::Invalid(format!(
                "method `{}`: unknown ue `{other}`",
                raw.name
            )));
        }
    };

    Ok(MethodSpec {
        name: raw.name,
        base,
        ue,
    })
}

/// Combinations that can never run are rejected up front; runtime failures
/// (unreachable endpoints, bad data) stay per-cell.
fn validate_combination(m: &MethodSpec) -> Result<(), ConfigError> {
    match &m.ue {
        UeSpec::Builtin if !m.base.is_trainable() => Err(ConfigError::Invalid(format!(
            "method `{}`: external base models expose no built-in stddev",
            m.name
        ))),
        UeSpec::Bootstrap { .. } if !m.base.is_trainable() => Err(ConfigError::Invalid(format!(
            "method `{}`: bootstrap refitting needs a trainable base model (ols)",
            m.name
        ))),
        UeSpec::Bootstrap { replicas, .. } if *replicas < 2 => Err(ConfigError::Invalid(format!(
            "method `{}`: bootstrap needs at least 2 replicas",
            m.name
        ))),
        UeSpec::Surrogate {
            weight_c,
            learning_rate,
            ..
        } if !(0.0..=1.0).contains(weight_c) || learning_rate.is_nan() || *learning_rate <= 0.0 => {
            Err(ConfigError::Invalid(format!(
                "method `{}`: weight_c must be in [0, 1] and learning_rate positive",
                m.name
            )))
        }
        _ => Ok(()),
    }
}

/// Replace the `{series}` placeholder in external commands and paths.
pub fn substitute_series(template: &str, series_id: &str) -> String {
    template.replace("{series}", series_id)
}

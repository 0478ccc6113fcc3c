//! Base-model contract and the models that satisfy it natively: an OLS
//! autoregressor with its classical prediction interval, and adapters that
//! reach external models over a line-oriented subprocess protocol or a
//! pre-computed prediction file.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::gp::TrainSet;
use crate::linalg::{dot, Cholesky, Mat};
use crate::num::{cast, to_f64, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("input dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {needed} rows to fit, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("design matrix is singular even after diagonal regularization")]
    SingularDesign,
    #[error("model has no built-in uncertainty estimate")]
    UnsupportedStddev,
    #[error("external model adapter: {kind}: {payload}")]
    Adapter { kind: String, payload: String },
}

fn adapter_err(kind: &str, payload: impl Into<String>) -> ModelError {
    let mut payload = payload.into();
    if payload.len() > 240 {
        payload.truncate(240);
        payload.push_str("...");
    }
    ModelError::Adapter {
        kind: kind.to_string(),
        payload,
    }
}

/// A fixed, deterministic regression predictor. Fitting happens in the
/// constructors of implementing types, so an unfitted model cannot be
/// queried.
pub trait BlackBoxModel<T: Scalar>: Send + Sync {
    fn input_dim(&self) -> usize;

    /// One prediction per input row; deterministic.
    fn predict(&self, inputs: &Mat<T>) -> Result<Vec<T>, ModelError>;

    /// Built-in predictive standard deviation, when the model has one.
    fn builtin_stddev(&self, inputs: &Mat<T>) -> Result<Vec<T>, ModelError> {
        let _ = inputs;
        Err(ModelError::UnsupportedStddev)
    }
}

/// Ordinary least squares with intercept, fit by normal equations with a
/// diagonal-regularization fallback. The built-in interval is the classical
/// frequentist prediction interval `s^2 (1 + x~^T (X~^T X~)^{-1} x~)`.
#[derive(Debug, Clone)]
pub struct OlsModel<T> {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<T>,
    /// Residual variance `RSS / (N - d - 1)`.
    pub residual_var: T,
    /// `(X~^T X~)^{-1}` of the (possibly regularized) normal matrix.
    pub normal_matrix_inverse: Mat<T>,
}

impl<T: Scalar> OlsModel<T> {
    pub fn fit(data: &TrainSet<T>) -> Result<Self, ModelError> {
        let n = data.len();
        let d = data.input_dim();
        if n < d + 2 {
            return Err(ModelError::TooFewRows {
                needed: d + 2,
                got: n,
            });
        }
        let p = d + 1;
        let mut gram = Mat::zeros(p, p);
        let mut rhs = vec![T::zero(); p];
        for (row, &y) in data.inputs.rows_iter().zip(&data.targets) {
            for a in 0..p {
                let xa = if a == 0 { T::one() } else { row[a - 1] };
                rhs[a] = rhs[a] + xa * y;
                for b in a..p {
                    let xb = if b == 0 { T::one() } else { row[b - 1] };
                    gram[(a, b)] = gram[(a, b)] + xa * xb;
                }
            }
        }
        for a in 0..p {
            for b in (a + 1)..p {
                gram[(b, a)] = gram[(a, b)];
            }
        }
        let chol = match Cholesky::new(&gram) {
            Ok(ch) => ch,
            Err(_) => {
                let ridge = cast::<T>(1e-8) * gram.trace();
                let mut reg = gram.clone();
                for i in 0..p {
                    reg[(i, i)] = reg[(i, i)] + ridge;
                }
                Cholesky::new(&reg).map_err(|_| ModelError::SingularDesign)?
            }
        };
        let coefficients = chol.solve(&rhs);
        let normal_matrix_inverse = chol.inverse();

        let mut rss = T::zero();
        for (row, &y) in data.inputs.rows_iter().zip(&data.targets) {
            let e = y - predict_row(&coefficients, row);
            rss = rss + e * e;
        }
        let dof = cast::<T>((n - d - 1) as f64);
        let residual_var = (rss / dof).max(T::zero());
        Ok(OlsModel {
            coefficients,
            residual_var,
            normal_matrix_inverse,
        })
    }

    /// Prediction stddev at one point; never below `sqrt(residual_var)`.
    pub fn builtin_stddev_at(&self, x: &[T]) -> Result<T, ModelError> {
        self.check_dim(x.len())?;
        let p = self.coefficients.len();
        let mut xt = Vec::with_capacity(p);
        xt.push(T::one());
        xt.extend_from_slice(x);
        let gx = self.normal_matrix_inverse.matvec(&xt);
        let leverage = dot(&xt, &gx).max(T::zero());
        Ok((self.residual_var * (T::one() + leverage)).sqrt())
    }

    fn check_dim(&self, got: usize) -> Result<(), ModelError> {
        let expected = self.coefficients.len() - 1;
        if got != expected {
            return Err(ModelError::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

fn predict_row<T: Scalar>(coefficients: &[T], x: &[T]) -> T {
    coefficients[0] + dot(&coefficients[1..], x)
}

impl<T: Scalar> BlackBoxModel<T> for OlsModel<T> {
    fn input_dim(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn predict(&self, inputs: &Mat<T>) -> Result<Vec<T>, ModelError> {
        self.check_dim(inputs.ncols())?;
        Ok(inputs
            .rows_iter()
            .map(|row| predict_row(&self.coefficients, row))
            .collect())
    }

    fn builtin_stddev(&self, inputs: &Mat<T>) -> Result<Vec<T>, ModelError> {
        inputs
            .rows_iter()
            .map(|row| self.builtin_stddev_at(row))
            .collect()
    }
}

/// How to reach an externally trained model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// Command line executed via `sh -c`; one CSV feature line per request on
    /// stdin, one decimal prediction line per response on stdout.
    Subprocess { command: String },
    /// File holding one pre-computed prediction per request row.
    PredictionFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalModelEndpoint {
    pub transport: Transport,
}

impl ExternalModelEndpoint {
    pub fn subprocess(command: impl Into<String>) -> Self {
        ExternalModelEndpoint {
            transport: Transport::Subprocess {
                command: command.into(),
            },
        }
    }

    pub fn prediction_file(path: impl Into<PathBuf>) -> Self {
        ExternalModelEndpoint {
            transport: Transport::PredictionFile { path: path.into() },
        }
    }
}

/// Query an external model: all `m` request rows are sent, then exactly `m`
/// numeric responses are expected back, in request order.
pub fn external_predict<T: Scalar>(
    endpoint: &ExternalModelEndpoint,
    inputs: &Mat<T>,
) -> Result<Vec<T>, ModelError> {
    let m = inputs.nrows();
    let raw = match &endpoint.transport {
        Transport::Subprocess { command } => {
            let mut request = String::new();
            for row in inputs.rows_iter() {
                let mut first = true;
                for v in row {
                    if !first {
                        request.push(',');
                    }
                    request.push_str(&format!("{}", to_f64(*v)));
                    first = false;
                }
                request.push('\n');
            }
            run_subprocess(command, request)?
        }
        Transport::PredictionFile { path } => std::fs::read_to_string(path)
            .map_err(|e| adapter_err("prediction file unreadable", format!("{path:?}: {e}")))?,
    };

    let lines: Vec<&str> = raw.lines().collect();
    if lines.len() != m {
        return Err(adapter_err(
            "response count mismatch",
            format!("expected {m} lines, got {}; tail: {:?}", lines.len(), raw),
        ));
    }
    let mut out = Vec::with_capacity(m);
    for line in lines {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| adapter_err("malformed response line", line))?;
        if !v.is_finite() {
            return Err(adapter_err("non-finite response", line));
        }
        out.push(cast::<T>(v));
    }
    Ok(out)
}

fn run_subprocess(command: &str, request: String) -> Result<String, ModelError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| adapter_err("spawn failed", format!("{command}: {e}")))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    // Writer thread so a child that echoes as it reads cannot deadlock on
    // full pipes.
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(request.as_bytes());
        // stdin dropped here -> EOF
    });
    let output = child
        .wait_with_output()
        .map_err(|e| adapter_err("wait failed", e.to_string()))?;
    writer.join().ok();

    if !output.status.success() {
        return Err(adapter_err(
            "process exited with failure",
            String::from_utf8_lossy(&output.stderr).into_owned(),
        ));
    }
    String::from_utf8(output.stdout).map_err(|e| adapter_err("non-utf8 response", e.to_string()))
}

/// [`BlackBoxModel`] view of an external endpoint (already trained
/// elsewhere; no built-in stddev).
#[derive(Debug, Clone)]
pub struct ExternalModel {
    pub endpoint: ExternalModelEndpoint,
    pub input_dim: usize,
}

impl<T: Scalar> BlackBoxModel<T> for ExternalModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn predict(&self, inputs: &Mat<T>) -> Result<Vec<T>, ModelError> {
        if inputs.ncols() != self.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_dim,
                got: inputs.ncols(),
            });
        }
        external_predict(&self.endpoint, inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ECHO_FIRST_FEATURE: &str = "while IFS=, read -r a rest; do echo \"$a\"; done";

    fn line_data() -> TrainSet<f64> {
        // y = 2x + 1 exactly
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] + 1.0).collect();
        TrainSet::new(Mat::from_rows(&xs), ys).unwrap()
    }

    #[test]
    fn exact_line_recovers_coefficients() {
        let data = line_data();
        let model = OlsModel::fit(&data).unwrap();
        assert_relative_eq!(model.coefficients[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(model.coefficients[1], 2.0, epsilon = 1e-9);
        assert!(model.residual_var < 1e-18);
        // zero residual variance: training targets reproduced
        let preds = model.predict(&data.inputs).unwrap();
        for (p, y) in preds.iter().zip(&data.targets) {
            assert_relative_eq!(p, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_targets_zero_slope() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let data = TrainSet::new(Mat::from_rows(&xs), vec![4.0; 10]).unwrap();
        let model = OlsModel::fit(&data).unwrap();
        assert_relative_eq!(model.coefficients[0], 4.0, epsilon = 1e-8);
        assert!(model.coefficients[1].abs() < 1e-8);
        assert!(model.coefficients[2].abs() < 1e-8);
    }

    #[test]
    fn zero_residual_zero_stddev() {
        let model = OlsModel::fit(&line_data()).unwrap();
        let s = model.builtin_stddev_at(&[3.3]).unwrap();
        assert!(s < 1e-9);
    }

    #[test]
    fn stddev_minimal_at_centroid() {
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..12).map(|i| i as f64 + ((i * 7) % 3) as f64).collect();
        let data = TrainSet::new(Mat::from_rows(&xs), ys).unwrap();
        let model = OlsModel::fit(&data).unwrap();
        let centroid = 5.5;
        let at_centroid = model.builtin_stddev_at(&[centroid]).unwrap();
        for x in [-3.0, 0.0, 2.0, 9.0, 14.0] {
            assert!(model.builtin_stddev_at(&[x]).unwrap() >= at_centroid);
        }
        // and never below sqrt(residual_var)
        assert!(at_centroid >= model.residual_var.sqrt());
    }

    #[test]
    fn builtin_stddev_translation_invariant() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| (i as f64).sin() + i as f64).collect();
        let data = TrainSet::new(Mat::from_rows(&xs), ys.clone()).unwrap();
        let model = OlsModel::fit(&data).unwrap();

        let shift = [13.0, -4.5];
        let shifted_rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|r| vec![r[0] + shift[0], r[1] + shift[1]])
            .collect();
        let shifted = TrainSet::new(Mat::from_rows(&shifted_rows), ys).unwrap();
        let model_shifted = OlsModel::fit(&shifted).unwrap();

        let q = [2.0, 1.0];
        let qs = [q[0] + shift[0], q[1] + shift[1]];
        assert_relative_eq!(
            model.builtin_stddev_at(&q).unwrap(),
            model_shifted.builtin_stddev_at(&qs).unwrap(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn too_few_rows_rejected() {
        let data = TrainSet::new(
            Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]),
            vec![1.0, 2.0],
        )
        .unwrap();
        assert!(matches!(
            OlsModel::fit(&data),
            Err(ModelError::TooFewRows { .. })
        ));
    }

    #[test]
    fn subprocess_echo_returns_first_column() {
        let endpoint = ExternalModelEndpoint::subprocess(ECHO_FIRST_FEATURE);
        let x = Mat::from_rows(&[vec![1.5, 9.0], vec![-2.25, 3.0], vec![0.125, -7.0]]);
        let preds: Vec<f64> = external_predict(&endpoint, &x).unwrap();
        assert_eq!(preds, vec![1.5, -2.25, 0.125]);
    }

    #[test]
    fn prediction_file_returned_verbatim() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1.25\n-3.5\n0.75").unwrap();
        let endpoint = ExternalModelEndpoint::prediction_file(f.path());
        let x = Mat::from_rows(&[vec![0.0], vec![0.0], vec![0.0]]);
        let preds: Vec<f64> = external_predict(&endpoint, &x).unwrap();
        assert_eq!(preds, vec![1.25, -3.5, 0.75]);
    }

    #[test]
    fn malformed_response_is_adapter_error() {
        let endpoint = ExternalModelEndpoint::subprocess("while read -r l; do echo abc; done");
        let x = Mat::from_rows(&[vec![1.0]]);
        let err = external_predict::<f64>(&endpoint, &x).unwrap_err();
        assert!(matches!(err, ModelError::Adapter { .. }));
        assert!(err.to_string().contains("abc"));
    }

    #[test]
    fn short_response_is_count_mismatch() {
        let endpoint = ExternalModelEndpoint::subprocess("head -n 1");
        let x = Mat::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let err = external_predict::<f64>(&endpoint, &x).unwrap_err();
        assert!(err.to_string().contains("count mismatch"));
    }

    #[test]
    fn subprocess_equals_file_for_same_outputs() {
        let endpoint = ExternalModelEndpoint::subprocess(ECHO_FIRST_FEATURE);
        let x = Mat::from_rows(&[vec![0.5], vec![1.5], vec![2.5]]);
        let via_proc: Vec<f64> = external_predict(&endpoint, &x).unwrap();

        let mut f = tempfile::NamedTempFile::new().unwrap();
        for v in &via_proc {
            writeln!(f, "{v}").unwrap();
        }
        let via_file: Vec<f64> =
            external_predict(&ExternalModelEndpoint::prediction_file(f.path()), &x).unwrap();
        assert_eq!(via_proc, via_file);
    }
}

//! Stationary covariance functions with ARD lengthscales, their Gram
//! matrices, and derivatives with respect to the log-parameterized
//! hyperparameters.

use crate::gp::{GpError, TrainSet};
use crate::linalg::Mat;
use crate::num::{cast, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Rbf,
    Matern52,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Rbf => "rbf",
            KernelFamily::Matern52 => "matern52",
        }
    }
}

/// Kernel family plus log-parameterized hyperparameters and a constant mean.
/// This is the trainable object: the flat parameter vector is
/// `[log_lengthscales.., log_signal_var, log_noise_var, mean_const]`
/// (`d + 3` entries). Log parameterization keeps positivity unconstrained
/// during gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub log_lengthscales: Vec<T>,
    pub log_signal_var: T,
    pub log_noise_var: T,
    pub mean_const: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(
        family: KernelFamily,
        log_lengthscales: Vec<T>,
        log_signal_var: T,
        log_noise_var: T,
        mean_const: T,
    ) -> Result<Self, GpError> {
        let spec = KernelSpec {
            family,
            log_lengthscales,
            log_signal_var,
            log_noise_var,
            mean_const,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic helper used throughout the tests.
    pub fn isotropic(
        family: KernelFamily,
        dim: usize,
        lengthscale: T,
        signal_var: T,
        noise_var: T,
        mean_const: T,
    ) -> Result<Self, GpError> {
        Self::new(
            family,
            vec![lengthscale.ln(); dim],
            signal_var.ln(),
            noise_var.ln(),
            mean_const,
        )
    }

    /// Every log-parameter must exponentiate to a finite, strictly positive
    /// value and the mean must be finite.
    pub fn validate(&self) -> Result<(), GpError> {
        let ok = |lv: T| lv.is_finite() && lv.exp().is_finite() && lv.exp() > T::zero();
        if !self.log_lengthscales.iter().all(|&l| ok(l))
            || !ok(self.log_signal_var)
            || !ok(self.log_noise_var)
            || !self.mean_const.is_finite()
        {
            return Err(GpError::InvalidHyperparameters);
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    /// Number of trainable parameters: `d + 3`.
    pub fn param_count(&self) -> usize {
        self.input_dim() + 3
    }

    pub fn signal_var(&self) -> T {
        self.log_signal_var.exp()
    }

    pub fn noise_var(&self) -> T {
        self.log_noise_var.exp()
    }

    pub fn lengthscale(&self, j: usize) -> T {
        self.log_lengthscales[j].exp()
    }

    /// Flatten into the trainable parameter vector.
    pub fn to_params(&self) -> Vec<T> {
        let mut p = self.log_lengthscales.clone();
        p.push(self.log_signal_var);
        p.push(self.log_noise_var);
        p.push(self.mean_const);
        p
    }

    /// Rebuild from a flat parameter vector (inverse of [`Self::to_params`]).
    pub fn from_params(family: KernelFamily, dim: usize, params: &[T]) -> Result<Self, GpError> {
        if params.len() != dim + 3 {
            return Err(GpError::DimensionMismatch {
                expected: dim + 3,
                got: params.len(),
            });
        }
        Self::new(
            family,
            params[..dim].to_vec(),
            params[dim],
            params[dim + 1],
            params[dim + 2],
        )
    }

    /// Scale-free initialization: lengthscales from per-dimension input
    /// spread, variances from the target variance, mean from the target mean.
    pub fn init_from_data(family: KernelFamily, data: &TrainSet<T>) -> Self {
        let n = data.len();
        let d = data.input_dim();
        let nf = cast::<T>(n as f64);
        let mut log_ls = Vec::with_capacity(d);
        for j in 0..d {
            let mean = (0..n).fold(T::zero(), |a, i| a + data.inputs[(i, j)]) / nf;
            let var = (0..n).fold(T::zero(), |a, i| {
                let c = data.inputs[(i, j)] - mean;
                a + c * c
            }) / nf;
            let sd = var.sqrt();
            log_ls.push(if sd > T::zero() { sd.ln() } else { T::zero() });
        }
        let ymean = data.targets.iter().fold(T::zero(), |a, &y| a + y) / nf;
        let yvar = data
            .targets
            .iter()
            .fold(T::zero(), |a, &y| a + (y - ymean) * (y - ymean))
            / nf;
        let yvar = if yvar > T::zero() { yvar } else { T::one() };
        KernelSpec {
            family,
            log_lengthscales: log_ls,
            log_signal_var: yvar.ln(),
            log_noise_var: (cast::<T>(0.1) * yvar).ln(),
            mean_const: ymean,
        }
    }

    #[inline]
    fn check_point(&self, p: &[T]) -> Result<(), GpError> {
        if p.len() != self.input_dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.input_dim(),
                got: p.len(),
            });
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(GpError::NonFiniteInput);
        }
        Ok(())
    }

    /// Covariance without the noise term; symmetric in `(a, b)`, value in
    /// `(0, signal_var]` (underflowing to 0 at extreme distances).
    pub fn eval(&self, a: &[T], b: &[T]) -> Result<T, GpError> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.eval_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[T], b: &[T]) -> T {
        let sf2 = self.signal_var();
        let q = self.scaled_sq_dist(a, b);
        match self.family {
            KernelFamily::Rbf => sf2 * (-q * cast::<T>(0.5)).exp(),
            KernelFamily::Matern52 => {
                let r = q.sqrt();
                let s5 = cast::<T>(5.0f64.sqrt());
                let c = T::one() + s5 * r + cast::<T>(5.0 / 3.0) * q;
                sf2 * c * (-s5 * r).exp()
            }
        }
    }

    #[inline]
    fn scaled_sq_dist(&self, a: &[T], b: &[T]) -> T {
        let mut q = T::zero();
        for ((&ai, &bi), &ll) in a.iter().zip(b).zip(&self.log_lengthscales) {
            let s = (ai - bi) / ll.exp();
            q = q + s * s;
        }
        q
    }

    /// Covariance together with its derivatives w.r.t. the `d + 1` kernel
    /// shape parameters (log-lengthscales then log signal variance). The
    /// noise derivative is diagonal-only and handled by callers.
    pub(crate) fn eval_with_shape_grad(&self, a: &[T], b: &[T], grad: &mut [T]) -> T {
        debug_assert_eq!(grad.len(), self.input_dim() + 1);
        let d = self.input_dim();
        let sf2 = self.signal_var();
        let mut q = T::zero();
        // grad[..d] temporarily holds q_j = ((a_j - b_j) / l_j)^2
        for j in 0..d {
            let s = (a[j] - b[j]) / self.lengthscale(j);
            let qj = s * s;
            grad[j] = qj;
            q = q + qj;
        }
        match self.family {
            KernelFamily::Rbf => {
                let k = sf2 * (-q * cast::<T>(0.5)).exp();
                for g in grad[..d].iter_mut() {
                    *g = k * *g; // dk/dlog l_j = k * q_j
                }
                grad[d] = k;
                k
            }
            KernelFamily::Matern52 => {
                let r = q.sqrt();
                let s5 = cast::<T>(5.0f64.sqrt());
                let e = (-s5 * r).exp();
                let k = sf2 * (T::one() + s5 * r + cast::<T>(5.0 / 3.0) * q) * e;
                let coef = sf2 * cast::<T>(5.0 / 3.0) * (T::one() + s5 * r) * e;
                for g in grad[..d].iter_mut() {
                    *g = coef * *g; // dk/dlog l_j = coef * q_j
                }
                grad[d] = k;
                k
            }
        }
    }
}

/// Cross-covariance matrix: entry `(i, j) = k(a_i, b_j)`.
pub fn gram_matrix<T: Scalar>(
    spec: &KernelSpec<T>,
    a: &Mat<T>,
    b: &Mat<T>,
) -> Result<Mat<T>, GpError> {
    if a.ncols() != spec.input_dim() || b.ncols() != spec.input_dim() {
        return Err(GpError::DimensionMismatch {
            expected: spec.input_dim(),
            got: if a.ncols() != spec.input_dim() {
                a.ncols()
            } else {
                b.ncols()
            },
        });
    }
    if !a.all_finite() || !b.all_finite() {
        return Err(GpError::NonFiniteInput);
    }
    Ok(Mat::from_fn(a.nrows(), b.nrows(), |i, j| {
        spec.eval_unchecked(a.row(i), b.row(j))
    }))
}

/// Symmetric Gram matrix over one point set; upper triangle is mirrored so
/// symmetry is exact.
pub fn gram_matrix_sym<T: Scalar>(spec: &KernelSpec<T>, a: &Mat<T>) -> Result<Mat<T>, GpError> {
    if a.ncols() != spec.input_dim() {
        return Err(GpError::DimensionMismatch {
            expected: spec.input_dim(),
            got: a.ncols(),
        });
    }
    if !a.all_finite() {
        return Err(GpError::NonFiniteInput);
    }
    let n = a.nrows();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(a.row(i), a.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rbf1(sf2: f64, nv: f64) -> KernelSpec<f64> {
        KernelSpec::isotropic(KernelFamily::Rbf, 1, 1.0, sf2, nv, 0.0).unwrap()
    }

    #[test]
    fn zero_distance_gives_signal_variance() {
        // equality up to the exp(ln(.)) round trip of the log parameterization
        let spec = KernelSpec::isotropic(KernelFamily::Rbf, 2, 0.7, 3.0, 0.1, 0.0).unwrap();
        let a = [0.3, -1.2];
        assert_relative_eq!(spec.eval(&a, &a).unwrap(), 3.0, max_relative = 1e-15);
        assert_eq!(spec.eval(&a, &a).unwrap(), spec.signal_var());
        let m = KernelSpec::isotropic(KernelFamily::Matern52, 2, 0.7, 3.0, 0.1, 0.0).unwrap();
        assert_relative_eq!(m.eval(&a, &a).unwrap(), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn rbf_unit_distance_closed_form() {
        let spec = rbf1(1.0, 0.1);
        let k = spec.eval(&[0.0], &[1.0]).unwrap();
        assert_relative_eq!(k, (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn gaussian_tail_underflows_to_zero() {
        let spec = rbf1(1.0, 0.1);
        let k = spec.eval(&[0.0], &[1e6]).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn eval_is_symmetric_and_bounded() {
        let spec = KernelSpec::isotropic(KernelFamily::Matern52, 3, 0.5, 2.0, 0.1, 0.0).unwrap();
        let a = [0.1, 0.2, -0.3];
        let b = [1.0, -0.5, 0.25];
        let kab = spec.eval(&a, &b).unwrap();
        let kba = spec.eval(&b, &a).unwrap();
        assert_eq!(kab, kba);
        assert!(kab > 0.0 && kab <= 2.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let spec = rbf1(1.0, 0.1);
        assert!(matches!(
            spec.eval(&[0.0, 1.0], &[0.0]),
            Err(GpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_single_row_is_signal_variance() {
        let spec = KernelSpec::isotropic(KernelFamily::Rbf, 2, 1.0, 2.5, 0.1, 0.0).unwrap();
        let a = Mat::from_rows(&[vec![0.0, 1.0]]);
        let g = gram_matrix_sym(&spec, &a).unwrap();
        assert_eq!(g[(0, 0)], 2.5);
    }

    #[test]
    fn gram_duplicate_rows_rank_deficient() {
        let spec = rbf1(1.7, 0.1);
        let a = Mat::from_rows(&[vec![0.5], vec![0.5]]);
        let g = gram_matrix_sym(&spec, &a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g[(i, j)], 1.7);
            }
        }
    }

    #[test]
    fn gram_matches_elementwise_loop() {
        let spec = KernelSpec::new(
            KernelFamily::Rbf,
            vec![0.3f64.ln(), 1.4f64.ln()],
            1.2f64.ln(),
            0.05f64.ln(),
            0.0,
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.71).cos()])
            .collect();
        let a = Mat::from_rows(&rows);
        let g = gram_matrix_sym(&spec, &a).unwrap();
        let gc = gram_matrix(&spec, &a, &a).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let direct = spec.eval(&rows[i], &rows[j]).unwrap();
                assert_relative_eq!(g[(i, j)], direct, epsilon = 1e-15);
                assert_relative_eq!(gc[(i, j)], direct, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn shape_grad_matches_finite_differences() {
        for family in [KernelFamily::Rbf, KernelFamily::Matern52] {
            let spec = KernelSpec::new(
                family,
                vec![0.4f64.ln(), 2.0f64.ln()],
                1.5f64.ln(),
                0.1f64.ln(),
                0.0,
            )
            .unwrap();
            let a = [0.2, -0.4];
            let b = [0.9, 0.3];
            let mut grad = vec![0.0; 3];
            spec.eval_with_shape_grad(&a, &b, &mut grad);
            let h = 1e-6;
            let mut params = spec.to_params();
            for p in 0..3 {
                let orig = params[p];
                params[p] = orig + h;
                let up = KernelSpec::from_params(family, 2, &params).unwrap();
                params[p] = orig - h;
                let dn = KernelSpec::from_params(family, 2, &params).unwrap();
                params[p] = orig;
                let fd = (up.eval(&a, &b).unwrap() - dn.eval(&a, &b).unwrap()) / (2.0 * h);
                assert_relative_eq!(grad[p], fd, max_relative = 1e-6, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn params_round_trip() {
        let spec = KernelSpec::new(
            KernelFamily::Matern52,
            vec![0.2, -0.3, 0.0],
            0.5,
            -2.0,
            1.25,
        )
        .unwrap();
        let back = KernelSpec::from_params(KernelFamily::Matern52, 3, &spec.to_params()).unwrap();
        assert_eq!(spec, back);
        assert_eq!(spec.param_count(), 6);
    }

    #[test]
    fn data_initialization_policy() {
        use crate::gp::TrainSet;
        // column 0: sd 2 around mean 0; column 1: constant (sd 0 -> log 0)
        let inputs = Mat::from_rows(&[vec![-2.0, 7.0], vec![2.0, 7.0]]);
        let targets = vec![1.0, 5.0]; // mean 3, variance 4
        let data = TrainSet::new(inputs, targets).unwrap();
        let spec = KernelSpec::init_from_data(KernelFamily::Rbf, &data);
        assert_relative_eq!(spec.log_lengthscales[0], 2.0f64.ln(), epsilon = 1e-12);
        assert_eq!(spec.log_lengthscales[1], 0.0);
        assert_relative_eq!(spec.signal_var(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(spec.noise_var(), 0.4, epsilon = 1e-12);
        assert_relative_eq!(spec.mean_const, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_log_params_rejected() {
        assert!(KernelSpec::new(KernelFamily::Rbf, vec![f64::NAN], 0.0, 0.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Rbf, vec![0.0], 800.0, 0.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Rbf, vec![0.0], 0.0, 0.0, f64::INFINITY).is_err());
    }
}

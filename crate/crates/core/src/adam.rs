//! Self-contained Adam optimizer over a flat parameter vector.

use crate::gp::GpError;
use crate::num::{cast, Scalar};

/// Adam state: parameters plus first/second moment estimates. Moments start
/// at zero; `step` applies the standard bias-corrected update and returns the
/// advanced state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub params: Vec<T>,
    pub step_count: u64,
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state with the usual defaults (beta1 = 0.9, beta2 = 0.999,
    /// epsilon = 1e-8).
    pub fn new(params: Vec<T>, learning_rate: T) -> Self {
        let n = params.len();
        AdamState {
            params,
            step_count: 0,
            first_moment: vec![T::zero(); n],
            second_moment: vec![T::zero(); n],
            learning_rate,
            beta1: cast(0.9),
            beta2: cast(0.999),
            epsilon: cast(1e-8),
        }
    }

    pub fn step(mut self, grad: &[T]) -> Result<Self, GpError> {
        if grad.len() != self.params.len() {
            return Err(GpError::DimensionMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let t = self.step_count + 1;
        let b1 = self.beta1;
        let b2 = self.beta2;
        let b1t = T::one() - b1.powi(t as i32);
        let b2t = T::one() - b2.powi(t as i32);
        for (((p, m), v), &g) in self
            .params
            .iter_mut()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
            .zip(grad)
        {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / b1t;
            let v_hat = *v / b2t;
            *p = *p - self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        self.step_count = t;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let state = AdamState::new(vec![1.0f64], 0.1);
        let next = state.step(&[1.0]).unwrap();
        // bias-corrected first step: lr * g / (|g| + eps)
        let expect = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert_relative_eq!(next.params[0], expect, epsilon = 1e-12);
        assert!((1.0 - next.params[0] - 0.1).abs() < 1e-8);
        assert_eq!(next.step_count, 1);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let state = AdamState::new(vec![0.5f64, -2.0], 0.05);
        let next = state.clone().step(&[0.0, 0.0]).unwrap();
        assert_eq!(next.params, state.params);
        assert_eq!(next.step_count, 1);
    }

    #[test]
    fn two_steps_match_hand_unrolled_recurrence() {
        let lr = 0.1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let g = 2.0;
        let state = AdamState::new(vec![0.0f64], lr);
        let s2 = state.step(&[g]).unwrap().step(&[g]).unwrap();

        // Hand unroll.
        let mut p = 0.0;
        let mut m = 0.0;
        let mut v = 0.0;
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1f(t, b1));
            let vh = v / (1.0 - b1f(t, b2));
            p -= lr * mh / (vh.sqrt() + eps);
        }
        assert_relative_eq!(s2.params[0], p, epsilon = 1e-14);

        fn b1f(t: u64, b: f64) -> f64 {
            b.powi(t as i32)
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let state = AdamState::new(vec![1.0f64], 0.1);
        assert!(state.step(&[1.0, 2.0]).is_err());
    }
}

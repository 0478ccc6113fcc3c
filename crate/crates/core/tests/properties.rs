//! Property tests for the order- and permutation-invariance contracts.

use bamoes::bootstrap::{resample_naive, resample_sbb};
use bamoes::calibration::{miscalibration_area, rmsce, rmse, PredictionSet};
use bamoes::data::Scaler;
use bamoes::gp::{log_marginal_likelihood, TrainSet};
use bamoes::kernel::{KernelFamily, KernelSpec};
use bamoes::linalg::Mat;
use bamoes::rng::{DetRng, UniformStream};
use proptest::prelude::*;

fn permutation(len: usize, key: u64) -> Vec<usize> {
    let mut rng = DetRng::from_key(key);
    let mut idx: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.next_index(i + 1);
        idx.swap(i, j);
    }
    idx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lml_invariant_under_row_permutation(
        seed in 0u64..1000,
        n in 2usize..10,
        vals in prop::collection::vec(-2.0f64..2.0, 2..10),
    ) {
        let n = n.min(vals.len());
        let inputs = Mat::from_fn(n, 1, |i, _| (i as f64 * 0.37).sin() * 2.0);
        let targets: Vec<f64> = vals[..n].to_vec();
        let data = TrainSet::new(inputs.clone(), targets.clone()).unwrap();
        let spec = KernelSpec::isotropic(KernelFamily::Rbf, 1, 0.8, 1.3, 0.2, 0.1).unwrap();
        let base = log_marginal_likelihood(&spec, &data).unwrap();

        let perm = permutation(n, seed);
        let data_p = TrainSet::new(
            inputs.select_rows(&perm),
            perm.iter().map(|&i| targets[i]).collect(),
        ).unwrap();
        let permuted = log_marginal_likelihood(&spec, &data_p).unwrap();
        prop_assert!((base - permuted).abs() < 1e-9, "{base} vs {permuted}");
    }

    #[test]
    fn resamplers_return_n_valid_indices(
        n in 1usize..200,
        key in 0u64..500,
        block in 1.0f64..20.0,
    ) {
        let mut rng = DetRng::from_key(key);
        let naive = resample_naive(n, &mut rng);
        prop_assert_eq!(naive.len(), n);
        prop_assert!(naive.iter().all(|&i| i < n));
        if n >= 2 {
            let sbb = resample_sbb(n, block, &mut rng);
            prop_assert_eq!(sbb.len(), n);
            prop_assert!(sbb.iter().all(|&i| i < n));
        }
    }

    #[test]
    fn calibration_metrics_permutation_invariant(
        seed in 0u64..1000,
        triples in prop::collection::vec((-2.0f64..2.0, 0.05f64..2.0, -2.0f64..2.0), 2..30),
    ) {
        let means: Vec<f64> = triples.iter().map(|t| t.0).collect();
        let stds: Vec<f64> = triples.iter().map(|t| t.1).collect();
        let truths: Vec<f64> = triples.iter().map(|t| t.2).collect();
        let p = PredictionSet::new(means.clone(), stds.clone(), truths.clone()).unwrap();

        let perm = permutation(triples.len(), seed);
        let pp = PredictionSet::new(
            perm.iter().map(|&i| means[i]).collect(),
            perm.iter().map(|&i| stds[i]).collect(),
            perm.iter().map(|&i| truths[i]).collect(),
        ).unwrap();
        prop_assert!((miscalibration_area(&p) - miscalibration_area(&pp)).abs() < 1e-12);
        prop_assert!((rmsce(&p) - rmsce(&pp)).abs() < 1e-12);
        prop_assert!((rmse(&p) - rmse(&pp)).abs() < 1e-12);
    }

    #[test]
    fn scaler_round_trip(vals in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let sc = Scaler::fit(&vals);
        let z = sc.apply(&vals);
        for (orig, zi) in vals.iter().zip(&z) {
            let back = sc.invert(*zi);
            prop_assert!((back - orig).abs() < 1e-9 * orig.abs().max(1.0));
        }
    }

    #[test]
    fn gram_symmetric_psd_diagonal_dominates_offdiag(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..8),
    ) {
        let spec = KernelSpec::isotropic(KernelFamily::Matern52, 2, 0.9, 1.1, 0.1, 0.0).unwrap();
        let m = Mat::from_rows(&rows);
        let g = bamoes::kernel::gram_matrix_sym(&spec, &m).unwrap();
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                prop_assert_eq!(g[(i, j)], g[(j, i)]);
                prop_assert!(g[(i, j)] <= g[(i, i)].max(g[(j, j)]) + 1e-12);
                prop_assert!(g[(i, j)] >= 0.0);
            }
        }
    }
}

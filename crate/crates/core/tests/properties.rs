use bcpredict_core::boruta::{boruta_run, importance_permutation_with, shadow_augment, BorutaConfig, FeatureStatus};
use bcpredict_core::dataset::{
    correlation_matrix, standardize_fit, stratified_split, Diagnosis, RawRecord,
};
use bcpredict_core::logreg::{
    fit_gradient_descent, label_for, nll_cost, sigmoid, Coefficients, TrainConfig,
};
use bcpredict_core::metrics::{auc_trapezoid, confusion_matrix, roc_curve};
use bcpredict_core::rng::SplitMix64;
use bcpredict_core::smote::{k_nearest_neighbors_with, smote_oversample, target_minority_count, SmoteConfig};
use bcpredict_core::{Dataset, Execution};
use ndarray::Array2;
use proptest::prelude::*;

fn dataset_from(columns: usize, rows: &[(bool, Vec<f64>)]) -> Dataset {
    let names = (0..columns).map(|j| format!("f{j}")).collect();
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (malignant, features))| RawRecord {
            id: format!("r{i}"),
            diagnosis: if *malignant { Diagnosis::Malignant } else { Diagnosis::Benign },
            features: features.clone(),
        })
        .collect();
    Dataset::new(names, records).unwrap()
}

/// Rows with each class present at least twice.
fn labelled_rows(columns: usize) -> impl Strategy<Value = Vec<(bool, Vec<f64>)>> {
    (6usize..60).prop_flat_map(move |n| {
        prop::collection::vec((any::<bool>(), prop::collection::vec(-1e3f64..1e3, columns)), n).prop_map(|mut rows| {
            rows[0].0 = false;
            rows[1].0 = false;
            rows[2].0 = true;
            rows[3].0 = true;
            rows
        })
    })
}

fn matrix(rows: usize, cols: usize, values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), values.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(rows in labelled_rows(2), seed in any::<u64>(), fraction in 0.1f64..0.6) {
        let data = dataset_from(2, &rows);
        let split = match stratified_split(&data, fraction, seed) {
            Ok(split) => split,
            // Tiny classes can round to an empty test side; that is refused, not mis-split.
            Err(bcpredict_core::Error::InvalidSplit(_)) => return Ok(()),
            Err(other) => return Err(TestCaseError::fail(other.to_string())),
        };
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        prop_assert!(split.test.iter().all(|t| split.train.binary_search(t).is_err()));
    }

    #[test]
    fn standardized_train_columns_have_unit_scale(rows in labelled_rows(3)) {
        let data = dataset_from(3, &rows);
        let all = data.all_rows();
        let Ok(params) = standardize_fit(&data, &all) else { return Ok(()) };
        let z = params.apply_matrix(&data.matrix(&all, &[0, 1, 2])).unwrap();
        let m = z.nrows() as f64;
        for column in z.columns() {
            let mean = column.sum() / m;
            let sd = (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            prop_assert!(mean.abs() < 1e-9, "mean {}", mean);
            prop_assert!((sd - 1.0).abs() < 1e-9, "sd {}", sd);
        }
    }

    #[test]
    fn correlation_is_symmetric_and_bounded(rows in labelled_rows(4)) {
        let data = dataset_from(4, &rows);
        let Ok(corr) = correlation_matrix(&data, &data.all_rows()) else { return Ok(()) };
        for a in 0..4 {
            prop_assert_eq!(corr.values[a][a], 1.0);
            for b in 0..4 {
                let v = corr.values[a][b];
                prop_assert!((-1.0..=1.0).contains(&v));
                prop_assert_eq!(v.to_bits(), corr.values[b][a].to_bits());
            }
        }
    }

    #[test]
    fn smote_interpolates_within_minority_neighbourhoods(
        values in prop::collection::vec(-10.0f64..10.0, 40 * 3),
        minority in 6usize..15,
        k in 1usize..5,
        ratio in 0.3f64..=1.0,
        seed in any::<u64>(),
    ) {
        let x = matrix(40, 3, &values);
        let y: Vec<u8> = (0..40).map(|i| u8::from(i < minority)).collect();
        let out = smote_oversample(x.view(), &y, &SmoteConfig { k, target_ratio: ratio, seed }).unwrap();
        let majority = 40 - minority;
        let expected_new = target_minority_count(majority, ratio).saturating_sub(minority);
        prop_assert_eq!(out.labels.len(), 40 + expected_new);
        prop_assert_eq!(out.n_synthetic(), expected_new);
        prop_assert_eq!(&out.labels[..40], &y[..]);
        prop_assert_eq!(out.features.slice(ndarray::s![..40, ..]), x.view());
        prop_assert!(out.labels[40..].iter().all(|&l| l == 1));

        let minority_rows: Vec<usize> = (0..minority).collect();
        let minority_x = x.select(ndarray::Axis(0), &minority_rows);
        let neighbours = k_nearest_neighbors_with(minority_x.view(), k, Execution::Sequential).unwrap();
        for (s, origin) in out.provenance.iter().enumerate() {
            prop_assert!(origin.base < minority && origin.neighbor < minority);
            prop_assert!(neighbours.indices(origin.base).any(|n| n == origin.neighbor));
            prop_assert!((0.0..=1.0).contains(&origin.gap));
            let row = out.features.row(40 + s);
            for j in 0..3 {
                let (b, m) = (x[[origin.base, j]], x[[origin.neighbor, j]]);
                prop_assert!((row[j] - (b + origin.gap * (m - b))).abs() <= 1e-12);
                prop_assert!(b.min(m) - 1e-12 <= row[j] && row[j] <= b.max(m) + 1e-12);
            }
        }
    }

    #[test]
    fn sigmoid_is_monotone_and_symmetric(a in -700.0f64..700.0, b in -700.0f64..700.0) {
        prop_assert!((sigmoid(a) + sigmoid(-a) - 1.0).abs() <= 1e-15);
        if a < b {
            prop_assert!(sigmoid(a) <= sigmoid(b));
        }
    }

    #[test]
    fn sigmoid_is_strictly_increasing_where_representable(a in -30.0f64..30.0, d in 1e-6f64..1.0) {
        prop_assert!(sigmoid(a) < sigmoid(a + d));
    }

    #[test]
    fn nll_is_convex(
        values in prop::collection::vec(-3.0f64..3.0, 20 * 3),
        labels in prop::collection::vec(0u8..2, 20),
        a in prop::collection::vec(-4.0f64..4.0, 4),
        b in prop::collection::vec(-4.0f64..4.0, 4),
        t in 0.0f64..=1.0,
    ) {
        let x = matrix(20, 3, &values);
        let coeffs = |v: &[f64]| Coefficients { intercept: v[0], weights: v[1..].to_vec() };
        let mix: Vec<f64> = a.iter().zip(&b).map(|(p, q)| t * p + (1.0 - t) * q).collect();
        let lhs = nll_cost(&coeffs(&mix), x.view(), &labels).unwrap();
        let rhs = t * nll_cost(&coeffs(&a), x.view(), &labels).unwrap()
            + (1.0 - t) * nll_cost(&coeffs(&b), x.view(), &labels).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn label_depends_only_on_logit_sign(z in -50.0f64..50.0, scale in 1e-3f64..1e3) {
        prop_assume!(z.abs() > 1e-12);
        let expected = u8::from(z >= 0.0);
        prop_assert_eq!(label_for(sigmoid(z), 0.5), expected);
        prop_assert_eq!(label_for(sigmoid(scale * z), 0.5), expected);
    }

    #[test]
    fn cost_history_never_increases(
        values in prop::collection::vec(-3.0f64..3.0, 30 * 2),
        labels in prop::collection::vec(0u8..2, 30),
        lr in 0.01f64..50.0,
    ) {
        let x = matrix(30, 2, &values);
        let config = TrainConfig { learning_rate: lr, max_iters: 300, tolerance: 1e-9, ..TrainConfig::default() };
        let (_, trace) = fit_gradient_descent(x.view(), &labels, &config).unwrap();
        for w in trace.cost_history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        if trace.converged {
            let n = trace.cost_history.len();
            let (prev, last) = (trace.cost_history[n - 2], trace.cost_history[n - 1]);
            prop_assert!((prev - last).abs() / prev.max(1e-12) < config.tolerance);
        }
    }

    #[test]
    fn auc_complements_under_reversal(
        labels in prop::collection::vec(0u8..2, 2..30),
        scores in prop::collection::vec(0u8..6, 30),
    ) {
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let s: Vec<f64> = labels.iter().zip(&scores).map(|(_, &v)| f64::from(v) / 5.0).collect();
        let reversed: Vec<f64> = s.iter().map(|v| -v).collect();
        let auc = auc_trapezoid(&roc_curve(&labels, &s).unwrap()).unwrap();
        let auc_rev = auc_trapezoid(&roc_curve(&labels, &reversed).unwrap()).unwrap();
        prop_assert!((auc + auc_rev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_is_a_rank_statistic(
        labels in prop::collection::vec(0u8..2, 2..30),
        scores in prop::collection::vec(-5.0f64..5.0, 30),
    ) {
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let s = &scores[..labels.len()];
        let transformed: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
        let a = auc_trapezoid(&roc_curve(&labels, s).unwrap()).unwrap();
        let b = auc_trapezoid(&roc_curve(&labels, &transformed).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn roc_is_monotone_and_anchored(
        labels in prop::collection::vec(0u8..2, 2..30),
        scores in prop::collection::vec(0u8..8, 30),
    ) {
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let s: Vec<f64> = scores[..labels.len()].iter().map(|&v| f64::from(v)).collect();
        let roc = roc_curve(&labels, &s).unwrap();
        prop_assert_eq!((roc[0].fpr, roc[0].tpr), (0.0, 0.0));
        let last = roc.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
            prop_assert!(w[0].threshold > w[1].threshold);
        }
    }

    #[test]
    fn confusion_counts_and_rates_are_consistent(
        pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60),
    ) {
        let (truth, pred): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let cm = confusion_matrix(&truth, &pred).unwrap();
        prop_assert_eq!(cm.tp + cm.fp + cm.fn_ + cm.tn, truth.len());
        let rates = cm.rates();
        let accuracy = cm.accuracy().unwrap();
        for v in [accuracy, rates.precision, rates.recall, rates.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn shadow_columns_are_permutations(values in prop::collection::vec(-5.0f64..5.0, 12 * 3), seed in any::<u64>()) {
        let x = matrix(12, 3, &values);
        let aug = shadow_augment(x.view(), seed);
        prop_assert_eq!(aug.ncols(), 6);
        for j in 0..3 {
            let mut real: Vec<f64> = x.column(j).to_vec();
            let mut shadow: Vec<f64> = aug.column(3 + j).to_vec();
            real.sort_by(f64::total_cmp);
            shadow.sort_by(f64::total_cmp);
            prop_assert_eq!(real, shadow);
            prop_assert_eq!(aug.column(j), x.column(j));
        }
        prop_assert_eq!(aug, shadow_augment(x.view(), seed));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn knn_parallel_matches_sequential(values in prop::collection::vec(-3.0f64..3.0, 50 * 4), k in 1usize..8) {
        let x = matrix(50, 4, &values);
        let a = k_nearest_neighbors_with(x.view(), k, Execution::Sequential).unwrap();
        let b = k_nearest_neighbors_with(x.view(), k, Execution::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn batch_scoring_parallel_matches_sequential(
        values in prop::collection::vec(-3.0f64..3.0, 80 * 3),
        w in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let x = matrix(80, 3, &values);
        let coeffs = Coefficients { intercept: w[0], weights: w[1..].to_vec() };
        let a = coeffs.predict_proba_batch(x.view(), Execution::Sequential).unwrap();
        let b = coeffs.predict_proba_batch(x.view(), Execution::Parallel).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        for (i, p) in a.iter().enumerate() {
            prop_assert_eq!(p.to_bits(), coeffs.predict_proba(&x.row(i).to_vec()).unwrap().to_bits());
        }
    }

    #[test]
    fn permutation_importance_parallel_matches_sequential(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let x = Array2::from_shape_fn((60, 4), |_| rng.next_f64() * 2.0 - 1.0);
        let y: Vec<u8> = (0..60).map(|i| u8::from(x[[i, 0]] + 0.3 * (rng.next_f64() - 0.5) > 0.0)).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let config = TrainConfig { max_iters: 200, ..TrainConfig::default() };
        let a = importance_permutation_with(x.view(), &y, &config, seed, Execution::Sequential).unwrap();
        let b = importance_permutation_with(x.view(), &y, &config, seed, Execution::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn boruta_is_reproducible_and_bounded(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed ^ 0x5eed);
        let x = Array2::from_shape_fn((120, 4), |_| rng.next_f64() * 2.0 - 1.0);
        let y: Vec<u8> = (0..120).map(|i| u8::from(x[[i, 0]] - x[[i, 1]] > 0.0)).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let names: Vec<String> = (0..4).map(|j| format!("c{j}")).collect();
        let base = BorutaConfig { n_iterations: 20, seed, execution: Execution::Sequential, ..BorutaConfig::default() };
        let seq = boruta_run(x.view(), &y, &names, &base).unwrap();
        let par = boruta_run(x.view(), &y, &names, &BorutaConfig { execution: Execution::Parallel, ..base.clone() }).unwrap();
        prop_assert_eq!(&seq, &par);
        prop_assert_eq!(seq.len(), 4);
        prop_assert_eq!(seq.iter().map(|d| d.feature_name.clone()).collect::<Vec<_>>(), names);
        prop_assert!(seq.iter().all(|d| d.hits <= 20));
        prop_assert_eq!(seq[0].status, FeatureStatus::Confirmed);
        prop_assert_eq!(seq[1].status, FeatureStatus::Confirmed);
    }
}

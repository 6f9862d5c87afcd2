use bcpredict_core::boruta::{boruta_run, importance_permutation, shadow_augment, BorutaConfig, FeatureStatus};
use bcpredict_core::dataset::pearson_correlation;
use bcpredict_core::logreg::{fit_gradient_descent, sigmoid, TrainConfig, MAX_CONSECUTIVE_HALVINGS};
use bcpredict_core::pipeline::{train, TrainOptions};
use bcpredict_core::predict::{predict, PredictRequest};
use bcpredict_core::rng::SplitMix64;
use bcpredict_core::smote::k_nearest_neighbors;
use bcpredict_core::{Dataset, Error, ModelArtifact};
use ndarray::{concatenate, Array2, Axis};

const WDBC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wdbc.csv");

fn normal(rng: &mut SplitMix64) -> f64 {
    let u1 = 1.0 - rng.next_f64();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn inner_config() -> TrainConfig {
    BorutaConfig::default().inner_train_config
}

#[test]
fn knn_matches_brute_force() {
    let mut rng = SplitMix64::new(200);
    let points = Array2::from_shape_fn((200, 5), |_| normal(&mut rng));
    let table = k_nearest_neighbors(points.view(), 5).unwrap();
    for i in 0..200 {
        let mut all: Vec<(f64, usize)> = (0..200)
            .filter(|&j| j != i)
            .map(|j| {
                let d: f64 = (0..5).map(|c| (points[[i, c]] - points[[j, c]]).powi(2)).sum();
                (d.sqrt(), j)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let expected: Vec<usize> = all[..5].iter().map(|p| p.1).collect();
        assert_eq!(table.indices(i).collect::<Vec<_>>(), expected, "row {i}");
        for (n, (d, _)) in table.neighbors[i].iter().zip(&all) {
            assert!((n.distance - d).abs() < 1e-12);
        }
    }
}

#[test]
fn knn_breaks_distance_ties_by_index() {
    // Row 0 sits at the centre of a square: rows 1..=4 are all at distance 1.
    let points = Array2::from_shape_vec((5, 2), vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]).unwrap();
    let table = k_nearest_neighbors(points.view(), 2).unwrap();
    assert_eq!(table.indices(0).collect::<Vec<_>>(), vec![1, 2]);
}

/// 500 rows: column 0 informative, column 1 independent noise.
fn signal_and_noise() -> (Array2<f64>, Vec<u8>) {
    let mut rng = SplitMix64::new(77);
    let x = Array2::from_shape_fn((500, 2), |_| normal(&mut rng));
    let y = (0..500).map(|i| u8::from(x[[i, 0]] + 0.5 * normal(&mut rng) > 0.0)).collect();
    (x, y)
}

#[test]
fn noise_columns_have_negligible_importance() {
    let (x, y) = signal_and_noise();
    let aug = shadow_augment(x.view(), 5);
    let imp = importance_permutation(aug.view(), &y, &inner_config(), 9).unwrap();
    assert!(imp.real[1].abs() < 0.02, "{imp:?}");
    assert!(imp.shadow.iter().all(|s| s.abs() < 0.02), "{imp:?}");
    // The informative column dominates every other score.
    assert!(imp.real[0] > imp.real[1].max(imp.max_shadow()));
}

#[test]
fn shadows_are_uncorrelated_with_the_label() {
    let (x, y) = signal_and_noise();
    let aug = shadow_augment(x.view(), 5);
    let labels: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let source_r = pearson_correlation(&x.column(0).to_vec(), &labels).unwrap();
    assert!(source_r > 0.5);
    for j in 2..4 {
        let r = pearson_correlation(&aug.column(j).to_vec(), &labels).unwrap();
        assert!(r.abs() < 0.15, "shadow {j}: r = {r}");
    }
}

#[test]
fn duplicated_informative_columns_share_importance() {
    let mut rng = SplitMix64::new(78);
    let x = Array2::from_shape_fn((500, 2), |_| normal(&mut rng));
    let y: Vec<u8> = (0..500).map(|i| u8::from(x[[i, 0]] + x[[i, 1]] + 0.5 * normal(&mut rng) > 0.0)).collect();
    let single = importance_permutation(shadow_augment(x.view(), 5).view(), &y, &inner_config(), 9).unwrap();
    let dup = concatenate(Axis(1), &[x.column(0).insert_axis(Axis(1)), x.view()]).unwrap();
    let double = importance_permutation(shadow_augment(dup.view(), 5).view(), &y, &inner_config(), 9).unwrap();

    // Regression fixtures recorded from this estimator.
    assert!((single.real[0] - 0.2356).abs() < 1e-12, "{single:?}");
    assert!((double.real[0] - 0.0912).abs() < 1e-12, "{double:?}");
    assert!((double.real[1] - 0.0916).abs() < 1e-12, "{double:?}");

    for copy in &double.real[..2] {
        assert!(*copy > 0.0 && *copy < single.real[0]);
        assert!(*copy > double.max_shadow());
    }
}

fn ground_truth(seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = SplitMix64::new(seed);
    let x = Array2::from_shape_fn((500, 6), |_| normal(&mut rng));
    let y = (0..500).map(|i| u8::from(x[[i, 0]] + x[[i, 1]] + x[[i, 2]] + 0.5 * normal(&mut rng) > 0.0)).collect();
    (x, y)
}

#[test]
fn duplicating_a_rejected_feature_never_confirms_a_rejected_one() {
    let names: Vec<String> = (0..7).map(|j| format!("x{j}")).collect();
    let mut checked = 0;
    for seed in 0..4u64 {
        let (x, y) = ground_truth(1000 + seed);
        let config = BorutaConfig { seed, ..BorutaConfig::default() };
        let before = boruta_run(x.view(), &y, &names[..6], &config).unwrap();
        let Some(rejected) = before.iter().position(|d| d.status == FeatureStatus::Rejected) else { continue };
        let widened = concatenate(Axis(1), &[x.view(), x.column(rejected).insert_axis(Axis(1))]).unwrap();
        let after = boruta_run(widened.view(), &y, &names, &config).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!(
                !(b.status == FeatureStatus::Rejected && a.status == FeatureStatus::Confirmed),
                "seed {seed}: {} flipped from Rejected to Confirmed",
                b.feature_name
            );
        }
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn boruta_rejects_too_few_iterations() {
    let (x, y) = signal_and_noise();
    let names = vec!["a".to_string(), "b".to_string()];
    let config = BorutaConfig { n_iterations: 19, ..BorutaConfig::default() };
    assert!(matches!(boruta_run(x.view(), &y, &names, &config), Err(Error::InvalidConfig(_))));
}

#[test]
fn absurd_learning_rate_trips_the_divergence_guard() {
    let (x, y) = signal_and_noise();
    let config = TrainConfig { learning_rate: 1e300, ..TrainConfig::default() };
    match fit_gradient_descent(x.view(), &y, &config) {
        Err(Error::Divergence { iteration, halvings }) => {
            assert_eq!(iteration, 0);
            assert_eq!(halvings, MAX_CONSECUTIVE_HALVINGS);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn halved_learning_rate_is_kept_and_training_recovers() {
    let (x, y) = signal_and_noise();
    let config = TrainConfig { learning_rate: 1e4, max_iters: 2000, ..TrainConfig::default() };
    let (_, trace) = fit_gradient_descent(x.view(), &y, &config).unwrap();
    assert!(trace.final_learning_rate < 1e4);
    assert!(trace.cost_history.windows(2).all(|w| w[1] <= w[0]));
}

fn small_artifact() -> ModelArtifact {
    let data = Dataset::from_csv_path(WDBC).unwrap();
    train(&data, &TrainOptions { boruta: None, ..TrainOptions::default() }).unwrap().artifact
}

#[test]
fn artifact_round_trip_preserves_predictions() {
    let artifact = small_artifact();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    artifact.save(&path).unwrap();
    let loaded = ModelArtifact::load(&path).unwrap();
    assert_eq!(loaded, artifact);

    let mut rng = SplitMix64::new(100);
    for _ in 0..100 {
        let request = PredictRequest {
            features: artifact
                .feature_summary
                .iter()
                .map(|s| (s.name.clone(), s.min + (s.max - s.min) * rng.next_f64()))
                .collect(),
        };
        let a = predict(&artifact, &request).unwrap();
        let b = predict(&loaded, &request).unwrap();
        assert!((a.probability - b.probability).abs() <= 1e-15);
        assert_eq!(a.label, b.label);
    }
}

#[test]
fn prediction_at_the_training_means_is_sigmoid_of_the_intercept() {
    let artifact = small_artifact();
    let request = PredictRequest {
        features: artifact.feature_names.iter().cloned().zip(artifact.standardization.means.iter().copied()).collect(),
    };
    let response = predict(&artifact, &request).unwrap();
    assert!((response.probability - sigmoid(artifact.coefficients.intercept)).abs() <= 1e-15);
}

#[test]
fn loading_rejects_arity_mismatch_and_unknown_schema() {
    let artifact = small_artifact();
    let mut value: serde_json::Value = serde_json::from_str(&artifact.to_json().unwrap()).unwrap();
    value["coefficients"]["weights"].as_array_mut().unwrap().pop();
    let err = ModelArtifact::from_json(&value.to_string()).unwrap_err();
    assert!(matches!(err, Error::InvalidArtifact(_)), "{err}");
    assert!(err.to_string().contains("coefficients.weights"));

    let mut value: serde_json::Value = serde_json::from_str(&artifact.to_json().unwrap()).unwrap();
    value["schema_version"] = 999.into();
    let err = ModelArtifact::from_json(&value.to_string()).unwrap_err();
    assert!(matches!(err, Error::UnsupportedSchema(999)));
    assert!(err.to_string().contains("unsupported schema"));
}

#[test]
fn missing_artifact_file_is_an_io_error() {
    let err = ModelArtifact::load("/nonexistent/model.json").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

use loadarch_core::archetype::{associate, feature_vocabulary, fit_archetype_model, TrainingSet};
use loadarch_core::archetype::{fit_softmax, softmax, LogisticConfig, Objective};
use loadarch_core::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(rows: usize, cols: usize, classes: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let y: Vec<usize> = (0..rows).map(|i| i % classes).collect();
    (Matrix::from_vec(rows, cols, data).unwrap(), y)
}

#[test]
fn gradient_matches_central_differences() {
    let (x, y) = fixture(10, 4, 3, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for lambda in [0.0, 1.0] {
        let obj = Objective {
            x: &x,
            y: &y,
            n_classes: 3,
            lambda,
            sample_weights: None,
        };
        let theta: Vec<f64> = (0..obj.dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (_, grad) = obj.loss_and_gradient(&theta);
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (obj.loss_and_gradient(&plus).0 - obj.loss_and_gradient(&minus).0) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(1e-6);
            assert!(
                rel < 1e-5,
                "component {j}: analytic {} vs numeric {fd}",
                grad[j]
            );
        }
    }
}

#[test]
fn weighted_gradient_matches_central_differences() {
    let (x, y) = fixture(10, 3, 2, 3);
    let w: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 / 10.0).collect();
    let obj = Objective {
        x: &x,
        y: &y,
        n_classes: 2,
        lambda: 0.5,
        sample_weights: Some(&w),
    };
    let theta: Vec<f64> = (0..obj.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
    let (_, grad) = obj.loss_and_gradient(&theta);
    for j in 0..theta.len() {
        let mut p = theta.clone();
        let mut m = theta.clone();
        p[j] += 1e-5;
        m[j] -= 1e-5;
        let fd = (obj.loss_and_gradient(&p).0 - obj.loss_and_gradient(&m).0) / 2e-5;
        assert!((grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(1e-6) < 1e-5);
    }
}

#[test]
fn loss_never_increases() {
    let (x, y) = fixture(60, 5, 4, 1);
    let fit = fit_softmax(&x, &y, 4, &LogisticConfig::default()).unwrap();
    assert!(fit.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(fit.converged);
}

#[test]
fn probabilities_sum_to_one() {
    let (x, y) = fixture(40, 5, 3, 2);
    let fit = fit_softmax(&x, &y, 3, &LogisticConfig::default()).unwrap();
    for row in x.iter_rows() {
        let s: f64 = fit.predict_proba(row).iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
    let mut extreme = [1000.0, -1000.0, 0.0];
    softmax(&mut extreme);
    assert!((extreme.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

/// One-hot training set over the full vocabulary where the first column is
/// set on every row and the label depends only on a day-type column.
fn constant_feature_set() -> TrainingSet {
    let features = feature_vocabulary();
    let d = features.len();
    let day0 = features
        .iter()
        .position(|f| f.attribute() == "daytype")
        .unwrap();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..140 {
        let mut row = vec![0.0; d];
        row[0] = 1.0;
        let day = i % 7;
        row[day0 + day] = 1.0;
        data.extend(row);
        labels.push(if day < 5 { 10 } else { 20 } + i % 2);
    }
    TrainingSet {
        features,
        x: Matrix::from_vec(140, d, data).unwrap(),
        labels,
        rows: (0..140).collect(),
        skipped_unsurveyed: 0,
    }
}

#[test]
fn constant_feature_has_unit_odds_ratio() {
    let ts = constant_feature_set();
    let model = fit_archetype_model(&ts, &LogisticConfig::default()).unwrap();
    for &c in &model.clusters {
        let or = model.odds_ratio(ts.features[0], c).unwrap();
        assert!((or - 1.0).abs() < 0.05, "cluster {c}: {or}");
    }
}

#[test]
fn raising_the_threshold_never_adds_associations() {
    let ts = constant_feature_set();
    let model = fit_archetype_model(&ts, &LogisticConfig::default()).unwrap();
    let mut previous = usize::MAX;
    for t in [0.5, 0.9, 1.0, 1.05, 1.2, 2.0, 5.0] {
        let n = associate(&model, t).len();
        assert!(n <= previous);
        previous = n;
    }
}

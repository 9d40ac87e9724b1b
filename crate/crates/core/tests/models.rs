use std::io::Cursor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use retweet_guard::models::ensemble::AdaBoost;
use retweet_guard::models::logistic::{LogisticParams, LogisticRegression, Objective};
use retweet_guard::models::{self, read_model, write_model, Matrix, ModelError, Standardizer, TrainedModel};
use retweet_guard::{ClassMode, ModelKind, ModelSpec};

fn classes(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("c{c}")).collect()
}

/// Gaussian blobs with unit variance and centres `separation` apart along
/// every axis.
fn blobs(n_per_class: usize, k: usize, dim: usize, separation: f64, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for c in 0..k {
        for _ in 0..n_per_class {
            rows.push((0..dim).map(|j| separation * ((c + j) % k) as f64 + noise.sample(&mut rng)).collect::<Vec<_>>());
            y.push(c);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn fit(kind: ModelKind, x: &Matrix, y: &[usize], k: usize, seed: u64) -> TrainedModel {
    let mode = if k == 2 { ClassMode::Binary } else { ClassMode::FourClass };
    models::train(&ModelSpec::new(kind, mode, seed), x, y, &classes(k)).unwrap()
}

fn accuracy(model: &TrainedModel, x: &Matrix, y: &[usize]) -> f64 {
    let preds = model.predict_batch(x).unwrap();
    preds.iter().zip(y).filter(|(p, &t)| p.label == t).count() as f64 / y.len() as f64
}

#[test]
fn every_kind_fits_well_separated_blobs() {
    let (x, y) = blobs(100, 2, 5, 10.0, 1);
    for kind in ModelKind::ALL {
        let model = fit(kind, &x, &y, 2, 3);
        let acc = accuracy(&model, &x, &y);
        assert!(acc >= 0.99, "{}: training accuracy {acc}", kind.display_name());
    }
}

#[test]
fn confidences_sum_to_one() {
    let (x, y) = blobs(30, 4, 6, 1.5, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in ModelKind::ALL {
        let model = fit(kind, &x, &y, 4, 4);
        for _ in 0..100 {
            let row: Vec<f64> = (0..6).map(|_| rng.random_range(-10.0..10.0)).collect();
            let p = model.predict(&row).unwrap();
            let s: f64 = p.confidences.iter().sum();
            assert!((s - 1.0).abs() <= 1e-9, "{}: sum {s}", kind.display_name());
            assert!(p.confidences.iter().all(|c| (0.0..=1.0).contains(c)));
            assert_eq!(p.label, models::argmax(&p.confidences));
        }
    }
}

#[test]
fn save_load_round_trip_for_every_kind() {
    let (x, y) = blobs(25, 4, 5, 2.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let probes: Vec<Vec<f64>> = (0..100).map(|_| (0..5).map(|_| rng.random_range(-5.0..10.0)).collect()).collect();
    for kind in ModelKind::ALL {
        let model = fit(kind, &x, &y, 4, 5);
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back = read_model(Cursor::new(&buf)).unwrap();
        assert_eq!(back, model, "{}", kind.display_name());
        for row in &probes {
            assert_eq!(back.predict(row).unwrap(), model.predict(row).unwrap());
        }
    }
}

#[test]
fn damaged_model_files_are_rejected() {
    let (x, y) = blobs(10, 2, 3, 3.0, 4);
    let model = fit(ModelKind::NaiveBayes, &x, &y, 2, 0);
    let mut buf = Vec::new();
    write_model(&model, &mut buf).unwrap();

    let truncated = &buf[..buf.len() / 2];
    assert!(matches!(read_model(Cursor::new(truncated)), Err(ModelError::Corrupt(_))));

    let mut doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    doc["version"] = serde_json::json!(99);
    let newer = serde_json::to_vec(&doc).unwrap();
    assert!(matches!(
        read_model(Cursor::new(newer)),
        Err(ModelError::Version { found: 99, .. })
    ));

    doc["version"] = serde_json::json!(1);
    doc["format"] = serde_json::json!("something-else");
    assert!(matches!(
        read_model(Cursor::new(serde_json::to_vec(&doc).unwrap())),
        Err(ModelError::Corrupt(_))
    ));
}

#[test]
fn model_files_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = blobs(10, 2, 3, 3.0, 5);
    let model = fit(ModelKind::RandomForest, &x, &y, 2, 8);
    let path = dir.path().join("m.json");
    models::save_model(&model, &path).unwrap();
    assert_eq!(models::load_model(&path).unwrap(), model);
}

#[test]
fn standardized_training_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| vec![rng.random_range(0.0..1000.0), rng.random_range(-3.0..3.0) * 1e-3, 7.0, rng.random()])
        .collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let z = Standardizer::fit(&x).transform(&x);
    for j in 0..4 {
        let col = z.column(j);
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let v = col.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / col.len() as f64;
        assert!(m.abs() < 1e-6, "column {j} mean {m}");
        if j == 2 {
            assert!(col.iter().all(|&c| c == 0.0));
        } else {
            assert!((v - 1.0).abs() < 1e-6, "column {j} variance {v}");
        }
    }
}

#[test]
fn lr_gradient_on_ten_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rows: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let y = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 1];
    let x = Matrix::from_rows(&rows).unwrap();
    let obj = Objective::new(&x, &y, 3, 1e-4);
    let w: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut g = vec![0.0; w.len()];
    let f0 = obj.value_and_gradient(&w, &mut g);
    assert!((f0 - obj.value(&w)).abs() < 1e-15);
    let h = 1e-5;
    for i in 0..w.len() {
        let (mut a, mut b) = (w.clone(), w.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (obj.value(&a) - obj.value(&b)) / (2.0 * h);
        let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs());
        assert!(rel <= 1e-4, "component {i}: analytic {} vs numeric {fd}", g[i]);
    }
}

#[test]
fn lr_converges_below_gradient_tolerance() {
    let (x, y) = blobs(40, 3, 3, 1.0, 13);
    let z = Standardizer::fit(&x).transform(&x);
    let lr = LogisticRegression::fit(
        &z,
        &y,
        3,
        LogisticParams {
            lambda: 1e-4,
            tolerance: 1e-6,
            max_iterations: 5000,
        },
    );
    assert!(lr.gradient_norm < 1e-6, "gradient norm {} after {} iterations", lr.gradient_norm, lr.iterations);
}

#[test]
fn adaboost_training_error_within_exponential_bound() {
    // positive quadrant of a 12x12 grid: no single stump separates it
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..12 {
        for j in 0..12 {
            rows.push(vec![i as f64, j as f64]);
            y.push(usize::from(i >= 5 && j >= 7));
        }
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let z = Standardizer::fit(&x).transform(&x);
    let boost = AdaBoost::fit(&z, &y, 2, 100, 0);
    assert!(boost.rounds() > 1);
    let errors = boost.staged_errors(&z, &y);
    let mut bound = 1.0;
    for (t, stump) in boost.stumps().iter().enumerate() {
        let eps = 1.0 / (1.0 + stump.alpha.exp());
        assert!(eps < 0.5);
        let half = stump.alpha / 2.0;
        let z_t = eps * half.exp() + (1.0 - eps) * (-half).exp();
        assert!(z_t < 1.0);
        bound *= z_t;
        assert!(errors[t] <= bound + 1e-12, "round {t}: error {} above bound {bound}", errors[t]);
    }
    assert_eq!(*errors.last().unwrap(), 0.0);
}

#[test]
fn relabeling_permutes_predictions() {
    // unequal class sizes keep leaf majorities free of count ties
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (c, size) in [30usize, 45, 60, 75].into_iter().enumerate() {
        for _ in 0..size {
            rows.push((0..4).map(|j| 6.0 * ((c + j) % 4) as f64 + rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            y.push(c);
        }
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let perm = [2usize, 0, 3, 1];
    let y_perm: Vec<usize> = y.iter().map(|&c| perm[c]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let probes: Vec<Vec<f64>> = (0..50)
        .map(|i| {
            let c = i % 4;
            (0..4).map(|j| 6.0 * ((c + j) % 4) as f64 + rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    for kind in ModelKind::ALL {
        let a = fit(kind, &x, &y, 4, 7);
        let b = fit(kind, &x, &y_perm, 4, 7);
        for row in &probes {
            let pa = a.predict(row).unwrap().label;
            let pb = b.predict(row).unwrap().label;
            assert_eq!(perm[pa], pb, "{}", kind.display_name());
        }
    }
}

#[test]
fn input_validation() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    let spec = ModelSpec::new(ModelKind::Knn, ClassMode::Binary, 0);
    assert!(matches!(models::train(&spec, &x, &[0, 0], &classes(2)), Err(ModelError::SingleClass)));
    let bad = Matrix::from_rows(&[vec![1.0], vec![f64::NAN]]).unwrap();
    assert!(matches!(models::train(&spec, &bad, &[0, 1], &classes(2)), Err(ModelError::NonFinite)));
    let model = models::train(&spec, &x, &[0, 1], &classes(2)).unwrap();
    assert!(matches!(model.predict(&[1.0, 2.0]), Err(ModelError::Dimension { expected: 1, found: 2 })));
}

#[test]
fn same_seed_same_parameters() {
    let (x, y) = blobs(30, 2, 4, 1.0, 40);
    for kind in ModelKind::ALL {
        assert_eq!(fit(kind, &x, &y, 2, 99), fit(kind, &x, &y, 2, 99), "{}", kind.display_name());
    }
}

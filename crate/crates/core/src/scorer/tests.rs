use super::*;
use crate::ir::{tokenize, Lang};
use proptest::prelude::{any, prop_assert, proptest};
use rand::Rng;

fn fv(dim: usize, entries: &[(u32, f64)]) -> FeatureVector {
    FeatureVector { dim, entries: entries.to_vec() }
}

fn random_model(classes: usize, dim: usize, seed: u64, l2: f64) -> ModelState {
    ModelState::new(classes, dim, Hyper { seed, init_scale: 0.5, l2, ..Hyper::default() }).unwrap()
}

#[test]
fn featurize_matches_golden() {
    let golden: serde_json::Value =
        serde_json::from_str(include_str!("../../tests/golden/featurize_d16.json")).unwrap();
    let tokens = tokenize(golden["source"].as_str().unwrap(), Lang::JavaLite).unwrap();
    assert_eq!(tokens.len(), 5);
    let x = featurize(&tokens, 16);
    let expected: Vec<(u32, f64)> = serde_json::from_value(golden["entries"].clone()).unwrap();
    assert_eq!(x.entries, expected);
}

#[test]
fn featurize_basics() {
    assert!(featurize(&[], 1024).is_empty());
    let a = tokenize("a b c d", Lang::JavaLite).unwrap();
    let b = tokenize("d c b a", Lang::JavaLite).unwrap();
    let (xa, xb) = (featurize(&a, 1 << 12), featurize(&b, 1 << 12));
    assert_eq!(xa.mass(), xb.mass());
    assert!(xa.entries.iter().all(|(i, v)| (*i as usize) < 1 << 12 && *v > 0.0));
    // Layout tokens carry no features.
    let py = tokenize("def f():\n    return 1\n", Lang::PyLite).unwrap();
    let content = py.iter().filter(|t| !t.kind.is_layout()).count();
    assert_eq!(featurize(&py, 1 << 12).mass(), (2 * content - 1) as f64);
}

#[test]
fn zero_model_is_uniform() {
    for c in [2usize, 4, 10] {
        let m = ModelState::zeros(c, 64);
        let p = loss_of(&m, &fv(64, &[(3, 2.0), (9, 1.0)]), c - 1).unwrap();
        assert!((p.loss - (c as f64).ln()).abs() < 1e-12);
        assert!((p.max_probability - 1.0 / c as f64).abs() < 1e-12);
    }
    assert!((ModelState::zeros(2, 8).weights.len() - 16) == 0);
}

#[test]
fn shape_errors() {
    let m = ModelState::zeros(3, 16);
    assert!(matches!(loss_of(&m, &fv(32, &[]), 0), Err(ScorerError::DimensionMismatch(_))));
    assert!(matches!(loss_of(&m, &fv(16, &[(16, 1.0)]), 0), Err(ScorerError::DimensionMismatch(_))));
    assert!(matches!(loss_of(&m, &fv(16, &[]), 3), Err(ScorerError::DimensionMismatch(_))));
    assert!(ModelState::new(1, 16, Hyper::default()).is_err());
    assert!(ModelState::new(2, 12, Hyper::default()).is_err());
    let mut m = m;
    assert_eq!(train_step(&mut m, &[]), Err(ScorerError::EmptyBatch));
}

/// Scalar re-implementation of cross-entropy, written from the definition.
fn reference_loss(m: &ModelState, x: &FeatureVector, y: usize) -> (f64, f64) {
    let mut z = vec![0.0; m.classes];
    for (c, zc) in z.iter_mut().enumerate() {
        for (i, v) in &x.entries {
            *zc += m.weights[c * m.dim + *i as usize] * v;
        }
    }
    let denom: f64 = z.iter().map(|v| v.exp()).sum();
    let probs: Vec<f64> = z.iter().map(|v| v.exp() / denom).collect();
    (-probs[y].ln(), probs.iter().cloned().fold(0.0, f64::max))
}

#[test]
fn trained_model_matches_reference() {
    let mut m = random_model(3, 32, 4, 1e-4);
    let data: Vec<(FeatureVector, usize)> =
        (0..12).map(|i| (fv(32, &[(i % 32, 1.0), ((i * 7 + 3) % 32, 2.0)]), (i % 3) as usize)).collect();
    for _ in 0..40 {
        let batch: Vec<(&FeatureVector, usize)> = data.iter().map(|(x, y)| (x, *y)).collect();
        train_step(&mut m, &batch).unwrap();
    }
    let held_out = fv(32, &[(5, 1.0), (17, 3.0), (30, 1.0)]);
    for y in 0..3 {
        let p = loss_of(&m, &held_out, y).unwrap();
        let (loss, max_p) = reference_loss(&m, &held_out, y);
        assert!((p.loss - loss).abs() < 1e-12);
        assert!((p.max_probability - max_p).abs() < 1e-12);
    }
}

#[test]
fn single_point_loss_decreases() {
    for optimizer in [Optimizer::Adam, Optimizer::Sgd] {
        let hyper = Hyper { optimizer, learning_rate: if optimizer == Optimizer::Sgd { 0.1 } else { 1e-3 }, ..Hyper::default() };
        let mut m = ModelState::new(2, 16, hyper).unwrap();
        let x = fv(16, &[(1, 1.0), (4, 2.0)]);
        let mut prev = loss_of(&m, &x, 1).unwrap().loss;
        for _ in 0..100 {
            train_step(&mut m, &[(&x, 1)]).unwrap();
            let now = loss_of(&m, &x, 1).unwrap().loss;
            assert!(now < prev, "{optimizer:?}");
            prev = now;
        }
        assert_eq!(m.step_count, 100);
    }
}

#[test]
fn empty_features_only_shrink() {
    let hyper = Hyper { optimizer: Optimizer::Sgd, l2: 0.1, learning_rate: 0.5, seed: 2, init_scale: 1.0 };
    let mut m = ModelState::new(3, 8, hyper).unwrap();
    let before = m.weights.clone();
    train_step(&mut m, &[(&fv(8, &[]), 2)]).unwrap();
    for (a, b) in before.iter().zip(&m.weights) {
        assert!((b - a * (1.0 - 0.05)).abs() < 1e-15);
    }
    let mut adam = random_model(3, 8, 9, 0.1);
    let before = adam.weights.clone();
    train_step(&mut adam, &[(&fv(8, &[]), 0)]).unwrap();
    for (a, b) in before.iter().zip(&adam.weights) {
        assert!(b.abs() < a.abs() && b.signum() == a.signum());
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let m = random_model(3, 8, 1, 1e-2);
    let batch_x: Vec<FeatureVector> =
        (0..4).map(|_| fv(8, &[(rng.random_range(0..4), 1.0), (rng.random_range(4..8), rng.random_range(0.5..2.0))])).collect();
    let batch: Vec<(&FeatureVector, usize)> = batch_x.iter().enumerate().map(|(i, x)| (x, i % 3)).collect();
    let g = gradient(&m, &batch).unwrap();
    for _ in 0..5 {
        let k = rng.random_range(0..24);
        let h = 1e-5;
        let (mut up, mut down) = (m.clone(), m.clone());
        up.weights[k] += h;
        down.weights[k] -= h;
        let fd = (objective(&up, &batch).unwrap() - objective(&down, &batch).unwrap()) / (2.0 * h);
        let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-8);
        assert!(rel < 1e-4, "coordinate {k}: {fd} vs {}", g[k]);
    }
}

#[test]
fn embed_is_linear_and_golden() {
    let x = fv(16, &[(2, 1.0), (7, 2.0), (9, 3.0), (10, 1.0), (15, 2.0)]);
    assert_eq!(embed(&ModelState::zeros(3, 16), &x).unwrap(), vec![0.0; 3]);
    let mut m = ModelState::zeros(3, 16);
    for c in 0..3 {
        for i in 0..16 {
            m.weights[c * 16 + i] = 0.5 * ((((c + 1) * (i + 1)) % 7) as f64 - 3.0);
        }
    }
    let e = embed(&m, &x).unwrap();
    assert_eq!(e, vec![-2.5, 5.0, 2.0]);
    let mut doubled = m.clone();
    doubled.weights.iter_mut().for_each(|w| *w *= 2.0);
    let e2 = embed(&doubled, &x).unwrap();
    assert_eq!(e2, e.iter().map(|v| v * 2.0).collect::<Vec<_>>());
    assert_eq!(argmax(&e2), argmax(&e));
}

#[test]
fn builtin_batch_scores_in_order() {
    let m = ModelState::zeros(2, 1 << 10);
    let reqs: Vec<ScoreRequest> = (0..3)
        .map(|i| ScoreRequest { id: format!("c{i}"), text: format!("int x{i} = {i};"), lang: Lang::JavaLite, label: i % 2 })
        .collect();
    let out = score_batch(&mut ScorerBackend::BuiltIn, &m, &reqs).unwrap();
    assert_eq!(out.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["c0", "c1", "c2"]);
    assert!(out.iter().all(|s| (s.loss - 2f64.ln()).abs() < 1e-12));
}

#[test]
fn training_is_bit_stable() {
    let run = || {
        let mut m = random_model(4, 64, 3, 1e-5);
        let xs: Vec<FeatureVector> = (0..10).map(|i| fv(64, &[(i, 1.0), (i * 5 % 64, 1.0)])).collect();
        for chunk in xs.chunks(3) {
            let batch: Vec<(&FeatureVector, usize)> = chunk.iter().map(|x| (x, x.entries[0].0 as usize % 4)).collect();
            train_step(&mut m, &batch).unwrap();
        }
        m.weights
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn softmax_is_normalised(logits in proptest::collection::vec(-500.0f64..500.0, 2..12)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loss_is_nonnegative(seed in any::<u64>(), entries in proptest::collection::vec((0u32..32, 0.5f64..4.0), 0..10), y in 0usize..5) {
        let m = random_model(5, 32, seed, 0.0);
        let mut x = entries.clone();
        x.sort_by_key(|e| e.0);
        x.dedup_by_key(|e| e.0);
        let p = loss_of(&m, &fv(32, &x), y).unwrap();
        prop_assert!(p.loss >= 0.0 && p.max_probability > 0.0 && p.max_probability <= 1.0);
        let zero = loss_of(&ModelState::zeros(5, 32), &fv(32, &x), y).unwrap();
        prop_assert!((zero.loss - 5f64.ln()).abs() < 1e-12);
    }
}

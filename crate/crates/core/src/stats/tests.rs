use super::*;
use proptest::prelude::{prop_assert, proptest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pearson via the raw-sums formula, independent of the centered form.
fn pearson_raw_sums(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Two-sided p by enumerating all 2^n sign assignments of the ranks.
fn enumerate_signs(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    // Average ranks by counting, O(n^2).
    let ranks: Vec<f64> = abs
        .iter()
        .map(|v| {
            let below = abs.iter().filter(|w| *w < v).count() as f64;
            let equal = abs.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let w: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let dev = (w - total / 2.0).abs();
    let n = d.len();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (s - total / 2.0).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    (w.min(total - w), extreme as f64 / (1u64 << n) as f64)
}

#[test]
fn pearson_examples() {
    assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    let (x, y) = ([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 5.0]);
    assert!((pearson(&x, &y).unwrap() - pearson_raw_sums(&x, &y)).abs() < 1e-12);
    assert_eq!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFewObservations { needed: 3, got: 2 }));
    assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::DegenerateVariance));
    assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(3, 2)));
}

#[test]
fn pearson_p_value_matches_reference() {
    // scipy.stats.pearsonr on the same data.
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let y = [1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 5.0, 9.0];
    let c = pearson_test(&x, &y).unwrap();
    assert!((c.r - 0.8908708063747477).abs() < 1e-12);
    assert!((c.p_value - 0.002988973780339263).abs() < 1e-9);
    assert!(pearson_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().p_value < 1e-6);
}

#[test]
fn pearson_agrees_with_raw_sums_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * rng.random_range(-1.0..1.0) + rng.random_range(-5.0..5.0)).collect();
        assert!((pearson(&x, &y).unwrap() - pearson_raw_sums(&x, &y)).abs() < 1e-12);
    }
}

#[test]
fn wilcoxon_edge_cases() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(wilcoxon_signed_rank(&a, &a), Err(StatsError::AllZeroDifferences));
    assert_eq!(wilcoxon_signed_rank(&a, &a[..4]), Err(StatsError::LengthMismatch(5, 4)));
    assert!(matches!(
        wilcoxon_signed_rank(&a, &[1.0, 2.0, 3.0, 3.0, 4.0]),
        Err(StatsError::TooFewObservations { .. })
    ));
    let high: Vec<f64> = (0..10).map(|i| i as f64 + 1.0).collect();
    let low: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
    let r = wilcoxon_signed_rank(&high, &low).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!(r.exact);
    assert!((r.p_value - 2.0 / 1024.0).abs() < 1e-15);
}

#[test]
fn wilcoxon_n6_matches_enumeration() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let r = wilcoxon_signed_rank(&a, &[0.0; 6]).unwrap();
    assert!((r.p_value - 0.03125).abs() < 1e-15);
    let a = [4.1, 2.0, 3.3, 5.0, 1.2, 2.8];
    let b = [3.0, 2.6, 3.3 - 1.1, 4.0, 1.9, 2.0];
    let (stat, p) = enumerate_signs(&a, &b);
    let r = wilcoxon_signed_rank(&a, &b).unwrap();
    assert_eq!(r.statistic, stat);
    assert!((r.p_value - p).abs() < 1e-12);
}

#[test]
fn wilcoxon_exact_matches_enumeration_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let n = rng.random_range(5..=12);
        // Integer-valued data produces tied ranks and zero differences.
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        match wilcoxon_signed_rank(&a, &b) {
            Ok(r) => {
                let (stat, p) = enumerate_signs(&a, &b);
                assert_eq!(r.statistic, stat);
                assert!((r.p_value - p).abs() < 1e-10, "{a:?} {b:?}");
            }
            Err(StatsError::AllZeroDifferences | StatsError::TooFewObservations { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn wilcoxon_normal_approximation_matches_reference() {
    // scipy.stats.wilcoxon(method="approx", correction=False); one zero
    // difference and several ties.
    let a = [3.1, 2.4, 5.6, 1.2, 4.4, 6.0, 2.2, 3.3, 4.9, 5.5, 1.8, 2.9, 3.7, 4.1, 6.3, 2.6, 3.9, 5.0, 1.4, 4.6];
    let b = [2.0, 2.9, 4.1, 1.9, 3.0, 5.1, 2.2, 2.5, 4.0, 6.2, 1.1, 2.0, 3.1, 3.3, 5.0, 2.9, 3.5, 4.2, 1.0, 3.6];
    let r = wilcoxon_signed_rank(&a, &b).unwrap();
    assert!(!r.exact);
    assert_eq!(r.n, 19);
    assert_eq!(r.statistic, 19.5);
    assert!((r.p_value - 0.002362330299873484).abs() < 1e-9);
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    // Anisotropic so the leading directions are well separated.
    (0..rows).map(|_| (0..cols).map(|j| rng.random_range(-1.0..1.0) * (cols - j) as f64).collect()).collect()
}

fn variance_along(data: &[Vec<f64>], dir: &[f64]) -> f64 {
    let proj: Vec<f64> = data.iter().map(|r| dot(r, dir)).collect();
    let m = proj.iter().sum::<f64>() / proj.len() as f64;
    proj.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (proj.len() - 1) as f64
}

#[test]
fn pca_components_are_orthonormal_and_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = random_matrix(&mut rng, 50, 8);
    let pca = pca_project(&data, 2).unwrap();
    let (c0, c1) = (&pca.components[0], &pca.components[1]);
    assert!((dot(c0, c0) - 1.0).abs() < 1e-8);
    assert!((dot(c1, c1) - 1.0).abs() < 1e-8);
    assert!(dot(c0, c1).abs() < 1e-8);
    let v0 = variance_along(&data, c0);
    let v1 = variance_along(&data, c1);
    assert!((v0 - pca.variances[0]).abs() < 1e-8 * v0);
    assert!(v0 >= v1);
    for _ in 0..100 {
        let mut u: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut u);
        assert!(v0 >= variance_along(&data, &u));
    }
    // Projections are the centered data dotted with the axes.
    for (p, row) in pca.points.iter().zip(&data) {
        let centered: Vec<f64> = row.iter().zip(&pca.mean).map(|(x, m)| x - m).collect();
        assert!((p[0] - dot(&centered, c0)).abs() < 1e-12);
    }
}

#[test]
fn pca_degenerate_cases() {
    let two = pca_project(&[vec![1.0, 1.0, 0.0], vec![3.0, 3.0, 0.0]], 2).unwrap();
    assert!((two.points[0][0] + two.points[1][0]).abs() < 1e-12);
    assert!(two.points.iter().all(|p| p[1].abs() < 1e-12));
    assert!(dot(&two.components[0], &two.components[1]).abs() < 1e-8);
    assert_eq!(pca_project(&[vec![2.0, 2.0], vec![2.0, 2.0]], 2), Err(StatsError::DegenerateInput));
    assert!(pca_project(&[vec![1.0, 2.0]], 2).is_err());
}

fn distance_oracle(points: &[(Vec<f64>, usize)]) -> f64 {
    let mut all = Vec::new();
    for (p, a) in points {
        for (q, b) in points {
            if a != b {
                all.push(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
    }
    // Every unordered pair appears twice.
    all.iter().sum::<f64>() / all.len() as f64
}

#[test]
fn interclass_distance_examples() {
    assert_eq!(interclass_distance(&[(vec![0.0, 0.0], 0), (vec![3.0, 4.0], 1)]).unwrap(), 5.0);
    assert_eq!(interclass_distance(&[(vec![1.0, 1.0], 0), (vec![1.0, 1.0], 1)]).unwrap(), 0.0);
    assert_eq!(interclass_distance(&[(vec![1.0, 1.0], 0), (vec![2.0, 1.0], 0)]), Err(StatsError::SingleClass));
    let nine: Vec<(Vec<f64>, usize)> =
        (0..9).map(|i| (vec![(i * 3 % 7) as f64, (i * i % 5) as f64 * 0.5], i % 3)).collect();
    assert!((interclass_distance(&nine).unwrap() - distance_oracle(&nine)).abs() < 1e-12);
}

#[test]
fn average_ranks_share_ties() {
    assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
}

#[test]
fn population_std() {
    let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
    assert_eq!((m, s), (5.0, 2.0));
}

proptest! {
    #[test]
    fn pearson_is_bounded(x in proptest::collection::vec(-1e3f64..1e3, 3..30), shift in -5.0f64..5.0) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.sin() + shift * i as f64).collect();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn wilcoxon_p_is_a_probability(a in proptest::collection::vec(-5i32..5, 5..30), b in proptest::collection::vec(-5i32..5, 5..30)) {
        let n = a.len().min(b.len());
        let fa: Vec<f64> = a[..n].iter().map(|v| *v as f64).collect();
        let fb: Vec<f64> = b[..n].iter().map(|v| *v as f64).collect();
        if let Ok(r) = wilcoxon_signed_rank(&fa, &fb) {
            prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
            prop_assert!(r.statistic >= 0.0 && r.statistic <= (r.n * (r.n + 1)) as f64 / 4.0);
        }
    }
}

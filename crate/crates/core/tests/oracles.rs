mod common;

use proptest::prelude::*;
use rand::Rng;
use tsrep::eval::{
    default_gamma, dtw_classify, dtw_distance_1d, kmeans, knn1_classify, linreg_mse, linreg_train, svm_train,
    svm_train_binary, SmoOptions,
};
use tsrep::nn::Tensor3;
use tsrep::rng::seeded;

/// Unoptimized DTW: squared costs, full table, no early abandoning.
fn dtw_reference(x: &[f64], y: &[f64]) -> f64 {
    let (n, m) = (x.len(), y.len());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let cost = (x[i - 1] - y[j - 1]).powi(2);
            d[i][j] = cost + d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
        }
    }
    d[n][m]
}

fn points(rng: &mut tsrep::rng::SeededRng, n: usize, d: usize, spread: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect()).collect()
}

#[test]
fn smo_matches_the_exhaustive_dual_across_seeds() {
    for seed in 0..20 {
        let mut rng = seeded(seed);
        let n = rng.random_range(2..=6);
        let x = points(&mut rng, n, 3, 1.5);
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c = 10f64.powf(rng.random_range(-1.0..1.5));
        let gamma = default_gamma(&x);
        let smo = svm_train_binary(&x, &y, c, gamma, SmoOptions::default()).unwrap();
        let oracle = common::exhaustive_svm_dual(&x, &y, c, gamma);
        assert!(
            (smo.model.dual_objective - oracle).abs() <= 1e-6,
            "seed {seed}: smo {} oracle {oracle}",
            smo.model.dual_objective
        );
    }
}

#[test]
fn on_demand_kernel_rows_match_the_cached_matrix() {
    // Above the caching threshold SMO recomputes kernel rows; a duplicated
    // copy of a small problem must give the same decision values.
    let mut rng = seeded(5);
    let base = points(&mut rng, 6, 2, 2.0);
    let labels: Vec<String> = (0..6).map(|i| ["a", "b"][i % 2].to_string()).collect();
    let small = svm_train(&base, &labels, 1.0, 0.5).unwrap();
    let mut big = Vec::new();
    let mut big_labels = Vec::new();
    for _ in 0..1001 {
        big.extend(base.iter().cloned());
        big_labels.extend(labels.iter().cloned());
    }
    let large = svm_train(&big, &big_labels, 1.0 / 1001.0, 0.5).unwrap();
    let probe = points(&mut rng, 20, 2, 2.0);
    for p in &probe {
        let a = small.machines[0].model.decision(p);
        let b = large.machines[0].model.decision(p);
        assert!((a - b).abs() < 1e-2, "{a} vs {b}");
    }
}

#[test]
fn kmeans_on_separated_blobs_reaches_the_optimum() {
    for seed in 0..20u64 {
        let mut rng = seeded(seed);
        let k = rng.random_range(1..=3);
        let mut x = Vec::new();
        for c in 0..k {
            let n = rng.random_range(1..=8 / k);
            for _ in 0..n {
                x.push(vec![c as f64 * 20.0 + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            }
        }
        let got = kmeans(&x, k, seed).unwrap().inertia;
        let best = common::exhaustive_kmeans(&x, k);
        assert!((got - best).abs() <= 1e-9 * best.max(1.0), "seed {seed}: {got} vs {best}");
    }
}

#[test]
fn linreg_converges_to_least_squares() {
    let mut rng = seeded(17);
    let x = points(&mut rng, 60, 3, 2.0);
    let y: Vec<f64> = x
        .iter()
        .map(|r| 1.5 * r[0] - 0.5 * r[1] + 0.25 * r[2] + 3.0 + rng.random_range(-0.1..0.1))
        .collect();
    let (w, b) = common::least_squares(&x, &y);
    let probe = linreg_train(&x, &y, 5000, 0.01).unwrap();
    for (got, want) in probe.weights.iter().zip(&w) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
    assert!((probe.bias - b).abs() < 1e-6);
    let optimum: f64 = x
        .iter()
        .zip(&y)
        .map(|(r, t)| (r.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b - t).powi(2))
        .sum::<f64>()
        / x.len() as f64;
    assert!((linreg_mse(&probe, &x, &y).unwrap() - optimum).abs() < 1e-9);
}

#[test]
fn dtw_classifier_picks_the_reference_nearest_neighbour() {
    let mut rng = seeded(23);
    let train: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            let n = rng.random_range(5..20);
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    let labels: Vec<String> = (0..12).map(|i| format!("c{}", i % 4)).collect();
    let test: Vec<Vec<f64>> = (0..8)
        .map(|_| {
            let n = rng.random_range(5..20);
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    let tensor = |v: &Vec<f64>| Tensor3::from_vec(1, 1, v.len(), v.clone()).unwrap();
    let pred = dtw_classify(
        &train.iter().map(tensor).collect::<Vec<_>>(),
        &labels,
        &test.iter().map(tensor).collect::<Vec<_>>(),
    )
    .unwrap();
    for (q, p) in test.iter().zip(&pred) {
        let mut best = (f64::INFINITY, 0);
        for (i, t) in train.iter().enumerate() {
            let d = dtw_reference(q, t);
            if d < best.0 {
                best = (d, i);
            }
        }
        assert_eq!(p, &labels[best.1]);
    }
}

#[test]
fn knn_matches_brute_force() {
    let mut rng = seeded(29);
    let train = points(&mut rng, 30, 4, 1.0);
    let labels: Vec<String> = (0..30).map(|i| (i % 3).to_string()).collect();
    let test = points(&mut rng, 10, 4, 1.0);
    let pred = knn1_classify(&train, &labels, &test).unwrap();
    for (q, p) in test.iter().zip(&pred) {
        let nearest = (0..train.len())
            .min_by(|&a, &b| {
                let da: f64 = train[a].iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum();
                let db: f64 = train[b].iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        assert_eq!(p, &labels[nearest]);
    }
}

proptest! {
    #[test]
    fn dtw_matches_the_full_table(
        x in prop::collection::vec(-5.0f64..5.0, 1..25),
        y in prop::collection::vec(-5.0f64..5.0, 1..25),
    ) {
        let got = dtw_distance_1d(&x, &y).unwrap();
        let want = dtw_reference(&x, &y);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
    }

    #[test]
    fn kmeans_never_beats_the_exhaustive_optimum(
        seed in any::<u64>(),
        n in 2usize..7,
        k in 1usize..4,
    ) {
        let k = k.min(n);
        let x = points(&mut seeded(seed), n, 2, 3.0);
        let r = kmeans(&x, k, seed).unwrap();
        let best = common::exhaustive_kmeans(&x, k);
        prop_assert!(r.inertia >= best - 1e-9);
        prop_assert!((common::inertia(&x, &r.assignments, k) - r.inertia).abs() < 1e-9);
    }
}

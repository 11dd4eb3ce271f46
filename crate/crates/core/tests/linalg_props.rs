use proptest::prelude::*;
use rand::Rng;

use rosae::linalg::{knn_search, lle_weights, DenseMatrix, DEFAULT_LLE_REG};
use rosae::seed::rng_from_seed;

fn random_matrix(n: usize, dim: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let v = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    DenseMatrix::new(n, dim, v).unwrap()
}

fn residual(data: &DenseMatrix, center: usize, nbrs: &[usize], w: &[f64]) -> f64 {
    let x = data.row(center);
    (0..data.cols())
        .map(|c| {
            let recon: f64 = nbrs.iter().zip(w).map(|(&j, wj)| wj * data.get(j, c)).sum();
            (x[c] - recon).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_sum_to_one(n in 6usize..40, dim in 1usize..6, k in 1usize..5, seed in any::<u64>()) {
        let data = random_matrix(n, dim, seed);
        let q = (seed % n as u64) as usize;
        let nb = knn_search(&data, q, k).unwrap();
        let w = lle_weights(&data, &nb, DEFAULT_LLE_REG).unwrap();
        prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unregularized_weights_beat_random_simplex_weights(n in 8usize..30, seed in any::<u64>()) {
        // k < dim keeps the Gram matrix well conditioned
        let (dim, k) = (6, 3);
        let data = random_matrix(n, dim, seed);
        let nb = knn_search(&data, 0, k).unwrap();
        let w = lle_weights(&data, &nb, 0.0).unwrap();
        let best = residual(&data, 0, &nb.neighbour_indices, &w.weights);
        let mut rng = rng_from_seed(seed ^ 0xABCD);
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().ln()).collect();
            let s: f64 = raw.iter().sum();
            let cand: Vec<f64> = raw.iter().map(|v| v / s).collect();
            prop_assert!(best <= residual(&data, 0, &nb.neighbour_indices, &cand) + 1e-12);
        }
    }

    #[test]
    fn weights_are_translation_invariant(n in 6usize..30, dim in 2usize..5, shift in -50.0f64..50.0, seed in any::<u64>()) {
        let data = random_matrix(n, dim, seed);
        let moved = DenseMatrix::new(n, dim, data.values().iter().map(|v| v + shift).collect()).unwrap();
        let nb = knn_search(&data, 1, 3).unwrap();
        let a = lle_weights(&data, &nb, DEFAULT_LLE_REG).unwrap();
        let b = lle_weights(&moved, &nb, DEFAULT_LLE_REG).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn knn_matches_exhaustive_sort(n in 2usize..100, dim in 1usize..5, seed in any::<u64>()) {
        // coarse grid values produce plenty of distance ties
        let mut rng = rng_from_seed(seed);
        let v = (0..n * dim).map(|_| rng.random_range(0..4) as f64).collect();
        let data = DenseMatrix::new(n, dim, v).unwrap();
        let q = rng.random_range(0..n);
        let k = rng.random_range(1..n);
        let mut all: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != q)
            .map(|j| {
                let d: f64 = data.row(j).iter().zip(data.row(q)).map(|(a, b)| (a - b).powi(2)).sum();
                (d, j)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let nb = knn_search(&data, q, k).unwrap();
        prop_assert_eq!(nb.neighbour_indices, all[..k].iter().map(|p| p.1).collect::<Vec<_>>());
    }
}

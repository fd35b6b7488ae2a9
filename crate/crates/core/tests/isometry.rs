use nalgebra::DMatrix;
use proptest::prelude::*;
use srip_core::ensembles::{gen_matrix, Ensemble, SensingMatrix};
use srip_core::halfnorm::half_size;
use srip_core::isometry::*;
use srip_core::linalg::{Combinations, Matrix};

/// Eigenvalues of `B^T B` for the rows and columns selected, by nalgebra.
fn gram_eigen(a: &SensingMatrix, rows: &[usize], cols: &[usize]) -> (f64, f64) {
    let b = DMatrix::from_fn(rows.len(), cols.len(), |i, j| a.get(rows[i], cols[j]));
    let g = b.transpose() * &b;
    let ev = g.symmetric_eigen().eigenvalues;
    (ev.min(), ev.max())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c = Combinations::new(n, k);
    while let Some(s) = c.current() {
        out.push(s.to_vec());
        c.advance();
    }
    out
}

/// Exact levels straight from the definition, with every row subset of
/// size exactly `ceil(m/2)`.
fn srip_by_definition(a: &SensingMatrix, k: usize) -> (f64, f64) {
    let all_rows: Vec<usize> = (0..a.rows()).collect();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for cols in subsets(a.cols(), k) {
        hi = hi.max(gram_eigen(a, &all_rows, &cols).1);
        for rows in subsets(a.rows(), half_size(a.rows())) {
            lo = lo.min(gram_eigen(a, &rows, &cols).0.max(0.0));
        }
    }
    (lo, hi)
}

#[test]
fn rip_matches_dense_eigensolver() {
    let a = gen_matrix(20, 10, Ensemble::Gaussian, 2024).unwrap();
    let rows: Vec<usize> = (0..20).collect();
    let mut delta: f64 = 0.0;
    for cols in subsets(10, 2) {
        let (lo, hi) = gram_eigen(&a, &rows, &cols);
        delta = delta.max(hi - 1.0).max(1.0 - lo);
    }
    let est = rip_exact_small(&a, 2).unwrap();
    assert!((est.delta - delta).abs() < 1e-10, "{} vs {delta}", est.delta);
    assert_eq!(est.supports_examined, 45);
}

#[test]
fn srip_matches_definition() {
    for seed in 0..12u64 {
        let m = 4 + (seed % 5) as usize;
        let n = 3 + (seed % 4) as usize;
        let a = gen_matrix(m, n, Ensemble::Gaussian, seed).unwrap();
        for k in 1..=3.min(n) {
            let (lo, hi) = srip_by_definition(&a, k);
            let est = srip_exact_small(&a, k).unwrap();
            assert_eq!(est.method, Method::ExactSmall);
            assert!((est.theta_minus - lo).abs() < 1e-10, "seed {seed} k {k}: {} vs {lo}", est.theta_minus);
            assert!((est.theta_plus - hi).abs() < 1e-10, "seed {seed} k {k}");
            let brute = srip_exact_enumerate(&a, k).unwrap();
            assert!((brute.theta_minus - lo).abs() < 1e-10);
            assert!((brute.theta_plus - hi).abs() < 1e-10);
        }
    }
}

#[test]
fn planar_sweep_agrees_with_enumeration() {
    for seed in 0..40u64 {
        let m = 6 + (seed % 8) as usize;
        let a = gen_matrix(m, 6, Ensemble::Gaussian, 500 + seed).unwrap();
        let sweep = srip_exact_small(&a, 2).unwrap();
        let brute = srip_exact_enumerate(&a, 2).unwrap();
        assert!((sweep.theta_minus - brute.theta_minus).abs() < 1e-10, "seed {seed}");
        assert_eq!(sweep.theta_plus, brute.theta_plus);
    }
}

#[test]
fn randomized_levels_bracket_exact_ones() {
    for seed in 0..10u64 {
        let a = gen_matrix(10, 8, Ensemble::Gaussian, 900 + seed).unwrap();
        for k in 1..=3 {
            let exact = srip_exact_small(&a, k).unwrap();
            let rand = srip_randomized(&a, k, 30, 20, seed).unwrap();
            assert_eq!(rand.method, Method::Randomized);
            assert!(rand.theta_minus >= exact.theta_minus - 1e-12);
            assert!(rand.theta_plus <= exact.theta_plus + 1e-12);
            assert!(rand.theta_minus <= rand.theta_plus);
        }
    }
}

#[test]
fn exact_levels_are_ordered_and_bounded_by_rip() {
    for seed in 0..10u64 {
        let a = gen_matrix(9, 7, Ensemble::Gaussian, 40 + seed).unwrap();
        for k in 1..=2 {
            let s = srip_exact_small(&a, k).unwrap();
            let r = rip_exact_small(&a, k).unwrap();
            assert!(0.0 <= s.theta_minus && s.theta_minus <= s.theta_plus);
            assert!(s.theta_plus <= 1.0 + r.delta + 1e-12);
        }
    }
}

#[test]
fn gaussian_small_instances_have_positive_lower_level() {
    for seed in 0..50u64 {
        let a = gen_matrix(10, 8, Ensemble::Gaussian, seed).unwrap();
        let s = srip_exact_small(&a, 2).unwrap();
        assert!(s.theta_minus > 0.0, "seed {seed}");
    }
}

#[test]
fn randomized_lower_level_positive_at_scaling() {
    let (n, k) = (64usize, 3usize);
    let m = 4 * (k as f64 * (n as f64 / k as f64).ln()).ceil() as usize + 4;
    for seed in 0..20u64 {
        let a = gen_matrix(m, n, Ensemble::Gaussian, 7000 + seed).unwrap();
        let s = srip_randomized(&a, k, 200, 10, seed).unwrap();
        assert!(s.theta_minus > 0.0, "seed {seed}");
    }
}

#[test]
fn bernoulli_lower_level_vanishes() {
    for seed in 0..20u64 {
        for m in [8usize, 16, 64] {
            let a = gen_matrix(m, 6, Ensemble::Bernoulli, seed).unwrap();
            let w = bernoulli_witness(&a).unwrap();
            assert!(witness_residual(&a, &w).unwrap() <= 1e-14);
            assert!(w.rows.len() >= half_size(m));
            assert_eq!(w.x.iter().filter(|v| **v != 0.0).count(), 2);
            assert!((w.x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
            assert_eq!(srip_exact_small(&a, 2).unwrap().theta_minus, 0.0);
        }
    }
    let g = gen_matrix(8, 4, Ensemble::Gaussian, 0).unwrap();
    assert!(bernoulli_witness(&g).is_err());
}

#[test]
fn order_one_is_column_half_energy() {
    let a =
        SensingMatrix::from_matrix(Matrix::from_row_major(4, 2, vec![1.0, 1.0, 2.0, 1.0, 2.0, 3.0, 1.0, 0.0])).unwrap();
    let s = srip_exact_small(&a, 1).unwrap();
    // Columns (1,2,2,1) and (1,1,3,0): two smallest squares 1+1 and 0+1.
    assert!((s.theta_minus - 1.0).abs() < 1e-14);
    assert!((s.theta_plus - 11.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn admissible_t_symmetry(theta in 0.01f64..1.99) {
        let a = 1.0 / (2.0 * theta - theta * theta);
        let b = 1.0 / (2.0 * (2.0 - theta) - (2.0 - theta).powi(2));
        prop_assert!((a - b).abs() <= 1e-9 * a);
        let t = admissible_t(theta, 2.0 - theta).unwrap();
        prop_assert!((t - a).abs() <= 1e-9 * a);
        prop_assert!(t >= 1.0);
    }

    #[test]
    fn threshold_increasing(t1 in 1.34f64..100.0, dt in 0.0f64..100.0) {
        prop_assert!(cai_zhang_threshold(t1).unwrap() <= cai_zhang_threshold(t1 + dt).unwrap());
    }

    #[test]
    fn net_bound_decreasing(tk in 1usize..50, e1 in 0.01f64..0.5, de in 0.0f64..0.49) {
        prop_assert!(net_cardinality_bound(tk, e1).unwrap() >= net_cardinality_bound(tk, e1 + de).unwrap());
    }
}

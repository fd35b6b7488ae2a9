use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use srip_core::ensembles::{gen_matrix, Ensemble};
use srip_core::halfnorm::*;
use srip_core::isometry::min_subset_energy;

/// Exhaustive `min_{|I| >= ceil(m/2)} sum_{j in I} y_j^2` over bitmasks.
fn brute_force_half_energy(y: &[f64]) -> f64 {
    let m = y.len();
    let need = m.div_ceil(2);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        if (mask.count_ones() as usize) < need {
            continue;
        }
        let e: f64 = (0..m).filter(|j| mask >> j & 1 == 1).map(|j| y[j] * y[j]).sum();
        best = best.min(e);
    }
    best
}

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 1..=max_len)
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn lipschitz_with_constant_one((x, y) in (1usize..=64).prop_flat_map(|m| (prop::collection::vec(-10f64..10.0, m), prop::collection::vec(-10f64..10.0, m)))) {
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let gap = (smallest_half_norm(&x).unwrap() - smallest_half_norm(&y).unwrap()).abs();
        prop_assert!(gap <= l2(&d) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn absolutely_homogeneous(x in vector(40), c in -50f64..50.0) {
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let lhs = smallest_half_norm(&cx).unwrap();
        let rhs = c.abs() * smallest_half_norm(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn blind_to_signs_and_order(x in vector(40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y: Vec<f64> = x.iter().map(|v| if rng.random::<bool>() { -v } else { *v }).collect();
        for i in (1..y.len()).rev() {
            let j = rng.random_range(0..=i);
            y.swap(i, j);
        }
        prop_assert_eq!(smallest_half_norm(&x).unwrap(), smallest_half_norm(&y).unwrap());
    }

    #[test]
    fn monotone_in_subset_size(x in vector(30)) {
        let mut prev = 0.0;
        for q in 1..=x.len() {
            let v = smallest_subset_norm(&x, q).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
        prop_assert!((prev - l2(&x)).abs() <= 1e-12 * prev.max(1e-300));
    }

    #[test]
    fn matches_exhaustive_subsets(y in prop::collection::vec(-5f64..5.0, 1..=12)) {
        let brute = brute_force_half_energy(&y);
        let fast = smallest_half_energy(&y).unwrap();
        prop_assert!((brute - fast).abs() <= 1e-12 * brute.max(1e-300));
    }

    #[test]
    fn bounded_by_euclidean_norm(x in vector(50)) {
        let f = smallest_half_norm(&x).unwrap();
        prop_assert!(f <= l2(&x) * (1.0 + 1e-15));
        // The q smallest squares average at most the overall mean square.
        let q = half_size(x.len()) as f64;
        prop_assert!(f * f <= q / x.len() as f64 * l2(&x).powi(2) * (1.0 + 1e-12));
    }
}

#[test]
fn min_subset_energy_matches_brute_force_on_matrices() {
    for seed in 0..200u64 {
        let m = 1 + (seed % 12) as usize;
        let n = 1 + (seed % 7) as usize;
        let a = gen_matrix(m, n, Ensemble::Gaussian, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y = a.apply(&x).unwrap();
        let brute = brute_force_half_energy(&y);
        let v = min_subset_energy(&a, &x).unwrap();
        assert!((v - brute).abs() <= 1e-12 * brute.max(1e-300), "seed {seed}");
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((min_subset_energy(&a, &x2).unwrap() - 4.0 * v).abs() <= 1e-12 * v.max(1e-300));
    }
    let a = gen_matrix(5, 3, Ensemble::Gaussian, 0).unwrap();
    assert_eq!(min_subset_energy(&a, &[0.0; 3]).unwrap(), 0.0);
    assert!(min_subset_energy(&a, &[0.0; 2]).is_err());
}

/// `Phi^{-1}(3/4)` by bisection on the error function.
fn upper_quartile() -> f64 {
    let cdf = |x: f64| 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.75 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Limit of `mu_m`: `sqrt(E[X^2 ; |X| <= q])` with `P(|X| <= q) = 1/2`.
fn mu_limit() -> f64 {
    let q = upper_quartile();
    let phi = (-q * q / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (0.5 - 2.0 * q * phi).sqrt()
}

#[test]
fn mu_limit_oracle() {
    let v = mu_limit();
    assert!((v - 0.267).abs() < 5e-4, "{v}");
}

#[test]
fn mu_estimates() {
    let big = estimate_mu(256, 4000, 21).unwrap();
    assert!((big.mean - mu_limit()).abs() <= 0.01, "{big:?}");
    for m in [1usize, 2, 3, 5, 8, 16] {
        let est = estimate_mu(m, 2000, 100 + m as u64).unwrap();
        assert!(est.mean - 3.0 * est.std_error >= nu0(), "{est:?}");
    }
    // m = 2: F(X) = min(|X1|, |X2|) and E F = int_0^inf P(|X| > t)^2 dt.
    let two = estimate_mu(2, 20_000, 5).unwrap();
    let tail = |t: f64| libm::erfc(t / std::f64::consts::SQRT_2);
    let (h, steps) = (1e-3, 12_000);
    let integral: f64 = (0..steps)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            h / 6.0 * (tail(a).powi(2) + 4.0 * tail(0.5 * (a + b)).powi(2) + tail(b).powi(2))
        })
        .sum();
    let exact = integral / 2f64.sqrt();
    assert!((two.mean - exact).abs() <= 3.5 * two.std_error, "{two:?} vs {exact}");
}

#[test]
fn order_statistic_lower_bound_holds() {
    let alpha = gaussian_alpha();
    for (k, m) in [(8usize, 2usize), (16, 4), (64, 16)].map(|(m, k)| (k, m)) {
        let mut rng = ChaCha8Rng::seed_from_u64(m as u64 * 31 + k as u64);
        let trials = 20_000;
        let samples: Vec<f64> = (0..trials)
            .map(|_| {
                let mut v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
                v.sort_by(f64::total_cmp);
                v[k - 1]
            })
            .collect();
        let (mean, se) = mean_and_std_error(&samples);
        let bound = order_stat_lower_bound(k, m, alpha).unwrap();
        assert!(mean - 3.0 * se >= bound, "k={k} m={m}: {mean} vs {bound}");
    }
}

use srip_core::ensembles::{
    gen_matrix, gen_sparse_signal, phaseless_measure, phaseless_measure_dense, Ensemble, Measurements, SensingMatrix,
    SparseSignal, ValueDist,
};
use srip_core::linalg::{norm1, Matrix};
use srip_core::recovery::lp::basis_pursuit_lp;
use srip_core::recovery::*;

fn bp_defaults() -> BasisPursuitOptions {
    BasisPursuitOptions::default()
}

#[test]
fn zero_right_hand_side() {
    let a = gen_matrix(6, 10, Ensemble::Gaussian, 1).unwrap();
    let sol = basis_pursuit(a.matrix(), &[0.0; 6], &bp_defaults()).unwrap();
    assert_eq!(sol.status, Status::Converged);
    assert!(sol.x.iter().all(|&v| v == 0.0));
    let cert = bp_certificate(a.matrix(), &[0.0; 6], &sol.x, None, 1e-5).unwrap();
    assert!(cert.passed);
}

#[test]
fn duplicated_identity_splits_mass() {
    let m = 4;
    let a = Matrix::from_fn(m, 2 * m, |i, j| if j % m == i { 1.0 } else { 0.0 });
    let mut y = vec![0.0; m];
    y[0] = 1.0;
    let sol = basis_pursuit(&a, &y, &bp_defaults()).unwrap();
    assert_eq!(sol.status, Status::Converged);
    assert!((norm1(&sol.x) - 1.0).abs() < 1e-6, "{:?}", sol.x);
    assert!((sol.x[0] + sol.x[m] - 1.0).abs() < 1e-8);
    assert!(sol.x[0] >= -1e-9 && sol.x[m] >= -1e-9);
    let cert = bp_certificate(&a, &y, &sol.x, Some(&sol.dual), 1e-5).unwrap();
    assert!(cert.passed, "{cert:?}");
}

#[test]
fn gaussian_sparse_instance_matches_lp() {
    let a = gen_matrix(10, 20, Ensemble::Gaussian, 42).unwrap();
    let x0 = gen_sparse_signal(20, 2, ValueDist::UnitGaussian, 43).unwrap().to_dense();
    let y = a.matrix().mul_vec(&x0);
    let sol = basis_pursuit(a.matrix(), &y, &bp_defaults()).unwrap();
    assert_eq!(sol.status, Status::Converged);
    let (x_lp, v_lp) = basis_pursuit_lp(a.matrix(), &y).unwrap();
    for (u, v) in x_lp.iter().zip(&x0) {
        assert!((u - v).abs() < 1e-8, "LP oracle does not recover x0 here");
    }
    for (u, v) in sol.x.iter().zip(&x0) {
        assert!((u - v).abs() < 1e-6);
    }
    assert!((norm1(&sol.x) - v_lp).abs() < 1e-6);
    assert!(bp_certificate(a.matrix(), &y, &x0, None, 1e-5).unwrap().passed);
}

#[test]
fn perturbed_solution_fails_certificate() {
    let a = gen_matrix(10, 20, Ensemble::Gaussian, 42).unwrap();
    let x0 = gen_sparse_signal(20, 2, ValueDist::UnitGaussian, 43).unwrap();
    let y = a.matrix().mul_vec(&x0.to_dense());
    let off = (0..20).find(|i| !x0.support().contains(i)).unwrap();
    let mut x = x0.to_dense();
    x[off] += 0.1;
    let cert = bp_certificate(a.matrix(), &y, &x, None, 1e-5).unwrap();
    assert!(!cert.passed);
    assert_eq!(cert.failure, Some(CertificateFailure::Infeasible));
    // Feasible but not optimal: move along the null space.
    let ls = srip_core::linalg::LeastSquares::new(a.matrix());
    let mut e = vec![0.0; 20];
    e[off] = 0.1;
    let step = ls.null_project(&e);
    let moved: Vec<f64> = x0.to_dense().iter().zip(&step).map(|(u, v)| u + v).collect();
    let cert = bp_certificate(a.matrix(), &y, &moved, None, 1e-5).unwrap();
    assert!(!cert.passed);
    assert_ne!(cert.failure, Some(CertificateFailure::Infeasible));
}

#[test]
fn inconsistent_system_is_infeasible() {
    // Two equal rows with different right-hand sides.
    let a = Matrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
    let sol = basis_pursuit(&a, &[1.0, 2.0], &bp_defaults()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
    assert!(basis_pursuit_lp(&a, &[1.0, 2.0]).is_none());
}

#[test]
fn options_are_validated() {
    let a = Matrix::identity(2);
    for opts in [
        BasisPursuitOptions { max_iters: 0, ..bp_defaults() },
        BasisPursuitOptions { primal_tol: 0.0, ..bp_defaults() },
        BasisPursuitOptions { penalty: -1.0, ..bp_defaults() },
        BasisPursuitOptions { dual_tol: f64::NAN, ..bp_defaults() },
    ] {
        assert!(basis_pursuit(&a, &[1.0, 0.0], &opts).is_err());
    }
}

#[test]
fn converged_solutions_carry_a_certificate() {
    for seed in 0..10u64 {
        let a = gen_matrix(12, 24, Ensemble::Gaussian, seed).unwrap();
        let y: Vec<f64> = (0..12).map(|i| ((i * 7 + seed as usize) % 5) as f64 - 2.0).collect();
        let sol = basis_pursuit(a.matrix(), &y, &bp_defaults()).unwrap();
        assert_eq!(sol.status, Status::Converged);
        let cert = bp_certificate(a.matrix(), &y, &sol.x, Some(&sol.dual), 1e-5).unwrap();
        assert!(cert.passed, "seed {seed}: {cert:?}");
        let (_, v) = basis_pursuit_lp(a.matrix(), &y).unwrap();
        assert!((norm1(&sol.x) - v).abs() <= 1e-6 * v.max(1.0), "seed {seed}");
    }
}

#[test]
fn oracle_on_zero_measurements() {
    let a = gen_matrix(6, 8, Ensemble::Gaussian, 2).unwrap();
    let b = Measurements::new(vec![0.0; 6], a.fingerprint()).unwrap();
    let rep = sign_enum_oracle(&a, &b, &bp_defaults()).unwrap();
    assert!(rep.result.x_hat.iter().all(|&v| v == 0.0));
    assert_eq!(rep.result.status, Status::Converged);
    assert_eq!(rep.patterns_enumerated, 1);
}

#[test]
fn oracle_recovers_small_gaussian_instance() {
    let a = gen_matrix(10, 8, Ensemble::Gaussian, 7).unwrap();
    let x0 = gen_sparse_signal(8, 2, ValueDist::UnitGaussian, 8).unwrap();
    let b = phaseless_measure(&a, &x0).unwrap();
    let rep = sign_enum_oracle(&a, &b, &bp_defaults()).unwrap();
    assert_eq!(rep.patterns_enumerated, 512);
    assert_eq!(rep.result.status, Status::Converged);
    assert!(recovery_error(&rep.result.x_hat, &x0.to_dense()).unwrap() <= 1e-6);
    assert_eq!(rep.multiplicity, 1);
    assert!(rep.result.eps.is_canonical());
    // Same input through -x0.
    let b_neg = phaseless_measure(&a, &x0.negated()).unwrap();
    assert_eq!(b, b_neg);
    assert_eq!(rep, sign_enum_oracle(&a, &b_neg, &bp_defaults()).unwrap());
}

#[test]
fn oracle_refuses_large_instances() {
    let a = gen_matrix(23, 4, Ensemble::Gaussian, 0).unwrap();
    let b = phaseless_measure_dense(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(sign_enum_oracle(&a, &b, &bp_defaults()).is_err());
}

#[test]
fn l0_examples() {
    let a = gen_matrix(6, 8, Ensemble::Gaussian, 11).unwrap();
    let b = Measurements::new(vec![0.0; 6], a.fingerprint()).unwrap();
    match l0_oracle(&a, &b, 2).unwrap() {
        L0Outcome::Found { x, k, .. } => {
            assert_eq!(k, 0);
            assert!(x.iter().all(|&v| v == 0.0));
        }
        other => panic!("{other:?}"),
    }
    let x0 = gen_sparse_signal(8, 2, ValueDist::UnitGaussian, 12).unwrap();
    let b = phaseless_measure(&a, &x0).unwrap();
    match l0_oracle(&a, &b, 3).unwrap() {
        L0Outcome::Found { x, k, .. } => {
            assert_eq!(k, 2);
            assert!(recovery_error(&x, &x0.to_dense()).unwrap() < 1e-8);
        }
        other => panic!("{other:?}"),
    }
    match l0_oracle(&a, &b, 1).unwrap() {
        L0Outcome::NotFound { k_max } => assert_eq!(k_max, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn l0_and_l1_oracles_agree() {
    for seed in 0..5u64 {
        let a = gen_matrix(8, 6, Ensemble::Gaussian, 100 + seed).unwrap();
        let x0 = gen_sparse_signal(6, 2, ValueDist::UnitGaussian, 200 + seed).unwrap();
        let b = phaseless_measure(&a, &x0).unwrap();
        let l1 = sign_enum_oracle(&a, &b, &bp_defaults()).unwrap();
        if let L0Outcome::Found { x, .. } = l0_oracle(&a, &b, 3).unwrap() {
            if l1.result.status == Status::Converged && recovery_error(&l1.result.x_hat, &x).unwrap() < 1e-6 {
                assert!((norm1(&x) - l1.result.l1_value).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn alt_min_started_at_truth_is_a_fixed_point() {
    let a = gen_matrix(40, 32, Ensemble::Gaussian, 5).unwrap();
    let x0 = gen_sparse_signal(32, 3, ValueDist::UnitGaussian, 6).unwrap();
    let b = phaseless_measure(&a, &x0).unwrap();
    let r = alt_min_from(&a, &b, &x0.to_dense(), &AltMinOptions::default()).unwrap();
    assert_eq!(r.status, Status::Converged);
    assert!(recovery_error(&r.x_hat, &x0.to_dense()).unwrap() < 1e-9);
    assert_eq!(r.restarts_used, 1);
}

#[test]
fn alt_min_contract() {
    let a = gen_matrix(40, 32, Ensemble::Gaussian, 1000).unwrap();
    let x0 = gen_sparse_signal(32, 3, ValueDist::UnitGaussian, 5000).unwrap();
    let b = phaseless_measure(&a, &x0).unwrap();
    let opts = AltMinOptions { seed: 3, ..AltMinOptions::default() };
    assert!(alt_min_recover(&a, &b, 0, &opts).is_err());
    let r = alt_min_recover(&a, &b, 5, &opts).unwrap();
    assert_eq!(r.restarts_used, 5);
    assert!((r.l1_value - norm1(&r.x_hat)).abs() < 1e-15);
    if r.status == Status::Converged {
        assert!(
            r.feasibility_residual <= opts.basis_pursuit.primal_tol * b.values().iter().fold(1.0f64, |s, v| s.max(*v))
        );
    }
    // Identical inputs from -x0 give identical output.
    let b_neg = phaseless_measure(&a, &x0.negated()).unwrap();
    assert_eq!(r, alt_min_recover(&a, &b_neg, 5, &opts).unwrap());
}

#[test]
fn alt_min_never_beats_the_oracle() {
    for seed in 0..6u64 {
        let a = gen_matrix(10, 8, Ensemble::Gaussian, 300 + seed).unwrap();
        let x0 = gen_sparse_signal(8, 2, ValueDist::UnitGaussian, 400 + seed).unwrap();
        let b = phaseless_measure(&a, &x0).unwrap();
        let oracle = sign_enum_oracle(&a, &b, &bp_defaults()).unwrap();
        let r = alt_min_recover(&a, &b, 10, &AltMinOptions { seed, ..AltMinOptions::default() }).unwrap();
        if r.status == Status::Converged && oracle.result.status == Status::Converged {
            assert!(r.l1_value >= oracle.result.l1_value - 1e-6, "seed {seed}");
        }
    }
}

#[test]
fn recovery_error_rejects_zero_reference() {
    assert!(recovery_error(&[1.0], &[0.0]).is_err());
    let x0 = SparseSignal::new(3, vec![1], vec![2.0]).unwrap().to_dense();
    assert!((recovery_error(&[0.0, 2.0 + 1e-3, 0.0], &x0).unwrap() - 5e-4).abs() < 1e-15);
}

#[test]
fn custom_matrices_work_with_the_solvers() {
    let a = SensingMatrix::from_matrix(Matrix::from_fn(5, 3, |i, j| ((i + 2 * j) % 4) as f64 - 1.5)).unwrap();
    let x0 = [0.0, 1.0, 0.0];
    let b = phaseless_measure_dense(&a, &x0).unwrap();
    let rep = sign_enum_oracle(&a, &b, &bp_defaults()).unwrap();
    assert!(rep.result.feasibility_residual < 1e-8);
}

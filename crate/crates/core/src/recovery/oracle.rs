//! Exhaustive oracles over sign patterns.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::basis_pursuit::{BasisPursuit, BasisPursuitOptions, Status};
use super::{measurement_scale, RecoveryResult};
use crate::ensembles::{apply_signs, check_len, Measurements, SensingMatrix, SignPattern};
use crate::linalg::{binomial, norm1, norm_inf, Combinations, LeastSquares};
use crate::{Error, Result};

/// Largest row count for which all canonical sign patterns are enumerated.
pub const MAX_ORACLE_ROWS: usize = 22;

/// Relative l1 gap under which two candidates count as tied.
const TIE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub result: RecoveryResult,
    /// Canonical patterns whose solution attains the minimal l1 value. One
    /// means the minimiser set is exactly `{x, -x}`.
    pub multiplicity: usize,
    pub patterns_enumerated: u64,
    pub patterns_feasible: u64,
    pub patterns_unconverged: u64,
}

/// Sign patterns modulo global sign: entries with `b_j = 0` are fixed to
/// `+1` (both signs impose `<a_j, x> = 0`), as is the first nonzero entry.
/// Pattern `bits` flips the free entries selected by its set bits, so
/// patterns come out in a fixed order.
fn canonical_free_indices(b: &Measurements) -> Vec<usize> {
    let nonzero: Vec<usize> = (0..b.len()).filter(|&j| b.values()[j] != 0.0).collect();
    nonzero.into_iter().skip(1).collect()
}

fn pattern_for(m: usize, free: &[usize], bits: u64) -> SignPattern {
    let mut eps = alloc::vec![1i8; m];
    for (t, &j) in free.iter().enumerate() {
        if (bits >> t) & 1 == 1 {
            eps[j] = -1;
        }
    }
    SignPattern::new(eps).expect("entries are +-1")
}

fn check_rows(a: &SensingMatrix, b: &Measurements) -> Result<()> {
    check_len(a.rows(), b.len())?;
    if a.rows() > MAX_ORACLE_ROWS {
        return Err(Error::BudgetExceeded { cost: 1u128 << (a.rows() - 1), budget: 1u128 << (MAX_ORACLE_ROWS - 1) });
    }
    Ok(())
}

/// Solves basis pursuit for every canonical sign pattern and returns the
/// feasible candidate of least l1 norm. Ties (within a relative `1e-7`) are
/// broken by the lexicographically smallest pattern.
pub fn sign_enum_oracle(a: &SensingMatrix, b: &Measurements, opts: &BasisPursuitOptions) -> Result<OracleReport> {
    check_rows(a, b)?;
    let m = a.rows();
    let solver = BasisPursuit::new(a.matrix(), *opts)?;
    let free = canonical_free_indices(b);
    let total = 1u64 << free.len();

    let mut candidates: Vec<(f64, SignPattern, Vec<f64>)> = Vec::new();
    let mut iterations = 0usize;
    let mut unconverged = 0u64;
    for bits in 0..total {
        let eps = pattern_for(m, &free, bits);
        let y = apply_signs(b, &eps)?;
        let sol = solver.solve(&y)?;
        iterations += sol.iterations;
        match sol.status {
            Status::Converged => candidates.push((norm1(&sol.x), eps, sol.x)),
            Status::MaxIters => unconverged += 1,
            Status::Infeasible => {}
        }
    }
    let feasible = candidates.len() as u64;
    let Some(best) = candidates.iter().map(|c| c.0).reduce(f64::min) else {
        let result = RecoveryResult::new(
            a,
            b,
            alloc::vec![0.0; a.cols()],
            SignPattern::ones(m),
            Status::Infeasible,
            iterations,
            0,
        );
        return Ok(OracleReport {
            result,
            multiplicity: 0,
            patterns_enumerated: total,
            patterns_feasible: 0,
            patterns_unconverged: unconverged,
        });
    };
    let cutoff = best + TIE_TOL * best.max(1.0);
    let mut tied: Vec<(f64, SignPattern, Vec<f64>)> = candidates.into_iter().filter(|c| c.0 <= cutoff).collect();
    tied.sort_by(|x, y| x.1.cmp(&y.1));
    let multiplicity = tied.len();
    let (_, eps, x) = tied.swap_remove(0);
    let mut result = RecoveryResult::new(a, b, x, eps, Status::Converged, iterations, 0);
    if result.feasibility_residual > opts.primal_tol * measurement_scale(b) * 10.0 {
        result.status = Status::Infeasible;
    }
    Ok(OracleReport {
        result,
        multiplicity,
        patterns_enumerated: total,
        patterns_feasible: feasible,
        patterns_unconverged: unconverged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum L0Outcome {
    Found { x: Vec<f64>, k: usize, eps: SignPattern },
    NotFound { k_max: usize },
}

/// Exact-fit tolerance of the l0 search, relative to `max(1, ||b||_inf)`.
const L0_FIT_TOL: f64 = 1e-8;

/// Sparsest `x` with `|Ax| = b`: supports are searched in increasing size
/// and lexicographic order, sign patterns in canonical order; the first
/// support and pattern whose least-squares fit is exact wins.
pub fn l0_oracle(a: &SensingMatrix, b: &Measurements, k_max: usize) -> Result<L0Outcome> {
    check_rows(a, b)?;
    let n = a.cols();
    let m = a.rows();
    if norm_inf(b.values()) == 0.0 {
        return Ok(L0Outcome::Found { x: alloc::vec![0.0; n], k: 0, eps: SignPattern::ones(m) });
    }
    let free = canonical_free_indices(b);
    let patterns = 1u64 << free.len();
    let cost = (1..=k_max.min(n)).map(|s| binomial(n, s)).sum::<u128>().saturating_mul(patterns as u128);
    if cost > crate::isometry::EXACT_BUDGET {
        return Err(Error::BudgetExceeded { cost, budget: crate::isometry::EXACT_BUDGET });
    }
    let tol = L0_FIT_TOL * measurement_scale(b);
    for s in 1..=k_max.min(n) {
        for omega in Combinations::new(n, s) {
            let ls = LeastSquares::new(&a.matrix().select_columns(&omega));
            for bits in 0..patterns {
                let eps = pattern_for(m, &free, bits);
                let y = apply_signs(b, &eps)?;
                if norm_inf(&ls.range_residual(&y)) <= tol {
                    let coef = ls.solve(&y);
                    let mut x = alloc::vec![0.0; n];
                    for (&i, c) in omega.iter().zip(coef) {
                        x[i] = c;
                    }
                    return Ok(L0Outcome::Found { x, k: s, eps });
                }
            }
        }
    }
    Ok(L0Outcome::NotFound { k_max })
}

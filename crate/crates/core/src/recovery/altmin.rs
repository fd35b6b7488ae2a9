//! Alternating sign / l1 solver for `min ||x||_1 s.t. |Ax| = b`.
//!
//! Each restart starts from a random unit vector and alternates between the
//! sign pattern `eps = sign(Ax)` and an l1 solve against `eps o b`:
//!
//! 1. warm-up: l1-regularised least squares `1/2 ||Ax - eps o b||^2 + lambda ||x||_1`
//!    with `lambda` decreasing geometrically, re-reading the signs after each
//!    solve. After every level the current support (and its leading entries)
//!    is tried as an exact fit by alternating least squares restricted to it;
//!    the warm-up stops at the first exact fit;
//! 2. exact phase: basis pursuit on `Ax = eps o b` (least squares when that
//!    system is inconsistent) until the sign pattern stops changing.
//!
//! When `m <= n` every consistent pattern is a fixed point of step 2 alone,
//! which is why step 1 exists.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::basis_pursuit::{soft_threshold, BasisPursuit, BasisPursuitOptions, Status};
use super::{measurement_scale, phaseless_residual, RecoveryResult};
use crate::ensembles::{apply_signs, check_len, Measurements, SensingMatrix, SignPattern};
use crate::linalg::{dot, norm2, norm_inf, Cholesky, LeastSquares, Matrix};
use crate::rng::{self, domain};
use crate::{Error, Result};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltMinOptions {
    pub basis_pursuit: BasisPursuitOptions,
    /// Cap on sign updates in the exact phase (and in each support refit).
    pub max_outer: usize,
    /// Number of `lambda` levels in the warm-up; zero disables it.
    pub warmup_stages: usize,
    /// Sign updates per warm-up level.
    pub warmup_sweeps: usize,
    /// Ratio between consecutive `lambda` levels.
    pub warmup_decay: f64,
    /// Seed of the restart initialisations.
    pub seed: u64,
}

impl Default for AltMinOptions {
    fn default() -> Self {
        Self {
            basis_pursuit: BasisPursuitOptions::default(),
            max_outer: 100,
            warmup_stages: 40,
            warmup_sweeps: 2,
            warmup_decay: 0.88,
            seed: 0,
        }
    }
}

const SUPPORT_CUT: f64 = 1e-6;
const LASSO_RHO: f64 = 1.0;
const LASSO_ITERS: usize = 200;

/// Sparse least squares by ADMM with the factorisation of `A^T A + rho I`
/// computed once.
struct Lasso<'a> {
    a: &'a Matrix,
    chol: Cholesky,
}

impl<'a> Lasso<'a> {
    fn new(a: &'a Matrix) -> Self {
        let mut g = a.gram();
        for i in 0..a.cols() {
            g.set(i, i, g.get(i, i) + LASSO_RHO);
        }
        Self { a, chol: Cholesky::new(&g).expect("A^T A + rho I is positive definite") }
    }

    fn solve(&self, y: &[f64], lambda: f64, warm: &[f64]) -> Vec<f64> {
        let aty = self.a.tr_mul_vec(y);
        let mut z = warm.to_vec();
        let mut u = alloc::vec![0.0; z.len()];
        let kappa = lambda / LASSO_RHO;
        for _ in 0..LASSO_ITERS {
            let rhs: Vec<f64> = aty.iter().zip(&z).zip(&u).map(|((g, zi), ui)| g + LASSO_RHO * (zi - ui)).collect();
            let x = self.chol.solve(&rhs);
            let z_old =
                core::mem::replace(&mut z, x.iter().zip(&u).map(|(xi, ui)| soft_threshold(xi + ui, kappa)).collect());
            for ((ui, xi), zi) in u.iter_mut().zip(&x).zip(&z) {
                *ui += xi - zi;
            }
            let change: f64 = z.iter().zip(&z_old).map(|(a, b)| (a - b) * (a - b)).sum();
            let size = norm2(&z).max(1e-12);
            if change <= 1e-24 * size * size {
                break;
            }
        }
        z
    }
}

/// `eps_j = sign(<a_j, x>)`, keeping the previous sign on ties.
fn update_signs(a: &Matrix, x: &[f64], eps: &mut [i8]) -> bool {
    let mut changed = false;
    for (j, e) in eps.iter_mut().enumerate() {
        let v = dot(a.row(j), x);
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            *e
        };
        changed |= s != *e;
        *e = s;
    }
    changed
}

fn support_of(x: &[f64]) -> Vec<usize> {
    let cut = SUPPORT_CUT * norm_inf(x);
    (0..x.len()).filter(|&i| libm::fabs(x[i]) > cut).collect()
}

fn scatter(n: usize, support: &[usize], coef: Vec<f64>) -> Vec<f64> {
    let mut full = alloc::vec![0.0; n];
    for (&i, c) in support.iter().zip(coef) {
        full[i] = c;
    }
    full
}

fn validate(a: &SensingMatrix, b: &Measurements, opts: &AltMinOptions) -> Result<()> {
    check_len(a.rows(), b.len())?;
    if opts.max_outer == 0 {
        return Err(Error::TooFew { what: "outer iterations", min: 1, found: 0 });
    }
    if opts.warmup_stages > 0 && !(opts.warmup_decay > 0.0 && opts.warmup_decay < 1.0) {
        return Err(Error::OutOfRange { name: "warmup_decay", value: opts.warmup_decay });
    }
    Ok(())
}

/// State shared by the restarts of one solve.
struct Solve<'a> {
    a: &'a SensingMatrix,
    b: &'a Measurements,
    opts: &'a AltMinOptions,
    solver: BasisPursuit,
    lasso: Option<Lasso<'a>>,
    refits: RefitCache,
    feas_tol: f64,
    iterations: usize,
}

impl<'a> Solve<'a> {
    fn new(a: &'a SensingMatrix, b: &'a Measurements, opts: &'a AltMinOptions) -> Result<Self> {
        validate(a, b, opts)?;
        Ok(Self {
            a,
            b,
            opts,
            solver: BasisPursuit::new(a.matrix(), opts.basis_pursuit)?,
            lasso: (opts.warmup_stages > 0).then(|| Lasso::new(a.matrix())),
            refits: RefitCache::default(),
            feas_tol: opts.basis_pursuit.primal_tol * measurement_scale(b),
            iterations: 0,
        })
    }

    /// One restart from `x`; the warm-up runs only when `warm` is set.
    fn run(&mut self, mut x: Vec<f64>, warm: bool, restart: usize) -> Result<RecoveryResult> {
        let (a, b) = (self.a, self.b);
        let (m, n) = (a.rows(), a.cols());
        let mut eps = alloc::vec![1i8; m];
        update_signs(a.matrix(), &x, &mut eps);

        let lasso = if warm { self.lasso.as_ref() } else { None };
        if let Some(lasso) = lasso {
            let y = signed(b, &eps)?;
            let mut lambda = 0.5 * norm_inf(&a.matrix().tr_mul_vec(&y));
            for _ in 0..self.opts.warmup_stages {
                for _ in 0..self.opts.warmup_sweeps {
                    let y = signed(b, &eps)?;
                    x = lasso.solve(&y, lambda, &x);
                    if !update_signs(a.matrix(), &x, &mut eps) {
                        break;
                    }
                }
                if let Some((xr, er)) = self.refits.try_supports(a, b, &x, &eps, self.opts.max_outer, self.feas_tol)? {
                    x = xr;
                    eps = er;
                    break;
                }
                lambda *= self.opts.warmup_decay;
            }
        }

        // Support found by the warm-up; least-squares fallbacks stay on it while
        // it is small enough to be overdetermined.
        let support = support_of(&x);
        let support_ls = (lasso.is_some() && !support.is_empty() && 2 * support.len() <= m)
            .then(|| LeastSquares::new(&a.matrix().select_columns(&support)));

        let mut stable = false;
        let mut converged_bp = false;
        for _ in 0..self.opts.max_outer {
            let y = signed(b, &eps)?;
            let sol = self.solver.solve(&y)?;
            self.iterations += sol.iterations;
            converged_bp = sol.status == Status::Converged;
            x = match sol.status {
                Status::Infeasible => match &support_ls {
                    Some(ls) => scatter(n, &support, ls.solve(&y)),
                    None => self.solver.least_squares().solve(&y),
                },
                _ => sol.x,
            };
            if !update_signs(a.matrix(), &x, &mut eps) {
                stable = true;
                break;
            }
        }

        let pattern = SignPattern::new(eps)?.canonical();
        let feasible_now = phaseless_residual(a, b, &x) <= self.feas_tol;
        let status = if stable && converged_bp && feasible_now { Status::Converged } else { Status::MaxIters };
        Ok(RecoveryResult::new(a, b, x, pattern, status, self.iterations, restart))
    }
}

/// Random unit start of restart `r`.
fn restart_init(n: usize, seed: u64, r: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, domain::RESTART, r as u32);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = norm2(&x);
    x.iter_mut().for_each(|v| *v /= norm);
    x
}

pub fn alt_min_recover(
    a: &SensingMatrix,
    b: &Measurements,
    restarts: usize,
    opts: &AltMinOptions,
) -> Result<RecoveryResult> {
    if restarts == 0 {
        return Err(Error::TooFew { what: "restarts", min: 1, found: 0 });
    }
    let mut solve = Solve::new(a, b, opts)?;
    let mut best: Option<RecoveryResult> = None;
    let mut fallback: Option<RecoveryResult> = None;
    for r in 0..restarts {
        let cand = solve.run(restart_init(a.cols(), opts.seed, r), true, r + 1)?;
        let converged = cand.status == Status::Converged;
        let slot = if converged { &mut best } else { &mut fallback };
        let replace = match slot {
            None => true,
            Some(cur) if converged => cand.l1_value < cur.l1_value,
            Some(cur) => cand.feasibility_residual < cur.feasibility_residual,
        };
        if replace {
            *slot = Some(cand);
        }
    }
    let mut out = best.or(fallback).expect("at least one restart");
    out.iterations = solve.iterations;
    out.restarts_used = restarts;
    Ok(out)
}

/// The exact phase alone, started from a given point (no warm-up).
pub fn alt_min_from(
    a: &SensingMatrix,
    b: &Measurements,
    x_init: &[f64],
    opts: &AltMinOptions,
) -> Result<RecoveryResult> {
    check_len(a.cols(), x_init.len())?;
    let mut solve = Solve::new(a, b, opts)?;
    solve.run(x_init.to_vec(), false, 1)
}

/// Support refits of one solve. The outcome of a refit depends only on the
/// support and the starting signs, so repeated attempts are skipped and the
/// factorisations are shared between restarts.
#[derive(Default)]
struct RefitCache {
    factors: BTreeMap<Vec<usize>, LeastSquares>,
    tried: BTreeSet<(Vec<usize>, Vec<i8>)>,
}

impl RefitCache {
    /// Tries the support of `x`, then its leading entries by magnitude, as
    /// exact fits. Only supports with at most `m / 2` columns are considered.
    fn try_supports(
        &mut self,
        a: &SensingMatrix,
        b: &Measurements,
        x: &[f64],
        eps: &[i8],
        max_outer: usize,
        feas_tol: f64,
    ) -> Result<Option<(Vec<f64>, Vec<i8>)>> {
        let support = support_of(x);
        if support.is_empty() || 2 * support.len() > a.rows() {
            return Ok(None);
        }
        let mut order = support.clone();
        order.sort_by(|&i, &j| libm::fabs(x[j]).total_cmp(&libm::fabs(x[i])).then(i.cmp(&j)));
        let mut candidates = alloc::vec![support];
        for s in 1..order.len() {
            let mut sub = order[..s].to_vec();
            sub.sort_unstable();
            candidates.push(sub);
        }
        for sub in candidates {
            if let Some(hit) = self.refit_on(a, b, sub, eps, max_outer, feas_tol)? {
                return Ok(Some(hit));
            }
        }
        Ok(None)
    }

    /// Alternating least squares on a fixed support; the fit and its signs if
    /// it reaches `|Ax| = b` within `feas_tol`.
    fn refit_on(
        &mut self,
        a: &SensingMatrix,
        b: &Measurements,
        support: Vec<usize>,
        eps: &[i8],
        max_outer: usize,
        feas_tol: f64,
    ) -> Result<Option<(Vec<f64>, Vec<i8>)>> {
        if !self.tried.insert((support.clone(), eps.to_vec())) {
            return Ok(None);
        }
        let ls = self
            .factors
            .entry(support.clone())
            .or_insert_with(|| LeastSquares::new(&a.matrix().select_columns(&support)));
        let mut eps = eps.to_vec();
        let mut x = alloc::vec![0.0; a.cols()];
        for _ in 0..max_outer {
            let y = signed(b, &eps)?;
            x = scatter(a.cols(), &support, ls.solve(&y));
            if !update_signs(a.matrix(), &x, &mut eps) {
                break;
            }
        }
        Ok((phaseless_residual(a, b, &x) <= feas_tol).then_some((x, eps)))
    }
}

fn signed(b: &Measurements, eps: &[i8]) -> Result<Vec<f64>> {
    apply_signs(b, &SignPattern::new(eps.to_vec())?)
}

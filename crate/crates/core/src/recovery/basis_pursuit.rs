//! `min ||x||_1 s.t. Ax = y` by ADMM on the splitting `x = z`, with `x`
//! confined to the affine set and `z` carrying the l1 term.
//!
//! The scaled dual `u` of the splitting satisfies `rho u in d||z||_1` after
//! every iteration, so `rho u` projected onto the row space of `A` is a dual
//! certificate candidate. Every few iterations the current support is
//! polished by least squares and the certificate is checked; the solve stops
//! as soon as it passes.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::{norm2, norm_inf, sub, LeastSquares, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisPursuitOptions {
    pub max_iters: usize,
    /// Feasibility tolerance on `||Ax - y||_inf`, relative to `max(1, ||y||_inf)`.
    pub primal_tol: f64,
    /// Tolerance of the optimality certificate and of the ADMM dual residual.
    pub dual_tol: f64,
    /// ADMM penalty `rho`.
    pub penalty: f64,
}

impl Default for BasisPursuitOptions {
    fn default() -> Self {
        Self { max_iters: 20_000, primal_tol: 1e-9, dual_tol: 1e-7, penalty: 1.0 }
    }
}

impl BasisPursuitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::TooFew { what: "iterations", min: 1, found: 0 });
        }
        for (name, v) in [("primal_tol", self.primal_tol), ("dual_tol", self.dual_tol), ("penalty", self.penalty)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::OutOfRange { name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisPursuitSolution {
    pub x: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
    /// Dual vector `nu` with `A^T nu` in the subdifferential of `||x||_1`.
    pub dual: Vec<f64>,
}

const POLISH_EVERY: usize = 10;

/// Basis pursuit solver with the factorisation of `A` computed once.
#[derive(Debug, Clone)]
pub struct BasisPursuit {
    a: Matrix,
    ls: LeastSquares,
    opts: BasisPursuitOptions,
}

impl BasisPursuit {
    pub fn new(a: &Matrix, opts: BasisPursuitOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self { a: a.clone(), ls: LeastSquares::new(a), opts })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn least_squares(&self) -> &LeastSquares {
        &self.ls
    }

    pub fn options(&self) -> &BasisPursuitOptions {
        &self.opts
    }

    fn feas_scale(y: &[f64]) -> f64 {
        norm_inf(y).max(1.0)
    }

    /// Whether `y` lies in the range of `A` within the primal tolerance.
    pub fn is_consistent(&self, y: &[f64]) -> bool {
        norm_inf(&self.ls.range_residual(y)) <= self.opts.primal_tol * Self::feas_scale(y)
    }

    pub fn solve(&self, y: &[f64]) -> Result<BasisPursuitSolution> {
        crate::ensembles::check_len(self.a.rows(), y.len())?;
        let n = self.a.cols();
        if !self.is_consistent(y) {
            return Ok(BasisPursuitSolution {
                x: alloc::vec![0.0; n],
                status: Status::Infeasible,
                iterations: 0,
                dual: alloc::vec![0.0; self.a.rows()],
            });
        }
        let x_p = self.ls.solve(y);
        if self.ls.rank() == n || norm_inf(y) == 0.0 {
            // The feasible set is a single point, or zero is optimal.
            let x = if norm_inf(y) == 0.0 { alloc::vec![0.0; n] } else { x_p };
            let g: Vec<f64> = x.iter().map(|v| sign(*v)).collect();
            let dual = self.ls.solve_transposed(&g);
            return Ok(BasisPursuitSolution { x, status: Status::Converged, iterations: 0, dual });
        }

        let rho = self.opts.penalty;
        let kappa = 1.0 / rho;
        let mut z = x_p.clone();
        let mut u = alloc::vec![0.0; n];
        let mut x = x_p.clone();
        for it in 1..=self.opts.max_iters {
            let v: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| zi - ui).collect();
            let null = self.ls.null_project(&v);
            for ((xi, pi), ni) in x.iter_mut().zip(&x_p).zip(&null) {
                *xi = pi + ni;
            }
            let z_old = core::mem::take(&mut z);
            z = x.iter().zip(&u).map(|(xi, ui)| soft_threshold(xi + ui, kappa)).collect();
            for ((ui, xi), zi) in u.iter_mut().zip(&x).zip(&z) {
                *ui += xi - zi;
            }

            let r_norm = norm2(&sub(&x, &z));
            let s_norm = rho * norm2(&sub(&z, &z_old));
            let scale = norm2(&x).max(1.0);
            let settled = r_norm <= self.opts.primal_tol * scale && s_norm <= self.opts.dual_tol * scale;
            if it % POLISH_EVERY == 0 || settled {
                let g: Vec<f64> = u.iter().map(|ui| rho * ui).collect();
                let nu = self.ls.solve_transposed(&g);
                if let Some(cand) = self.polish(&z, y) {
                    if certify(&self.a, y, &cand, &nu, self.opts.dual_tol, self.opts.primal_tol).passed {
                        return Ok(BasisPursuitSolution {
                            x: cand,
                            status: Status::Converged,
                            iterations: it,
                            dual: nu,
                        });
                    }
                }
                if settled && certify(&self.a, y, &x, &nu, self.opts.dual_tol, self.opts.primal_tol).passed {
                    return Ok(BasisPursuitSolution {
                        x: x.clone(),
                        status: Status::Converged,
                        iterations: it,
                        dual: nu,
                    });
                }
            }
        }
        let g: Vec<f64> = u.iter().map(|ui| rho * ui).collect();
        Ok(BasisPursuitSolution {
            x,
            status: Status::MaxIters,
            iterations: self.opts.max_iters,
            dual: self.ls.solve_transposed(&g),
        })
    }

    /// Least-squares refit on the support of `z`, kept only if it is feasible,
    /// unique and sign-consistent with `z`.
    fn polish(&self, z: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let support: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
        if support.is_empty() || support.len() > self.a.rows() {
            return None;
        }
        let sub_a = self.a.select_columns(&support);
        let ls = LeastSquares::new(&sub_a);
        if ls.rank() < support.len() {
            return None;
        }
        let coef = ls.solve(y);
        if coef.iter().zip(&support).any(|(c, &i)| sign(*c) != sign(z[i])) {
            return None;
        }
        let mut x = alloc::vec![0.0; z.len()];
        for (&i, c) in support.iter().zip(coef) {
            x[i] = c;
        }
        let resid = norm_inf(&sub(&self.a.mul_vec(&x), y));
        (resid <= self.opts.primal_tol * Self::feas_scale(y)).then_some(x)
    }
}

pub fn basis_pursuit(a: &Matrix, y: &[f64], opts: &BasisPursuitOptions) -> Result<BasisPursuitSolution> {
    BasisPursuit::new(a, *opts)?.solve(y)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateFailure {
    Infeasible,
    SupportSigns,
    OffSupportBound,
}

/// Outcome of an l1 optimality check for a candidate `x_hat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub passed: bool,
    pub failure: Option<CertificateFailure>,
    pub dual: Vec<f64>,
    /// `max_{i in S} |(A^T nu)_i - sign(x_i)|`
    pub support_violation: f64,
    /// `||A^T nu||_inf`
    pub dual_sup_norm: f64,
}

/// Checks `x_hat` against `nu`: feasibility, `(A^T nu)_S = sign(x_hat_S)`
/// and `||A^T nu||_inf <= 1` within `tol`. The support is
/// `{i : |x_i| > tol max(1, ||x||_inf)}`.
pub fn certify(a: &Matrix, y: &[f64], x_hat: &[f64], nu: &[f64], tol: f64, feas_tol: f64) -> Certificate {
    let resid = norm_inf(&sub(&a.mul_vec(x_hat), y));
    let g = a.tr_mul_vec(nu);
    let cut = tol * norm_inf(x_hat).max(1.0);
    let support_violation = x_hat
        .iter()
        .zip(&g)
        .filter(|(x, _)| libm::fabs(**x) > cut)
        .map(|(x, gi)| libm::fabs(gi - sign(*x)))
        .fold(0.0, f64::max);
    let dual_sup_norm = norm_inf(&g);
    let failure = if resid > feas_tol * norm_inf(y).max(1.0) {
        Some(CertificateFailure::Infeasible)
    } else if support_violation > tol {
        Some(CertificateFailure::SupportSigns)
    } else if dual_sup_norm > 1.0 + tol {
        Some(CertificateFailure::OffSupportBound)
    } else {
        None
    };
    Certificate { passed: failure.is_none(), failure, dual: nu.to_vec(), support_violation, dual_sup_norm }
}

/// l1 optimality certificate for `x_hat` as a solution of `Ax = y`.
///
/// Tries the least-squares dual on the support (minimum-norm `nu` with
/// `A_S^T nu = sign(x_S)`), then a solver-supplied dual when given, then the
/// dual minimising the off-support sup norm (a small LP), so a passing
/// certificate is found whenever one exists.
pub fn bp_certificate(
    a: &Matrix,
    y: &[f64],
    x_hat: &[f64],
    dual_hint: Option<&[f64]>,
    tol: f64,
) -> Result<Certificate> {
    crate::ensembles::check_len(a.rows(), y.len())?;
    crate::ensembles::check_len(a.cols(), x_hat.len())?;
    let cut = tol * norm_inf(x_hat).max(1.0);
    let support: Vec<usize> = (0..x_hat.len()).filter(|&i| libm::fabs(x_hat[i]) > cut).collect();
    let nu_ls = if support.is_empty() {
        alloc::vec![0.0; a.rows()]
    } else {
        let s: Vec<f64> = support.iter().map(|&i| sign(x_hat[i])).collect();
        LeastSquares::new(&a.select_columns(&support)).solve_transposed(&s)
    };
    let first = certify(a, y, x_hat, &nu_ls, tol, tol);
    if first.passed || first.failure == Some(CertificateFailure::Infeasible) {
        return Ok(first);
    }
    if let Some(nu) = dual_hint {
        crate::ensembles::check_len(a.rows(), nu.len())?;
        let second = certify(a, y, x_hat, nu, tol, tol);
        if second.passed {
            return Ok(second);
        }
    }
    // Exact search: the dual with the smallest off-support sup norm.
    let s: Vec<f64> = support.iter().map(|&i| sign(x_hat[i])).collect();
    if let Some((nu, _)) = super::lp::min_offsupport_dual(a, &support, &s) {
        let third = certify(a, y, x_hat, &nu, tol, tol);
        if third.passed {
            return Ok(third);
        }
    }
    Ok(first)
}

//! l1 recovery from phaseless measurements.
//!
//! Every sign pattern `eps` turns `|Ax| = b` into the linear constraint
//! `Ax = eps o b`; the phaseless problem is the minimum of the basis pursuit
//! values over all patterns, and the answer is only defined up to a global
//! sign.

mod altmin;
mod basis_pursuit;
pub mod lp;
mod oracle;

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::ensembles::{check_len, Measurements, SensingMatrix, SignPattern};
use crate::linalg::{norm2, norm_inf};
use crate::{Error, Result};

pub use altmin::{alt_min_from, alt_min_recover, AltMinOptions};
pub use basis_pursuit::{
    basis_pursuit, bp_certificate, certify, BasisPursuit, BasisPursuitOptions, BasisPursuitSolution, Certificate,
    CertificateFailure, Status,
};
pub use oracle::{l0_oracle, sign_enum_oracle, L0Outcome, OracleReport, MAX_ORACLE_ROWS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub eps: SignPattern,
    pub l1_value: f64,
    /// `|| |A x_hat| - b ||_inf`
    pub feasibility_residual: f64,
    pub status: Status,
    pub iterations: usize,
    pub restarts_used: usize,
}

impl RecoveryResult {
    pub(crate) fn new(
        a: &SensingMatrix,
        b: &Measurements,
        x_hat: Vec<f64>,
        eps: SignPattern,
        status: Status,
        iterations: usize,
        restarts_used: usize,
    ) -> Self {
        let feasibility_residual = phaseless_residual(a, b, &x_hat);
        Self {
            l1_value: crate::linalg::norm1(&x_hat),
            x_hat,
            eps,
            feasibility_residual,
            status,
            iterations,
            restarts_used,
        }
    }
}

/// `|| |Ax| - b ||_inf`
pub fn phaseless_residual(a: &SensingMatrix, b: &Measurements, x: &[f64]) -> f64 {
    let ax = a.matrix().mul_vec(x);
    ax.iter().zip(b.values()).fold(0.0, |m, (v, bj)| m.max(libm::fabs(libm::fabs(*v) - bj)))
}

/// Relative error up to global sign: `min(||x - x0||, ||x + x0||) / ||x0||`.
pub fn recovery_error(x_hat: &[f64], x0: &[f64]) -> Result<f64> {
    check_len(x0.len(), x_hat.len())?;
    let scale = norm2(x0);
    if scale == 0.0 {
        return Err(Error::ZeroReference);
    }
    let minus: Vec<f64> = x_hat.iter().zip(x0).map(|(a, b)| a - b).collect();
    let plus: Vec<f64> = x_hat.iter().zip(x0).map(|(a, b)| a + b).collect();
    Ok(norm2(&minus).min(norm2(&plus)) / scale)
}

/// Scale used for relative phaseless feasibility checks.
pub(crate) fn measurement_scale(b: &Measurements) -> f64 {
    norm_inf(b.values()).max(1.0)
}

//! Order-statistic machinery around the smallest-half norm
//!
//! `F(x) = sqrt(sum_{j <= ceil(m/2)} |x|_(j)^2)`
//!
//! where `|x|_(1) <= ... <= |x|_(m)` are the sorted magnitudes. `F(Ax)^2` is
//! exactly the worst-case energy `min_{|I| >= m/2} ||A_I x||^2`, since
//! dropping large entries never increases the sum.

use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::compensated_sum;
use crate::rng::{self, domain};
use crate::{Error, Result};

/// `ceil(m / 2)` in integer arithmetic.
#[inline]
pub const fn half_size(m: usize) -> usize {
    m.div_ceil(2)
}

/// Subset size used when evaluating the generalised norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfNormProfile {
    pub m: usize,
    pub q: usize,
}

impl HalfNormProfile {
    pub fn half(m: usize) -> Result<Self> {
        Self::with_subset(m, half_size(m))
    }

    pub fn with_subset(m: usize, q: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDimension { what: "m", value: m });
        }
        if q == 0 || q > m {
            return Err(Error::InvalidDimension { what: "q", value: q });
        }
        Ok(Self { m, q })
    }
}

/// Sum of the `q` smallest squares of `x`. Uses selection rather than a
/// full sort; the selected multiset is the same as a sort would give.
pub fn smallest_subset_energy(x: &[f64], q: usize) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyVector);
    }
    if q == 0 || q > x.len() {
        return Err(Error::InvalidDimension { what: "q", value: q });
    }
    let mut sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    Ok(sum_smallest(&mut sq, q))
}

/// `q` smallest entries of `sq` summed; `sq` is reordered in place.
pub(crate) fn sum_smallest(sq: &mut [f64], q: usize) -> f64 {
    if q < sq.len() {
        sq.select_nth_unstable_by(q - 1, f64::total_cmp);
    }
    let head = &mut sq[..q];
    // Summing in sorted order makes the value independent of the selection
    // routine's internal permutation.
    head.sort_unstable_by(f64::total_cmp);
    compensated_sum(head.iter().copied())
}

pub fn smallest_subset_norm(x: &[f64], q: usize) -> Result<f64> {
    smallest_subset_energy(x, q).map(libm::sqrt)
}

/// `F(x)`.
pub fn smallest_half_norm(x: &[f64]) -> Result<f64> {
    smallest_subset_norm(x, half_size(x.len()).max(1))
}

/// `F(x)^2`.
pub fn smallest_half_energy(x: &[f64]) -> Result<f64> {
    smallest_subset_energy(x, half_size(x.len()).max(1))
}

/// Monte Carlo estimate of `mu_m = E[F(X)] / sqrt(m)` for standard normal `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub m: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

pub const MIN_MU_TRIALS: usize = 100;

impl MuEstimate {
    /// Reduces per-trial samples (in trial order) to mean and standard error.
    pub fn from_samples(m: usize, seed: u64, samples: &[f64]) -> Self {
        let (mean, std_error) = mean_and_std_error(samples);
        Self { m, trials: samples.len(), mean, std_error, seed }
    }
}

/// Sample mean and `sample_std / sqrt(len)`.
pub fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mean = compensated_sum(samples.iter().copied()) / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(samples.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

/// One draw of `F(X) / sqrt(m)`, keyed by `(seed, trial)`.
pub fn mu_sample(m: usize, seed: u64, trial: u32) -> f64 {
    let mut rng = rng::stream(seed, domain::TRIAL, trial);
    let mut sq: Vec<f64> = (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * z
        })
        .collect();
    libm::sqrt(sum_smallest(&mut sq, half_size(m)) / m as f64)
}

pub fn estimate_mu(m: usize, trials: usize, seed: u64) -> Result<MuEstimate> {
    check_mu_args(m, trials)?;
    let samples: Vec<f64> = (0..trials as u32).map(|t| mu_sample(m, seed, t)).collect();
    Ok(MuEstimate::from_samples(m, seed, &samples))
}

pub fn check_mu_args(m: usize, trials: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidDimension { what: "m", value: m });
    }
    if trials < MIN_MU_TRIALS || trials > u32::MAX as usize {
        return Err(Error::TooFew { what: "trials", min: MIN_MU_TRIALS, found: trials });
    }
    Ok(())
}

/// Small-ball constant of the standard normal: `P(|X| <= t) <= sqrt(2/pi) t`.
pub fn gaussian_alpha() -> f64 {
    libm::sqrt(2.0 / PI)
}

/// `c_alpha = (1 - 1/(4 sqrt(pi))) / (2 e alpha)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange { name: "alpha", value: alpha });
    }
    Ok((1.0 - 1.0 / (4.0 * libm::sqrt(PI))) / (2.0 * E * alpha))
}

/// Lower bound `c_alpha max_{1<=j<=k} (k+1-j)/(m-j+1)` on `E|xi|_(k)` for
/// independent variables satisfying the small-ball and tail conditions.
/// The tail parameter does not enter the bound.
pub fn order_stat_lower_bound(k: usize, m: usize, alpha: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidDimension { what: "m", value: m });
    }
    if k == 0 || k > m {
        return Err(Error::InvalidDimension { what: "k", value: k });
    }
    let c = c_alpha(alpha)?;
    let best = (1..=k).map(|j| (k + 1 - j) as f64 / (m - j + 1) as f64).fold(0.0, f64::max);
    Ok(c * best)
}

/// Universal lower bound `nu_0 = sqrt(pi/2) (1 - 1/(4 sqrt(pi))) / (32 e)` on `mu_m`.
pub fn nu0() -> f64 {
    libm::sqrt(PI / 2.0) * (1.0 - 1.0 / (4.0 * libm::sqrt(PI))) / (32.0 * E)
}

/// Proved strong-concentration level `c_- = nu_0^2 / 4`.
pub fn strong_concentration_level() -> f64 {
    let v = nu0();
    v * v / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn definition_examples() {
        assert_eq!(smallest_half_norm(&[3.0, 4.0]).unwrap(), 3.0);
        assert!((smallest_half_norm(&[1.0, -2.0, 2.0, -1.0]).unwrap() - libm::sqrt(2.0)).abs() < 1e-15);
        assert_eq!(smallest_half_norm(&[0.0; 5]).unwrap(), 0.0);
        assert_eq!(smallest_half_norm(&[]), Err(Error::EmptyVector));
    }

    #[test]
    fn subset_examples() {
        let x = [1.0, 2.0, 2.0, 3.0];
        assert!((smallest_subset_norm(&x, 2).unwrap() - libm::sqrt(5.0)).abs() < 1e-15);
        assert!((smallest_subset_norm(&x, 4).unwrap() - libm::sqrt(18.0)).abs() < 1e-15);
        assert_eq!(smallest_subset_norm(&[-4.0, 0.5, -7.0], 1).unwrap(), 0.5);
        assert!(smallest_subset_norm(&x, 0).is_err());
        assert!(smallest_subset_norm(&x, 5).is_err());
        assert_eq!(smallest_subset_norm(&x, half_size(4)).unwrap(), smallest_half_norm(&x).unwrap());
    }

    #[test]
    fn ceiling_of_half() {
        assert_eq!(half_size(1), 1);
        assert_eq!(half_size(7), 4);
        assert_eq!(half_size(8), 4);
        assert!(HalfNormProfile::with_subset(3, 4).is_err());
        assert_eq!(HalfNormProfile::half(9).unwrap().q, 5);
    }

    #[test]
    fn nu0_value() {
        let v = nu0();
        assert!((v - 0.012374).abs() < 5e-6, "{v}");
        assert!(v > 0.0123 && v < 0.0125);
        let c = strong_concentration_level();
        assert!((c - 3.83e-5).abs() < 1e-7 && c < 1e-4, "{c}");
    }

    #[test]
    fn order_stat_bound_examples() {
        let c = order_stat_lower_bound(1, 1, gaussian_alpha()).unwrap();
        // (1 - 1/(4 sqrt(pi))) sqrt(pi/2) / (2e)
        assert!((c - 0.198).abs() < 5e-4, "{c}");
        for m in [3usize, 10, 40] {
            let full = order_stat_lower_bound(m, m, 2.0).unwrap();
            assert!((full - c_alpha(2.0).unwrap()).abs() < 1e-15);
        }
        assert!(order_stat_lower_bound(3, 2, 1.0).is_err());
        assert!(order_stat_lower_bound(1, 2, 0.0).is_err());
    }

    #[test]
    fn mu_one_is_half_normal_mean() {
        let est = estimate_mu(1, 20_000, 17).unwrap();
        let truth = libm::sqrt(2.0 / PI);
        assert!((est.mean - truth).abs() <= 3.0 * est.std_error, "{est:?}");
        assert!(estimate_mu(4, 99, 0).is_err());
    }

    #[test]
    fn mu_samples_reduce_deterministically() {
        let a = estimate_mu(16, 500, 5).unwrap();
        let samples: Vec<f64> = (0..500).map(|t| mu_sample(16, 5, t)).collect();
        assert_eq!(a, MuEstimate::from_samples(16, 5, &samples));
        let (mean, se) = mean_and_std_error(&vec![1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }
}

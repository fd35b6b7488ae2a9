//! Monte Carlo checks of the concentration inequalities and of the
//! erasure-robust embedding.
//!
//! Every probe is split into a per-trial function of `(seed, trial)` and a
//! reduction over trials in index order, so a parallel driver reproduces the
//! sequential result exactly.
//!
//! The concentration probes use `x = e_1`: for a Gaussian matrix `Ae_1` is
//! its first column, so only that column (`m` draws of `N(0, 1/m)`) is drawn.

use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensembles::{gen_matrix, Ensemble, MAX_DIM};
use crate::halfnorm::{self, nu0, smallest_half_energy};
use crate::linalg::{norm_sq, sub};
use crate::rng::{self, derive_seed, domain};
use crate::{Error, Result};

pub const MIN_TAIL_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub m: usize,
    pub epsilon_or_t: f64,
    pub trials: usize,
    pub empirical_prob: f64,
    pub analytic_bound: f64,
    pub std_error: f64,
    pub passed: bool,
    /// The bound exceeds one, so the check holds trivially.
    pub vacuous: bool,
    /// Smallest observed statistic, for probes where it is meaningful.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_min: Option<f64>,
}

impl TailReport {
    /// `passed <=> p <= bound + 3 sqrt(p (1 - p) / trials)`.
    pub fn from_counts(m: usize, param: f64, trials: usize, failures: usize, bound: f64) -> Self {
        let p = if trials == 0 { 0.0 } else { failures as f64 / trials as f64 };
        let std_error = if trials == 0 { 0.0 } else { libm::sqrt(p * (1.0 - p) / trials as f64) };
        Self {
            m,
            epsilon_or_t: param,
            trials,
            empirical_prob: p,
            analytic_bound: bound,
            std_error,
            passed: p <= bound + 3.0 * std_error,
            vacuous: bound >= 1.0,
            observed_min: None,
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TAIL_TRIALS || trials > u32::MAX as usize {
        return Err(Error::TooFew { what: "trials", min: MIN_TAIL_TRIALS, found: trials });
    }
    Ok(())
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > MAX_DIM {
        return Err(Error::InvalidDimension { what: "m", value: m });
    }
    Ok(())
}

/// `A e_1` for one trial: `m` independent `N(0, 1/m)` entries.
pub fn gaussian_column(m: usize, seed: u64, trial: u32) -> Vec<f64> {
    let mut rng = rng::stream(seed, domain::TRIAL, trial);
    let s = 1.0 / libm::sqrt(m as f64);
    (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        })
        .collect()
}

/// `2 exp(-m (eps^2/4 - eps^3/6))`.
pub fn conc_tail_bound(m: usize, epsilon: f64) -> f64 {
    2.0 * libm::exp(-(m as f64) * (epsilon * epsilon / 4.0 - epsilon * epsilon * epsilon / 6.0))
}

/// Whether `| ||Ae_1||^2 - 1 | >= eps` in one trial.
pub fn conc_tail_trial(m: usize, epsilon: f64, seed: u64, trial: u32) -> bool {
    libm::fabs(norm_sq(&gaussian_column(m, seed, trial)) - 1.0) >= epsilon
}

fn check_conc(m: usize, epsilon: f64, trials: usize) -> Result<()> {
    check_m(m)?;
    check_trials(trials)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange { name: "epsilon", value: epsilon });
    }
    Ok(())
}

pub fn conc_tail_report(m: usize, epsilon: f64, outcomes: &[bool]) -> TailReport {
    let failures = outcomes.iter().filter(|&&f| f).count();
    TailReport::from_counts(m, epsilon, outcomes.len(), failures, conc_tail_bound(m, epsilon))
}

pub fn conc_tail_mc(m: usize, epsilon: f64, trials: usize, seed: u64) -> Result<TailReport> {
    check_conc(m, epsilon, trials)?;
    let outcomes: Vec<bool> = (0..trials as u32).map(|t| conc_tail_trial(m, epsilon, seed, t)).collect();
    Ok(conc_tail_report(m, epsilon, &outcomes))
}

/// Validates a tail probe: `conc_tail_mc` argument rules.
pub fn validate_conc_tail(m: usize, epsilon: f64, trials: usize) -> Result<()> {
    check_conc(m, epsilon, trials)
}

/// `2 exp(-m t^2 / 2)`.
pub fn half_conc_bound(m: usize, t: f64) -> f64 {
    2.0 * libm::exp(-(m as f64) * t * t / 2.0)
}

/// Seeds of the two independent parts of `half_conc_mc`: the estimate of
/// `mu_m` and the event trials.
pub fn half_conc_seeds(seed: u64) -> (u64, u64) {
    (derive_seed(seed, &[0]), derive_seed(seed, &[1]))
}

/// `F(X) / sqrt(m)` for the event trials.
pub fn half_conc_trial(m: usize, seed: u64, trial: u32) -> f64 {
    halfnorm::mu_sample(m, half_conc_seeds(seed).1, trial)
}

/// Reduction of `half_conc_mc` given the `mu_m` estimate and the per-trial
/// statistics. The event `mu - t <= F(X)/sqrt(m) <= mu + t` is evaluated at
/// both ends of `mu_hat +- 3 SE`; the report keeps the end with more failures.
pub fn half_conc_report(m: usize, t: f64, mu: &halfnorm::MuEstimate, samples: &[f64]) -> TailReport {
    let fails = |centre: f64| samples.iter().filter(|&&s| s < centre - t || s > centre + t).count();
    let lo = fails(mu.mean - 3.0 * mu.std_error);
    let hi = fails(mu.mean + 3.0 * mu.std_error);
    TailReport::from_counts(m, t, samples.len(), lo.max(hi), half_conc_bound(m, t))
}

/// Checks the arguments not depending on the estimate.
pub fn validate_half_conc(m: usize, t: f64, trials: usize) -> Result<()> {
    check_m(m)?;
    check_trials(trials)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    Ok(())
}

/// The estimate of `mu_m` used by `half_conc_mc`, and the check `t <= mu_hat`.
pub fn half_conc_mu(m: usize, t: f64, trials: usize, seed: u64) -> Result<halfnorm::MuEstimate> {
    validate_half_conc(m, t, trials)?;
    let mu = halfnorm::estimate_mu(m, trials, half_conc_seeds(seed).0)?;
    if t > mu.mean {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    Ok(mu)
}

pub fn half_conc_mc(m: usize, t: f64, trials: usize, seed: u64) -> Result<TailReport> {
    let mu = half_conc_mu(m, t, trials, seed)?;
    let samples: Vec<f64> = (0..trials as u32).map(|i| half_conc_trial(m, seed, i)).collect();
    Ok(half_conc_report(m, t, &mu, &samples))
}

/// `2 exp(-nu_0^2 m / 8)`.
pub fn strong_conc_bound(m: usize) -> f64 {
    let v = nu0();
    2.0 * libm::exp(-v * v * m as f64 / 8.0)
}

/// `F(Ae_1)^2` in one trial.
pub fn strong_conc_trial(m: usize, seed: u64, trial: u32) -> f64 {
    smallest_half_energy(&gaussian_column(m, seed, trial)).expect("m >= 1")
}

pub fn validate_strong_conc(m: usize, n: usize, trials: usize) -> Result<()> {
    check_m(m)?;
    check_trials(trials)?;
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidDimension { what: "n", value: n });
    }
    Ok(())
}

/// Failures are trials with `F(Ae_1)^2 < nu_0^2 / 4`.
pub fn strong_conc_report(m: usize, samples: &[f64]) -> TailReport {
    let level = halfnorm::strong_concentration_level();
    let failures = samples.iter().filter(|&&s| s < level).count();
    let mut rep = TailReport::from_counts(m, level, samples.len(), failures, strong_conc_bound(m));
    rep.observed_min = samples.iter().copied().reduce(f64::min);
    rep
}

/// `n` only fixes the ambient dimension of the (unit) test vector.
pub fn strong_conc_mc(m: usize, n: usize, trials: usize, seed: u64) -> Result<TailReport> {
    validate_strong_conc(m, n, trials)?;
    let samples: Vec<f64> = (0..trials as u32).map(|t| strong_conc_trial(m, seed, t)).collect();
    Ok(strong_conc_report(m, &samples))
}

/// The linear map of an embedding, `f(u) = Au` with `A` Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDescription {
    pub ensemble: Ensemble,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub map: MapDescription,
    pub points: Vec<Vec<f64>>,
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.len() < 2 {
        return Err(Error::TooFew { what: "points", min: 2, found: points.len() });
    }
    let n = points[0].len();
    if n == 0 {
        return Err(Error::EmptyVector);
    }
    for p in points {
        crate::ensembles::check_len(n, p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite coordinate"));
        }
    }
    Ok(n)
}

pub fn jl_embed(points: &[Vec<f64>], m: usize, seed: u64) -> Result<Embedding> {
    let n = check_points(points)?;
    let a = gen_matrix(m, n, Ensemble::Gaussian, seed)?;
    let embedded = points.iter().map(|p| a.matrix().mul_vec(p)).collect();
    Ok(Embedding {
        map: MapDescription { ensemble: a.ensemble(), m, n, seed, fingerprint: a.fingerprint() },
        points: embedded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub num_points: usize,
    pub n: usize,
    pub m: usize,
    /// `min F(f(u) - f(v))^2 / ||u - v||^2` over distinct pairs.
    pub min_half_ratio: f64,
    /// `max ||f(u) - f(v)||^2 / ||u - v||^2` over distinct pairs.
    pub max_full_ratio: f64,
    pub min_full_ratio: f64,
    pub seed: u64,
    /// Pairs with `u = v`, left out of the ratios.
    pub coincident_pairs: usize,
}

/// Worst erasure distortion over all pairs; `F(w)^2` is the minimum of
/// `||w_I||^2` over `|I| >= m/2`, so no subset search is needed.
pub fn jl_verify(points: &[Vec<f64>], embedded: &Embedding) -> Result<EmbeddingReport> {
    let n = check_points(points)?;
    crate::ensembles::check_len(points.len(), embedded.points.len())?;
    crate::ensembles::check_len(embedded.map.n, n)?;
    for e in &embedded.points {
        crate::ensembles::check_len(embedded.map.m, e.len())?;
    }
    let mut rep = EmbeddingReport {
        num_points: points.len(),
        n,
        m: embedded.map.m,
        min_half_ratio: f64::INFINITY,
        max_full_ratio: 0.0,
        min_full_ratio: f64::INFINITY,
        seed: embedded.map.seed,
        coincident_pairs: 0,
    };
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = norm_sq(&sub(&points[i], &points[j]));
            if d == 0.0 {
                rep.coincident_pairs += 1;
                continue;
            }
            let w = sub(&embedded.points[i], &embedded.points[j]);
            let full = norm_sq(&w) / d;
            let half = smallest_half_energy(&w)? / d;
            rep.min_half_ratio = rep.min_half_ratio.min(half);
            rep.max_full_ratio = rep.max_full_ratio.max(full);
            rep.min_full_ratio = rep.min_full_ratio.min(full);
        }
    }
    if rep.coincident_pairs * 2 == points.len() * (points.len() - 1) {
        rep.min_half_ratio = 0.0;
        rep.min_full_ratio = 0.0;
    }
    Ok(rep)
}

/// Seeded point cloud: `count` standard Gaussian vectors in `R^n`.
pub fn gaussian_points(count: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, domain::POINTS, 0);
    (0..count).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfnorm::strong_concentration_level;
    use alloc::vec;

    #[test]
    fn tail_bound_values() {
        let b = conc_tail_bound(100, 0.5);
        assert!((b - 2.0 * libm::exp(-4.166_666_666_666_667)).abs() < 1e-15);
        assert!((b - 0.0310).abs() < 5e-5, "{b}");
        assert!((conc_tail_bound(30, 1.0) - 2.0 * libm::exp(-2.5)).abs() < 1e-15);
        assert!((half_conc_bound(64, 0.1) - 1.452).abs() < 1e-3);
        assert!((half_conc_bound(256, 0.2) - 0.0119).abs() < 1e-4);
        assert_eq!(half_conc_bound(10, 0.0), 2.0);
    }

    #[test]
    fn pass_rule() {
        let r = TailReport::from_counts(10, 0.5, 1000, 40, 0.03);
        // p = 0.04, 3 sigma = 0.0186
        assert!(r.passed && !r.vacuous);
        assert!(!TailReport::from_counts(10, 0.5, 1000, 60, 0.03).passed);
        assert!(TailReport::from_counts(10, 0.0, 1000, 1000, 2.0).vacuous);
    }

    #[test]
    fn conc_tail_small_run() {
        let r = conc_tail_mc(100, 0.5, 2000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(conc_tail_mc(100, 1.0, 2000, 3).is_err());
        assert!(conc_tail_mc(100, 0.5, 999, 3).is_err());
    }

    #[test]
    fn half_conc_arguments() {
        assert!(half_conc_mc(16, -0.1, 1000, 0).is_err());
        let r = half_conc_mc(16, 0.0, 1000, 0).unwrap();
        assert!(r.passed && r.vacuous);
        assert!(half_conc_mc(16, 5.0, 1000, 0).is_err());
    }

    #[test]
    fn strong_conc_reports_min() {
        let r = strong_conc_mc(100, 50, 1000, 9).unwrap();
        assert!(r.passed);
        assert_eq!(r.empirical_prob, 0.0);
        assert!(r.observed_min.unwrap() > strong_concentration_level());
    }

    #[test]
    fn embedding_basics() {
        let pts = vec![vec![1.0, 0.0, 2.0], vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 1.0]];
        let e = jl_embed(&pts, 5, 1).unwrap();
        assert_eq!(e.points[0], e.points[1]);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| 3.0 * v).collect()).collect();
        let e3 = jl_embed(&scaled, 5, 1).unwrap();
        for (a, b) in e.points.iter().zip(&e3.points) {
            for (x, y) in a.iter().zip(b) {
                assert!((3.0 * x - y).abs() < 1e-12);
            }
        }
        let rep = jl_verify(&pts, &e).unwrap();
        assert_eq!(rep.coincident_pairs, 1);
        assert!(rep.min_half_ratio <= rep.max_full_ratio);
        assert!(jl_embed(&pts[..1], 5, 1).is_err());
    }
}

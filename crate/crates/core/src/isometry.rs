//! RIP and strong-RIP level estimation.
//!
//! The strong RIP of order `k` asks for levels `theta_-`, `theta_+` with
//!
//! `theta_- ||x||^2 <= min_{|I| >= m/2} ||A_I x||^2 <= max_{|I| >= m/2} ||A_I x||^2 <= theta_+ ||x||^2`
//!
//! for every k-sparse `x`. The maximum is always attained by `I = [m]`, the
//! minimum by the `ceil(m/2)` rows of smallest magnitude.

use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensembles::{check_len, Ensemble, SensingMatrix};
use crate::halfnorm::{half_size, smallest_half_energy, smallest_subset_energy};
use crate::linalg::{binomial, extreme_sq_singular_values, norm_sq, Combinations};
use crate::rng::{self, domain};
use crate::{Error, Result};

/// Largest number of inner singular value problems an exact run may need.
pub const EXACT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactSmall,
    Randomized,
}

/// Strong-RIP levels. For [`Method::Randomized`] `theta_minus` is an upper
/// bound on the true lower level and `theta_plus` a lower bound on the true
/// upper level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SripEstimate {
    pub order: usize,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub method: Method,
    pub supports_examined: u128,
    pub samples_per_support: u128,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub order: usize,
    pub delta: f64,
    pub method: Method,
    pub supports_examined: u128,
}

/// `min_{|I| >= m/2} ||A_I x||^2`, i.e. `F(Ax)^2`.
pub fn min_subset_energy(a: &SensingMatrix, x: &[f64]) -> Result<f64> {
    let y = a.apply(x)?;
    smallest_half_energy(&y)
}

fn check_order(a: &SensingMatrix, k: usize) -> Result<()> {
    if k == 0 || k > a.cols() {
        return Err(Error::SparsityExceedsDim { k, n: a.cols() });
    }
    Ok(())
}

fn check_budget(cost: u128) -> Result<()> {
    if cost > EXACT_BUDGET {
        Err(Error::BudgetExceeded { cost, budget: EXACT_BUDGET })
    } else {
        Ok(())
    }
}

/// Number of inner solves [`srip_exact_small`] will perform.
pub fn srip_exact_cost(m: usize, n: usize, k: usize) -> u128 {
    let supports = binomial(n, k);
    let per_support = match k {
        1 => 1,
        2 => (m * m.saturating_sub(1)) as u128 + 1,
        _ => binomial(m, half_size(m)),
    };
    supports.saturating_mul(per_support)
}

/// Exact strong-RIP levels of order `k`.
///
/// For `k <= 2` the lower level on each support is found by sweeping the
/// circle of directions: the set of `ceil(m/2)` smallest rows only changes
/// where two rows tie in magnitude, so one candidate set per arc between
/// consecutive ties is enough. For `k >= 3` every half-size row subset is
/// enumerated. Both stop early once the running minimum reaches zero.
pub fn srip_exact_small(a: &SensingMatrix, k: usize) -> Result<SripEstimate> {
    check_order(a, k)?;
    check_budget(srip_exact_cost(a.rows(), a.cols(), k))?;
    if k >= 3 {
        return srip_exact_enumerate(a, k);
    }
    let q = half_size(a.rows());
    let mut theta_minus = f64::INFINITY;
    let mut theta_plus: f64 = 0.0;
    let mut supports = 0u128;
    for omega in Combinations::new(a.cols(), k) {
        supports += 1;
        let sub = a.matrix().select_columns(&omega);
        let (_, smax) = extreme_sq_singular_values(&sub);
        theta_plus = theta_plus.max(smax);
        if theta_minus > 0.0 {
            let lower = if k == 1 { smallest_subset_energy(&sub.column(0), q)? } else { planar_lower_level(&sub, q) };
            theta_minus = theta_minus.min(lower);
        }
    }
    Ok(SripEstimate {
        order: k,
        theta_minus,
        theta_plus,
        method: Method::ExactSmall,
        supports_examined: supports,
        samples_per_support: if k == 1 { 1 } else { (a.rows() * (a.rows() - 1)) as u128 + 1 },
        seed: a.seed(),
    })
}

/// `min_{|I| = q} sigma_min(B_I)^2` for a two-column matrix `B`.
fn planar_lower_level(b: &crate::linalg::Matrix, q: usize) -> f64 {
    let m = b.rows();
    let mut angles: Vec<f64> = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in i + 1..m {
            for s in [-1.0, 1.0] {
                let dx = b.get(i, 0) + s * b.get(j, 0);
                let dy = b.get(i, 1) + s * b.get(j, 1);
                if dx == 0.0 && dy == 0.0 {
                    continue;
                }
                // Direction orthogonal to (dx, dy), folded into [0, pi).
                let mut phi = libm::atan2(dy, dx) + PI / 2.0;
                while phi >= PI {
                    phi -= PI;
                }
                while phi < 0.0 {
                    phi += PI;
                }
                angles.push(phi);
            }
        }
    }
    angles.sort_unstable_by(f64::total_cmp);
    angles.dedup();
    let probes: Vec<f64> = match angles.len() {
        0 => alloc::vec![0.0],
        len => (0..len)
            .map(|t| {
                let lo = angles[t];
                let hi = if t + 1 < len { angles[t + 1] } else { angles[0] + PI };
                0.5 * (lo + hi)
            })
            .collect(),
    };

    let mut best = f64::INFINITY;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(m);
    let mut last: Vec<usize> = Vec::new();
    for phi in probes {
        let (c, s) = (libm::cos(phi), libm::sin(phi));
        order.clear();
        order.extend((0..m).map(|j| {
            let v = b.get(j, 0) * c + b.get(j, 1) * s;
            (v * v, j)
        }));
        if q < m {
            order.select_nth_unstable_by(q - 1, |x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        }
        let mut rows: Vec<usize> = order[..q].iter().map(|p| p.1).collect();
        rows.sort_unstable();
        if rows == last {
            continue;
        }
        let (smin, _) = extreme_sq_singular_values(&b.select_rows(&rows));
        best = best.min(smin);
        if best == 0.0 {
            break;
        }
        last = rows;
    }
    best
}

/// Exact strong-RIP levels by enumerating every k-support and every row
/// subset of size `ceil(m/2)`.
pub fn srip_exact_enumerate(a: &SensingMatrix, k: usize) -> Result<SripEstimate> {
    check_order(a, k)?;
    let m = a.rows();
    let q = half_size(m);
    let subsets = binomial(m, q);
    check_budget(binomial(a.cols(), k).saturating_mul(subsets))?;
    let mut theta_minus = f64::INFINITY;
    let mut theta_plus: f64 = 0.0;
    let mut supports = 0u128;
    for omega in Combinations::new(a.cols(), k) {
        supports += 1;
        let sub = a.matrix().select_columns(&omega);
        theta_plus = theta_plus.max(extreme_sq_singular_values(&sub).1);
        if theta_minus == 0.0 {
            continue;
        }
        for rows in Combinations::new(m, q) {
            let (smin, _) = extreme_sq_singular_values(&sub.select_rows(&rows));
            theta_minus = theta_minus.min(smin);
            if theta_minus == 0.0 {
                break;
            }
        }
    }
    Ok(SripEstimate {
        order: k,
        theta_minus,
        theta_plus,
        method: Method::ExactSmall,
        supports_examined: supports,
        samples_per_support: subsets,
        seed: a.seed(),
    })
}

/// Running min/max of the half-erasure and full energies over observed
/// unit vectors.
#[derive(Debug, Clone)]
pub struct SripSampler<'a> {
    a: &'a SensingMatrix,
    theta_minus: f64,
    theta_plus: f64,
    observed: u128,
}

impl<'a> SripSampler<'a> {
    pub fn new(a: &'a SensingMatrix) -> Self {
        Self { a, theta_minus: f64::INFINITY, theta_plus: 0.0, observed: 0 }
    }

    /// Records `x / ||x||`. Zero vectors are ignored.
    pub fn observe(&mut self, x: &[f64]) -> Result<()> {
        let y = self.a.apply(x)?;
        let scale = norm_sq(x);
        if scale == 0.0 {
            return Ok(());
        }
        self.theta_minus = self.theta_minus.min(smallest_half_energy(&y)? / scale);
        self.theta_plus = self.theta_plus.max(norm_sq(&y) / scale);
        self.observed += 1;
        Ok(())
    }

    pub fn levels(&self) -> (f64, f64) {
        (self.theta_minus, self.theta_plus)
    }

    pub fn observed(&self) -> u128 {
        self.observed
    }
}

/// Sampled strong-RIP levels: random k-supports, and on each support
/// uniformly random unit vectors (normalised Gaussians).
pub fn srip_randomized(
    a: &SensingMatrix,
    k: usize,
    n_supports: usize,
    n_vectors: usize,
    seed: u64,
) -> Result<SripEstimate> {
    check_order(a, k)?;
    if n_supports == 0 {
        return Err(Error::TooFew { what: "supports", min: 1, found: 0 });
    }
    if n_vectors == 0 {
        return Err(Error::TooFew { what: "vectors", min: 1, found: 0 });
    }
    let mut sampler = SripSampler::new(a);
    let mut x = alloc::vec![0.0; a.cols()];
    for s in 0..n_supports {
        let mut rng = rng::stream(seed, domain::SUPPORT_SAMPLING, s as u32);
        let support = index::sample(&mut rng, a.cols(), k).into_vec();
        for _ in 0..n_vectors {
            x.iter_mut().for_each(|v| *v = 0.0);
            for &i in &support {
                x[i] = StandardNormal.sample(&mut rng);
            }
            sampler.observe(&x)?;
        }
    }
    let (theta_minus, theta_plus) = sampler.levels();
    Ok(SripEstimate {
        order: k,
        theta_minus,
        theta_plus,
        method: Method::Randomized,
        supports_examined: n_supports as u128,
        samples_per_support: n_vectors as u128,
        seed,
    })
}

/// Exact RIP constant `delta_k` from the extreme singular values of every
/// `m x k` column submatrix.
pub fn rip_exact_small(a: &SensingMatrix, k: usize) -> Result<RipEstimate> {
    check_order(a, k)?;
    check_budget(binomial(a.cols(), k))?;
    let mut delta: f64 = 0.0;
    let mut supports = 0u128;
    for omega in Combinations::new(a.cols(), k) {
        supports += 1;
        let (smin, smax) = extreme_sq_singular_values(&a.matrix().select_columns(&omega));
        delta = delta.max(smax - 1.0).max(1.0 - smin);
    }
    Ok(RipEstimate { order: k, delta, method: Method::ExactSmall, supports_examined: supports })
}

/// A unit 2-sparse vector annihilated by at least half of the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliWitness {
    pub x: Vec<f64>,
    pub rows: Vec<usize>,
}

/// Rows whose first two entries agree (`I_0`) always annihilate `e_1 - e_2`,
/// and their complement annihilates `e_1 + e_2`; one of the two sets holds
/// at least `ceil(m/2)` rows.
pub fn bernoulli_witness(a: &SensingMatrix) -> Result<BernoulliWitness> {
    if a.ensemble() != Ensemble::Bernoulli {
        return Err(Error::NotBernoulli);
    }
    if a.cols() < 2 {
        return Err(Error::InvalidDimension { what: "n", value: a.cols() });
    }
    let (same, differ): (Vec<usize>, Vec<usize>) = (0..a.rows()).partition(|&j| a.get(j, 0) == a.get(j, 1));
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut x = alloc::vec![0.0; a.cols()];
    x[0] = h;
    let rows = if same.len() >= half_size(a.rows()) {
        x[1] = -h;
        same
    } else {
        x[1] = h;
        differ
    };
    Ok(BernoulliWitness { x, rows })
}

/// `||A_I x||_2` for a witness.
pub fn witness_residual(a: &SensingMatrix, w: &BernoulliWitness) -> Result<f64> {
    check_len(a.cols(), w.x.len())?;
    let y: Vec<f64> = w.rows.iter().map(|&j| crate::linalg::dot(a.row(j), &w.x)).collect();
    Ok(libm::sqrt(norm_sq(&y)))
}

fn check_level(name: &'static str, theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 2.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: theta })
    }
}

/// Smallest order multiplier `t` for which strong-RIP levels guarantee
/// recovery up to sign: `max{1/(2θ₋ − θ₋²), 1/(2θ₊ − θ₊²)}`.
pub fn admissible_t(theta_minus: f64, theta_plus: f64) -> Result<f64> {
    check_level("theta_minus", theta_minus)?;
    check_level("theta_plus", theta_plus)?;
    let term = |th: f64| 1.0 / (2.0 * th - th * th);
    Ok(term(theta_minus).max(term(theta_plus)))
}

/// RIP constant implied on every half-row submatrix: `max{1 − θ₋, θ₊ − 1}`.
pub fn implied_rip_delta(theta_minus: f64, theta_plus: f64) -> f64 {
    (1.0 - theta_minus).max(theta_plus - 1.0)
}

/// Strict RIP bound `sqrt(1 - 1/t)` for exact l1 recovery at order `t k`.
pub fn cai_zhang_threshold(t: f64) -> Result<f64> {
    if !(t > 4.0 / 3.0) || t.is_nan() {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    Ok(libm::sqrt(1.0 - 1.0 / t))
}

/// `log |N_eps| <= tk log(12 / eps)` for an eps-net of a tk-dimensional unit sphere.
pub fn net_cardinality_bound(tk: usize, eps: f64) -> Result<f64> {
    if tk == 0 {
        return Err(Error::InvalidDimension { what: "tk", value: tk });
    }
    check_eps(eps)?;
    Ok(tk as f64 * libm::log(12.0 / eps))
}

/// The covering bound is stated for `eps` in `(0, 12)`, where `12 / eps > 1`.
fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 12.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name: "eps", value: eps })
    }
}

/// Measurement count `(2/c) tk (log(e n / tk) + log(12/eps))` sufficient for
/// the strong RIP of order `tk` with failure probability `exp(-c m / 2)`.
pub fn measurement_count(t: f64, k: usize, n: usize, c: f64, eps: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    if k == 0 {
        return Err(Error::InvalidDimension { what: "k", value: k });
    }
    if !(c > 0.0) {
        return Err(Error::OutOfRange { name: "c", value: c });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { name: "eps", value: eps });
    }
    let tk = t * k as f64;
    Ok(2.0 / c * tk * (libm::log(E * n as f64 / tk) + libm::log(12.0 / eps)))
}

//! Small dense linear algebra: row-major matrices, one-sided Jacobi SVD,
//! Cholesky, compensated summation and subset enumeration.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `A^T A`
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for p in 0..n {
                for q in p..n {
                    g.data[p * n + q] += r[p] * r[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.data[p * n + q] = g.data[q * n + p];
            }
        }
        g
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j))
    }

    /// Rows `rows` restricted to columns `cols`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if libm::fabs(sum) >= libm::fabs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn norm_sq(x: &[f64]) -> f64 {
    compensated_sum(x.iter().map(|v| v * v))
}

pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(norm_sq(x))
}

pub fn norm1(x: &[f64]) -> f64 {
    compensated_sum(x.iter().map(|v| libm::fabs(*v)))
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Thin singular value decomposition `A = U diag(sigma) V^T` of an `r x c`
/// matrix, computed by one-sided (Hestenes) Jacobi rotations on the columns.
///
/// `sigma` has `c` entries in decreasing order; `u` is `r x c` (columns with
/// zero singular value are zero) and `v` is `c x c` orthogonal.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

impl Svd {
    pub fn new(a: &Matrix) -> Self {
        let (r, c) = (a.rows, a.cols);
        // Column-major working copies.
        let mut w: Vec<Vec<f64>> = (0..c).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<f64>> = (0..c)
            .map(|j| {
                let mut e = vec![0.0; c];
                e[j] = 1.0;
                e
            })
            .collect();

        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..c {
                for q in p + 1..c {
                    let alpha = dot(&w[p], &w[p]);
                    let beta = dot(&w[q], &w[q]);
                    let gamma = dot(&w[p], &w[q]);
                    if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let sign = if zeta < 0.0 { -1.0 } else { 1.0 };
                    let t = sign / (libm::fabs(zeta) + libm::hypot(1.0, zeta));
                    let cs = 1.0 / libm::hypot(1.0, t);
                    let sn = cs * t;
                    rotate(&mut w, p, q, cs, sn);
                    rotate(&mut v, p, q, cs, sn);
                }
            }
            if !rotated {
                break;
            }
        }

        let mut order: Vec<usize> = (0..c).collect();
        let norms: Vec<f64> = w.iter().map(|col| libm::sqrt(dot(col, col))).collect();
        order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

        let mut u = Matrix::zeros(r, c);
        let mut vm = Matrix::zeros(c, c);
        let mut sigma = Vec::with_capacity(c);
        for (k, &j) in order.iter().enumerate() {
            let s = norms[j];
            sigma.push(s);
            for i in 0..r {
                u.set(i, k, if s > 0.0 { w[j][i] / s } else { 0.0 });
            }
            for i in 0..c {
                vm.set(i, k, v[j][i]);
            }
        }
        Self { u, sigma, v: vm }
    }

    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rel_tol * smax && s > 0.0).count()
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, cs: f64, sn: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (wp, wq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in wp.iter_mut().zip(wq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = cs * a - sn * b;
        *y = sn * a + cs * b;
    }
}

/// Extreme squared singular values `(sigma_min^2, sigma_max^2)` of a matrix
/// with at least as many rows as columns. For wide matrices the minimum is 0.
pub fn extreme_sq_singular_values(a: &Matrix) -> (f64, f64) {
    let svd = Svd::new(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let smin = if a.rows < a.cols { 0.0 } else { svd.sigma.last().copied().unwrap_or(0.0) };
    (smin * smin, smax * smax)
}

/// Minimum-norm least-squares machinery for `A x = y` built once per matrix.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// left singular vectors of the numerical range, `r` columns
    u: Vec<Vec<f64>>,
    /// right singular vectors of the row space, `r` columns
    v: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    cols: usize,
}

/// Relative threshold below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-10;

impl LeastSquares {
    pub fn new(a: &Matrix) -> Self {
        let svd = Svd::new(a);
        let rank = svd.rank(RANK_TOL);
        let u = (0..rank).map(|k| svd.u.column(k)).collect();
        let v = (0..rank).map(|k| svd.v.column(k)).collect();
        Self { u, v, sigma: svd.sigma[..rank].to_vec(), cols: a.cols }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Minimum-norm least-squares solution `A^+ y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for ((uk, vk), &s) in self.u.iter().zip(&self.v).zip(&self.sigma) {
            let coef = dot(uk, y) / s;
            for (xi, vi) in x.iter_mut().zip(vk) {
                *xi += coef * vi;
            }
        }
        x
    }

    /// Component of `y` orthogonal to the range of `A`.
    pub fn range_residual(&self, y: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        for uk in &self.u {
            let c = dot(uk, &r);
            for (ri, ui) in r.iter_mut().zip(uk) {
                *ri -= c * ui;
            }
        }
        r
    }

    /// Orthogonal projection of `x` onto the null space of `A`.
    pub fn null_project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for vk in &self.v {
            let c = dot(vk, &out);
            for (oi, vi) in out.iter_mut().zip(vk) {
                *oi -= c * vi;
            }
        }
        out
    }

    /// Minimum-norm solution of `A^T nu = g` for `g` in the row space.
    pub fn solve_transposed(&self, g: &[f64]) -> Vec<f64> {
        let rows = self.u.first().map_or(0, Vec::len);
        let mut nu = vec![0.0; rows];
        for ((uk, vk), &s) in self.u.iter().zip(&self.v).zip(&self.sigma) {
            let coef = dot(vk, g) / s;
            for (ni, ui) in nu.iter_mut().zip(uk) {
                *ni += coef * ui;
            }
        }
        nu
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Option<Self> {
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = libm::sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic enumeration of the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }

    /// Current subset, or `None` once exhausted.
    pub fn current(&self) -> Option<&[usize]> {
        if self.done {
            None
        } else {
            Some(&self.idx)
        }
    }

    pub fn advance(&mut self) {
        let k = self.idx.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current()?.to_vec();
        self.advance();
        Some(out)
    }
}

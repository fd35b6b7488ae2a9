//! Dense two-phase simplex with Bland's rule.
//!
//! Slow and only meant as a reference: basis pursuit is cross-checked against
//! the split reformulation `min 1^T (p + q) s.t. A p - A q = y, p, q >= 0`.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// reduced-cost row, same width
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            self.obj.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations over columns `< allowed`; `false` if unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j] < -1e-10) else {
                return true;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[self.cols] / row[c];
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => ratio < br - 1e-13 || (ratio <= br + 1e-13 && self.basis[i] < bb),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// `min c^T x s.t. A x = b, x >= 0`.
pub fn minimize(c: &[f64], a: &Matrix, b: &[f64]) -> LpOutcome {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);
    let width = n + m;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = alloc::vec![0.0; width + 1];
            for j in 0..n {
                row[j] = flip * a.get(i, j);
            }
            row[n + i] = 1.0;
            row[width] = flip * b[i];
            row
        })
        .collect();
    // Phase one: minimise the sum of artificials.
    let mut obj = alloc::vec![0.0; width + 1];
    for row in &t {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[width] -= row[width];
    }
    let mut tab = Tableau { t: core::mem::take(&mut t), obj, basis: (n..n + m).collect(), cols: width };
    tab.run(n);
    let scale = b.iter().fold(1.0f64, |s, v| s.max(libm::fabs(*v)));
    if -tab.obj[width] > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // Drive artificials out of the basis; drop rows that are redundant.
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| libm::fabs(tab.t[r][j]) > 1e-9) {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    // Phase two.
    let mut obj = alloc::vec![0.0; width + 1];
    obj[..n].copy_from_slice(c);
    for (i, &bi) in tab.basis.iter().enumerate() {
        let f = obj[bi];
        if f != 0.0 {
            let row = &tab.t[i];
            obj.iter_mut().zip(row).for_each(|(v, rv)| *v -= f * rv);
        }
    }
    tab.obj = obj;
    if !tab.run(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = alloc::vec![0.0; n];
    for (i, &bi) in tab.basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab.t[i][width];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

/// Basis pursuit through the split LP. Returns `(x, ||x||_1)` or `None` when
/// `Ax = y` has no solution.
pub fn basis_pursuit_lp(a: &Matrix, y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = a.cols();
    let split = Matrix::from_fn(a.rows(), 2 * n, |i, j| if j < n { a.get(i, j) } else { -a.get(i, j - n) });
    match minimize(&alloc::vec![1.0; 2 * n], &split, y) {
        LpOutcome::Optimal { x, value } => Some(((0..n).map(|i| x[i] - x[i + n]).collect(), value)),
        _ => None,
    }
}

/// Dual vector `nu` with `A_S^T nu = s` minimising `max_{i not in S} |<a^i, nu>|`
/// (columns `a^i`), together with that maximum; `None` when the equality part
/// has no solution.
pub fn min_offsupport_dual(a: &Matrix, support: &[usize], signs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let (m, n) = (a.rows(), a.cols());
    let off: Vec<usize> = (0..n).filter(|i| !support.contains(i)).collect();
    // Variables: nu+ (m), nu- (m), t, slacks for +-(A^T nu)_i <= t.
    let width = 2 * m + 1 + 2 * off.len();
    let rows = support.len() + 2 * off.len();
    let mut lhs = Matrix::zeros(rows, width);
    let mut rhs = alloc::vec![0.0; rows];
    for (r, (&i, &s)) in support.iter().zip(signs).enumerate() {
        for j in 0..m {
            lhs.set(r, j, a.get(j, i));
            lhs.set(r, m + j, -a.get(j, i));
        }
        rhs[r] = s;
    }
    for (q, &i) in off.iter().enumerate() {
        for (side, sign) in [(0usize, 1.0), (1, -1.0)] {
            let r = support.len() + 2 * q + side;
            for j in 0..m {
                lhs.set(r, j, sign * a.get(j, i));
                lhs.set(r, m + j, -sign * a.get(j, i));
            }
            lhs.set(r, 2 * m, -1.0);
            lhs.set(r, 2 * m + 1 + 2 * q + side, 1.0);
        }
    }
    let mut c = alloc::vec![0.0; width];
    c[2 * m] = 1.0;
    match minimize(&c, &lhs, &rhs) {
        LpOutcome::Optimal { x, value } => Some(((0..m).map(|j| x[j] - x[m + j]).collect(), value)),
        _ => None,
    }
}

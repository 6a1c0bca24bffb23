//! Dense row-major matrices and a cyclic Jacobi eigensolver.
//!
//! The problems this crate certifies are deliberately small (brute-force
//! verification caps the ambient dimension at 24), so a dense representation
//! and an `O(n³)`-per-sweep Jacobi iteration are the right tools: Jacobi
//! computes the small symmetric spectra we need (Gram matrices, restricted
//! normal equations) to near machine precision, and its off-diagonal residual
//! is directly checkable — which the landscape certificates rely on.
//!
//! | item | purpose |
//! |------|---------|
//! | [`Matrix`] | row-major dense matrix with matvec/Gram/column helpers |
//! | [`jacobi_eigh`] | symmetric eigendecomposition, eigenvalues ascending |
//! | [`solve_spd_eigh`] | SPD solve through the eigendecomposition, with rank check |
//!
//! # What can go wrong
//!
//! - Feeding [`jacobi_eigh`] a visibly asymmetric matrix is rejected rather
//!   than silently symmetrized.
//! - [`solve_spd_eigh`] refuses systems whose eigenvalue ratio betrays rank
//!   deficiency; callers treat that as "this support is degenerate", not as a
//!   crash.

use crate::{Error, Result};

/// Shrink factor between the off-diagonal Frobenius mass and the total
/// Frobenius norm at which Jacobi sweeps stop. Jacobi converges
/// quadratically once rotations get small, so demanding 1e-14 — two orders
/// tighter than the 1e-12 residual the certificates need — costs at most one
/// extra sweep.
const JACOBI_OFF_TOL: f64 = 1e-14;

/// Upper bound on Jacobi sweeps. Cyclic Jacobi on n ≤ 24 reaches machine
/// precision in well under ten sweeps; hitting this cap means the input was
/// not finite or not symmetric.
const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from an entry function `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for j in 0..rows {
            for i in 0..cols {
                m.set(j, i, f(j, i));
            }
        }
        m
    }

    /// Build from explicit rows.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when rows are empty, ragged, or contain a
    /// non-finite entry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter("matrix must have at least one row and column".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidParameter(format!(
                    "row {j} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("row {j} contains non-finite entry {v}")));
                }
                data.push(v);
            }
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    /// Number of rows.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    /// Overwrite entry at `(row, col)`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = v;
    }

    /// Row-major backing slice.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Whether every entry is `≥ 0`.
    pub fn is_entrywise_nonneg(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// `A·x` into a fresh vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// `A·x` into `out` (the allocation-free hot path).
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec: x has wrong length");
        assert_eq!(out.len(), self.rows, "matvec: out has wrong length");
        for j in 0..self.rows {
            let row = &self.data[j * self.cols..(j + 1) * self.cols];
            let mut acc = 0.0;
            for i in 0..self.cols {
                acc += row[i] * x[i];
            }
            out[j] = acc;
        }
    }

    /// `Aᵀ·g` into a fresh vector.
    pub fn tr_matvec(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tr_matvec_into(g, &mut out);
        out
    }

    /// `Aᵀ·g` into `out`.
    pub fn tr_matvec_into(&self, g: &[f64], out: &mut [f64]) {
        assert_eq!(g.len(), self.rows, "tr_matvec: g has wrong length");
        assert_eq!(out.len(), self.cols, "tr_matvec: out has wrong length");
        out.fill(0.0);
        for j in 0..self.rows {
            let row = &self.data[j * self.cols..(j + 1) * self.cols];
            let gj = g[j];
            for i in 0..self.cols {
                out[i] += row[i] * gj;
            }
        }
    }

    /// Column `i` as a vector.
    pub fn column(&self, i: usize) -> Vec<f64> {
        assert!(i < self.cols, "column index out of range");
        (0..self.rows).map(|j| self.get(j, i)).collect()
    }

    /// `‖a_i‖²` for column `i`.
    pub fn col_norm_sq(&self, i: usize) -> f64 {
        assert!(i < self.cols, "column index out of range");
        (0..self.rows).map(|j| self.get(j, i).powi(2)).sum()
    }

    /// Submatrix keeping the listed columns, in the given order.
    pub fn submatrix_cols(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, idx.len());
        for (k, &i) in idx.iter().enumerate() {
            assert!(i < self.cols, "column index out of range");
            for j in 0..self.rows {
                m.set(j, k, self.get(j, i));
            }
        }
        m
    }

    /// Submatrix keeping the listed rows, in the given order.
    pub fn submatrix_rows(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(idx.len(), self.cols);
        for (k, &j) in idx.iter().enumerate() {
            assert!(j < self.rows, "row index out of range");
            for i in 0..self.cols {
                m.set(k, i, self.get(j, i));
            }
        }
        m
    }

    /// Gram matrix `AᵀA` (symmetric, `cols × cols`).
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for p in 0..self.cols {
            for q in p..self.cols {
                let mut acc = 0.0;
                for j in 0..self.rows {
                    acc += self.get(j, p) * self.get(j, q);
                }
                g.set(p, q, acc);
                g.set(q, p, acc);
            }
        }
        g
    }

    /// Outer Gram matrix `AAᵀ` (symmetric, `rows × rows`).
    pub fn outer_gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.rows, self.rows);
        for p in 0..self.rows {
            for q in p..self.rows {
                let rp = &self.data[p * self.cols..(p + 1) * self.cols];
                let rq = &self.data[q * self.cols..(q + 1) * self.cols];
                let acc: f64 = rp.iter().zip(rq).map(|(x, y)| x * y).sum();
                g.set(p, q, acc);
                g.set(q, p, acc);
            }
        }
        g
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Spectral norm `‖A‖₂`, via the Jacobi spectrum of the smaller Gram
    /// matrix.
    pub fn spectral_norm(&self) -> f64 {
        let g = if self.cols <= self.rows { self.gram() } else { self.outer_gram() };
        let (evals, _) = jacobi_eigh(&g).expect("Gram matrices are symmetric by construction");
        evals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns `(λ, V)` with eigenvalues ascending and eigenvectors as the
/// columns of `V`, so `M = V · diag(λ) · Vᵀ`. Sweeps stop once the
/// off-diagonal Frobenius mass drops below `1e-14` of the total norm.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for a non-square or visibly asymmetric input;
/// [`Error::Numerical`] if the sweep cap is hit (non-finite input).
pub fn jacobi_eigh(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::InvalidParameter(format!(
            "eigendecomposition needs a square matrix, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    let scale = 1.0 + m.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for p in 0..n {
        for q in (p + 1)..n {
            if (m.get(p, q) - m.get(q, p)).abs() > 1e-10 * scale {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not symmetric at ({p},{q}): {} vs {}",
                    m.get(p, q),
                    m.get(q, p)
                )));
            }
        }
    }

    let mut a = m.clone();
    // Exact symmetry keeps the rotation algebra clean.
    for p in 0..n {
        for q in (p + 1)..n {
            let avg = 0.5 * (a.get(p, q) + a.get(q, p));
            a.set(p, q, avg);
            a.set(q, p, avg);
        }
    }
    let mut v = Matrix::identity(n);
    let fro = a.frobenius_norm();
    if fro == 0.0 || n == 1 {
        let evals = (0..n).map(|i| a.get(i, i)).collect();
        return Ok((evals, v));
    }

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a.get(p, q).powi(2);
            }
        }
        if off.sqrt() <= JACOBI_OFF_TOL * fro {
            converged = true;
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                // Smaller-angle root of t² + 2τt − 1 = 0, the numerically
                // stable choice.
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a.set(k, p, new_p);
                    a.set(p, k, new_p);
                    a.set(k, q, new_q);
                    a.set(q, k, new_q);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "Jacobi eigendecomposition failed to converge; the input is likely not finite".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).expect("eigenvalues are finite"));
    let evals: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut sorted_v = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            sorted_v.set(k, new_col, v.get(k, old_col));
        }
    }
    Ok((evals, sorted_v))
}

/// Solve the SPD system `G·x = rhs` through [`jacobi_eigh`], rejecting
/// rank-deficient systems.
///
/// # Errors
///
/// [`Error::RankDeficient`] when `λ_min/λ_max ≤ ratio_tol` or the top
/// eigenvalue is not strictly positive; [`Error::InvalidParameter`] on shape
/// mismatch.
pub fn solve_spd_eigh(g: &Matrix, rhs: &[f64], ratio_tol: f64) -> Result<Vec<f64>> {
    if rhs.len() != g.rows() {
        return Err(Error::InvalidParameter(format!(
            "right-hand side has length {}, expected {}",
            rhs.len(),
            g.rows()
        )));
    }
    let (evals, v) = jacobi_eigh(g)?;
    let n = evals.len();
    let lam_max = evals[n - 1];
    let lam_min = evals[0];
    if lam_max <= 0.0 || lam_min / lam_max <= ratio_tol {
        return Err(Error::RankDeficient(format!(
            "eigenvalue ratio {:.3e}/{:.3e} is below the rank threshold {ratio_tol:.1e}",
            lam_min, lam_max
        )));
    }
    // x = V diag(1/λ) Vᵀ rhs.
    let mut coeffs = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            acc += v.get(k, i) * rhs[k];
        }
        coeffs[i] = acc / evals[i];
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += v.get(k, i) * coeffs[i];
        }
        x[k] = acc;
    }
    Ok(x)
}

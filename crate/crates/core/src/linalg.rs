//! Small dense linear algebra: a row-major matrix, cyclic Jacobi for
//! symmetric eigenproblems, and eigenvalues of tiny non-symmetric matrices.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::cubic::{solve_cubic, CubicRoots};
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// `out = self * v`
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// Determinant by partial-pivot LU. Intended for small matrices.
    pub fn determinant(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs())).unwrap_or(col);
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                for j in col..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
            }
        }
        det
    }

    /// Largest |a_ij - a_ji|, with its location.
    fn asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > worst.2 {
                    worst = (i, j, gap);
                }
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: Option<Matrix>,
    pub sweeps: usize,
}

/// Settings for the cyclic Jacobi solver.
#[derive(Debug, Clone, Copy)]
pub struct JacobiOptions {
    /// Stop when the off-diagonal Frobenius norm falls below `tol * ||A||_F`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Inputs with `|a_ij - a_ji| > symmetry_tol * max|a|` are rejected.
    pub symmetry_tol: f64,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_sweeps: 100, symmetry_tol: 1e-12 }
    }
}

/// Cyclic Jacobi rotations on a dense symmetric matrix.
pub fn symmetric_eigen(m: &Matrix, want_vectors: bool, opts: JacobiOptions) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(Error::Dimension { expected: m.rows(), got: m.cols() });
    }
    let n = m.rows();
    let (row, col, gap) = m.asymmetry();
    if gap > opts.symmetry_tol * m.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { row, col, gap });
    }

    let mut a = m.data.clone();
    let mut v = want_vectors.then(|| Matrix::identity(n).data);
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = opts.tol * frob;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > target {
        if sweeps == opts.max_sweeps {
            return Err(Error::NoConvergence { what: "Jacobi eigensolver", iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut sorted = Matrix::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..n {
                sorted[(k, new_col)] = v[k * n + old_col];
            }
        }
        sorted
    });
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Eigenvalues of a small real square matrix (not necessarily symmetric).
///
/// Sizes 1 to 3 go through the characteristic polynomial; larger matrices
/// use a Schur decomposition.
pub fn eigenvalues_general(m: &Matrix) -> Vec<Complex<f64>> {
    assert!(m.is_square());
    match m.rows() {
        0 => Vec::new(),
        1 => vec![Complex::new(m[(0, 0)], 0.0)],
        2 => {
            let tr = m.trace();
            let det = m.determinant();
            let half = tr / 2.0;
            let disc = half * half - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                // avoid cancellation in the smaller root
                let big = half + half.signum() * s;
                let small = if big != 0.0 { det / big } else { half - s };
                vec![Complex::new(big, 0.0), Complex::new(small, 0.0)]
            } else {
                let s = (-disc).sqrt();
                vec![Complex::new(half, s), Complex::new(half, -s)]
            }
        }
        3 => {
            let tr = m.trace();
            let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
                + m[(1, 1)] * m[(2, 2)]
                - m[(1, 2)] * m[(2, 1)];
            let det = m.determinant();
            match solve_cubic(-tr, minors, -det) {
                CubicRoots::Real(r) => r.iter().map(|&x| Complex::new(x, 0.0)).collect(),
                CubicRoots::OneReal { real, re, im } => {
                    vec![Complex::new(real, 0.0), Complex::new(re, im), Complex::new(re, -im)]
                }
            }
        }
        n => {
            let dm = DMatrix::from_row_slice(n, n, m.as_slice());
            dm.complex_eigenvalues().iter().copied().collect()
        }
    }
}

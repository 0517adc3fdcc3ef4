//! Small dense matrix kernel: storage, products, Cholesky, Jacobi
//! eigendecomposition and Householder QR.
//!
//! Spectral matrices in this crate are tiny (dimension = number of channels,
//! at most a few dozen), so everything below is written for clarity and
//! determinism rather than asymptotic speed: fixed loop orders, no blocking,
//! no pivot heuristics that depend on run-to-run state.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matmul");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        let mut out = Mat::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    /// Average out floating-point asymmetry: (A + Aᵀ)/2, in place.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let s = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = s;
                self[(j, i)] = s;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// matrix columns. Each eigenvector's sign is fixed so that its
/// largest-magnitude entry is positive (ties broken by lowest index);
/// the decomposition is therefore fully deterministic.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(a.rows, a.cols, "sym_eigen requires a square matrix");
    let n = a.rows;
    let mut w = a.clone();
    w.symmetrize();
    let mut v = Mat::identity(n);

    if n > 1 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += w[(p, q)] * w[(p, q)];
                }
            }
            if off <= 1e-30 * (w.max_abs() * w.max_abs()).max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = w[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;

                    for i in 0..n {
                        let wip = w[(i, p)];
                        let wiq = w[(i, q)];
                        w[(i, p)] = c * wip - s * wiq;
                        w[(i, q)] = s * wip + c * wiq;
                    }
                    for j in 0..n {
                        let wpj = w[(p, j)];
                        let wqj = w[(q, j)];
                        w[(p, j)] = c * wpj - s * wqj;
                        w[(q, j)] = s * wpj + c * wqj;
                    }
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = c * vip - s * viq;
                        v[(i, q)] = s * vip + c * viq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w[(i, i)]
            .partial_cmp(&w[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut eigvals = Vec::with_capacity(n);
    let mut eigvecs = Mat::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        eigvals.push(w[(idx, idx)]);
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..n {
            let av = v[(i, idx)].abs();
            if av > best_abs {
                best_abs = av;
                best = i;
            }
        }
        let sign = if v[(best, idx)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigvecs[(i, col)] = sign * v[(i, idx)];
        }
    }
    (eigvals, eigvecs)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPsd(d));
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve L x = b for lower-triangular L.
pub fn solve_lower(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[(i, k)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Solve Lᵀ x = b for lower-triangular L.
pub fn solve_lower_transposed(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= l[(k, i)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Columnwise forward solve: returns L⁻¹ B.
pub fn solve_lower_mat(l: &Mat, b: &Mat) -> Mat {
    assert_eq!(l.rows, b.rows);
    let mut out = Mat::zeros(b.rows, b.cols);
    let mut col = vec![0.0; b.rows];
    for j in 0..b.cols {
        for i in 0..b.rows {
            col[i] = b[(i, j)];
        }
        let x = solve_lower(l, &col);
        for i in 0..b.rows {
            out[(i, j)] = x[i];
        }
    }
    out
}

/// Upper-triangular R factor of a Householder QR decomposition, with the
/// sign convention that every diagonal entry of R is non-negative.
/// Only R is materialized; RᵀR = AᵀA.
pub fn qr_r(a: &Mat) -> Mat {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let kmax = m.min(n);
    for k in 0..kmax {
        let mut norm = 0.0;
        for i in k..m {
            norm += w[(i, k)] * w[(i, k)];
        }
        let norm = norm.sqrt();
        if norm <= 1e-300 {
            continue;
        }
        let alpha = if w[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m];
        for i in k..m {
            v[i] = w[(i, k)];
        }
        v[k] -= alpha;
        let vtv: f64 = v[k..].iter().map(|x| x * x).sum();
        if vtv <= 1e-300 {
            continue;
        }
        for j in k..n {
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i] * w[(i, j)];
            }
            let f = 2.0 * dot / vtv;
            for i in k..m {
                w[(i, j)] -= f * v[i];
            }
        }
    }
    let mut r = Mat::zeros(n.min(m).max(n), n);
    let rrows = r.rows;
    for i in 0..rrows.min(m) {
        for j in i..n {
            r[(i, j)] = w[(i, j)];
        }
    }
    for i in 0..rrows.min(n) {
        if r[(i, i)] < 0.0 {
            for j in 0..n {
                r[(i, j)] = -r[(i, j)];
            }
        }
    }
    r
}

/// Inverse of a symmetric positive definite matrix via its eigensystem.
pub fn sym_inverse(a: &Mat) -> Result<Mat> {
    sym_power(a, -1.0)
}

/// Symmetric matrix power U f(Λ) Uᵀ with f(λ) = λ^p. Errors when the matrix
/// is numerically singular and p < 0.
pub fn sym_power(a: &Mat, p: f64) -> Result<Mat> {
    let n = a.rows;
    let (vals, vecs) = sym_eigen(a);
    let max = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = Mat::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if p < 0.0 && (lam <= 0.0 || lam < 1e-13 * max) {
            return Err(Error::RankDeficient(format!(
                "eigenvalue {lam:.3e} too small relative to {max:.3e}"
            )));
        }
        let f = lam.powf(p);
        for i in 0..n {
            let vik = vecs[(i, k)];
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += f * vik * vecs[(j, k)];
            }
        }
    }
    out.symmetrize();
    Ok(out)
}

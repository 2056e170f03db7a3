//! Dense real linear algebra used by the factorization.
//!
//! Everything here works on row-major `f64` storage. The two operations the
//! rest of the crate depends on are [`gram`] (the `AᵀA` product) and
//! [`top_k_eigenpairs`], a truncated symmetric eigendecomposition whose
//! every returned pair is checked against a residual bound before it is
//! handed back.

mod eigen;
mod subspace;

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

pub use subspace::{orthonormal_basis, principal_angles};

/// Relative tolerance on `|s_ij - s_ji|` accepted as "symmetric".
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Certified residual bound: `‖S v − λ v‖₂ ≤ RESIDUAL_TOLERANCE · ‖S‖_F`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Negative eigenvalues smaller than this fraction of `‖S‖_F` are rounding
/// noise of a PSD matrix and are clamped to zero.
const NEGATIVE_EIGENVALUE_SLACK: f64 = 1e-10;

/// Rows of the Gram output processed together so the touched slice of the
/// result stays cache resident while streaming over the input.
const GRAM_ROW_BLOCK: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix dimensions must be positive, got {rows} x {cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("data length {len} does not match shape {rows} x {cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |s[{i}][{j}] - s[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {value:e}")]
    NotPositiveSemidefinite { value: f64 },
    #[error("k = {k} exceeds the dimension {dim}")]
    KTooLarge { k: usize, dim: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("eigenpair {index} fails the residual bound: {residual:e} > {bound:e}")]
    ResidualTooLarge {
        index: usize,
        residual: f64,
        bound: f64,
    },
    #[error("vectors are linearly dependent")]
    RankDeficient,
}

fn check_finite(data: &[f64]) -> Result<(), LinalgError> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(LinalgError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Dense row-major matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::LengthMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(LinalgError::DimMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vector]) -> Result<Self, LinalgError> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vector::dim);
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            if c.dim() != rows {
                return Err(LinalgError::DimMismatch {
                    expected: rows,
                    actual: c.dim(),
                });
            }
            for (i, &x) in c.as_slice().iter().enumerate() {
                data[i * cols + j] = x;
            }
        }
        Self::new(rows, cols, data)
    }

    /// # Panics
    ///
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, LinalgError> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &x) in diag.iter().enumerate() {
            data[i * n + i] = x;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector {
            data: (0..self.rows).map(|i| self.data[i * self.cols + j]).collect(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self · x`, accumulating each output in column order.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::DimMismatch {
                expected: self.rows,
                actual: x.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols).zip(x) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let dst = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                for (o, &b) in dst.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimMismatch {
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix, LinalgError> {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut data = Vec::with_capacity(parts.iter().map(|m| m.data.len()).sum());
        for m in parts {
            if m.cols != cols {
                return Err(LinalgError::DimMismatch {
                    expected: cols,
                    actual: m.cols,
                });
            }
            data.extend_from_slice(&m.data);
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        Matrix::new(rows, cols, data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Dense vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.is_empty() {
            return Err(LinalgError::EmptyShape { rows: 0, cols: 1 });
        }
        check_finite(&data)?;
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Self {
            data: vec![0.0; dim],
        }
    }

    /// The `i`-th standard basis vector of dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.data, &other.data)
    }

    /// Returns the unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| Vector {
            data: self.data.iter().map(|x| x / n).collect(),
        })
    }

    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        Self { data }
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// One eigenvalue with its unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vector,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    // Scaled to avoid overflow on large entries.
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = a.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// Computes `AᵀA` for an `m × d` matrix.
///
/// Each output entry accumulates the products `a[k][i] * a[k][j]` in
/// increasing `k`, i.e. exactly the order of the textbook triple loop, and
/// the lower triangle is mirrored from the upper one so the result is
/// exactly symmetric.
pub fn gram(a: &Matrix) -> Matrix {
    let (m, d) = a.shape();
    let mut s = vec![0.0; d * d];
    let src = &a.data;

    for block_start in (0..d).step_by(GRAM_ROW_BLOCK) {
        let block_end = (block_start + GRAM_ROW_BLOCK).min(d);
        let mut k = 0;
        // Four input rows at a time; the parenthesization keeps the
        // per-entry summation order identical to one row at a time.
        while k + 4 <= m {
            let r0 = &src[k * d..(k + 1) * d];
            let r1 = &src[(k + 1) * d..(k + 2) * d];
            let r2 = &src[(k + 2) * d..(k + 3) * d];
            let r3 = &src[(k + 3) * d..(k + 4) * d];
            for i in block_start..block_end {
                let (c0, c1, c2, c3) = (r0[i], r1[i], r2[i], r3[i]);
                let out = &mut s[i * d + i..(i + 1) * d];
                let (r0, r1, r2, r3) = (&r0[i..], &r1[i..], &r2[i..], &r3[i..]);
                for j in 0..out.len() {
                    out[j] = (((out[j] + c0 * r0[j]) + c1 * r1[j]) + c2 * r2[j]) + c3 * r3[j];
                }
            }
            k += 4;
        }
        while k < m {
            let r0 = &src[k * d..(k + 1) * d];
            for i in block_start..block_end {
                let c0 = r0[i];
                let out = &mut s[i * d + i..(i + 1) * d];
                for (o, &x) in out.iter_mut().zip(&r0[i..]) {
                    *o += c0 * x;
                }
            }
            k += 1;
        }
    }

    for i in 0..d {
        for j in 0..i {
            s[i * d + j] = s[j * d + i];
        }
    }
    Matrix {
        rows: d,
        cols: d,
        data: s,
    }
}

/// Checks squareness and symmetry within [`SYMMETRY_TOLERANCE`] relative to the largest entry.
pub fn check_symmetric(s: &Matrix) -> Result<(), LinalgError> {
    let (rows, cols) = s.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let bound = SYMMETRY_TOLERANCE * s.max_abs();
    for i in 0..rows {
        for j in 0..i {
            let gap = (s[(i, j)] - s[(j, i)]).abs();
            if gap > bound {
                return Err(LinalgError::NotSymmetric { i, j, gap });
            }
        }
    }
    Ok(())
}

/// Flips `v` so its largest-magnitude component is positive (lowest index wins ties).
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `‖S v − λ v‖₂`.
pub fn eigen_residual(s: &Matrix, value: f64, v: &[f64]) -> f64 {
    let sv = s.mul_vec(v).expect("dimension checked by caller");
    let r: Vec<f64> = sv.iter().zip(v).map(|(a, b)| a - value * b).collect();
    norm(&r)
}

/// The `k` largest eigenpairs of a symmetric positive semidefinite matrix,
/// sorted by eigenvalue descending.
///
/// Eigenvectors are unit norm, mutually orthogonal and sign-canonicalized
/// with [`canonicalize_sign`]. Every pair is verified against
/// [`RESIDUAL_TOLERANCE`] before returning.
pub fn top_k_eigenpairs(s: &Matrix, k: usize) -> Result<Vec<EigenPair>, LinalgError> {
    check_symmetric(s)?;
    let d = s.rows();
    if k == 0 {
        return Err(LinalgError::ZeroK);
    }
    if k > d {
        return Err(LinalgError::KTooLarge { k, dim: d });
    }

    let decomposition = eigen::symmetric_eigen(s)?;
    let s_norm = s.frobenius_norm();
    let bound = RESIDUAL_TOLERANCE * s_norm;

    // Ascending from the solver; walk from the top.
    let mut pairs = Vec::with_capacity(k);
    for (rank, idx) in (0..d).rev().take(k).enumerate() {
        let mut value = decomposition.values[idx];
        if value < 0.0 {
            if value < -NEGATIVE_EIGENVALUE_SLACK * s_norm {
                return Err(LinalgError::NotPositiveSemidefinite { value });
            }
            value = 0.0;
        }
        let mut vector = decomposition.vector(idx).to_vec();
        let n = norm(&vector);
        vector.iter_mut().for_each(|x| *x /= n);
        canonicalize_sign(&mut vector);

        let residual = eigen_residual(s, value, &vector);
        if residual > bound {
            return Err(LinalgError::ResidualTooLarge {
                index: rank,
                residual,
                bound,
            });
        }
        pairs.push(EigenPair {
            value,
            vector: Vector::from_vec_unchecked(vector),
        });
    }
    Ok(pairs)
}

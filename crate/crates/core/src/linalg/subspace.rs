//! Subspace comparison via principal angles.

use super::{dot, eigen, norm, LinalgError, Matrix, Vector};

/// Relative norm below which a vector is treated as linearly dependent on the
/// ones before it.
const DEPENDENCE_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of `span(vectors)` by modified Gram–Schmidt with one
/// reorthogonalization pass.
pub fn orthonormal_basis(vectors: &[Vector]) -> Result<Vec<Vec<f64>>, LinalgError> {
    let dim = vectors.first().map_or(0, Vector::dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.dim() != dim {
            return Err(LinalgError::DimMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        let original = v.norm();
        let mut w = v.as_slice().to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        let n = norm(&w);
        if original == 0.0 || n <= DEPENDENCE_TOLERANCE * original {
            return Err(LinalgError::RankDeficient);
        }
        w.iter_mut().for_each(|x| *x /= n);
        basis.push(w);
    }
    Ok(basis)
}

/// Singular values of a `rows × cols` row-major matrix, descending, from the
/// eigenvalues of the smaller Gram product.
fn singular_values(rows: usize, cols: usize, data: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    let m = Matrix::new(rows, cols, data)?;
    let g = if rows >= cols {
        super::gram(&m)
    } else {
        super::gram(&m.transpose())
    };
    let eig = eigen::symmetric_eigen(&g)?;
    Ok(eig
        .values
        .iter()
        .rev()
        .map(|&l| l.max(0.0).sqrt())
        .collect())
}

/// Principal angles (radians, ascending) between `span(a)` and `span(b)`.
///
/// Returns `min(dim span a, dim span b)` angles. Small angles come from the
/// sines of the residual projection and large ones from the cosines, which
/// keeps both ends of `[0, π/2]` accurate.
pub fn principal_angles(a: &[Vector], b: &[Vector]) -> Result<Vec<f64>, LinalgError> {
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    if let (Some(x), Some(y)) = (qa.first(), qb.first()) {
        if x.len() != y.len() {
            return Err(LinalgError::DimMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
    } else {
        return Ok(Vec::new());
    }
    // `large` spans at least as many dimensions as `small`.
    let (large, small) = if qa.len() >= qb.len() { (qa, qb) } else { (qb, qa) };
    let dim = large[0].len();
    let r = small.len();

    // Cross products Q_largeᵀ Q_small.
    let mut cross = Vec::with_capacity(large.len() * r);
    for q in &large {
        for p in &small {
            cross.push(dot(q, p));
        }
    }
    let cosines = singular_values(large.len(), r, cross.clone())?;

    // Residual Q_small − Q_large (Q_largeᵀ Q_small), stored dim × r.
    let mut residual = vec![0.0; dim * r];
    for (j, p) in small.iter().enumerate() {
        let mut w = p.clone();
        for (i, q) in large.iter().enumerate() {
            let c = cross[i * r + j];
            w.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
        for (t, x) in w.into_iter().enumerate() {
            residual[t * r + j] = x;
        }
    }
    let mut sines = singular_values(dim, r, residual)?;
    sines.reverse();

    Ok((0..r)
        .map(|i| {
            let c = cosines[i].min(1.0);
            let s = sines[i].min(1.0);
            if c * c >= 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect())
}

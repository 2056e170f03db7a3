//! Full symmetric eigendecomposition: Householder reduction to tridiagonal
//! form followed by the implicit QL algorithm (the EISPACK `tred2`/`tql2`
//! pair).
//!
//! The orthogonal factor is kept transposed (`ut[i * n + k]` holds component
//! `k` of basis vector `i`) so that both the Householder updates and the QL
//! rotations sweep contiguous memory.

use super::{LinalgError, Matrix};

/// Upper bound on QL sweeps spent on a single eigenvalue.
const MAX_QL_ITERATIONS: usize = 64;

pub(crate) struct SymmetricEigen {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    n: usize,
    /// Row `i` is the eigenvector for `values[i]`.
    vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }
}

pub(crate) fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen, LinalgError> {
    let n = s.rows();
    // S is symmetric, so its transpose is itself.
    let mut ut = s.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    tridiagonalize(n, &mut ut, &mut d, &mut e);
    tridiagonal_ql(n, &mut ut, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&ut[i * n..(i + 1) * n]);
    }
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| d[i]).collect(),
        n,
        vectors,
    })
}

/// Householder tridiagonalization. On return `d` holds the diagonal, `e[1..]`
/// the subdiagonal, and `ut` the transposed accumulated transformation.
fn tridiagonalize(n: usize, ut: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    // v(r, c) of the textbook formulation lives at ut[c * n + r].
    for j in 0..n {
        d[j] = ut[j * n + (n - 1)];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;

        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = ut[j * n + (i - 1)];
                ut[j * n + i] = 0.0;
                ut[i * n + j] = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);

            for j in 0..i {
                let f = d[j];
                ut[i * n + j] = f;
                let col = &ut[j * n..j * n + i];
                let mut g = e[j] + col[j] * f;
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }

            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col = &mut ut[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = ut[j * n + (i - 1)];
                ut[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        ut[i * n + (n - 1)] = ut[i * n + i];
        ut[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = ut[(i + 1) * n + k] / h;
            }
            for j in 0..=i {
                let (head, tail) = ut.split_at_mut((i + 1) * n);
                let next = &tail[..=i];
                let col = &mut head[j * n..j * n + i + 1];
                let g: f64 = next.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (c, dk) in col.iter_mut().zip(&d[..=i]) {
                    *c -= g * dk;
                }
            }
        }
        for k in 0..=i {
            ut[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = ut[j * n + (n - 1)];
        ut[j * n + (n - 1)] = 0.0;
    }
    ut[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the symmetric tridiagonal matrix (`d`, `e`), applying the
/// rotations to the rows of `ut`.
fn tridiagonal_ql(
    n: usize,
    ut: &mut [f64],
    d: &mut [f64],
    e: &mut [f64],
) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > MAX_QL_ITERATIONS {
                    return Err(LinalgError::NoConvergence);
                }

                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for x in &mut d[(l + 2)..n] {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = ut.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

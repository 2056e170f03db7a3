//! Independent reference computations for the integration tests. Nothing
//! here calls into the crate's linear algebra.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sefa_core::Matrix;

/// Entries uniform in `[-1, 1]` from a ChaCha8 stream seeded with `seed`.
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Textbook `AᵀA`: `s[i][j] = Σ_k a[k][i] a[k][j]`.
pub fn naive_gram(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a[0].len();
    let mut s = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for row in a {
                acc += row[i] * row[j];
            }
            s[i][j] = acc;
        }
    }
    s
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn mat_vec(s: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    s.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenpairs of a symmetric PSD matrix by power iteration with Hotelling
/// deflation, each iterated until `‖S v − λ v‖ ≤ tol · ‖S‖_F` (measured on
/// the deflated matrix). Assumes distinct eigenvalues.
pub fn power_deflation(s: &[Vec<f64>], count: usize, tol: f64) -> Vec<(f64, Vec<f64>)> {
    let d = s.len();
    let frob = s.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let mut work: Vec<Vec<f64>> = s.to_vec();
    let mut out = Vec::new();
    for p in 0..count {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * ((i * 7 + p * 3) % 5) as f64).collect();
        let n = vec_norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        let mut lambda = 0.0;
        for _ in 0..1_000_000 {
            let w = mat_vec(&work, &v);
            lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let residual: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
            if vec_norm(&residual) <= tol * frob {
                break;
            }
            let n = vec_norm(&w);
            v = w.into_iter().map(|x| x / n).collect();
        }
        for i in 0..d {
            for j in 0..d {
                work[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

/// Horizontal pixel moment of everything that differs from the top-left
/// (background) pixel, weighted by summed channel distance.
pub fn centroid_x(img: &sefa_core::RenderedImage) -> f64 {
    let bg = img.pixel(0, 0);
    let (mut mass, mut moment) = (0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.pixel(x, y);
            let w: f64 = (0..3).map(|c| (f64::from(p[c]) - f64::from(bg[c])).abs()).sum();
            mass += w;
            moment += w * (f64::from(x) + 0.5);
        }
    }
    assert!(mass > 0.0, "nothing drawn");
    moment / mass
}

//! Editing along directions and measuring what the edits do.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::factorizer::{DirectionSet, FactorizeError, Method, Provenance};
use crate::linalg::{self, canonicalize_sign, LinalgError, Matrix, Vector};
use crate::rng;
use crate::toy::{AttributeVector, RenderedImage, ToyError, ToyGenerator};

/// `|‖n‖ − 1|` accepted by [`edit_code`].
pub const UNIT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_RESCORE_SAMPLES: usize = 2000;
pub const DEFAULT_RESCORE_ALPHA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("direction is not unit norm (‖n‖ = {norm})")]
    NotUnit { norm: f64 },
    #[error("{samples} samples are too few for {k} components (need at least k + 1)")]
    TooFewSamples { samples: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("principal component {0} maps to the zero latent direction")]
    DegenerateComponent(usize),
    #[error(transparent)]
    Toy(#[from] ToyError),
    #[error(transparent)]
    Factorize(#[from] FactorizeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("CSV output failed: {0}")]
    Csv(String),
}

/// `z + α n`.
pub fn edit_code(z: &Vector, n: &Vector, alpha: f64) -> Result<Vector, AnalysisError> {
    if z.dim() != n.dim() {
        return Err(AnalysisError::DimMismatch {
            expected: z.dim(),
            actual: n.dim(),
        });
    }
    let norm = n.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(AnalysisError::NotUnit { norm });
    }
    if !alpha.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!("alpha = {alpha}")));
    }
    let data = z
        .as_slice()
        .iter()
        .zip(n.as_slice())
        .map(|(zi, ni)| zi + alpha * ni)
        .collect();
    Ok(Vector::new(data)?)
}

/// `steps` evenly spaced values from `min` to `max` inclusive. For a range
/// symmetric about zero and odd `steps` the middle value is exactly zero.
pub fn sweep_alphas(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, AnalysisError> {
    if steps < 2 {
        return Err(AnalysisError::InvalidArgument(format!(
            "a sweep needs at least 2 steps, got {steps}"
        )));
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(AnalysisError::InvalidArgument("non-finite alpha range".into()));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| min + (max - min) * (i as f64 / last))
        .collect())
}

/// Renders `G(z + α n)` for each α of [`sweep_alphas`].
pub fn sweep(
    generator: &ToyGenerator,
    z: &Vector,
    n: &Vector,
    alpha_min: f64,
    alpha_max: f64,
    steps: usize,
) -> Result<Vec<RenderedImage>, AnalysisError> {
    sweep_alphas(alpha_min, alpha_max, steps)?
        .into_iter()
        .map(|alpha| Ok(generator.render(&edit_code(z, n, alpha)?)?))
        .collect()
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Wraps `x` into `(−period/2, period/2]`.
fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period - 0.5).ceil()
}

/// Attribute change `after − before`, with rotation wrapped to `(−π/2, π/2]`
/// and hue to `(−0.5, 0.5]`.
pub fn attribute_delta(before: &AttributeVector, after: &AttributeVector) -> [f64; 6] {
    let (b, a) = (before.to_array(), after.to_array());
    let mut delta = [0.0; 6];
    for j in 0..6 {
        delta[j] = a[j] - b[j];
    }
    delta[2] = wrap(delta[2], PI);
    delta[4] = wrap(delta[4], 1.0);
    delta
}

/// Mean attribute change per direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescoreMatrix {
    pub direction_labels: Vec<String>,
    pub attribute_labels: Vec<String>,
    /// `values[i][j]`: mean change of attribute `j` along direction `i`.
    pub values: Vec<Vec<f64>>,
    pub sample_count: usize,
    pub alpha: f64,
}

impl RescoreMatrix {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalysisError> {
        let csv_err = |e: csv::Error| AnalysisError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["direction".to_string()];
        header.extend(self.attribute_labels.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (label, row) in self.direction_labels.iter().zip(&self.values) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|&v| format_number(v)));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| AnalysisError::Csv(e.to_string()))
    }

    /// Largest `|off-diagonal| / |diagonal|` ratio for row `i`; requires `i`
    /// to index an attribute.
    pub fn row_dominance(&self, i: usize) -> f64 {
        let row = &self.values[i];
        let off = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
        row[i].abs() / off
    }
}

/// Re-scoring: moves `num_samples` seeded latent codes along every direction
/// by `alpha` and averages the attribute changes.
///
/// Sample `s` is drawn from its own stream under `seed`, so the same seed
/// sees the same codes for every direction and every `alpha`.
pub fn rescore(
    generator: &ToyGenerator,
    ds: &DirectionSet,
    alpha: f64,
    num_samples: usize,
    seed: u64,
) -> Result<RescoreMatrix, AnalysisError> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!("alpha must be non-zero, got {alpha}")));
    }
    if num_samples == 0 {
        return Err(AnalysisError::InvalidArgument("num_samples must be positive".into()));
    }
    if ds.latent_dim() != generator.latent_dim() {
        return Err(AnalysisError::DimMismatch {
            expected: generator.latent_dim(),
            actual: ds.latent_dim(),
        });
    }

    let mut sums = vec![[0.0; 6]; ds.k()];
    for s in 0..num_samples {
        let z = rng::latent(&mut rng::stream(seed, s as u64), generator.latent_dim());
        let before = generator.attributes(&z)?;
        for (sum, n) in sums.iter_mut().zip(ds.directions()) {
            let after = generator.attributes(&edit_code(&z, n, alpha)?)?;
            for (acc, d) in sum.iter_mut().zip(attribute_delta(&before, &after)) {
                *acc += d;
            }
        }
    }
    let count = num_samples as f64;
    Ok(RescoreMatrix {
        direction_labels: (0..ds.k()).map(|i| format!("direction_{i}")).collect(),
        attribute_labels: AttributeVector::LABELS.iter().map(|s| s.to_string()).collect(),
        values: sums
            .into_iter()
            .map(|row| row.iter().map(|v| v / count).collect())
            .collect(),
        sample_count: num_samples,
        alpha,
    })
}

/// Sampling baseline: PCA of projected codes, mapped back to latent space.
///
/// Draws `num_samples` codes, projects them, takes the top-`k` principal
/// components `u` of the centered sample covariance and returns the latent
/// directions `normalize(Aᵀ u)`. Eigenvalues are the component variances.
pub fn pca_baseline(
    generator: &ToyGenerator,
    num_samples: usize,
    k: usize,
    seed: u64,
) -> Result<DirectionSet, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::InvalidArgument("k must be positive".into()));
    }
    if num_samples < k + 1 {
        return Err(AnalysisError::TooFewSamples {
            samples: num_samples,
            k,
        });
    }
    let (d, m) = (generator.latent_dim(), generator.projected_dim());
    if k > d.min(m) {
        return Err(FactorizeError::KTooLarge { k, dim: d.min(m) }.into());
    }

    let mut samples = Vec::with_capacity(num_samples * m);
    for s in 0..num_samples {
        let z = rng::latent(&mut rng::stream(seed, s as u64), d);
        samples.extend_from_slice(generator.project(&z)?.as_slice());
    }
    let mut mean = vec![0.0; m];
    for row in samples.chunks_exact(m) {
        mean.iter_mut().zip(row).for_each(|(mu, y)| *mu += y);
    }
    mean.iter_mut().for_each(|mu| *mu /= num_samples as f64);
    for row in samples.chunks_exact_mut(m) {
        row.iter_mut().zip(&mean).for_each(|(y, mu)| *y -= mu);
    }
    let centered = Matrix::new(num_samples, m, samples)?;
    let covariance = linalg::gram(&centered).scaled(1.0 / (num_samples - 1) as f64);

    let components = linalg::top_k_eigenpairs(&covariance, k)?;
    let mut directions = Vec::with_capacity(k);
    for (j, pair) in components.iter().enumerate() {
        let mut n = generator.weights().mul_transpose_vec(pair.vector.as_slice())?;
        let norm = linalg::norm(&n);
        if norm == 0.0 {
            return Err(AnalysisError::DegenerateComponent(j));
        }
        n.iter_mut().for_each(|x| *x /= norm);
        canonicalize_sign(&mut n);
        directions.push(Vector::new(n)?);
    }
    Ok(DirectionSet::new(
        directions,
        components.iter().map(|p| p.value).collect(),
        Provenance::new("toy", "0-", Method::PcaBaseline),
    )?)
}

/// How closely two direction sets agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityReport {
    /// `|cos(n1ᵢ, n2ᵢ)|` for `i < min(k1, k2)`.
    pub cosines: Vec<f64>,
    /// Principal angles between the two spans, ascending, in radians.
    pub principal_angles: Vec<f64>,
}

impl SimilarityReport {
    pub fn mean_cosine(&self) -> f64 {
        self.cosines.iter().sum::<f64>() / self.cosines.len() as f64
    }

    pub fn max_angle(&self) -> f64 {
        self.principal_angles.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalysisError> {
        let csv_err = |e: csv::Error| AnalysisError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["direction", "abs_cosine", "principal_angle"])
            .map_err(csv_err)?;
        let rows = self.cosines.len().max(self.principal_angles.len());
        for i in 0..rows {
            let cell = |v: Option<&f64>| v.map(|&v| format_number(v)).unwrap_or_default();
            w.write_record([
                format!("direction_{i}"),
                cell(self.cosines.get(i)),
                cell(self.principal_angles.get(i)),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| AnalysisError::Csv(e.to_string()))
    }
}

pub fn direction_similarity(
    first: &DirectionSet,
    second: &DirectionSet,
) -> Result<SimilarityReport, AnalysisError> {
    if first.latent_dim() != second.latent_dim() {
        return Err(AnalysisError::DimMismatch {
            expected: first.latent_dim(),
            actual: second.latent_dim(),
        });
    }
    let cosines = first
        .directions()
        .iter()
        .zip(second.directions())
        .map(|(a, b)| a.dot(b).abs().min(1.0))
        .collect();
    let principal_angles = linalg::principal_angles(first.directions(), second.directions())?;
    Ok(SimilarityReport {
        cosines,
        principal_angles,
    })
}

//! Closed-form latent direction discovery.
//!
//! For a first step `y = A z + b`, moving the latent code by `α n` moves the
//! projected code by `α A n` regardless of `z`. The unit directions that
//! maximize `‖A n‖²` are the eigenvectors of `AᵀA` with the largest
//! eigenvalues, so discovery reduces to a truncated symmetric
//! eigendecomposition of the Gram matrix of the (stacked) weights. The bias
//! never enters.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::linalg::{self, LinalgError, Matrix, Vector};
use crate::model_io::LayerWeights;
use crate::npy::{self, NpyError};

/// Largest `k` used when the caller does not choose one.
pub const DEFAULT_MAX_K: usize = 50;

/// Eigenvalues below this fraction of the largest are reported as zero-energy.
pub const NEAR_ZERO_RATIO: f64 = 1e-10;

const UNIT_NORM_TOLERANCE: f64 = 1e-12;
const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

pub const META_MEMBER: &str = "meta.json";
pub const DIRECTIONS_MEMBER: &str = "directions.npy";
const FORMAT_NAME: &str = "sefa-directions";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FactorizeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no layers to factorize")]
    NoLayers,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("k = {k} exceeds the latent dimension {dim}")]
    KTooLarge { k: usize, dim: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invalid direction set: {0}")]
    InvalidDirections(String),
    #[error("direction file schema violation: {0}")]
    SchemaViolation(String),
    #[error(transparent)]
    Npy(#[from] NpyError),
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// `min(d, 50)`.
pub fn default_k(latent_dim: usize) -> usize {
    latent_dim.min(DEFAULT_MAX_K)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sefa,
    PcaBaseline,
    Planted,
}

/// Where a direction set came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Manifest identifier, or `"toy"`.
    pub origin: String,
    /// Layer selection string the weights were taken from.
    pub layers: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    pub method: Method,
}

impl Provenance {
    pub fn new(origin: impl Into<String>, layers: impl Into<String>, method: Method) -> Self {
        Self {
            origin: origin.into(),
            layers: layers.into(),
            created_unix: 0,
            method,
        }
    }

    pub fn created_at(mut self, unix_seconds: u64) -> Self {
        self.created_unix = unix_seconds;
        self
    }
}

/// `k` unit latent directions with their eigenvalues, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    latent_dim: usize,
    directions: Vec<Vector>,
    eigenvalues: Vec<f64>,
    source: Provenance,
}

impl DirectionSet {
    pub fn new(
        directions: Vec<Vector>,
        eigenvalues: Vec<f64>,
        source: Provenance,
    ) -> Result<Self, FactorizeError> {
        let invalid = |msg: String| Err(FactorizeError::InvalidDirections(msg));
        let Some(first) = directions.first() else {
            return invalid("no directions".into());
        };
        let latent_dim = first.dim();
        if eigenvalues.len() != directions.len() {
            return invalid(format!(
                "{} directions but {} eigenvalues",
                directions.len(),
                eigenvalues.len()
            ));
        }
        for (i, n) in directions.iter().enumerate() {
            if n.dim() != latent_dim {
                return Err(FactorizeError::DimMismatch {
                    expected: latent_dim,
                    actual: n.dim(),
                });
            }
            let norm = n.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return invalid(format!("direction {i} has norm {norm}"));
            }
        }
        if let Some(i) = eigenvalues.iter().position(|&l| !(l >= 0.0) || !l.is_finite()) {
            return invalid(format!("eigenvalue {i} is {}", eigenvalues[i]));
        }
        if let Some(i) = eigenvalues.windows(2).position(|w| w[1] > w[0]) {
            return invalid(format!("eigenvalues increase at index {}", i + 1));
        }
        if source.method == Method::Sefa {
            for i in 0..directions.len() {
                for j in 0..i {
                    let c = directions[i].dot(&directions[j]).abs();
                    if c > ORTHOGONALITY_TOLERANCE {
                        return invalid(format!("directions {j} and {i} overlap by {c:e}"));
                    }
                }
            }
        }
        Ok(Self {
            latent_dim,
            directions,
            eigenvalues,
            source,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn direction(&self, i: usize) -> &Vector {
        &self.directions[i]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn source(&self) -> &Provenance {
        &self.source
    }

    pub fn with_source(mut self, source: Provenance) -> Self {
        self.source = source;
        self
    }

    /// Indices whose eigenvalue is below [`NEAR_ZERO_RATIO`] times the largest.
    /// Moving along such a direction barely changes the projected code.
    pub fn near_zero_indices(&self) -> Vec<usize> {
        let threshold = NEAR_ZERO_RATIO * self.eigenvalues[0];
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l <= threshold)
            .map(|(i, _)| i)
            .collect()
    }

    /// The `d × k` matrix with one direction per column.
    pub fn as_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.directions).expect("validated on construction")
    }
}

/// Stacks per-layer weights along the output axis, in the given order.
pub fn concat_weights(layers: &[LayerWeights]) -> Result<Matrix, FactorizeError> {
    let first = layers.first().ok_or(FactorizeError::NoLayers)?;
    let cols = first.a.cols();
    if let Some(bad) = layers.iter().find(|l| l.a.cols() != cols) {
        return Err(FactorizeError::DimMismatch {
            expected: cols,
            actual: bad.a.cols(),
        });
    }
    let parts: Vec<&Matrix> = layers.iter().map(|l| &l.a).collect();
    Ok(Matrix::vstack(&parts)?)
}

/// Top-`k` eigenvectors of `AᵀA` as a direction set.
///
/// The returned provenance is a placeholder (`origin = "matrix"`); callers
/// that persist the set should attach their own with
/// [`DirectionSet::with_source`].
pub fn factorize(a: &Matrix, k: usize) -> Result<DirectionSet, FactorizeError> {
    let d = a.cols();
    if k == 0 {
        return Err(FactorizeError::ZeroK);
    }
    if k > d {
        return Err(FactorizeError::KTooLarge { k, dim: d });
    }
    let pairs = linalg::top_k_eigenpairs(&linalg::gram(a), k)?;
    let (eigenvalues, directions) = pairs.into_iter().map(|p| (p.value, p.vector)).unzip();
    DirectionSet::new(
        directions,
        eigenvalues,
        Provenance::new("matrix", "all", Method::Sefa),
    )
}

/// Concatenates the layers and factorizes the stack.
pub fn factorize_layers(layers: &[LayerWeights], k: usize) -> Result<DirectionSet, FactorizeError> {
    factorize(&concat_weights(layers)?, k)
}

/// `‖A n‖²`.
pub fn variation_energy(a: &Matrix, n: &Vector) -> Result<f64, FactorizeError> {
    let an = a.mul_vec(n.as_slice()).map_err(|_| FactorizeError::DimMismatch {
        expected: a.cols(),
        actual: n.dim(),
    })?;
    Ok(an.iter().map(|x| x * x).sum())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    format: String,
    version: u32,
    latent_dim: usize,
    k: usize,
    eigenvalues: Vec<f64>,
    source: Provenance,
}

/// Encodes a direction set as a zip archive holding `meta.json` and
/// `directions.npy` (`d × k`, one direction per column). Output bytes depend
/// only on the set's contents.
pub fn encode_directions(ds: &DirectionSet) -> Result<Vec<u8>, FactorizeError> {
    let meta = Meta {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        latent_dim: ds.latent_dim,
        k: ds.k(),
        eigenvalues: ds.eigenvalues.clone(),
        source: ds.source.clone(),
    };
    let mut meta_json = serde_json::to_vec_pretty(&meta)
        .map_err(|e| FactorizeError::SchemaViolation(e.to_string()))?;
    meta_json.push(b'\n');
    let payload = npy::encode(&[ds.latent_dim, ds.k()], ds.as_matrix().as_slice());

    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let archive_error = |e: zip::result::ZipError| FactorizeError::Io {
        path: "<archive>".into(),
        source: std::io::Error::other(e),
    };
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    zip.start_file(META_MEMBER, options).map_err(archive_error)?;
    zip.write_all(&meta_json).map_err(|source| FactorizeError::Io {
        path: META_MEMBER.into(),
        source,
    })?;
    zip.start_file(DIRECTIONS_MEMBER, options).map_err(archive_error)?;
    zip.write_all(&payload).map_err(|source| FactorizeError::Io {
        path: DIRECTIONS_MEMBER.into(),
        source,
    })?;
    Ok(zip.finish().map_err(archive_error)?.into_inner())
}

pub fn decode_directions(bytes: &[u8]) -> Result<DirectionSet, FactorizeError> {
    let schema = |msg: String| FactorizeError::SchemaViolation(msg);
    let mut archive =
        ZipArchive::new(Cursor::new(bytes)).map_err(|e| schema(format!("not a zip archive: {e}")))?;
    let mut read_member = |name: &str| -> Result<Vec<u8>, FactorizeError> {
        let mut member = archive
            .by_name(name)
            .map_err(|_| schema(format!("missing member {name:?}")))?;
        let mut buf = Vec::new();
        member.read_to_end(&mut buf).map_err(|source| FactorizeError::Io {
            path: name.into(),
            source,
        })?;
        Ok(buf)
    };
    let meta_bytes = read_member(META_MEMBER)?;
    let payload = read_member(DIRECTIONS_MEMBER)?;

    let meta: Meta = serde_json::from_slice(&meta_bytes).map_err(|e| schema(e.to_string()))?;
    if meta.format != FORMAT_NAME || meta.version != FORMAT_VERSION {
        return Err(schema(format!(
            "unsupported format {:?} version {}",
            meta.format, meta.version
        )));
    }
    let arr = npy::decode(DIRECTIONS_MEMBER, &payload)?;
    if arr.shape != [meta.latent_dim, meta.k] || meta.eigenvalues.len() != meta.k {
        return Err(schema(format!(
            "payload shape {:?} and {} eigenvalues disagree with latent_dim {} and k {}",
            arr.shape,
            meta.eigenvalues.len(),
            meta.latent_dim,
            meta.k
        )));
    }
    let m = Matrix::new(meta.latent_dim, meta.k, arr.data)?;
    let directions = (0..meta.k).map(|j| m.column(j)).collect();
    DirectionSet::new(directions, meta.eigenvalues, meta.source)
}

pub fn save_directions(ds: &DirectionSet, path: &Path) -> Result<(), FactorizeError> {
    let bytes = encode_directions(ds)?;
    npy::write_atomic(path, &bytes).map_err(|source| FactorizeError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_directions(path: &Path) -> Result<DirectionSet, FactorizeError> {
    let bytes = std::fs::read(path).map_err(|source| FactorizeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_directions(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(name: &str, rows: &[&[f64]]) -> LayerWeights {
        LayerWeights {
            name: name.into(),
            a: Matrix::from_rows(rows).unwrap(),
            bias: None,
        }
    }

    #[test]
    fn concat_puts_first_layer_on_top() {
        let a = layer("a", &[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let b = layer("b", &[&[7.0, 8.0, 9.0]]);
        let stacked = concat_weights(&[a.clone(), b]).unwrap();
        assert_eq!(stacked.shape(), (3, 3));
        assert_eq!(stacked.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(stacked.row(2), &[7.0, 8.0, 9.0]);
        assert_eq!(concat_weights(std::slice::from_ref(&a)).unwrap(), a.a);
    }

    #[test]
    fn concat_rejects_mixed_latent_dims() {
        let a = layer("a", &[&[1.0, 2.0]]);
        let b = layer("b", &[&[1.0, 2.0, 3.0]]);
        assert!(matches!(
            concat_weights(&[a, b]),
            Err(FactorizeError::DimMismatch {
                expected: 2,
                actual: 3
            })
        ));
        assert!(matches!(concat_weights(&[]), Err(FactorizeError::NoLayers)));
    }

    #[test]
    fn diagonal_singular_values() {
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let ds = factorize(&a, 2).unwrap();
        assert_eq!(ds.direction(0), &Vector::basis(2, 0));
        assert_eq!(ds.direction(1), &Vector::basis(2, 1));
        assert!((ds.eigenvalues()[0] - 4.0).abs() < 1e-14);
        assert!((ds.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn k_bounds() {
        let a = Matrix::identity(3);
        assert!(matches!(
            factorize(&a, 4),
            Err(FactorizeError::KTooLarge { k: 4, dim: 3 })
        ));
        assert!(matches!(factorize(&a, 0), Err(FactorizeError::ZeroK)));
        assert_eq!(default_k(512), 50);
        assert_eq!(default_k(8), 8);
    }

    #[test]
    fn variation_energy_cases() {
        let a = Matrix::identity(3);
        let n = Vector::new(vec![0.6, 0.0, 0.8]).unwrap();
        assert!((variation_energy(&a, &n).unwrap() - 1.0).abs() < 1e-15);

        let a = Matrix::from_rows(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(variation_energy(&a, &Vector::basis(3, 2)).unwrap(), 0.0);
        assert!(matches!(
            variation_energy(&a, &Vector::basis(2, 0)),
            Err(FactorizeError::DimMismatch { .. })
        ));
    }

    #[test]
    fn rank_deficient_input_flags_zero_energy_directions() {
        let a = Matrix::from_rows(&[[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]).unwrap();
        let ds = factorize(&a, 3).unwrap();
        assert_eq!(ds.near_zero_indices(), vec![1, 2]);
    }

    #[test]
    fn direction_set_validation() {
        let p = Provenance::new("t", "0-", Method::Sefa);
        let e = vec![Vector::basis(2, 0), Vector::basis(2, 1)];
        assert!(DirectionSet::new(e.clone(), vec![1.0, 2.0], p.clone()).is_err());
        assert!(DirectionSet::new(e.clone(), vec![2.0], p.clone()).is_err());
        assert!(DirectionSet::new(e, vec![2.0, -1.0], p.clone()).is_err());
        let skew = vec![
            Vector::basis(2, 0),
            Vector::new(vec![0.6, 0.8]).unwrap(),
        ];
        assert!(DirectionSet::new(skew.clone(), vec![2.0, 1.0], p.clone()).is_err());
        let p = Provenance::new("t", "0-", Method::PcaBaseline);
        assert!(DirectionSet::new(skew, vec![2.0, 1.0], p).is_ok());
        let long = vec![Vector::new(vec![1.0, 1.0]).unwrap()];
        assert!(DirectionSet::new(long, vec![1.0], Provenance::new("t", "", Method::Sefa)).is_err());
    }

    #[test]
    fn archive_members_and_errors() {
        let a = Matrix::from_rows(&[[3.0, 1.0], [1.0, 2.0], [0.5, -1.0]]).unwrap();
        let ds = factorize(&a, 2)
            .unwrap()
            .with_source(Provenance::new("toy", "0-", Method::Sefa).created_at(1_700_000_000));
        let bytes = encode_directions(&ds).unwrap();
        let mut zip = ZipArchive::new(Cursor::new(&bytes)).unwrap();
        let names: Vec<String> = (0..zip.len())
            .map(|i| zip.by_index(i).unwrap().name().to_string())
            .collect();
        assert_eq!(names, vec!["meta.json", "directions.npy"]);
        assert_eq!(decode_directions(&bytes).unwrap(), ds);
        assert_eq!(encode_directions(&ds).unwrap(), bytes);
        assert!(matches!(
            decode_directions(b"not a zip"),
            Err(FactorizeError::SchemaViolation(_))
        ));
    }
}

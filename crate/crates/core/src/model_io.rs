//! Loading first-step weight matrices and the manifests that describe them.
//!
//! A manifest is a JSON document listing, in network order, the tensors that
//! map the latent code to the generator's first internal representation:
//!
//! ```json
//! {"family": "stylegan", "latent_dim": 512,
//!  "layers": [{"name": "style0", "tensor_path": "style0.npy", "rows": 512,
//!              "transpose": false, "bias_path": "style0_bias.npy"}],
//!  "notes": "free text"}
//! ```
//!
//! Tensor paths are resolved relative to the manifest's directory. Weights
//! are oriented `rows × latent_dim`; a tensor stored the other way round is
//! declared with `"transpose": true`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Vector};
use crate::npy::{self, NpyError};

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Npy(#[from] NpyError),
    #[error("{path}: expected a 2-dimensional tensor, found shape {shape:?}")]
    NotTwoDimensional { path: String, shape: Vec<usize> },
    #[error("{path}: invalid tensor")]
    InvalidTensor {
        path: String,
        #[source]
        source: LinalgError,
    },
    #[error("manifest schema violation: {0}")]
    SchemaViolation(String),
    #[error("layer {layer:?}: tensor file {path} does not exist")]
    MissingTensor { layer: String, path: String },
    #[error("layer {layer:?}: {detail}")]
    ShapeMismatch { layer: String, detail: String },
    #[error("layer {layer:?}: latent dimension {actual} does not match manifest latent_dim {expected}")]
    LatentDimInconsistent {
        layer: String,
        expected: usize,
        actual: usize,
    },
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("layer selection is empty")]
    Empty,
    #[error("malformed layer range {0:?}")]
    Malformed(String),
    #[error("inverted layer range {start}-{end}")]
    Inverted { start: usize, end: usize },
    #[error("layer ranges overlap at index {0}")]
    Overlap(usize),
    #[error("layer index {index} out of bounds for {layers} layers")]
    OutOfBounds { index: usize, layers: usize },
}

/// Loads a 2-D NPY tensor as an `f64` matrix.
pub fn load_matrix(path: &Path) -> Result<Matrix, ModelIoError> {
    let arr = npy::read_file(path)?;
    let name = path.display().to_string();
    match arr.shape[..] {
        [rows, cols] => Matrix::new(rows, cols, arr.data)
            .map_err(|source| ModelIoError::InvalidTensor { path: name, source }),
        _ => Err(ModelIoError::NotTwoDimensional {
            path: name,
            shape: arr.shape,
        }),
    }
}

/// Writes a matrix as a `<f8` NPY file, atomically.
pub fn save_matrix(m: &Matrix, path: &Path) -> Result<(), ModelIoError> {
    npy::write_file(path, &[m.rows(), m.cols()], m.as_slice())?;
    Ok(())
}

pub fn load_vector(path: &Path) -> Result<Vector, ModelIoError> {
    let arr = npy::read_file(path)?;
    let name = path.display().to_string();
    if arr.shape.len() != 1 {
        return Err(NpyError::WrongDimensionality {
            path: name,
            expected: 1,
            shape: arr.shape,
        }
        .into());
    }
    Vector::new(arr.data).map_err(|source| ModelIoError::InvalidTensor { path: name, source })
}

pub fn save_vector(v: &Vector, path: &Path) -> Result<(), ModelIoError> {
    npy::write_file(path, &[v.dim()], v.as_slice())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Latent code projected to an initial feature map.
    Pggan,
    /// Latent code projected to a style code at every layer.
    Stylegan,
    /// Feature-map projection plus per-layer projections.
    Biggan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    pub tensor_path: String,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub transpose: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureManifest {
    pub family: Family,
    pub latent_dim: usize,
    pub layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Directory relative tensor paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// One layer's affine map `y = A z + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub name: String,
    pub a: Matrix,
    pub bias: Option<Vector>,
}

impl ArchitectureManifest {
    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    fn check_schema(&self) -> Result<(), ModelIoError> {
        let violation = |msg: String| Err(ModelIoError::SchemaViolation(msg));
        if self.latent_dim == 0 {
            return violation("latent_dim must be positive".into());
        }
        if self.layers.is_empty() {
            return violation("manifest lists no layers".into());
        }
        let mut seen = HashSet::new();
        for layer in &self.layers {
            if !seen.insert(layer.name.as_str()) {
                return violation(format!("duplicate layer name {:?}", layer.name));
            }
            if layer.rows == 0 {
                return violation(format!("layer {:?} declares zero rows", layer.name));
            }
        }
        match (self.family, self.layers.len()) {
            (Family::Pggan, n) if n != 1 => {
                violation(format!("pggan manifests take exactly one layer, found {n}"))
            }
            (Family::Biggan, n) if n < 2 => violation(format!(
                "biggan manifests take a feature-map layer plus at least one per-layer entry, found {n}"
            )),
            _ => Ok(()),
        }
    }

    /// Verifies every tensor exists with the declared orientation and shape.
    fn check_tensors(&self) -> Result<(), ModelIoError> {
        for layer in &self.layers {
            let path = self.resolve(&layer.tensor_path);
            if !path.is_file() {
                return Err(ModelIoError::MissingTensor {
                    layer: layer.name.clone(),
                    path: path.display().to_string(),
                });
            }
            let header = npy::read_file_header(&path)?;
            let (rows, cols) = match header.shape[..] {
                [r, c] if layer.transpose => (c, r),
                [r, c] => (r, c),
                _ => {
                    return Err(ModelIoError::NotTwoDimensional {
                        path: path.display().to_string(),
                        shape: header.shape,
                    })
                }
            };
            if cols != self.latent_dim {
                return Err(ModelIoError::LatentDimInconsistent {
                    layer: layer.name.clone(),
                    expected: self.latent_dim,
                    actual: cols,
                });
            }
            if rows != layer.rows {
                return Err(ModelIoError::ShapeMismatch {
                    layer: layer.name.clone(),
                    detail: format!("declared {} rows, tensor has {rows}", layer.rows),
                });
            }
            if let Some(bias) = &layer.bias_path {
                let bias_path = self.resolve(bias);
                if !bias_path.is_file() {
                    return Err(ModelIoError::MissingTensor {
                        layer: layer.name.clone(),
                        path: bias_path.display().to_string(),
                    });
                }
                let header = npy::read_file_header(&bias_path)?;
                if header.shape != [rows] {
                    return Err(ModelIoError::ShapeMismatch {
                        layer: layer.name.clone(),
                        detail: format!("bias shape {:?}, expected [{rows}]", header.shape),
                    });
                }
            }
        }
        Ok(())
    }

    /// Loads one layer, transposing to `rows × latent_dim` if flagged.
    pub fn load_layer(&self, index: usize) -> Result<LayerWeights, ModelIoError> {
        let entry = &self.layers[index];
        let mut a = load_matrix(&self.resolve(&entry.tensor_path))?;
        if entry.transpose {
            a = a.transpose();
        }
        if a.cols() != self.latent_dim {
            return Err(ModelIoError::LatentDimInconsistent {
                layer: entry.name.clone(),
                expected: self.latent_dim,
                actual: a.cols(),
            });
        }
        if a.rows() != entry.rows {
            return Err(ModelIoError::ShapeMismatch {
                layer: entry.name.clone(),
                detail: format!("declared {} rows, tensor has {}", entry.rows, a.rows()),
            });
        }
        let bias = match &entry.bias_path {
            Some(p) => {
                let b = load_vector(&self.resolve(p))?;
                if b.dim() != a.rows() {
                    return Err(ModelIoError::ShapeMismatch {
                        layer: entry.name.clone(),
                        detail: format!("bias length {}, expected {}", b.dim(), a.rows()),
                    });
                }
                Some(b)
            }
            None => None,
        };
        Ok(LayerWeights {
            name: entry.name.clone(),
            a,
            bias,
        })
    }

    /// Writes the manifest as pretty JSON.
    pub fn save(&self, path: &Path) -> Result<(), ModelIoError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| ModelIoError::SchemaViolation(e.to_string()))?;
        text.push('\n');
        npy::write_atomic(path, text.as_bytes()).map_err(|source| ModelIoError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Parses and validates a manifest, including the shapes of every referenced tensor.
pub fn load_manifest(path: &Path) -> Result<ArchitectureManifest, ModelIoError> {
    let text = fs::read_to_string(path).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut manifest: ArchitectureManifest =
        serde_json::from_str(&text).map_err(|e| ModelIoError::SchemaViolation(e.to_string()))?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.check_schema()?;
    manifest.check_tensors()?;
    Ok(manifest)
}

/// An inclusive range of layer indices; `end == None` runs to the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerRange {
    pub start: usize,
    pub end: Option<usize>,
}

impl fmt::Display for LayerRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.end {
            Some(end) if end == self.start => write!(f, "{}", self.start),
            Some(end) => write!(f, "{}-{}", self.start, end),
            None => write!(f, "{}-", self.start),
        }
    }
}

/// Which layers to factorize, e.g. `"0-1"`, `"2-5"`, `"6-"` or `"0,3-4"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSelection {
    ranges: Vec<LayerRange>,
}

impl LayerSelection {
    /// Every layer.
    pub fn all() -> Self {
        Self {
            ranges: vec![LayerRange {
                start: 0,
                end: None,
            }],
        }
    }

    pub fn ranges(&self) -> &[LayerRange] {
        &self.ranges
    }

    /// Expands the selection to layer indices in network order.
    pub fn resolve(&self, layers: usize) -> Result<Vec<usize>, SelectionError> {
        let mut indices = Vec::new();
        for r in &self.ranges {
            let end = r.end.unwrap_or(layers.saturating_sub(1));
            if r.start >= layers {
                return Err(SelectionError::OutOfBounds {
                    index: r.start,
                    layers,
                });
            }
            if end >= layers {
                return Err(SelectionError::OutOfBounds { index: end, layers });
            }
            indices.extend(r.start..=end);
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(SelectionError::Overlap(w[0]));
        }
        if indices.is_empty() {
            return Err(SelectionError::Empty);
        }
        Ok(indices)
    }
}

impl FromStr for LayerSelection {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_index = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| SelectionError::Malformed(s.to_string()))
        };
        let mut ranges = Vec::new();
        for part in s.split(',').map(str::trim) {
            if part.is_empty() {
                return Err(if s.trim().is_empty() {
                    SelectionError::Empty
                } else {
                    SelectionError::Malformed(s.to_string())
                });
            }
            let range = match part.split_once('-') {
                Some((a, "")) => LayerRange {
                    start: parse_index(a)?,
                    end: None,
                },
                Some((a, b)) => {
                    let (start, end) = (parse_index(a)?, parse_index(b)?);
                    if end < start {
                        return Err(SelectionError::Inverted { start, end });
                    }
                    LayerRange {
                        start,
                        end: Some(end),
                    }
                }
                None => {
                    let i = parse_index(part)?;
                    LayerRange {
                        start: i,
                        end: Some(i),
                    }
                }
            };
            ranges.push(range);
        }
        // Overlaps that do not depend on the layer count.
        for (i, a) in ranges.iter().enumerate() {
            for b in &ranges[i + 1..] {
                let a_end = a.end.unwrap_or(usize::MAX);
                let b_end = b.end.unwrap_or(usize::MAX);
                if a.start <= b_end && b.start <= a_end {
                    return Err(SelectionError::Overlap(a.start.max(b.start)));
                }
            }
        }
        Ok(Self { ranges })
    }
}

impl fmt::Display for LayerSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.ranges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Loads the selected layers in network order.
pub fn select_layers(
    manifest: &ArchitectureManifest,
    selection: &LayerSelection,
) -> Result<Vec<LayerWeights>, ModelIoError> {
    selection
        .resolve(manifest.layers.len())?
        .into_iter()
        .map(|i| manifest.load_layer(i))
        .collect()
}

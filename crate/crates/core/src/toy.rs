//! A transparent generator with an exact affine first step.
//!
//! `y = A z + b` maps the latent code to a projected code; the first six
//! components of `y` are squashed into bounded attributes, and the
//! attributes drive a fixed renderer that draws one anti-aliased ellipse.
//! With a planted spectrum `A ≈ U diag(σ) Vᵀ` the directions a factorization
//! should recover are known exactly.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factorizer::{self, DirectionSet, FactorizeError, Method, Provenance};
use crate::linalg::{self, LinalgError, Matrix, Vector};
use crate::model_io::{self, ArchitectureManifest, Family, LayerEntry, ModelIoError};
use crate::rng;

/// Projected codes must cover the six attributes.
pub const MIN_PROJECTED_DIM: usize = 6;
pub const DEFAULT_SIZE: u32 = 256;

/// Noise added to a planted matrix, relative to the smallest planted value.
const PLANT_NOISE_RATIO: f64 = 1e-6;
/// Supersampling grid per pixel side.
const SUPERSAMPLE: u32 = 4;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHT_FILE: &str = "a.npy";
pub const BIAS_FILE: &str = "b.npy";
pub const TOY_FILE: &str = "toy.json";
pub const PLANTED_FILE: &str = "planted.zip";

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    ModelIo(#[from] ModelIoError),
    #[error(transparent)]
    Directions(#[from] FactorizeError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("PNG encoding failed: {0}")]
    Png(String),
}

/// Ground truth of a planted generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    /// `d × r`, orthonormal columns.
    pub v: Matrix,
    /// Descending positive singular values.
    pub sigma: Vec<f64>,
    /// Whether `U` is the identity prefix, so direction `j` moves only `y_j`.
    pub aligned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyGenerator {
    a: Matrix,
    b: Vector,
    planted: Option<PlantedTruth>,
    seed: u64,
    width: u32,
    height: u32,
}

/// Ground-truth semantics of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector {
    pub pos_x: f64,
    pub pos_y: f64,
    pub rotation: f64,
    pub log_scale: f64,
    pub hue: f64,
    pub brightness: f64,
}

impl AttributeVector {
    pub const LABELS: [&'static str; 6] =
        ["pos_x", "pos_y", "rotation", "log_scale", "hue", "brightness"];

    /// Squashes the first six projected components.
    pub fn from_projected(y: &[f64]) -> Self {
        Self {
            pos_x: libm::tanh(y[0]),
            pos_y: libm::tanh(y[1]),
            rotation: FRAC_PI_2 * libm::tanh(y[2]),
            log_scale: libm::tanh(y[3]),
            hue: frac(sigmoid(y[4])),
            brightness: sigmoid(y[5]),
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.pos_x,
            self.pos_y,
            self.rotation,
            self.log_scale,
            self.hue,
            self.brightness,
        ]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RenderedImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ToyError> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(
                &self.pixels,
                self.width,
                self.height,
                image::ExtendedColorType::Rgb8,
            )
            .map_err(|e| ToyError::Png(e.to_string()))?;
        Ok(out)
    }

    /// Frames laid out left to right. All frames must share a height.
    pub fn hstack(frames: &[RenderedImage]) -> Result<RenderedImage, ToyError> {
        let height = frames
            .first()
            .map(|f| f.height)
            .ok_or_else(|| ToyError::BadShape("no frames".into()))?;
        if frames.iter().any(|f| f.height != height) {
            return Err(ToyError::BadShape("frames differ in height".into()));
        }
        let width: u32 = frames.iter().map(|f| f.width).sum();
        let mut pixels = Vec::with_capacity(3 * width as usize * height as usize);
        for y in 0..height as usize {
            for f in frames {
                let row = 3 * f.width as usize;
                pixels.extend_from_slice(&f.pixels[y * row..(y + 1) * row]);
            }
        }
        Ok(RenderedImage {
            width,
            height,
            pixels,
        })
    }
}

/// HSV with components in `[0, 1]` to 8-bit RGB.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h6 = frac(h) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| (255.0 * c).round().clamp(0.0, 255.0) as u8)
}

/// Draws the ellipse described by `attrs` on a uniform gray background.
///
/// Each pixel is sampled on a 4×4 grid at offsets `(i + 0.5) / 4`; a sample
/// is inside when `(u/a)² + (v/b)² ≤ 1` in the ellipse frame. The output is
/// the integer box filter `(fill · n + bg · (16 − n) + 8) / 16` per channel,
/// where `n` counts inside samples.
pub fn render_attributes(attrs: &AttributeVector, width: u32, height: u32) -> RenderedImage {
    let (w, h) = (f64::from(width), f64::from(height));
    let cx = (1.0 + attrs.pos_x) / 2.0 * w;
    let cy = (1.0 + attrs.pos_y) / 2.0 * h;
    let scale = libm::exp(attrs.log_scale);
    let semi_major = 0.25 * w * scale;
    let semi_minor = 0.15 * h * scale;
    let (sin, cos) = (libm::sin(attrs.rotation), libm::cos(attrs.rotation));
    let fill = hsv_to_rgb(attrs.hue, 0.8, 0.9);
    let bg = (255.0 * attrs.brightness).round().clamp(0.0, 255.0) as u32;

    let samples = SUPERSAMPLE * SUPERSAMPLE;
    let offsets: Vec<f64> = (0..SUPERSAMPLE)
        .map(|i| (f64::from(i) + 0.5) / f64::from(SUPERSAMPLE))
        .collect();
    // Conservative bounding box; pixels outside it have no inside samples.
    let reach = semi_major.max(semi_minor) + 1.0;

    let mut pixels = Vec::with_capacity(3 * width as usize * height as usize);
    for py in 0..height {
        for px in 0..width {
            let mut inside = 0u32;
            let (fx, fy) = (f64::from(px), f64::from(py));
            if (fx + 0.5 - cx).abs() <= reach && (fy + 0.5 - cy).abs() <= reach {
                for &oy in &offsets {
                    let dy = fy + oy - cy;
                    for &ox in &offsets {
                        let dx = fx + ox - cx;
                        let u = dx * cos + dy * sin;
                        let v = -dx * sin + dy * cos;
                        let r = (u / semi_major) * (u / semi_major) + (v / semi_minor) * (v / semi_minor);
                        if r <= 1.0 {
                            inside += 1;
                        }
                    }
                }
            }
            for c in fill {
                let value = (u32::from(c) * inside + bg * (samples - inside) + samples / 2) / samples;
                pixels.push(value as u8);
            }
        }
    }
    RenderedImage {
        width,
        height,
        pixels,
    }
}

/// Random `rows × cols` matrix with orthonormal columns.
fn random_orthonormal(rng: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> Result<Matrix, ToyError> {
    let columns: Vec<Vector> = (0..cols).map(|_| rng::latent(rng, rows)).collect();
    let basis = linalg::orthonormal_basis(&columns)?;
    let columns: Vec<Vector> = basis.into_iter().map(Vector::new).collect::<Result<_, _>>()?;
    Ok(Matrix::from_columns(&columns)?)
}

fn check_sigma(sigma: &[f64], d: usize, m: usize) -> Result<(), ToyError> {
    if sigma.is_empty() {
        return Err(ToyError::BadShape("need at least one planted value".into()));
    }
    if sigma.len() > d.min(m) {
        return Err(ToyError::BadShape(format!(
            "rank {} exceeds min(d, m) = {}",
            sigma.len(),
            d.min(m)
        )));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(ToyError::BadShape("planted values must be positive".into()));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(ToyError::BadShape("planted values must be descending".into()));
    }
    Ok(())
}

impl ToyGenerator {
    /// Wraps an explicit affine step.
    pub fn from_parts(a: Matrix, b: Vector, seed: u64) -> Result<Self, ToyError> {
        if a.rows() < MIN_PROJECTED_DIM {
            return Err(ToyError::BadShape(format!(
                "projected dimension {} is below {MIN_PROJECTED_DIM}",
                a.rows()
            )));
        }
        if b.dim() != a.rows() {
            return Err(ToyError::DimMismatch {
                expected: a.rows(),
                actual: b.dim(),
            });
        }
        Ok(Self {
            a,
            b,
            planted: None,
            seed,
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
        })
    }

    /// Plants `A = U diag(σ) Vᵀ + ε N (I − V Vᵀ)` with random orthonormal `U`
    /// (`m × r`) and `V` (`d × r`), Gaussian `N` and `ε = 10⁻⁶ σ_r`.
    ///
    /// The noise keeps `A` full rank; projecting it off `span(V)` keeps
    /// `A vⱼ = σⱼ uⱼ` exact.
    pub fn make_planted(d: usize, m: usize, r: usize, sigma: &[f64], seed: u64) -> Result<Self, ToyError> {
        Self::planted(d, m, r, sigma, seed, false)
    }

    /// Like [`make_planted`](Self::make_planted) but with `U` the first `r`
    /// standard basis vectors, so planted direction `j` moves only `y_j`.
    pub fn make_planted_aligned(d: usize, m: usize, sigma: &[f64], seed: u64) -> Result<Self, ToyError> {
        Self::planted(d, m, sigma.len(), sigma, seed, true)
    }

    fn planted(d: usize, m: usize, r: usize, sigma: &[f64], seed: u64, aligned: bool) -> Result<Self, ToyError> {
        if m < MIN_PROJECTED_DIM || d == 0 {
            return Err(ToyError::BadShape(format!(
                "need d ≥ 1 and m ≥ {MIN_PROJECTED_DIM}, got d = {d}, m = {m}"
            )));
        }
        if r != sigma.len() {
            return Err(ToyError::BadShape(format!(
                "rank {r} but {} planted values",
                sigma.len()
            )));
        }
        check_sigma(sigma, d, m)?;

        let mut rng = rng::seeded(seed);
        let u = if aligned {
            let cols: Vec<Vector> = (0..r).map(|j| Vector::basis(m, j)).collect();
            Matrix::from_columns(&cols)?
        } else {
            random_orthonormal(&mut rng, m, r)?
        };
        let v = random_orthonormal(&mut rng, d, r)?;
        let noise = Matrix::new(m, d, rng::standard_normal(&mut rng, m * d))?;
        let b = rng::latent(&mut rng, m);

        // ε N (I − V Vᵀ) = ε (N − (N V) Vᵀ)
        let eps = PLANT_NOISE_RATIO * sigma[r - 1];
        let nv = noise.matmul(&v)?;
        let projected = noise.add(&nv.matmul(&v.transpose())?.scaled(-1.0))?;
        let mut us = u.clone();
        for i in 0..m {
            for (j, s) in sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        let a = us.matmul(&v.transpose())?.add(&projected.scaled(eps))?;

        let mut generator = Self::from_parts(a, b, seed)?;
        generator.planted = Some(PlantedTruth {
            v,
            sigma: sigma.to_vec(),
            aligned,
        });
        Ok(generator)
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn latent_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn projected_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.a
    }

    pub fn bias(&self) -> &Vector {
        &self.b
    }

    pub fn planted_truth(&self) -> Option<&PlantedTruth> {
        self.planted.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn size(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Planted `V` as a direction set with eigenvalues `σ²`.
    pub fn planted_directions(&self) -> Option<DirectionSet> {
        let truth = self.planted.as_ref()?;
        let directions = (0..truth.sigma.len()).map(|j| truth.v.column(j)).collect();
        let eigenvalues = truth.sigma.iter().map(|s| s * s).collect();
        DirectionSet::new(directions, eigenvalues, Provenance::new("toy", "0-", Method::Planted)).ok()
    }

    fn check_latent(&self, z: &Vector) -> Result<(), ToyError> {
        if z.dim() != self.latent_dim() {
            return Err(ToyError::DimMismatch {
                expected: self.latent_dim(),
                actual: z.dim(),
            });
        }
        Ok(())
    }

    /// `y = A z + b`.
    pub fn project(&self, z: &Vector) -> Result<Vector, ToyError> {
        self.check_latent(z)?;
        let y = (0..self.a.rows())
            .map(|i| {
                let mut acc = 0.0;
                for (a, x) in self.a.row(i).iter().zip(z.as_slice()) {
                    acc += a * x;
                }
                acc + self.b[i]
            })
            .collect();
        Ok(Vector::new(y)?)
    }

    pub fn attributes(&self, z: &Vector) -> Result<AttributeVector, ToyError> {
        Ok(AttributeVector::from_projected(self.project(z)?.as_slice()))
    }

    pub fn render(&self, z: &Vector) -> Result<RenderedImage, ToyError> {
        Ok(render_attributes(&self.attributes(z)?, self.width, self.height))
    }

    /// Writes the generator as a manifest directory: `manifest.json`, `a.npy`,
    /// `b.npy`, `toy.json`, and `planted.zip` when planted.
    pub fn save_dir(&self, dir: &Path) -> Result<(), ToyError> {
        fs::create_dir_all(dir).map_err(|e| ToyError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        let manifest = ArchitectureManifest {
            family: Family::Pggan,
            latent_dim: self.latent_dim(),
            layers: vec![LayerEntry {
                name: "toy_affine".into(),
                tensor_path: WEIGHT_FILE.into(),
                rows: self.projected_dim(),
                transpose: false,
                bias_path: Some(BIAS_FILE.into()),
            }],
            notes: Some("toy generator: affine step followed by an ellipse renderer".into()),
            base_dir: dir.to_path_buf(),
        };
        model_io::save_matrix(&self.a, &dir.join(WEIGHT_FILE))?;
        model_io::save_vector(&self.b, &dir.join(BIAS_FILE))?;
        manifest.save(&dir.join(MANIFEST_FILE))?;

        let meta = ToyMeta {
            seed: self.seed,
            width: self.width,
            height: self.height,
            planted_sigma: self.planted.as_ref().map(|p| p.sigma.clone()),
            aligned: self.planted.as_ref().is_some_and(|p| p.aligned),
        };
        let mut text = serde_json::to_string_pretty(&meta).expect("plain struct serializes");
        text.push('\n');
        crate::npy::write_atomic(&dir.join(TOY_FILE), text.as_bytes()).map_err(|e| ToyError::Io {
            path: dir.join(TOY_FILE).display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(planted) = self.planted_directions() {
            factorizer::save_directions(&planted, &dir.join(PLANTED_FILE))?;
        }
        Ok(())
    }

    /// Reads a directory written by [`save_dir`](Self::save_dir).
    pub fn load_dir(dir: &Path) -> Result<Self, ToyError> {
        let manifest = model_io::load_manifest(&dir.join(MANIFEST_FILE))?;
        if manifest.layers.len() != 1 {
            return Err(ToyError::BadShape(format!(
                "toy generators have one affine layer, manifest lists {}",
                manifest.layers.len()
            )));
        }
        let layer = manifest.load_layer(0)?;
        let b = layer
            .bias
            .ok_or_else(|| ToyError::BadShape("toy layer has no bias".into()))?;

        let meta_path = dir.join(TOY_FILE);
        let meta: ToyMeta = match fs::read_to_string(&meta_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| ToyError::Io {
                path: meta_path.display().to_string(),
                message: e.to_string(),
            })?,
            Err(_) => ToyMeta::default(),
        };
        let mut generator = Self::from_parts(layer.a, b, meta.seed)?.with_size(meta.width, meta.height);
        if let Some(sigma) = meta.planted_sigma {
            let planted = factorizer::load_directions(&dir.join(PLANTED_FILE))?;
            if planted.k() != sigma.len() || planted.latent_dim() != generator.latent_dim() {
                return Err(ToyError::BadShape("planted truth does not match the generator".into()));
            }
            generator.planted = Some(PlantedTruth {
                v: planted.as_matrix(),
                sigma,
                aligned: meta.aligned,
            });
        }
        Ok(generator)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ToyMeta {
    seed: u64,
    width: u32,
    height: u32,
    #[serde(default)]
    planted_sigma: Option<Vec<f64>>,
    #[serde(default)]
    aligned: bool,
}

impl Default for ToyMeta {
    fn default() -> Self {
        Self {
            seed: 0,
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            planted_sigma: None,
            aligned: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fnv1a(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        })
    }

    fn small_generator() -> ToyGenerator {
        ToyGenerator::make_planted(4, 8, 2, &[2.0, 1.0], 3).unwrap()
    }

    #[test]
    fn zero_latent_projects_to_bias() {
        let g = small_generator();
        assert_eq!(g.project(&Vector::zeros(4)).unwrap(), *g.bias());
    }

    #[test]
    fn identity_step_is_passthrough() {
        let g = ToyGenerator::from_parts(Matrix::identity(6), Vector::zeros(6), 0).unwrap();
        let z = Vector::new(vec![1.0, -2.0, 0.5, 3.0, 0.0, 7.0]).unwrap();
        assert_eq!(g.project(&z).unwrap(), z);
    }

    #[test]
    fn attributes_at_zero() {
        let attrs = AttributeVector::from_projected(&[0.0; 6]);
        assert_eq!(attrs.pos_x, 0.0);
        assert_eq!(attrs.pos_y, 0.0);
        assert_eq!(attrs.rotation, 0.0);
        assert_eq!(attrs.log_scale, 0.0);
        assert_eq!(attrs.hue, 0.5);
        assert_eq!(attrs.brightness, 0.5);
    }

    #[test]
    fn pos_x_is_monotone_in_first_component() {
        let mut prev = f64::NEG_INFINITY;
        for i in -20..=20 {
            let mut y = [0.0; 6];
            y[0] = f64::from(i) * 0.1;
            let x = AttributeVector::from_projected(&y).pos_x;
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn shape_checks() {
        assert!(matches!(
            ToyGenerator::make_planted(4, 5, 1, &[1.0], 0),
            Err(ToyError::BadShape(_))
        ));
        assert!(matches!(
            ToyGenerator::make_planted(2, 8, 3, &[3.0, 2.0, 1.0], 0),
            Err(ToyError::BadShape(_))
        ));
        assert!(matches!(
            ToyGenerator::make_planted(4, 8, 2, &[1.0, 2.0], 0),
            Err(ToyError::BadShape(_))
        ));
        assert!(matches!(
            ToyGenerator::make_planted(4, 8, 2, &[2.0], 0),
            Err(ToyError::BadShape(_))
        ));
        let g = small_generator();
        assert!(matches!(
            g.project(&Vector::zeros(3)),
            Err(ToyError::DimMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn planted_columns_have_planted_gain() {
        let g = ToyGenerator::make_planted(10, 20, 3, &[5.0, 3.0, 1.0], 7).unwrap();
        let truth = g.planted_truth().unwrap();
        for (j, s) in truth.sigma.iter().enumerate() {
            let v = truth.v.column(j);
            let av = g.weights().mul_vec(v.as_slice()).unwrap();
            assert!((linalg::norm(&av) - s).abs() < 1e-10);
            for k in 0..j {
                assert!(v.dot(&truth.v.column(k)).abs() < 1e-10);
            }
            assert!((v.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv_to_rgb(0.0, 1.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv_to_rgb(1.0 / 3.0, 1.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv_to_rgb(2.0 / 3.0, 1.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv_to_rgb(0.5, 0.0, 0.5), [128, 128, 128]);
    }

    #[test]
    fn render_is_deterministic_and_centered() {
        let attrs = AttributeVector::from_projected(&[0.0; 6]);
        let img = render_attributes(&attrs, 64, 64);
        assert_eq!(img, render_attributes(&attrs, 64, 64));
        // Center is fill, corner is the 50% gray background.
        assert_eq!(img.pixel(32, 32), hsv_to_rgb(0.5, 0.8, 0.9));
        assert_eq!(img.pixel(0, 0), [128, 128, 128]);
        // Anti-aliased boundary pixels take intermediate values.
        let distinct: std::collections::HashSet<[u8; 3]> = (0..64)
            .flat_map(|y| (0..64).map(move |x| (x, y)))
            .map(|(x, y)| img.pixel(x, y))
            .collect();
        assert!(distinct.len() > 2);
    }

    #[test]
    fn golden_renders() {
        // Locks the rasterization rule; regenerate only on an intentional change.
        let attrs = AttributeVector::from_projected(&[0.3, -0.2, 0.7, 0.1, -1.2, 0.4]);
        let img = render_attributes(&attrs, 256, 256);
        assert_eq!(fnv1a(&img.pixels), GOLDEN_ATTRS_HASH);
        let g = small_generator();
        let z = Vector::new(vec![0.5, -1.0, 0.25, 2.0]).unwrap();
        assert_eq!(fnv1a(&g.render(&z).unwrap().pixels), GOLDEN_TOY_HASH);
    }

    const GOLDEN_ATTRS_HASH: u64 = 2987261398389545470;
    const GOLDEN_TOY_HASH: u64 = 15480526693392051116;

    #[test]
    fn png_and_strip() {
        let attrs = AttributeVector::from_projected(&[0.0; 6]);
        let img = render_attributes(&attrs, 16, 8);
        let png = img.to_png().unwrap();
        assert_eq!(&png[1..4], b"PNG");
        let decoded = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(decoded.as_raw(), &img.pixels);
        let strip = RenderedImage::hstack(&[img.clone(), img.clone(), img.clone()]).unwrap();
        assert_eq!((strip.width, strip.height), (48, 8));
        assert_eq!(strip.pixel(16 + 3, 5), img.pixel(3, 5));
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = ToyGenerator::make_planted_aligned(8, 12, &[3.0, 2.0, 1.0], 11).unwrap();
        g.save_dir(dir.path()).unwrap();
        let back = ToyGenerator::load_dir(dir.path()).unwrap();
        assert_eq!(back, g);
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sefa_core::model_io::{save_matrix, ArchitectureManifest, Family, LayerEntry};
use sefa_core::{rng, Matrix, Vector};

pub fn sefa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sefa"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("spawn sefa")
}

pub fn sefa_ok(args: &[&str]) -> Output {
    let out = sefa(args);
    assert!(
        out.status.success(),
        "sefa {args:?} failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Layer-index groups of a 14-layer StyleGAN-shaped manifest: bottom, middle, top.
pub const LEVELS: [(usize, usize); 3] = [(0, 1), (2, 5), (6, 13)];

/// Writes a 14-layer manifest with `rows × d` layers. Each layer is Gaussian
/// noise with entries of variance `1/d` plus a rank-one spike
/// `4 · u vᵀ`, where `v` is shared by the layers of one level and `u` is
/// drawn per layer. Returns the manifest path and the three level vectors.
pub fn stylegan_manifest(dir: &Path, rows: usize, d: usize, seed: u64) -> (PathBuf, Vec<Vector>) {
    let level_dirs: Vec<Vector> = (0..3)
        .map(|g| unit(&rng::latent(&mut rng::stream(seed, 100 + g), d)))
        .collect();
    let mut layers = Vec::new();
    for l in 0..14 {
        let g = LEVELS.iter().position(|&(a, b)| (a..=b).contains(&l)).unwrap();
        let mut stream = rng::stream(seed, l as u64);
        let scale = 1.0 / (d as f64).sqrt();
        let noise: Vec<f64> = rng::standard_normal(&mut stream, rows * d)
            .into_iter()
            .map(|x| x * scale)
            .collect();
        let mut a = Matrix::new(rows, d, noise).unwrap();
        let u = unit(&rng::latent(&mut stream, rows));
        let v = &level_dirs[g];
        for i in 0..rows {
            for j in 0..d {
                a[(i, j)] += 4.0 * u[i] * v[j];
            }
        }
        let file = format!("synthesis_{l:02}.npy");
        save_matrix(&a, &dir.join(&file)).unwrap();
        layers.push(LayerEntry {
            name: format!("style{l}"),
            tensor_path: file,
            rows,
            transpose: false,
            bias_path: None,
        });
    }
    let manifest = ArchitectureManifest {
        family: Family::Stylegan,
        latent_dim: d,
        layers,
        notes: Some("synthetic per-level spikes".into()),
        base_dir: PathBuf::new(),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path).unwrap();
    (path, level_dirs)
}

fn unit(v: &Vector) -> Vector {
    v.normalized().unwrap()
}

/// Width and height from a PNG IHDR chunk.
pub fn png_size(bytes: &[u8]) -> (u32, u32) {
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    let w = u32::from_be_bytes(bytes[16..20].try_into().unwrap());
    let h = u32::from_be_bytes(bytes[20..24].try_into().unwrap());
    (w, h)
}

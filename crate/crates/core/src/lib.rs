//! Closed-form discovery of semantic latent directions for generators whose
//! first step is affine, plus a transparent toy generator to check it on.
//!
//! The pipeline: load (or plant) first-step weights, stack the selected
//! layers, take the top eigenvectors of `AᵀA`, and edit latent codes along
//! them with `z' = z + α n`.

pub mod analysis;
pub mod factorizer;
pub mod linalg;
pub mod model_io;
pub mod npy;
pub mod rng;
pub mod toy;

pub use analysis::{RescoreMatrix, SimilarityReport};
pub use factorizer::{DirectionSet, Method, Provenance};
pub use linalg::{EigenPair, Matrix, Vector};
pub use model_io::{ArchitectureManifest, LayerSelection, LayerWeights};
pub use toy::{AttributeVector, RenderedImage, ToyGenerator};

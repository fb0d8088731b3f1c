//! Domain-randomized synthetic object-detection datasets.
//!
//! The generation path is `sampler` (random scene) → `renderer` (z-buffer
//! rasterization) → `compositor` (background matte) → `annotator` (KITTI
//! labels) → optional `augmentor`, orchestrated by `pipeline`. `evaluator`
//! scores detector output against KITTI-layout ground truth, and `stats`
//! summarizes a dataset.

pub mod annotator;
pub mod assets;
pub mod augmentor;
pub mod compositor;
pub mod config;
pub mod error;
pub mod evaluator;
pub mod math;
pub mod pipeline;
pub mod renderer;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use assets::{AssetCatalog, CatalogDirs, ImageAsset, Mesh};
pub use config::{apply_ablation, load_config, Ablation, AugmentationParams, Config, EvalParams, RandomizationParams};
pub use error::{Error, Result};
pub use renderer::{rasterize, RenderTarget};
pub use rng::RngStream;
pub use sampler::{derive_stream, sample_scene, SceneSpec};

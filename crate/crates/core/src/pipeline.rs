//! End-to-end dataset generation and verification.
//!
//! Image `i` depends only on the master seed, `i`, the config and the asset
//! catalog, so the worker count never changes output bytes. The manifest is
//! written after every image, which makes its presence the completion marker.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotator::{annotate, read_kitti_labels, write_kitti_labels};
use crate::assets::{load_image, AssetCatalog};
use crate::augmentor::{augment, AugOp, Sample};
use crate::compositor::compose;
use crate::config::{apply_ablation, Ablation, AugmentationParams, Config, RandomizationParams};
use crate::error::{Error, Result};
use crate::renderer::{rasterize, RenderTarget};
use crate::rng::RngStream;
use crate::sampler::{derive_stream, sample_scene_indexed, SceneSpec};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const AUGMENT_LOG_FILE: &str = "augmentations.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Salt separating the per-image augmentation stream from the scene stream.
const AUGMENT_SALT: u64 = 0xA06E_0001;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub workers: usize,
    pub ablation: Ablation,
    pub augment: bool,
    pub emit_scene_specs: bool,
    pub emit_instance_masks: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            ablation: Ablation::Full,
            augment: false,
            emit_scene_specs: false,
            emit_instance_masks: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub index: u64,
    pub scene_spec_digest: String,
    pub image: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_mask: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub applied_ops: Vec<AugOp>,
}

impl ImageRecord {
    fn files(&self) -> impl Iterator<Item = &String> {
        [&self.image, &self.label].into_iter().chain(&self.scene_spec).chain(&self.instance_mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub tool_version: String,
    pub master_seed: u64,
    pub ablation: Ablation,
    pub augmented: bool,
    pub config_digest: String,
    pub catalog_digest: String,
    pub image_count: usize,
    pub records: Vec<ImageRecord>,
}

impl GenerationManifest {
    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(Error::MissingManifest(out_dir.to_path_buf()));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))
    }
}

/// The config digest recorded for a run: the config with the run's seed.
pub fn run_config_digest(config: &Config, master_seed: u64) -> String {
    let mut c = config.clone();
    c.seed = master_seed;
    c.digest()
}

/// Parameters in effect for a run after the ablation.
pub fn effective_params(config: &Config, ablation: Ablation) -> (RandomizationParams, AugmentationParams) {
    let (rand, aug) = apply_ablation(&config.randomization, &config.augmentation, ablation);
    let aug = aug.gated(rand.enable_photometric_aug, rand.enable_geometric_aug);
    (rand, aug)
}

pub fn file_stem(index: u64) -> String {
    format!("{index:06}")
}

/// Everything produced for one image, before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub spec: SceneSpec,
    pub target: RenderTarget,
    pub sample: Sample,
    pub applied_ops: Vec<AugOp>,
}

/// Samples, renders, composes and annotates image `index`.
pub fn render_index(
    rand: &RandomizationParams,
    aug: Option<&AugmentationParams>,
    catalog: &AssetCatalog,
    master_seed: u64,
    index: u64,
) -> Result<RenderedImage> {
    let mut rng = derive_stream(master_seed, index);
    let spec = sample_scene_indexed(&mut rng, rand, catalog, master_seed, index);
    let target = rasterize(&spec, catalog, rand)?;
    let image = compose(&target, catalog.backgrounds.get(spec.background_index));
    let boxes = annotate(&spec, &target)?;
    let mut sample = Sample { image, boxes };
    let mut applied_ops = Vec::new();
    if let Some(aug) = aug {
        let mut aug_rng = derive_stream(master_seed, index).fork(AUGMENT_SALT);
        let out = augment(&sample, aug, &mut aug_rng);
        applied_ops = out.applied_ops.clone();
        sample = out.into_sample();
    }
    Ok(RenderedImage {
        spec,
        target,
        sample,
        applied_ops,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// 16-bit greyscale PNG holding per-pixel instance ids.
pub fn save_instance_mask(target: &RenderTarget, path: &Path) -> Result<()> {
    let ids: Vec<u16> = target.instance.iter().map(|&id| id.min(u32::from(u16::MAX)) as u16).collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(target.width, target.height, ids)
        .expect("buffer sizes agree");
    buf.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn write_index(
    rand: &RandomizationParams,
    aug: Option<&AugmentationParams>,
    catalog: &AssetCatalog,
    master_seed: u64,
    index: u64,
    out_dir: &Path,
    options: &GenerateOptions,
) -> Result<ImageRecord> {
    let r = render_index(rand, aug, catalog, master_seed, index)?;
    let stem = file_stem(index);
    let image = format!("images/{stem}.png");
    let label = format!("labels/{stem}.txt");
    r.sample.image.save_png(&out_dir.join(&image))?;
    write_kitti_labels(&r.sample.boxes, &out_dir.join(&label))?;
    let scene_spec = if options.emit_scene_specs {
        let rel = format!("scene_specs/{stem}.json");
        write_file(&out_dir.join(&rel), r.spec.to_json().as_bytes())?;
        Some(rel)
    } else {
        None
    };
    let instance_mask = if options.emit_instance_masks {
        let rel = format!("instance_masks/{stem}.png");
        save_instance_mask(&r.target, &out_dir.join(&rel))?;
        Some(rel)
    } else {
        None
    };
    Ok(ImageRecord {
        index,
        scene_spec_digest: r.spec.digest(),
        image,
        label,
        scene_spec,
        instance_mask,
        applied_ops: r.applied_ops,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", workers, &e.to_string()))
}

/// Writes `count` images with labels into `out_dir`, then the manifest.
pub fn generate(
    config: &Config,
    catalog: &AssetCatalog,
    master_seed: u64,
    count: usize,
    out_dir: &Path,
    options: &GenerateOptions,
) -> Result<GenerationManifest> {
    config.validate()?;
    let (rand, aug) = effective_params(config, options.ablation);
    let aug = options.augment.then_some(&aug);

    create_dir(out_dir)?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }
    create_dir(&out_dir.join("images"))?;
    create_dir(&out_dir.join("labels"))?;
    if options.emit_scene_specs {
        create_dir(&out_dir.join("scene_specs"))?;
    }
    if options.emit_instance_masks {
        create_dir(&out_dir.join("instance_masks"))?;
    }
    let mut run_config = config.clone();
    run_config.seed = master_seed;
    write_file(&out_dir.join(CONFIG_FILE), run_config.to_toml().as_bytes())?;

    let pool = thread_pool(options.workers)?;
    let records = pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| write_index(&rand, aug, catalog, master_seed, i, out_dir, options))
            .collect::<Result<Vec<_>>>()
    })?;

    let manifest = GenerationManifest {
        tool_version: TOOL_VERSION.to_string(),
        master_seed,
        ablation: options.ablation,
        augmented: options.augment,
        config_digest: run_config.digest(),
        catalog_digest: catalog.digest(),
        image_count: records.len(),
        records,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path, json.as_bytes())?;
    Ok(manifest)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub config_digest_mismatch: bool,
    pub catalog_digest_mismatch: bool,
    pub count_mismatch: bool,
    /// `(index, relative path)` of every missing file.
    pub missing_files: Vec<(u64, String)>,
    /// Indices whose re-derived scene digest differs from the manifest.
    pub spec_mismatches: Vec<u64>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        !self.config_digest_mismatch
            && !self.catalog_digest_mismatch
            && !self.count_mismatch
            && self.missing_files.is_empty()
            && self.spec_mismatches.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut lines = vec![format!("checked {} records", self.checked)];
        if self.config_digest_mismatch {
            lines.push("config digest mismatch".into());
        }
        if self.catalog_digest_mismatch {
            lines.push("asset catalog digest mismatch".into());
        }
        if self.count_mismatch {
            lines.push("image count disagrees with record count".into());
        }
        for (i, f) in &self.missing_files {
            lines.push(format!("missing {f} (index {i})"));
        }
        for i in &self.spec_mismatches {
            lines.push(format!("scene spec digest mismatch at index {i}"));
        }
        lines.push(if self.is_ok() { "OK".into() } else { "FAILED".into() });
        lines.join("\n") + "\n"
    }
}

/// Re-derives every scene digest and checks that each recorded file exists.
/// `config` defaults to the copy written next to the manifest.
pub fn verify(out_dir: &Path, config: Option<&Config>, catalog: &AssetCatalog) -> Result<VerifyReport> {
    let manifest = GenerationManifest::load(out_dir)?;
    let stored;
    let config = match config {
        Some(c) => c,
        None => {
            stored = crate::config::load_config(&out_dir.join(CONFIG_FILE))?;
            &stored
        }
    };
    let mut report = VerifyReport {
        checked: manifest.records.len(),
        config_digest_mismatch: run_config_digest(config, manifest.master_seed) != manifest.config_digest,
        catalog_digest_mismatch: catalog.digest() != manifest.catalog_digest,
        count_mismatch: manifest.image_count != manifest.records.len(),
        ..Default::default()
    };
    let (rand, _) = effective_params(config, manifest.ablation);
    for rec in &manifest.records {
        for f in rec.files() {
            if !out_dir.join(f).is_file() {
                report.missing_files.push((rec.index, f.clone()));
            }
        }
        let mut rng = derive_stream(manifest.master_seed, rec.index);
        let spec = sample_scene_indexed(&mut rng, &rand, catalog, manifest.master_seed, rec.index);
        if spec.digest() != rec.scene_spec_digest {
            report.spec_mismatches.push(rec.index);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub name: String,
    pub applied_ops: Vec<AugOp>,
}

/// Augments every labelled image of a KITTI-layout dataset into `out_dir`.
/// The `k`-th label file in name order uses stream `(seed, k)`.
pub fn augment_dataset(
    in_dir: &Path,
    out_dir: &Path,
    params: &AugmentationParams,
    seed: u64,
    workers: usize,
) -> Result<Vec<AugmentRecord>> {
    params.validate()?;
    let labels = crate::stats::label_paths(in_dir)?;
    create_dir(&out_dir.join("images"))?;
    create_dir(&out_dir.join("labels"))?;
    let image_for = |stem: &str| -> Result<PathBuf> {
        ["png", "jpg", "jpeg"]
            .iter()
            .map(|ext| in_dir.join("images").join(format!("{stem}.{ext}")))
            .find(|p| p.is_file())
            .ok_or_else(|| Error::io(in_dir.join("images").join(stem), std::io::Error::from(std::io::ErrorKind::NotFound)))
    };
    let pool = thread_pool(workers)?;
    let records = pool.install(|| {
        labels
            .par_iter()
            .enumerate()
            .map(|(k, label)| {
                let stem = label.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let sample = Sample {
                    image: load_image(&image_for(&stem)?)?,
                    boxes: read_kitti_labels(label)?,
                };
                let out = augment(&sample, params, &mut RngStream::derive(seed, k as u64));
                out.image.save_png(&out_dir.join("images").join(format!("{stem}.png")))?;
                write_kitti_labels(&out.boxes, &out_dir.join("labels").join(format!("{stem}.txt")))?;
                Ok(AugmentRecord {
                    name: stem,
                    applied_ops: out.applied_ops,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let json = serde_json::to_string_pretty(&records).expect("records serialize");
    write_file(&out_dir.join(AUGMENT_LOG_FILE), json.as_bytes())?;
    Ok(records)
}

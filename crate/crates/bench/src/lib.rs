//! Fixtures shared by the benchmarks.

use drsynth_core::evaluator::{DetectionRecord, Interpolation};
use drsynth_core::annotator::Annotation;
use drsynth_core::{derive_stream, sample_scene, AssetCatalog, RandomizationParams, RngStream, SceneSpec};
use std::collections::BTreeMap;

pub fn catalog() -> AssetCatalog {
    AssetCatalog::builtin(4.5).expect("built-in catalog")
}

/// `n` scenes sampled at the given resolution with default ranges.
pub fn scenes(catalog: &AssetCatalog, width: u32, height: u32, n: u64) -> (RandomizationParams, Vec<SceneSpec>) {
    let params = RandomizationParams {
        image_width: width,
        image_height: height,
        ..Default::default()
    };
    let specs = (0..n).map(|i| sample_scene(&mut derive_stream(1, i), &params, catalog)).collect();
    (params, specs)
}

pub type Gts = BTreeMap<String, Vec<Annotation>>;
pub type Dets = BTreeMap<String, Vec<DetectionRecord>>;

/// Synthetic ground truth with noisy detections around it plus clutter.
pub fn detection_set(images: usize, per_image: usize) -> (Gts, Dets) {
    let mut rng = RngStream::from_seed(3);
    let mut gts = BTreeMap::new();
    let mut dets = BTreeMap::new();
    for i in 0..images {
        let id = format!("{i:06}");
        let mut g = Vec::new();
        let mut d = Vec::new();
        for _ in 0..per_image {
            let l = rng.uniform(0.0, 1100.0);
            let t = rng.uniform(0.0, 300.0);
            let b = [l, t, l + rng.uniform(20.0, 100.0), t + rng.uniform(41.0, 100.0)];
            g.push(Annotation::from_box("Car", b));
            for _ in 0..2 {
                let j = b.map(|v| v + rng.uniform(-6.0, 6.0));
                d.push(DetectionRecord {
                    image_id: id.clone(),
                    class_name: "Car".into(),
                    bbox: j,
                    confidence: rng.uniform(0.0, 1.0),
                });
            }
        }
        gts.insert(id.clone(), g);
        dets.insert(id, d);
    }
    (gts, dets)
}

pub const INTERPOLATION: Interpolation = Interpolation::AllPoint;

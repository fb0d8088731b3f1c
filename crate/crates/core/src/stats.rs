//! Dataset summaries: objects per image and where box centroids fall.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::annotator::{read_kitti_labels, Annotation};
use crate::error::{Error, Result};

/// Used when an image file is missing or unreadable.
pub const FALLBACK_IMAGE_SIZE: (u32, u32) = (1200, 400);

/// `labels/` under a dataset root, or the directory itself if it has none.
pub fn labels_dir(dataset: &Path) -> PathBuf {
    let sub = dataset.join("labels");
    if sub.is_dir() {
        sub
    } else {
        dataset.to_path_buf()
    }
}

/// Label files in name order.
pub fn label_paths(dataset: &Path) -> Result<Vec<PathBuf>> {
    let dir = labels_dir(dataset);
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Bin `k` counts images with exactly `k` objects; bins run to the maximum seen.
pub fn histogram(counts: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut bins: Vec<u64> = Vec::new();
    for c in counts {
        if bins.len() <= c {
            bins.resize(c + 1, 0);
        }
        bins[c] += 1;
    }
    bins
}

pub fn cars_per_image_histogram(dataset: &Path, class: &str) -> Result<Vec<u64>> {
    let mut counts = Vec::new();
    for path in label_paths(dataset)? {
        counts.push(read_kitti_labels(&path)?.iter().filter(|a| a.class_name == class).count());
    }
    Ok(histogram(counts))
}

/// Row-major count grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "grid dims must be >= 1");
        Self {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.counts[y * self.width + x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bins the centroid of `bbox` from an image of the given size.
    pub fn add_box(&mut self, bbox: &[f64; 4], image_w: u32, image_h: u32) {
        let cx = 0.5 * (bbox[0] + bbox[2]) / f64::from(image_w);
        let cy = 0.5 * (bbox[1] + bbox[3]) / f64::from(image_h);
        let bin = |v: f64, n: usize| ((v * n as f64).floor().max(0.0) as usize).min(n - 1);
        let (gx, gy) = (bin(cx, self.width), bin(cy, self.height));
        self.counts[gy * self.width + gx] += 1;
    }

    pub fn merge(&mut self, other: &Grid) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.counts.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Binary greyscale PGM scaled so the fullest cell is white.
    pub fn to_pgm(&self) -> Vec<u8> {
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.counts.iter().map(|&c| ((c as f64 / max as f64) * 255.0).round() as u8));
        out
    }
}

/// Size of the image paired with a label file, from its header.
fn image_size_for(label: &Path) -> (u32, u32) {
    let stem = label.file_stem().unwrap_or_default();
    let candidates = label
        .parent()
        .and_then(Path::parent)
        .map(|root| {
            ["png", "jpg", "jpeg"]
                .iter()
                .map(|ext| root.join("images").join(stem).with_extension(ext))
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    candidates
        .iter()
        .find_map(|p| image::image_dimensions(p).ok())
        .unwrap_or(FALLBACK_IMAGE_SIZE)
}

pub fn heatmap_from_boxes<'a>(boxes: impl IntoIterator<Item = (&'a Annotation, (u32, u32))>, grid_w: usize, grid_h: usize) -> Grid {
    let mut grid = Grid::new(grid_w, grid_h);
    for (a, (w, h)) in boxes {
        grid.add_box(&a.bbox, w, h);
    }
    grid
}

pub fn centroid_heatmap(dataset: &Path, class: &str, grid_w: usize, grid_h: usize) -> Result<Grid> {
    if grid_w == 0 || grid_h == 0 {
        return Err(Error::invalid("grid", format!("{grid_w}x{grid_h}"), "dimensions must be >= 1"));
    }
    let mut grid = Grid::new(grid_w, grid_h);
    for path in label_paths(dataset)? {
        let labels = read_kitti_labels(&path)?;
        if labels.iter().all(|a| a.class_name != class) {
            continue;
        }
        let (w, h) = image_size_for(&path);
        for a in labels.iter().filter(|a| a.class_name == class) {
            grid.add_box(&a.bbox, w, h);
        }
    }
    Ok(grid)
}

pub fn histogram_csv(bins: &[u64]) -> String {
    let mut s = String::from("objects,images\n");
    for (k, n) in bins.iter().enumerate() {
        let _ = writeln!(s, "{k},{n}");
    }
    s
}

/// Parses `WxH` grid specs such as `48x16`.
pub fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid("grid", spec, "expected WxH with both >= 1");
    let (w, h) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

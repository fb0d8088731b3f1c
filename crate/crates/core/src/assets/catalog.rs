use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::builtin;
use super::{load_image, load_mesh, ImageAsset, Mesh};
use crate::error::{Error, Result};
use crate::math::{rot_y, Mat3, Vec3};
use crate::renderer::uv::project_box_uv;

pub const BUILTIN_TEXTURE_COUNT: usize = 64;
pub const BUILTIN_BACKGROUND_COUNT: usize = 16;

/// Named, index-stable items.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pool<T> {
    pub names: Vec<String>,
    pub items: Vec<T>,
}

impl<T> Pool<T> {
    fn from_pairs(pairs: Vec<(String, T)>) -> Self {
        let (names, items) = pairs.into_iter().unzip();
        Self { names, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &T {
        &self.items[i]
    }
}

/// Immutable asset pools shared by every worker.
#[derive(Debug, Clone)]
pub struct AssetCatalog {
    pub cars: Pool<Mesh>,
    pub distractors: Pool<Mesh>,
    pub textures: Pool<ImageAsset>,
    pub backgrounds: Pool<ImageAsset>,
    /// Image files that failed to decode and were left out.
    pub skipped_images: usize,
}

/// Source directories; `None` selects the built-in pool.
#[derive(Debug, Clone, Default)]
pub struct CatalogDirs {
    pub cars: Option<PathBuf>,
    pub distractors: Option<PathBuf>,
    pub textures: Option<PathBuf>,
    pub backgrounds: Option<PathBuf>,
}

/// Files in `dir` with one of `extensions`, sorted by file name.
fn sorted_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if path.is_file() && matches {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_images(dir: &Path, skipped: &mut usize) -> Result<Vec<(String, ImageAsset)>> {
    let mut out = Vec::new();
    for path in sorted_files(dir, &["png", "jpg", "jpeg"])? {
        match load_image(&path) {
            Ok(img) => out.push((file_name(&path), img)),
            Err(e) => {
                log::warn!("skipping undecodable image {}: {e}", path.display());
                *skipped += 1;
            }
        }
    }
    Ok(out)
}

fn load_meshes(dir: &Path) -> Result<Vec<(String, Mesh)>> {
    sorted_files(dir, &["obj"])?
        .into_iter()
        .map(|path| Ok((file_name(&path), load_mesh(&path)?)))
        .collect()
}

/// Puts a car on the ground: longest horizontal extent along +x scaled to
/// `length`, centered in x and z, lowest point at y = 0.
pub fn normalize_car(mesh: &Mesh, length: f64) -> Result<Mesh> {
    let ext = mesh.bounds.extent();
    let turn = if ext.z > ext.x { rot_y(90.0) } else { Mat3::identity() };
    let horizontal = ext.x.max(ext.z);
    if !(horizontal > 0.0) {
        return Err(Error::Geometry("car mesh has no horizontal extent".into()));
    }
    let c = mesh.bounds.center();
    let lift = Vec3::new(c.x, mesh.bounds.min[1], c.z);
    let s = length / horizontal;
    let linear = turn * s;
    let out = mesh.transformed(&linear, &(-(linear * lift)));
    project_box_uv(&out)
}

/// Centers a distractor and scales it to fit the unit cube.
pub fn normalize_distractor(mesh: &Mesh) -> Result<Mesh> {
    let ext = mesh.bounds.extent();
    let longest = ext.x.max(ext.y).max(ext.z);
    if !(longest > 0.0) {
        return Err(Error::Geometry("distractor mesh has zero extent".into()));
    }
    let s = 1.0 / longest;
    let out = mesh.transformed(&(Mat3::identity() * s), &(-mesh.bounds.center() * s));
    project_box_uv(&out)
}

/// Loads all pools. Order within a pool is lexicographic by file name.
pub fn build_catalog(dirs: &CatalogDirs, car_length: f64) -> Result<AssetCatalog> {
    let mut skipped = 0;
    let raw_cars = match &dirs.cars {
        Some(d) => load_meshes(d)?,
        None => builtin::builtin_cars()?,
    };
    if raw_cars.is_empty() {
        return Err(Error::EmptyPool("cars"));
    }
    let cars = raw_cars
        .into_iter()
        .map(|(n, m)| Ok((n, normalize_car(&m, car_length)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut distractors = builtin::builtin_distractors()?;
    if let Some(d) = &dirs.distractors {
        for (n, m) in load_meshes(d)? {
            distractors.push((n, normalize_distractor(&m)?));
        }
    }

    let textures = match &dirs.textures {
        Some(d) => load_images(d, &mut skipped)?,
        None => builtin::builtin_textures(BUILTIN_TEXTURE_COUNT),
    };
    if textures.is_empty() {
        return Err(Error::EmptyPool("textures"));
    }
    let backgrounds = match &dirs.backgrounds {
        Some(d) => load_images(d, &mut skipped)?,
        None => builtin::builtin_backgrounds(BUILTIN_BACKGROUND_COUNT),
    };
    if backgrounds.is_empty() {
        return Err(Error::EmptyPool("backgrounds"));
    }

    Ok(AssetCatalog {
        cars: Pool::from_pairs(cars),
        distractors: Pool::from_pairs(distractors),
        textures: Pool::from_pairs(textures),
        backgrounds: Pool::from_pairs(backgrounds),
        skipped_images: skipped,
    })
}

impl AssetCatalog {
    /// Built-in fleet, primitives and procedural images.
    pub fn builtin(car_length: f64) -> Result<Self> {
        build_catalog(&CatalogDirs::default(), car_length)
    }

    /// Number of textures usable under `fraction` (at least one).
    pub fn texture_pool_len(&self, fraction: f64) -> usize {
        ((self.textures.len() as f64 * fraction).ceil() as usize).clamp(1, self.textures.len())
    }

    /// SHA-256 over names and contents of every pool, in index order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let meshes = |tag: &[u8], pool: &Pool<Mesh>, h: &mut Sha256| {
            h.update(tag);
            for (name, m) in pool.names.iter().zip(&pool.items) {
                h.update(name.as_bytes());
                h.update([0]);
                for p in &m.positions {
                    for k in 0..3 {
                        h.update(p[k].to_le_bytes());
                    }
                }
                for t in &m.triangles {
                    for i in t {
                        h.update(i.to_le_bytes());
                    }
                }
                if let Some(uvs) = &m.uvs {
                    for uv in uvs {
                        h.update(uv[0].to_le_bytes());
                        h.update(uv[1].to_le_bytes());
                    }
                }
            }
        };
        meshes(b"cars", &self.cars, &mut h);
        meshes(b"distractors", &self.distractors, &mut h);
        for (tag, pool) in [(b"textures".as_slice(), &self.textures), (b"backgrounds".as_slice(), &self.backgrounds)] {
            h.update(tag);
            for (name, img) in pool.names.iter().zip(&pool.items) {
                h.update(name.as_bytes());
                h.update([0]);
                h.update(img.width.to_le_bytes());
                h.update(img.height.to_le_bytes());
                h.update(&img.pixels);
            }
        }
        hex::encode(h.finalize())
    }
}

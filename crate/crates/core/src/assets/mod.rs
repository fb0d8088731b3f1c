//! Meshes, images, and the indexed asset catalog.

pub mod builtin;
mod catalog;
mod image;
pub mod mesh;
mod primitives;

pub use self::image::{load_image, ImageAsset};
pub use catalog::{build_catalog, normalize_car, normalize_distractor, AssetCatalog, CatalogDirs, Pool};
pub use mesh::{load_mesh, Mesh};
pub use primitives::{make_composite, make_primitive, PrimitiveKind};

//! Software rasterizer producing color, depth and instance-id buffers.
//!
//! Plain z-buffer, no anti-aliasing, no culling. Triangles are clipped to the
//! near plane in camera space, covered pixel centers are found with edge
//! functions under a top-left fill rule, and attributes are interpolated
//! perspective-correctly. Visibility is resolved first and each pixel is shaded
//! once afterwards:
//!
//! `color = albedo * (ambient + sum_i intensity_i * max(0, n.l_i) / (1 + k d_i^2))`
//!
//! clamped to `[0, 1]` in linear space, then gamma-encoded on output. Normals
//! are flipped to face the viewer when their triangle faces away.

mod raster;
pub mod texture;
pub mod uv;

use crate::assets::{AssetCatalog, ImageAsset, Mesh};
use crate::config::RandomizationParams;
use crate::error::Result;
use crate::math::{rot_x, rot_y, rot_z, Aabb, Mat3, Vec3};
use crate::sampler::{camera_matrices, Camera, PointLight, SceneSpec, Surface};

pub use raster::{render_entity_mask, render_geometry, ClipVertex, ScreenTriangle};
pub use texture::{decode_gamma, encode_gamma, sample_texture, sample_texture_linear};
pub use uv::project_box_uv;

/// Light falloff constant in m^-2.
pub const ATTENUATION: f64 = 0.01;
/// Untextured car color (linear).
pub const BASE_COLOR: [f64; 3] = [0.35, 0.35, 0.35];
/// Untextured ground color (linear).
pub const GROUND_COLOR: [f64; 3] = [0.2, 0.2, 0.2];
/// Ground sits slightly below the cars' contact points.
pub const GROUND_Y: f64 = -0.02;
pub const GROUND_HALF_SIZE: f64 = 250.0;
/// Meters per texture repeat on the ground.
pub const GROUND_TILE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Car,
    Distractor,
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    /// Index into the catalog's texture pool.
    Texture(usize),
    /// Linear RGB.
    Color([f64; 3]),
}

/// One triangle in world space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldTriangle {
    pub positions: [Vec3; 3],
    pub normals: [Vec3; 3],
    pub uvs: [[f64; 2]; 3],
}

#[derive(Debug, Clone)]
pub struct EntityGeometry {
    /// Instance id; 0 for the ground.
    pub id: u32,
    pub kind: EntityKind,
    pub material: Material,
    pub triangles: Vec<WorldTriangle>,
    /// Object-space bounds scaled by the instance scale (cars only).
    pub local_bounds: Option<Aabb>,
}

/// Everything the rasterizer needs for one frame.
#[derive(Debug, Clone)]
pub struct SceneGeometry {
    pub camera: Camera,
    pub entities: Vec<EntityGeometry>,
    pub lights: Vec<PointLight>,
    pub ambient: f64,
    pub attenuation: f64,
}

/// Per-entity facts gathered while rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityStats {
    pub id: u32,
    pub kind: EntityKind,
    /// Pixels showing this entity in the full frame.
    pub visible_pixels: u64,
    /// Pixels this entity covers when rendered by itself (cars only).
    pub alone_pixels: Option<u64>,
    /// Continuous image-plane bounds `[left, top, right, bottom]` of the
    /// near-clipped geometry, before clipping to the image.
    pub projected_bounds: Option<[f64; 4]>,
    pub local_bounds: Option<Aabb>,
}

/// Color, depth and instance buffers of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderTarget {
    pub width: u32,
    pub height: u32,
    /// Linear RGB in `[0, 1]`.
    pub color: Vec<[f32; 3]>,
    /// Camera-space z, `+inf` where nothing was drawn.
    pub depth: Vec<f64>,
    /// 0 = no entity (background or ground), k = k-th entity.
    pub instance: Vec<u32>,
    /// Indexed by `id - 1`.
    pub entities: Vec<EntityStats>,
    pub camera: Camera,
}

impl RenderTarget {
    pub fn covered(&self, i: usize) -> bool {
        self.depth[i].is_finite()
    }

    /// Gamma-encoded 8-bit image.
    pub fn to_image(&self) -> ImageAsset {
        let pixels = self.color.iter().flat_map(|c| c.map(encode_gamma)).collect();
        ImageAsset::new(self.width, self.height, pixels).expect("buffer sizes agree")
    }
}

fn mesh_triangles(mesh: &Mesh, linear: &Mat3, offset: &Vec3) -> Vec<WorldTriangle> {
    let normal_matrix = linear.try_inverse().map(|m| m.transpose()).unwrap_or(*linear);
    let normals = mesh.normals.as_ref();
    let uvs = mesh.uvs.as_ref();
    mesh.triangles
        .iter()
        .map(|t| {
            let idx = t.map(|i| i as usize);
            let positions = idx.map(|i| linear * mesh.positions[i] + offset);
            let face = (positions[1] - positions[0]).cross(&(positions[2] - positions[0]));
            let normals = idx.map(|i| match normals {
                Some(ns) => {
                    let n = normal_matrix * ns[i];
                    let len = n.norm();
                    if len > 0.0 {
                        n / len
                    } else {
                        face.normalize()
                    }
                }
                None => face.normalize(),
            });
            let uvs = idx.map(|i| uvs.map_or([0.0, 0.0], |u| u[i]));
            WorldTriangle { positions, normals, uvs }
        })
        .collect()
}

fn srgb_to_linear(c: [f64; 3]) -> [f64; 3] {
    c.map(|v| v.powf(texture::GAMMA))
}

/// Places every mesh instance in world space.
pub fn build_geometry(spec: &SceneSpec, catalog: &AssetCatalog, params: &RandomizationParams) -> Result<SceneGeometry> {
    let camera = camera_matrices(&spec.camera, params.image_width, params.image_height, params.field_of_view)?;
    let mut entities = Vec::with_capacity(spec.entity_count() + 1);
    let mut id = 0u32;
    for obj in &spec.objects {
        id += 1;
        let mesh = catalog.cars.get(obj.mesh);
        let linear = rot_y(obj.yaw) * obj.scale;
        let offset = Vec3::from(obj.position);
        let b = mesh.bounds;
        let local_bounds = Aabb {
            min: b.min.map(|v| v * obj.scale),
            max: b.max.map(|v| v * obj.scale),
        };
        entities.push(EntityGeometry {
            id,
            kind: EntityKind::Car,
            material: obj.texture.map_or(Material::Color(BASE_COLOR), Material::Texture),
            triangles: mesh_triangles(mesh, &linear, &offset),
            local_bounds: Some(local_bounds),
        });
    }
    for d in &spec.distractors {
        id += 1;
        let mesh = catalog.distractors.get(d.mesh);
        let [a, b, c] = d.orientation;
        let linear = rot_y(a) * rot_x(b) * rot_z(c) * d.scale;
        let material = match d.surface {
            Surface::Texture(t) => Material::Texture(t),
            Surface::Color(c) => Material::Color(srgb_to_linear(c)),
        };
        entities.push(EntityGeometry {
            id,
            kind: EntityKind::Distractor,
            material,
            triangles: mesh_triangles(mesh, &linear, &Vec3::from(d.position)),
            local_bounds: None,
        });
    }
    if spec.ground_plane {
        entities.push(ground_entity(&spec.camera.look_at, spec.ground_texture_index));
    }
    Ok(SceneGeometry {
        camera,
        entities,
        lights: spec.lights.clone(),
        ambient: spec.ambient,
        attenuation: ATTENUATION,
    })
}

fn ground_entity(center: &[f64; 3], texture: Option<usize>) -> EntityGeometry {
    let (cx, cz) = (center[0], center[2]);
    let s = GROUND_HALF_SIZE;
    let corner = |dx: f64, dz: f64| {
        let p = Vec3::new(cx + dx * s, GROUND_Y, cz + dz * s);
        (p, [p.x / GROUND_TILE, p.z / GROUND_TILE])
    };
    let q = [corner(-1.0, -1.0), corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0)];
    let up = Vec3::y();
    let tri = |a: usize, b: usize, c: usize| WorldTriangle {
        positions: [q[a].0, q[b].0, q[c].0],
        normals: [up; 3],
        uvs: [q[a].1, q[b].1, q[c].1],
    };
    EntityGeometry {
        id: 0,
        kind: EntityKind::Ground,
        material: texture.map_or(Material::Color(GROUND_COLOR), Material::Texture),
        triangles: vec![tri(0, 1, 2), tri(0, 2, 3)],
        local_bounds: None,
    }
}

/// Renders a sampled scene.
pub fn rasterize(spec: &SceneSpec, catalog: &AssetCatalog, params: &RandomizationParams) -> Result<RenderTarget> {
    let geometry = build_geometry(spec, catalog, params)?;
    Ok(render_geometry(&geometry, &catalog.textures.items))
}

/// Albedo of `material` at `uv`, linear RGB.
#[inline]
pub fn albedo(material: &Material, textures: &[ImageAsset], uv: [f64; 2]) -> [f64; 3] {
    match material {
        Material::Color(c) => *c,
        Material::Texture(t) => sample_texture_linear(&textures[*t], uv).map(f64::from),
    }
}

/// Lambertian shading; `position`, `normal` and lights share one frame.
#[inline]
pub fn lambert(albedo: [f64; 3], position: &Vec3, normal: &Vec3, lights: &[(Vec3, [f64; 3])], ambient: f64, attenuation: f64) -> [f64; 3] {
    let mut irradiance = [ambient; 3];
    for (pos, intensity) in lights {
        let l = pos - position;
        let d2 = l.norm_squared();
        if d2 == 0.0 {
            continue;
        }
        let cos = normal.dot(&l) / d2.sqrt();
        if cos <= 0.0 {
            continue;
        }
        let f = cos / (1.0 + attenuation * d2);
        for k in 0..3 {
            irradiance[k] += intensity[k] * f;
        }
    }
    std::array::from_fn(|k| (albedo[k] * irradiance[k]).clamp(0.0, 1.0))
}

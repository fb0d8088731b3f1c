//! Shared test helpers, including a brute-force ray-casting renderer used as
//! an oracle for the rasterizer.
#![allow(dead_code)]

use drsynth_core::assets::{AssetCatalog, ImageAsset, Mesh};
use drsynth_core::config::RandomizationParams;
use drsynth_core::sampler::{SceneSpec, Surface, NEAR_PLANE};
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

type V = Vector3<f64>;

pub const GAMMA: f64 = 2.2;
pub const ATTENUATION: f64 = 0.01;
pub const GROUND_Y: f64 = -0.02;
pub const GROUND_HALF: f64 = 250.0;
pub const GROUND_TILE: f64 = 4.0;
pub const PLAIN_CAR: [f64; 3] = [0.35; 3];
pub const PLAIN_GROUND: [f64; 3] = [0.2; 3];

fn rot(axis: V, deg: f64) -> Matrix3<f64> {
    *Rotation3::from_axis_angle(&Unit::new_normalize(axis), deg.to_radians()).matrix()
}

#[derive(Clone, Copy)]
enum Albedo {
    Flat([f64; 3]),
    Tex(usize),
}

struct Tri {
    p: [V; 3],
    n: [V; 3],
    uv: [[f64; 2]; 3],
    id: u32,
    albedo: Albedo,
}

pub struct OracleFrame {
    pub width: u32,
    pub height: u32,
    pub covered: Vec<bool>,
    pub instance: Vec<u32>,
    pub depth: Vec<f64>,
    pub color: Vec<[f64; 3]>,
}

struct RayCam {
    eye: V,
    /// Columns: camera x (right), y (down), z (forward) in world space.
    axes: Matrix3<f64>,
    focal: f64,
    w: f64,
    h: f64,
}

fn ray_camera(spec: &SceneSpec, params: &RandomizationParams) -> RayCam {
    let c = &spec.camera;
    let (az, el) = (c.azimuth.to_radians(), c.elevation.to_radians());
    let offset = V::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos());
    let eye = V::from(c.look_at) + c.distance * offset;
    let forward = -offset;
    let right = V::new(az.cos(), 0.0, -az.sin());
    let down = forward.cross(&right);
    let base = Matrix3::from_columns(&[right, down, forward]);
    let jitter = rot(V::y(), c.pan) * rot(V::x(), c.tilt) * rot(V::z(), c.roll);
    let w = f64::from(params.image_width);
    RayCam {
        eye,
        axes: base * jitter,
        focal: 0.5 * w / (0.5 * params.field_of_view.to_radians()).tan(),
        w,
        h: f64::from(params.image_height),
    }
}

fn push_mesh(out: &mut Vec<Tri>, mesh: &Mesh, linear: &Matrix3<f64>, offset: V, id: u32, albedo: Albedo) {
    for t in &mesh.triangles {
        let idx = t.map(|i| i as usize);
        let p = idx.map(|i| linear * mesh.positions[i] + offset);
        let face = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
        let n = idx.map(|i| match &mesh.normals {
            Some(ns) => {
                let v = linear * ns[i];
                if v.norm() > 0.0 {
                    v.normalize()
                } else {
                    face
                }
            }
            None => face,
        });
        let uv = idx.map(|i| mesh.uvs.as_ref().map_or([0.0, 0.0], |u| u[i]));
        out.push(Tri { p, n, uv, id, albedo });
    }
}

fn scene_triangles(spec: &SceneSpec, catalog: &AssetCatalog) -> Vec<Tri> {
    let mut tris = Vec::new();
    let mut id = 0;
    for o in &spec.objects {
        id += 1;
        let linear = rot(V::y(), o.yaw) * o.scale;
        let albedo = o.texture.map_or(Albedo::Flat(PLAIN_CAR), Albedo::Tex);
        push_mesh(&mut tris, catalog.cars.get(o.mesh), &linear, V::from(o.position), id, albedo);
    }
    for d in &spec.distractors {
        id += 1;
        let [a, b, c] = d.orientation;
        let linear = rot(V::y(), a) * rot(V::x(), b) * rot(V::z(), c) * d.scale;
        let albedo = match d.surface {
            Surface::Texture(t) => Albedo::Tex(t),
            Surface::Color(c) => Albedo::Flat(c.map(|v| v.powf(GAMMA))),
        };
        push_mesh(&mut tris, catalog.distractors.get(d.mesh), &linear, V::from(d.position), id, albedo);
    }
    if spec.ground_plane {
        let (cx, cz) = (spec.camera.look_at[0], spec.camera.look_at[2]);
        let corner = |sx: f64, sz: f64| V::new(cx + sx * GROUND_HALF, GROUND_Y, cz + sz * GROUND_HALF);
        let q = [corner(-1.0, -1.0), corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0)];
        let uv = |p: &V| [p.x / GROUND_TILE, p.z / GROUND_TILE];
        let albedo = spec.ground_texture_index.map_or(Albedo::Flat(PLAIN_GROUND), Albedo::Tex);
        for [a, b, c] in [[0, 1, 2], [0, 2, 3]] {
            tris.push(Tri {
                p: [q[a], q[b], q[c]],
                n: [V::y(); 3],
                uv: [uv(&q[a]), uv(&q[b]), uv(&q[c])],
                id: 0,
                albedo,
            });
        }
    }
    tris
}

/// Moller-Trumbore; returns `(t, b1, b2)` for hits in front of the origin.
fn intersect(o: &V, d: &V, tri: &Tri) -> Option<(f64, f64, f64)> {
    let e1 = tri.p[1] - tri.p[0];
    let e2 = tri.p[2] - tri.p[0];
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let tv = o - tri.p[0];
    let u = tv.dot(&pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qv) * inv;
    (t > 0.0).then_some((t, u, v))
}

fn decode(v: u8) -> f64 {
    (f64::from(v) / 255.0).powf(GAMMA)
}

/// Bilinear over gamma-decoded texels, texel centers at `(i + 0.5) / w`, repeat wrap.
fn texture_lookup(tex: &ImageAsset, uv: [f64; 2]) -> [f64; 3] {
    let (w, h) = (i64::from(tex.width), i64::from(tex.height));
    let x = (uv[0] - uv[0].floor()) * w as f64 - 0.5;
    let y = (uv[1] - uv[1].floor()) * h as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let texel = |i: i64, j: i64| {
        let c = tex.get(i.rem_euclid(w) as u32, j.rem_euclid(h) as u32);
        c.map(decode)
    };
    let (i, j) = (x0 as i64, y0 as i64);
    let (a, b, c, d) = (texel(i, j), texel(i + 1, j), texel(i, j + 1), texel(i + 1, j + 1));
    std::array::from_fn(|k| {
        (1.0 - fy) * ((1.0 - fx) * a[k] + fx * b[k]) + fy * ((1.0 - fx) * c[k] + fx * d[k])
    })
}

/// Casts one ray per pixel center and shades the nearest hit in world space.
pub fn ray_cast(spec: &SceneSpec, catalog: &AssetCatalog, params: &RandomizationParams) -> OracleFrame {
    let cam = ray_camera(spec, params);
    let tris = scene_triangles(spec, catalog);
    let (width, height) = (params.image_width, params.image_height);
    let n = (width * height) as usize;
    let mut frame = OracleFrame {
        width,
        height,
        covered: vec![false; n],
        instance: vec![0; n],
        depth: vec![f64::INFINITY; n],
        color: vec![[0.0; 3]; n],
    };
    for y in 0..height {
        for x in 0..width {
            let local = V::new(
                (f64::from(x) + 0.5 - 0.5 * cam.w) / cam.focal,
                (f64::from(y) + 0.5 - 0.5 * cam.h) / cam.focal,
                1.0,
            );
            let dir = cam.axes * local;
            let mut best: Option<(f64, usize, f64, f64)> = None;
            for (k, tri) in tris.iter().enumerate() {
                if let Some((t, b1, b2)) = intersect(&cam.eye, &dir, tri) {
                    // Depth along the optical axis equals t because local.z == 1.
                    if t < NEAR_PLANE {
                        continue;
                    }
                    // Coincident surfaces go to the earlier triangle.
                    if best.is_none_or(|b| t < b.0 * (1.0 - 1e-9)) {
                        best = Some((t, k, b1, b2));
                    }
                }
            }
            let Some((t, k, b1, b2)) = best else { continue };
            let i = (y * width + x) as usize;
            let tri = &tris[k];
            let b0 = 1.0 - b1 - b2;
            let hit = cam.eye + dir * t;
            let mut normal = (tri.n[0] * b0 + tri.n[1] * b1 + tri.n[2] * b2).normalize();
            let mut face = (tri.p[1] - tri.p[0]).cross(&(tri.p[2] - tri.p[0]));
            if face.dot(&(tri.n[0] + tri.n[1] + tri.n[2])) < 0.0 {
                face = -face;
            }
            if face.dot(&(hit - cam.eye)) > 0.0 {
                normal = -normal;
            }
            let uv = [
                tri.uv[0][0] * b0 + tri.uv[1][0] * b1 + tri.uv[2][0] * b2,
                tri.uv[0][1] * b0 + tri.uv[1][1] * b1 + tri.uv[2][1] * b2,
            ];
            let albedo = match tri.albedo {
                Albedo::Flat(c) => c,
                Albedo::Tex(t) => texture_lookup(catalog.textures.get(t), uv),
            };
            let mut irradiance = [spec.ambient; 3];
            for light in &spec.lights {
                let to_light = V::from(light.position) - hit;
                let dist = to_light.norm();
                let cos = normal.dot(&to_light) / dist;
                if cos > 0.0 {
                    for c in 0..3 {
                        irradiance[c] += light.intensity[c] * cos / (1.0 + ATTENUATION * dist * dist);
                    }
                }
            }
            frame.covered[i] = true;
            frame.instance[i] = tri.id;
            frame.depth[i] = t;
            frame.color[i] = std::array::from_fn(|c| (albedo[c] * irradiance[c]).clamp(0.0, 1.0));
        }
    }
    frame
}

/// Tight `[l, t, r, b]` bounds (exclusive right/bottom) of every id `1..=n`
/// with their pixel counts, by exhaustive scan.
pub fn mask_bounds(instance: &[u32], width: u32, n: usize) -> Vec<Option<([f64; 4], u64)>> {
    let mut out: Vec<Option<([f64; 4], u64)>> = vec![None; n];
    for (i, &id) in instance.iter().enumerate() {
        if id == 0 || id as usize > n {
            continue;
        }
        let x = (i as u32 % width) as f64;
        let y = (i as u32 / width) as f64;
        let e = out[id as usize - 1].get_or_insert(([x, y, x + 1.0, y + 1.0], 0));
        e.0[0] = e.0[0].min(x);
        e.0[1] = e.0[1].min(y);
        e.0[2] = e.0[2].max(x + 1.0);
        e.0[3] = e.0[3].max(y + 1.0);
        e.1 += 1;
    }
    out
}

pub fn small_params(w: u32, h: u32) -> RandomizationParams {
    RandomizationParams {
        image_width: w,
        image_height: h,
        ..RandomizationParams::default()
    }
}

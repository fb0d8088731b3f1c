use std::ops::Range;

use super::{albedo, lambert, EntityKind, EntityStats, RenderTarget, SceneGeometry, WorldTriangle};
use crate::assets::ImageAsset;
use crate::math::Vec3;
use crate::sampler::{Camera, NEAR_PLANE};

/// Camera-space vertex carried through clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipVertex {
    pub p: Vec3,
    pub n: Vec3,
    pub uv: [f64; 2],
}

impl ClipVertex {
    fn lerp(&self, other: &ClipVertex, t: f64) -> ClipVertex {
        ClipVertex {
            p: self.p + (other.p - self.p) * t,
            n: self.n + (other.n - self.n) * t,
            uv: [
                self.uv[0] + (other.uv[0] - self.uv[0]) * t,
                self.uv[1] + (other.uv[1] - self.uv[1]) * t,
            ],
        }
    }
}

/// A near-clipped triangle ready for scan conversion, wound with positive area.
#[derive(Debug, Clone, Copy)]
pub struct ScreenTriangle {
    pub verts: [ClipVertex; 3],
    pub screen: [[f64; 2]; 3],
    pub inv_z: [f64; 3],
    pub area: f64,
    /// Camera-space geometric normal.
    pub face_normal: Vec3,
    pub entity: usize,
}

/// Sutherland-Hodgman against `z >= NEAR_PLANE`.
fn clip_near(tri: [ClipVertex; 3]) -> Vec<ClipVertex> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = &tri[i];
        let b = &tri[(i + 1) % 3];
        let a_in = a.p.z >= NEAR_PLANE;
        let b_in = b.p.z >= NEAR_PLANE;
        if a_in {
            out.push(*a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.p.z) / (b.p.z - a.p.z);
            let mut v = a.lerp(b, t);
            v.p.z = NEAR_PLANE;
            out.push(v);
        }
    }
    out
}

/// A fragment must be nearer by this relative margin to replace the stored one,
/// so coincident surfaces resolve to the earlier entity instead of to rounding.
pub const DEPTH_TIE: f64 = 1.0 - 1e-9;

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], px: f64, py: f64) -> f64 {
    (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
}

/// Edges that own their boundary pixels under the fill rule.
#[inline]
fn owns_boundary(a: [f64; 2], b: [f64; 2]) -> bool {
    let dy = b[1] - a[1];
    let dx = b[0] - a[0];
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Transforms, clips and projects one world triangle.
pub(crate) fn setup(world: &WorldTriangle, camera: &Camera, entity: usize, out: &mut Vec<ScreenTriangle>) {
    let verts: [ClipVertex; 3] = std::array::from_fn(|i| ClipVertex {
        p: camera.to_camera(&world.positions[i]),
        n: camera.rotation * world.normals[i],
        uv: world.uvs[i],
    });
    if verts.iter().all(|v| v.p.z < NEAR_PLANE) {
        return;
    }
    // Geometric normal, oriented to agree with the authored vertex normals.
    let mut face_normal = (verts[1].p - verts[0].p).cross(&(verts[2].p - verts[0].p));
    if face_normal.dot(&(verts[0].n + verts[1].n + verts[2].n)) < 0.0 {
        face_normal = -face_normal;
    }
    let poly = if verts.iter().all(|v| v.p.z >= NEAR_PLANE) {
        verts.to_vec()
    } else {
        clip_near(verts)
    };
    for k in 1..poly.len().saturating_sub(1) {
        let mut tri = [poly[0], poly[k], poly[k + 1]];
        let mut screen = tri.map(|v| {
            let (u, v) = camera.project(&v.p);
            [u, v]
        });
        let mut area = edge(screen[0], screen[1], screen[2][0], screen[2][1]);
        if !area.is_finite() || area == 0.0 {
            continue;
        }
        if area < 0.0 {
            tri.swap(1, 2);
            screen.swap(1, 2);
            area = -area;
        }
        out.push(ScreenTriangle {
            inv_z: tri.map(|v| 1.0 / v.p.z),
            verts: tri,
            screen,
            area,
            face_normal,
            entity,
        });
    }
}

/// Calls `f(x, y, l0, l1, l2)` with screen-space barycentrics for every covered pixel center.
#[inline]
pub(crate) fn scan(tri: &ScreenTriangle, width: u32, height: u32, mut f: impl FnMut(u32, u32, f64, f64, f64)) {
    let [a, b, c] = tri.screen;
    let min_x = a[0].min(b[0]).min(c[0]);
    let max_x = a[0].max(b[0]).max(c[0]);
    let min_y = a[1].min(b[1]).min(c[1]);
    let max_y = a[1].max(b[1]).max(c[1]);
    let x0 = (min_x - 0.5).ceil().max(0.0);
    let x1 = (max_x - 0.5).floor().min(f64::from(width) - 1.0);
    let y0 = (min_y - 0.5).ceil().max(0.0);
    let y1 = (max_y - 0.5).floor().min(f64::from(height) - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let (x0, x1, y0, y1) = (x0 as u32, x1 as u32, y0 as u32, y1 as u32);
    let own = [owns_boundary(b, c), owns_boundary(c, a), owns_boundary(a, b)];
    let inv_area = 1.0 / tri.area;
    for y in y0..=y1 {
        let py = f64::from(y) + 0.5;
        for x in x0..=x1 {
            let px = f64::from(x) + 0.5;
            let e0 = edge(b, c, px, py);
            let e1 = edge(c, a, px, py);
            let e2 = edge(a, b, px, py);
            let inside = (e0 > 0.0 || (e0 == 0.0 && own[0]))
                && (e1 > 0.0 || (e1 == 0.0 && own[1]))
                && (e2 > 0.0 || (e2 == 0.0 && own[2]));
            if inside {
                f(x, y, e0 * inv_area, e1 * inv_area, e2 * inv_area);
            }
        }
    }
}

struct Prepared {
    triangles: Vec<ScreenTriangle>,
    ranges: Vec<Range<usize>>,
}

fn prepare(geometry: &SceneGeometry) -> Prepared {
    let mut triangles = Vec::new();
    let mut ranges = Vec::with_capacity(geometry.entities.len());
    for (i, e) in geometry.entities.iter().enumerate() {
        let start = triangles.len();
        for t in &e.triangles {
            setup(t, &geometry.camera, i, &mut triangles);
        }
        ranges.push(start..triangles.len());
    }
    Prepared { triangles, ranges }
}

fn projected_bounds(tris: &[ScreenTriangle]) -> Option<[f64; 4]> {
    if tris.is_empty() {
        return None;
    }
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for s in tris.iter().flat_map(|t| t.screen) {
        b[0] = b[0].min(s[0]);
        b[1] = b[1].min(s[1]);
        b[2] = b[2].max(s[0]);
        b[3] = b[3].max(s[1]);
    }
    Some(b)
}

/// Pixels covered by `tris` alone; `stamp` marks use `generation` to avoid clears.
fn coverage_count(tris: &[ScreenTriangle], width: u32, height: u32, stamp: &mut [u32], generation: u32) -> u64 {
    let mut count = 0;
    for t in tris {
        scan(t, width, height, |x, y, _, _, _| {
            let i = (y * width + x) as usize;
            if stamp[i] != generation {
                stamp[i] = generation;
                count += 1;
            }
        });
    }
    count
}

/// Coverage mask of entity `id` rendered without any other geometry.
pub fn render_entity_mask(geometry: &SceneGeometry, id: u32) -> Vec<bool> {
    let (w, h) = (geometry.camera.width, geometry.camera.height);
    let mut mask = vec![false; w as usize * h as usize];
    let mut tris = Vec::new();
    for (i, e) in geometry.entities.iter().enumerate().filter(|(_, e)| e.id == id) {
        for t in &e.triangles {
            setup(t, &geometry.camera, i, &mut tris);
        }
    }
    for t in &tris {
        scan(t, w, h, |x, y, _, _, _| mask[(y * w + x) as usize] = true);
    }
    mask
}

/// Renders prepared geometry; entity `k` (id `k`) must sit at list position `k - 1`
/// for k >= 1, with the ground (id 0) last if present.
pub fn render_geometry(geometry: &SceneGeometry, textures: &[ImageAsset]) -> RenderTarget {
    let camera = &geometry.camera;
    let (w, h) = (camera.width, camera.height);
    let n = w as usize * h as usize;
    let prepared = prepare(geometry);

    let mut depth = vec![f64::INFINITY; n];
    let mut winner = vec![u32::MAX; n];
    let mut bary = vec![[0.0f64; 2]; n];
    for (ti, tri) in prepared.triangles.iter().enumerate() {
        scan(tri, w, h, |x, y, l0, l1, l2| {
            let i = (y * w + x) as usize;
            let z = 1.0 / (l0 * tri.inv_z[0] + l1 * tri.inv_z[1] + l2 * tri.inv_z[2]);
            if z < depth[i] * DEPTH_TIE {
                depth[i] = z;
                winner[i] = ti as u32;
                bary[i] = [l1, l2];
            }
        });
    }

    let lights: Vec<(Vec3, [f64; 3])> = geometry
        .lights
        .iter()
        .map(|l| (camera.to_camera(&Vec3::from(l.position)), l.intensity))
        .collect();

    let mut color = vec![[0.0f32; 3]; n];
    let mut instance = vec![0u32; n];
    let mut visible = vec![0u64; geometry.entities.len()];
    for i in 0..n {
        let ti = winner[i];
        if ti == u32::MAX {
            continue;
        }
        let tri = &prepared.triangles[ti as usize];
        let entity = &geometry.entities[tri.entity];
        instance[i] = entity.id;
        visible[tri.entity] += 1;
        let [l1, l2] = bary[i];
        let l0 = 1.0 - l1 - l2;
        let z = depth[i];
        let wts = [l0 * tri.inv_z[0] * z, l1 * tri.inv_z[1] * z, l2 * tri.inv_z[2] * z];
        color[i] = shade_fragment(tri, &wts, entity, textures, &lights, geometry);
    }

    let mut stamp = vec![0u32; n];
    let mut entities = Vec::new();
    for (k, e) in geometry.entities.iter().enumerate() {
        if e.kind == EntityKind::Ground {
            continue;
        }
        let tris = &prepared.triangles[prepared.ranges[k].clone()];
        let alone = (e.kind == EntityKind::Car).then(|| coverage_count(tris, w, h, &mut stamp, k as u32 + 1));
        entities.push(EntityStats {
            id: e.id,
            kind: e.kind,
            visible_pixels: visible[k],
            alone_pixels: alone,
            projected_bounds: projected_bounds(tris),
            local_bounds: e.local_bounds,
        });
    }

    RenderTarget {
        width: w,
        height: h,
        color,
        depth,
        instance,
        entities,
        camera: camera.clone(),
    }
}

#[inline]
fn shade_fragment(
    tri: &ScreenTriangle,
    wts: &[f64; 3],
    entity: &super::EntityGeometry,
    textures: &[ImageAsset],
    lights: &[(Vec3, [f64; 3])],
    geometry: &SceneGeometry,
) -> [f32; 3] {
    let v = &tri.verts;
    let p = v[0].p * wts[0] + v[1].p * wts[1] + v[2].p * wts[2];
    let mut normal = v[0].n * wts[0] + v[1].n * wts[1] + v[2].n * wts[2];
    let len = normal.norm();
    normal = if len > 0.0 { normal / len } else { tri.face_normal.normalize() };
    if tri.face_normal.dot(&p) > 0.0 {
        normal = -normal;
    }
    let uv = [
        v[0].uv[0] * wts[0] + v[1].uv[0] * wts[1] + v[2].uv[0] * wts[2],
        v[0].uv[1] * wts[0] + v[1].uv[1] * wts[1] + v[2].uv[1] * wts[2],
    ];
    let a = albedo(&entity.material, textures, uv);
    lambert(a, &p, &normal, lights, geometry.ambient, geometry.attenuation).map(|c| c as f32)
}

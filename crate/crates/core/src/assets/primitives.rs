//! Procedural distractor shapes, unit scale and centered at the origin.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::error::{Error, Result};
use crate::math::{rot_x, Mat3, Vec3};
use crate::renderer::uv::vertex_box_uvs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Cone,
    Pyramid,
    Sphere,
    Cylinder,
    PartialTorus,
    Arrow,
    Box,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 7] = [
        PrimitiveKind::Cone,
        PrimitiveKind::Pyramid,
        PrimitiveKind::Sphere,
        PrimitiveKind::Cylinder,
        PrimitiveKind::PartialTorus,
        PrimitiveKind::Arrow,
        PrimitiveKind::Box,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Cone => "cone",
            PrimitiveKind::Pyramid => "pyramid",
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::PartialTorus => "partial_torus",
            PrimitiveKind::Arrow => "arrow",
            PrimitiveKind::Box => "box",
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrimitiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrimitiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Primitive(format!("unknown primitive `{s}`")))
    }
}

#[derive(Default)]
struct Builder {
    positions: Vec<Vec3>,
    normals: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl Builder {
    fn vertex(&mut self, p: Vec3, n: Vec3) -> u32 {
        self.positions.push(p);
        self.normals.push(n);
        (self.positions.len() - 1) as u32
    }

    fn tri(&mut self, a: u32, b: u32, c: u32) {
        self.triangles.push([a, b, c]);
    }

    /// Flat-shaded triangle with its own three vertices.
    fn flat_tri(&mut self, a: Vec3, b: Vec3, c: Vec3) {
        let n = (b - a).cross(&(c - a)).normalize();
        let i = self.vertex(a, n);
        let j = self.vertex(b, n);
        let k = self.vertex(c, n);
        self.tri(i, j, k);
    }

    /// Disc of ring points facing `normal`, fan from a center vertex.
    fn cap(&mut self, ring: &[Vec3], center: Vec3, normal: Vec3) {
        let c = self.vertex(center, normal);
        let first = self.positions.len() as u32;
        for p in ring {
            self.vertex(*p, normal);
        }
        let n = ring.len() as u32;
        for i in 0..n {
            let (a, b) = (first + i, first + (i + 1) % n);
            if (self.positions[a as usize] - center).cross(&(self.positions[b as usize] - center)).dot(&normal) >= 0.0 {
                self.tri(c, a, b);
            } else {
                self.tri(c, b, a);
            }
        }
    }

    fn finish(self) -> Result<Mesh> {
        let mut mesh = Mesh::new(self.positions, self.triangles, None, Some(self.normals))?;
        mesh.uvs = Some(vertex_box_uvs(&mesh)?);
        Ok(mesh)
    }
}

fn ring(n: usize, radius: f64, y: f64, phase: f64) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let a = phase + TAU * i as f64 / n as f64;
            Vec3::new(radius * a.cos(), y, radius * a.sin())
        })
        .collect()
}

fn sphere(n: usize) -> Builder {
    let mut b = Builder::default();
    let r = 0.5;
    let top = b.vertex(Vec3::new(0.0, r, 0.0), Vec3::y());
    for k in 0..n {
        let theta = std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64;
        for i in 0..n {
            let phi = TAU * i as f64 / n as f64;
            let d = Vec3::new(theta.sin() * phi.cos(), theta.cos(), theta.sin() * phi.sin());
            b.vertex(d * r, d);
        }
    }
    let bottom = b.vertex(Vec3::new(0.0, -r, 0.0), -Vec3::y());
    let at = |k: usize, i: usize| (1 + k * n + i % n) as u32;
    for i in 0..n {
        b.tri(top, at(0, i + 1), at(0, i));
        b.tri(bottom, at(n - 1, i), at(n - 1, i + 1));
    }
    for k in 0..n - 1 {
        for i in 0..n {
            b.tri(at(k, i), at(k, i + 1), at(k + 1, i + 1));
            b.tri(at(k, i), at(k + 1, i + 1), at(k + 1, i));
        }
    }
    b
}

fn cylinder(n: usize, radius: f64, y0: f64, y1: f64, caps: (bool, bool)) -> Builder {
    let mut b = Builder::default();
    let bottom = ring(n, radius, y0, 0.0);
    let top = ring(n, radius, y1, 0.0);
    for i in 0..n {
        let radial = Vec3::new(bottom[i].x, 0.0, bottom[i].z).normalize();
        b.vertex(bottom[i], radial);
        b.vertex(top[i], radial);
    }
    for i in 0..n as u32 {
        let j = (i + 1) % n as u32;
        let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        b.tri(b0, t0, t1);
        b.tri(b0, t1, b1);
    }
    if caps.0 {
        b.cap(&bottom, Vec3::new(0.0, y0, 0.0), -Vec3::y());
    }
    if caps.1 {
        b.cap(&top, Vec3::new(0.0, y1, 0.0), Vec3::y());
    }
    b
}

fn cone_into(b: &mut Builder, n: usize, radius: f64, y0: f64, y1: f64) {
    let base = ring(n, radius, y0, 0.0);
    let h = y1 - y0;
    let slope = radius / h;
    let first = b.positions.len() as u32;
    for p in &base {
        let radial = Vec3::new(p.x, 0.0, p.z).normalize();
        b.vertex(*p, Vec3::new(radial.x, slope, radial.z).normalize());
    }
    let apex = b.vertex(Vec3::new(0.0, y1, 0.0), Vec3::y());
    for i in 0..n as u32 {
        let j = (i + 1) % n as u32;
        b.tri(first + i, apex, first + j);
    }
}

fn cone(n: usize) -> Builder {
    let mut b = Builder::default();
    cone_into(&mut b, n, 0.5, -0.5, 0.5);
    b.cap(&ring(n, 0.5, -0.5, 0.0), Vec3::new(0.0, -0.5, 0.0), -Vec3::y());
    b
}

fn pyramid(n: usize) -> Builder {
    let mut b = Builder::default();
    let base = ring(n, 0.5, -0.5, std::f64::consts::PI / n as f64);
    let apex = Vec3::new(0.0, 0.5, 0.0);
    for i in 0..n {
        b.flat_tri(base[i], apex, base[(i + 1) % n]);
    }
    let down = -Vec3::y();
    let first = b.positions.len() as u32;
    for p in &base {
        b.vertex(*p, down);
    }
    for i in 1..(n as u32 - 1) {
        b.tri(first, first + i, first + i + 1);
    }
    b
}

fn partial_torus(n: usize) -> Builder {
    let mut b = Builder::default();
    let (major, minor) = (0.35, 0.15);
    let sweep = 0.75 * TAU;
    let segments = n;
    for s in 0..=segments {
        let a = sweep * s as f64 / segments as f64;
        let center = Vec3::new(major * a.cos(), 0.0, major * a.sin());
        let outward = Vec3::new(a.cos(), 0.0, a.sin());
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            let d = outward * t.cos() + Vec3::y() * t.sin();
            b.vertex(center + d * minor, d);
        }
    }
    let at = |s: usize, k: usize| (s * n + k % n) as u32;
    for s in 0..segments {
        for k in 0..n {
            b.tri(at(s, k), at(s, k + 1), at(s + 1, k + 1));
            b.tri(at(s, k), at(s + 1, k + 1), at(s + 1, k));
        }
    }
    b
}

fn arrow(n: usize) -> Builder {
    let (shaft_r, head_r, split) = (0.1, 0.25, 0.1);
    let mut b = cylinder(n, shaft_r, -0.5, split, (false, false));
    // Annulus closing the head's underside.
    let inner = ring(n, shaft_r, split, 0.0);
    let outer = ring(n, head_r, split, 0.0);
    let first = b.positions.len() as u32;
    for i in 0..n {
        b.vertex(inner[i], -Vec3::y());
        b.vertex(outer[i], -Vec3::y());
    }
    for i in 0..n as u32 {
        let j = (i + 1) % n as u32;
        let (i0, o0, i1, o1) = (first + 2 * i, first + 2 * i + 1, first + 2 * j, first + 2 * j + 1);
        b.tri(i0, o1, o0);
        b.tri(i0, i1, o1);
    }
    cone_into(&mut b, n, head_r, split, 0.5);
    b
}

fn cuboid() -> Builder {
    let mut b = Builder::default();
    let h = 0.5;
    let faces: [(Vec3, Vec3, Vec3); 6] = [
        (Vec3::x(), Vec3::z(), Vec3::y()),
        (-Vec3::x(), Vec3::y(), Vec3::z()),
        (Vec3::y(), Vec3::x(), Vec3::z()),
        (-Vec3::y(), Vec3::z(), Vec3::x()),
        (Vec3::z(), Vec3::y(), Vec3::x()),
        (-Vec3::z(), Vec3::x(), Vec3::y()),
    ];
    for (n, u, v) in faces {
        let c = n * h;
        // u x v == n for each entry, giving outward counter-clockwise winding.
        let corners = [c - u * h - v * h, c + u * h - v * h, c + u * h + v * h, c - u * h + v * h];
        let first = b.positions.len() as u32;
        for p in corners {
            b.vertex(p, n);
        }
        b.tri(first, first + 1, first + 2);
        b.tri(first, first + 2, first + 3);
    }
    b
}

/// Builds a primitive with `tessellation` segments around its main axis.
pub fn make_primitive(kind: PrimitiveKind, tessellation: usize) -> Result<Mesh> {
    if tessellation < 3 {
        return Err(Error::Primitive(format!("tessellation {tessellation} < 3")));
    }
    let n = tessellation;
    let builder = match kind {
        PrimitiveKind::Sphere => sphere(n),
        PrimitiveKind::Cylinder => cylinder(n, 0.5, -0.5, 0.5, (true, true)),
        PrimitiveKind::Cone => cone(n),
        PrimitiveKind::Pyramid => pyramid(n),
        PrimitiveKind::PartialTorus => partial_torus(n),
        PrimitiveKind::Arrow => arrow(n),
        PrimitiveKind::Box => cuboid(),
    };
    builder.finish()
}

/// Pedestrian- and tree-like stand-ins assembled from primitives.
pub fn make_composite(name: &str, tessellation: usize) -> Result<Mesh> {
    let part = |kind, s: Vec3, t: Vec3| -> Result<Mesh> {
        Ok(make_primitive(kind, tessellation)?.transformed(&Mat3::from_diagonal(&s), &t))
    };
    let merged = match name {
        "pedestrian" => Mesh::merge(&[
            part(PrimitiveKind::Cylinder, Vec3::new(0.3, 0.75, 0.3), Vec3::new(0.0, -0.125, 0.0))?,
            part(PrimitiveKind::Sphere, Vec3::new(0.25, 0.25, 0.25), Vec3::new(0.0, 0.375, 0.0))?,
        ])?,
        "tree" => Mesh::merge(&[
            part(PrimitiveKind::Cylinder, Vec3::new(0.15, 0.5, 0.15), Vec3::new(0.0, -0.25, 0.0))?,
            part(PrimitiveKind::Cone, Vec3::new(0.6, 0.6, 0.6), Vec3::new(0.0, 0.2, 0.0))?,
        ])?,
        "lying_cylinder" => part(PrimitiveKind::Cylinder, Vec3::new(1.0, 1.0, 1.0), Vec3::zeros())?
            .transformed(&rot_x(90.0), &Vec3::zeros()),
        other => return Err(Error::Primitive(format!("unknown composite `{other}`"))),
    };
    let mut mesh = merged;
    mesh.uvs = Some(vertex_box_uvs(&mesh)?);
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_counts_and_radius() {
        let m = make_primitive(PrimitiveKind::Sphere, 16).unwrap();
        assert_eq!(m.positions.len(), 16 * 16 + 2);
        for p in &m.positions {
            assert!((p.norm() - 0.5).abs() < 1e-6);
        }
        assert_eq!(m.triangle_count(), 2 * 16 + 2 * 16 * 15);
    }

    #[test]
    fn pyramid_four() {
        let m = make_primitive(PrimitiveKind::Pyramid, 4).unwrap();
        assert_eq!(m.triangle_count(), 6);
        let side = m.triangles.iter().filter(|t| t.iter().any(|&i| m.positions[i as usize].y > 0.0)).count();
        assert_eq!(side, 4);
    }

    #[test]
    fn triangular_prism_matches_hand_built_vertices() {
        let m = make_primitive(PrimitiveKind::Cylinder, 3).unwrap();
        let s3 = 3f64.sqrt() / 2.0;
        // Ring directions at 0°, 120°, 240° scaled by radius 0.5.
        let ring = [(0.5, 0.0), (-0.25, 0.5 * s3), (-0.25, -0.5 * s3)];
        let mut expected = Vec::new();
        for (x, z) in ring {
            expected.push(Vec3::new(x, -0.5, z));
            expected.push(Vec3::new(x, 0.5, z));
        }
        for (i, e) in expected.iter().enumerate() {
            assert!((m.positions[i] - e).norm() < 1e-12, "vertex {i}");
        }
        // 6 side verts, 4 per cap; 6 side tris, 3 per cap
        assert_eq!(m.positions.len(), 14);
        assert_eq!(m.triangle_count(), 12);
        assert!(m.triangles.iter().all(|t| {
            let [a, b, c] = t.map(|i| m.positions[i as usize]);
            (b - a).cross(&(c - a)).norm() > 1e-9
        }));
    }

    #[test]
    fn tessellation_below_three_rejected() {
        assert!(make_primitive(PrimitiveKind::Cone, 2).is_err());
    }

    /// Closed meshes: every undirected edge is shared by exactly two triangles.
    fn edge_use(m: &Mesh) -> std::collections::HashMap<(u64, u64, u64, u64, u64, u64), usize> {
        let key = |p: &Vec3| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        let mut edges = std::collections::HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let a = key(&m.positions[t[k] as usize]);
                let b = key(&m.positions[t[(k + 1) % 3] as usize]);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                *edges.entry((a.0, a.1, a.2, b.0, b.1, b.2)).or_insert(0) += 1;
            }
        }
        edges
    }

    #[test]
    fn closed_primitives_are_watertight() {
        for kind in [PrimitiveKind::Sphere, PrimitiveKind::Cylinder, PrimitiveKind::Cone, PrimitiveKind::Pyramid, PrimitiveKind::Box] {
            let m = make_primitive(kind, 12).unwrap();
            assert!(edge_use(&m).values().all(|&c| c == 2), "{kind}");
        }
    }

    #[test]
    fn open_primitives_have_boundary() {
        for kind in [PrimitiveKind::PartialTorus, PrimitiveKind::Arrow] {
            let m = make_primitive(kind, 12).unwrap();
            assert!(edge_use(&m).values().any(|&c| c == 1), "{kind}");
            assert!(edge_use(&m).values().all(|&c| c <= 2), "{kind}");
        }
    }

    #[test]
    fn all_primitives_fit_unit_cube_with_uvs() {
        for kind in PrimitiveKind::ALL {
            let m = make_primitive(kind, 10).unwrap();
            assert!(m.uvs.is_some());
            for k in 0..3 {
                assert!(m.bounds.min[k] >= -0.5 - 1e-12 && m.bounds.max[k] <= 0.5 + 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn composites_build() {
        for name in ["pedestrian", "tree", "lying_cylinder"] {
            assert!(make_composite(name, 8).unwrap().triangle_count() > 0);
        }
    }
}

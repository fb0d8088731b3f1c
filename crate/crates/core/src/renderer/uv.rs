//! Tri-planar box projection.
//!
//! Each face class maps so that neighbouring classes agree along the switch
//! lines `|x| = |z|` and stay close across `|x| = |y|`, which keeps `u`
//! continuous around a sphere. Side faces use `v = 1 - y`; the top and bottom
//! classes fold `u = |x + z - 1|` so their four corners land on the tile corners.

use std::collections::HashMap;

use crate::assets::Mesh;
use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};

/// Dominant axis (0..3) and its sign.
pub fn dominant_axis(n: &Vec3) -> (usize, bool) {
    let a = n.map(f64::abs);
    let axis = if a.x >= a.y && a.x >= a.z {
        0
    } else if a.y >= a.z {
        1
    } else {
        2
    };
    (axis, n[axis] >= 0.0)
}

fn normalized(bounds: &Aabb, p: &Vec3) -> [f64; 3] {
    let ext = bounds.extent();
    std::array::from_fn(|k| {
        if ext[k] > 0.0 {
            ((p[k] - bounds.min[k]) / ext[k]).clamp(0.0, 1.0)
        } else {
            0.5
        }
    })
}

/// UV for point `p` projected along `axis`.
pub fn box_uv(bounds: &Aabb, p: &Vec3, axis: usize, positive: bool) -> [f64; 2] {
    let [x, y, z] = normalized(bounds, p);
    match (axis, positive) {
        (0, true) => [z, 1.0 - y],
        (0, false) => [1.0 - z, 1.0 - y],
        (2, true) => [x, 1.0 - y],
        (2, false) => [1.0 - x, 1.0 - y],
        _ => [(x + z - 1.0).abs(), z],
    }
}

fn check_extent(mesh: &Mesh) -> Result<()> {
    let ext = mesh.bounds.extent();
    let flat_axes = (0..3).filter(|&k| !(ext[k] > 0.0)).count();
    if flat_axes >= 2 {
        return Err(Error::Geometry("zero-extent mesh cannot be box-projected".into()));
    }
    Ok(())
}

/// Per-vertex projection using each vertex normal; keeps the vertex count.
pub fn vertex_box_uvs(mesh: &Mesh) -> Result<Vec<[f64; 2]>> {
    check_extent(mesh)?;
    let normals = match &mesh.normals {
        Some(n) => n.clone(),
        None => {
            let mut m = mesh.clone();
            m.compute_normals();
            m.normals.unwrap()
        }
    };
    Ok(mesh
        .positions
        .iter()
        .zip(&normals)
        .map(|(p, n)| {
            let (axis, pos) = dominant_axis(n);
            box_uv(&mesh.bounds, p, axis, pos)
        })
        .collect())
}

/// Assigns UVs by the dominant axis of each face normal. Vertices shared by
/// faces of different classes are split. Meshes that already carry UVs are
/// returned unchanged.
pub fn project_box_uv(mesh: &Mesh) -> Result<Mesh> {
    if mesh.uvs.is_some() {
        return Ok(mesh.clone());
    }
    check_extent(mesh)?;
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut uvs = Vec::new();
    let mut triangles = Vec::with_capacity(mesh.triangles.len());
    let mut table: HashMap<(u32, usize, bool), u32> = HashMap::new();
    let src_normals = mesh.normals.as_ref();

    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.positions[i as usize]);
        let face = (b - a).cross(&(c - a));
        let (axis, pos) = dominant_axis(&face);
        let out = t.map(|i| {
            *table.entry((i, axis, pos)).or_insert_with(|| {
                let p = mesh.positions[i as usize];
                positions.push(p);
                normals.push(src_normals.map_or(face.normalize(), |ns| ns[i as usize]));
                uvs.push(box_uv(&mesh.bounds, &p, axis, pos));
                (positions.len() - 1) as u32
            })
        });
        triangles.push(out);
    }
    Mesh::new(positions, triangles, Some(uvs), Some(normals))
}

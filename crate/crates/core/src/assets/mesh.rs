use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::{Aabb, Mat3, Vec3};

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub uvs: Option<Vec<[f64; 2]>>,
    pub normals: Option<Vec<Vec3>>,
    pub bounds: Aabb,
}

impl Mesh {
    /// Builds a mesh, checking indices and attribute lengths.
    pub fn new(
        positions: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        uvs: Option<Vec<[f64; 2]>>,
        normals: Option<Vec<Vec3>>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Geometry("mesh has no triangles".into()));
        }
        let n = positions.len();
        if let Some(bad) = triangles.iter().flatten().find(|&&i| i as usize >= n) {
            return Err(Error::Geometry(format!("index {bad} out of range for {n} vertices")));
        }
        if uvs.as_ref().is_some_and(|u| u.len() != n) || normals.as_ref().is_some_and(|v| v.len() != n) {
            return Err(Error::Geometry("attribute count differs from vertex count".into()));
        }
        let bounds = Aabb::from_points(&positions);
        Ok(Self {
            positions,
            triangles,
            uvs,
            normals,
            bounds,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Area-weighted vertex normals from face normals.
    pub fn compute_normals(&mut self) {
        let mut acc = vec![Vec3::zeros(); self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.positions[i as usize]);
            // |cross| is twice the area, so summing cross products weights by area.
            let face = (b - a).cross(&(c - a));
            for &i in t {
                acc[i as usize] += face;
            }
        }
        let normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vec3::y()
                }
            })
            .collect();
        self.normals = Some(normals);
    }

    /// Applies `p -> linear * p + offset`; normals follow the rotation part.
    pub fn transformed(&self, linear: &Mat3, offset: &Vec3) -> Mesh {
        let positions: Vec<Vec3> = self.positions.iter().map(|p| linear * p + offset).collect();
        let normal_matrix = linear.try_inverse().map(|m| m.transpose()).unwrap_or(*linear);
        let normals = self.normals.as_ref().map(|ns| {
            ns.iter()
                .map(|n| {
                    let m = normal_matrix * n;
                    let len = m.norm();
                    if len > 0.0 {
                        m / len
                    } else {
                        *n
                    }
                })
                .collect()
        });
        let bounds = Aabb::from_points(&positions);
        Mesh {
            positions,
            triangles: self.triangles.clone(),
            uvs: self.uvs.clone(),
            normals,
            bounds,
        }
    }

    /// Concatenates meshes. UVs are kept only if every part has them.
    pub fn merge(parts: &[Mesh]) -> Result<Mesh> {
        let mut positions = Vec::new();
        let mut triangles = Vec::new();
        let keep_uvs = parts.iter().all(|p| p.uvs.is_some());
        let keep_normals = parts.iter().all(|p| p.normals.is_some());
        let mut uvs = Vec::new();
        let mut normals = Vec::new();
        for part in parts {
            let base = positions.len() as u32;
            positions.extend_from_slice(&part.positions);
            triangles.extend(part.triangles.iter().map(|t| t.map(|i| i + base)));
            if keep_uvs {
                uvs.extend_from_slice(part.uvs.as_ref().unwrap());
            }
            if keep_normals {
                normals.extend_from_slice(part.normals.as_ref().unwrap());
            }
        }
        Mesh::new(
            positions,
            triangles,
            keep_uvs.then_some(uvs),
            keep_normals.then_some(normals),
        )
    }

    /// Serializes as Wavefront OBJ. Attributes share the position index.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for p in &self.positions {
            let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        }
        if let Some(uvs) = &self.uvs {
            for uv in uvs {
                let _ = writeln!(out, "vt {} {}", uv[0], uv[1]);
            }
        }
        if let Some(ns) = &self.normals {
            for n in ns {
                let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
            }
        }
        let has_uv = self.uvs.is_some();
        let has_n = self.normals.is_some();
        for t in &self.triangles {
            out.push('f');
            for &i in t {
                let k = i + 1;
                match (has_uv, has_n) {
                    (true, true) => write!(out, " {k}/{k}/{k}"),
                    (true, false) => write!(out, " {k}/{k}"),
                    (false, true) => write!(out, " {k}//{k}"),
                    (false, false) => write!(out, " {k}"),
                }
                .unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Reads a Wavefront OBJ file.
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|reason| Error::Mesh {
        path: path.to_path_buf(),
        reason,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Corner {
    v: usize,
    vt: Option<usize>,
    vn: Option<usize>,
}

fn resolve_index(token: &str, len: usize, what: &str) -> std::result::Result<usize, String> {
    let raw: i64 = token.parse().map_err(|_| format!("bad {what} index `{token}`"))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        len as i64 + raw
    } else {
        return Err(format!("{what} index 0 is invalid"));
    };
    if idx < 0 || idx as usize >= len {
        return Err(format!("{what} index {raw} out of range ({len} defined)"));
    }
    Ok(idx as usize)
}

fn parse_floats<const N: usize>(parts: &mut std::str::SplitWhitespace<'_>, line_no: usize) -> std::result::Result<[f64; N], String> {
    let mut out = [0.0; N];
    for slot in out.iter_mut() {
        let tok = parts.next().ok_or_else(|| format!("line {line_no}: missing component"))?;
        *slot = tok.parse().map_err(|_| format!("line {line_no}: bad number `{tok}`"))?;
    }
    Ok(out)
}

/// Parses OBJ text. Polygons are fan-triangulated; missing normals are computed.
pub fn parse_obj(text: &str) -> std::result::Result<Mesh, String> {
    let mut positions = Vec::new();
    let mut tex = Vec::new();
    let mut norms = Vec::new();
    let mut faces: Vec<Vec<Corner>> = Vec::new();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let [x, y, z] = parse_floats::<3>(&mut parts, line_no)?;
                positions.push(Vec3::new(x, y, z));
            }
            Some("vt") => {
                let [u, v] = parse_floats::<2>(&mut parts, line_no)?;
                tex.push([u, v]);
            }
            Some("vn") => {
                let [x, y, z] = parse_floats::<3>(&mut parts, line_no)?;
                norms.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut face = Vec::new();
                for tok in parts {
                    let mut it = tok.split('/');
                    let v = resolve_index(it.next().unwrap_or(""), positions.len(), "vertex")
                        .map_err(|e| format!("line {line_no}: {e}"))?;
                    let vt = match it.next() {
                        Some(s) if !s.is_empty() => {
                            Some(resolve_index(s, tex.len(), "texcoord").map_err(|e| format!("line {line_no}: {e}"))?)
                        }
                        _ => None,
                    };
                    let vn = match it.next() {
                        Some(s) if !s.is_empty() => {
                            Some(resolve_index(s, norms.len(), "normal").map_err(|e| format!("line {line_no}: {e}"))?)
                        }
                        _ => None,
                    };
                    face.push(Corner { v, vt, vn });
                }
                if face.len() < 3 {
                    return Err(format!("line {line_no}: face with fewer than 3 vertices"));
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err("no faces".into());
    }

    let corners = || faces.iter().flatten();
    let all_uv = corners().all(|c| c.vt.is_some());
    let all_n = corners().all(|c| c.vn.is_some());
    let direct = corners().all(|c| (!all_uv || c.vt == Some(c.v)) && (!all_n || c.vn == Some(c.v)))
        && (!all_uv || tex.len() == positions.len())
        && (!all_n || norms.len() == positions.len());

    let (out_pos, out_uv, out_n, remap): (Vec<Vec3>, Vec<[f64; 2]>, Vec<Vec3>, Box<dyn Fn(&Corner) -> u32>) = if direct {
        (
            positions.clone(),
            if all_uv { tex.clone() } else { Vec::new() },
            if all_n { norms.clone() } else { Vec::new() },
            Box::new(|c: &Corner| c.v as u32),
        )
    } else {
        // Split vertices so every (position, uv, normal) triple gets its own slot.
        let mut table: HashMap<Corner, u32> = HashMap::new();
        let mut order = Vec::new();
        for c in corners() {
            let key = Corner {
                v: c.v,
                vt: if all_uv { c.vt } else { None },
                vn: if all_n { c.vn } else { None },
            };
            table.entry(key).or_insert_with(|| {
                order.push(key);
                (order.len() - 1) as u32
            });
        }
        let p = order.iter().map(|c| positions[c.v]).collect();
        let u = if all_uv { order.iter().map(|c| tex[c.vt.unwrap()]).collect() } else { Vec::new() };
        let n = if all_n { order.iter().map(|c| norms[c.vn.unwrap()]).collect() } else { Vec::new() };
        (
            p,
            u,
            n,
            Box::new(move |c: &Corner| {
                table[&Corner {
                    v: c.v,
                    vt: if all_uv { c.vt } else { None },
                    vn: if all_n { c.vn } else { None },
                }]
            }),
        )
    };

    let mut triangles = Vec::new();
    for face in &faces {
        let first = remap(&face[0]);
        for w in face[1..].windows(2) {
            triangles.push([first, remap(&w[0]), remap(&w[1])]);
        }
    }

    let mut mesh = Mesh::new(
        out_pos,
        triangles,
        all_uv.then_some(out_uv),
        all_n.then_some(out_n),
    )
    .map_err(|e| e.to_string())?;
    if mesh.normals.is_none() {
        mesh.compute_normals();
    }
    Ok(mesh)
}

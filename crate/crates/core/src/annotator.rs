//! Ground truth from the instance buffer, written as KITTI object labels.
//!
//! Label lines follow the KITTI devkit layout:
//! `type truncated occluded alpha left top right bottom h w l x y z rotation_y [score]`.
//! Boxes use continuous pixel edges: a box `(l, t, r, b)` covers pixel columns
//! `l..r` and rows `t..b`, so `r - l` is the width in pixels.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::{rot_y, wrap_pi, Vec3};
use crate::renderer::{EntityKind, RenderTarget};
use crate::sampler::SceneSpec;

/// Cars showing fewer pixels than this are not annotated.
pub const MIN_VISIBLE_PIXELS: u64 = 4;
pub const CAR_CLASS: &str = "Car";

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub class_name: String,
    pub truncated: f64,
    pub occluded: u8,
    pub alpha: f64,
    /// `[left, top, right, bottom]` in pixels.
    pub bbox: [f64; 4],
    /// `[height, width, length]` in meters.
    pub dimensions: [f64; 3],
    /// Bottom center of the 3D box in camera coordinates, meters.
    pub location: [f64; 3],
    pub rotation_y: f64,
    /// Detector confidence; ground truth has none.
    pub score: Option<f64>,
}

impl Annotation {
    /// A 2D-only record with KITTI's "unknown" placeholders elsewhere.
    pub fn from_box(class_name: &str, bbox: [f64; 4]) -> Self {
        Self {
            class_name: class_name.to_string(),
            truncated: 0.0,
            occluded: 0,
            alpha: -10.0,
            bbox,
            dimensions: [-1.0; 3],
            location: [-1000.0; 3],
            rotation_y: -10.0,
            score: None,
        }
    }

    pub fn height(&self) -> f64 {
        self.bbox[3] - self.bbox[1]
    }
}

/// Maps an occluded fraction to KITTI levels 0..=3.
pub fn occlusion_level(fraction: f64) -> u8 {
    if fraction < 0.2 {
        0
    } else if fraction < 0.5 {
        1
    } else if fraction < 0.8 {
        2
    } else {
        3
    }
}

/// Fraction of a continuous box lying outside `[0, w] x [0, h]`.
pub fn truncation(full: [f64; 4], width: u32, height: u32) -> f64 {
    let area = (full[2] - full[0]).max(0.0) * (full[3] - full[1]).max(0.0);
    if !(area > 0.0) || !area.is_finite() {
        return 0.0;
    }
    let cw = (full[2].min(f64::from(width)) - full[0].max(0.0)).max(0.0);
    let ch = (full[3].min(f64::from(height)) - full[1].max(0.0)).max(0.0);
    (1.0 - cw * ch / area).clamp(0.0, 1.0)
}

#[derive(Clone, Copy)]
struct PixelBounds {
    min_x: u32,
    min_y: u32,
    max_x: u32,
    max_y: u32,
    count: u64,
}

/// Tight pixel bounds per instance id `1..=n`.
fn instance_bounds(target: &RenderTarget, n: usize) -> Vec<Option<PixelBounds>> {
    let mut out: Vec<Option<PixelBounds>> = vec![None; n];
    for y in 0..target.height {
        let row = (y * target.width) as usize;
        for x in 0..target.width {
            let id = target.instance[row + x as usize] as usize;
            if id == 0 || id > n {
                continue;
            }
            let b = out[id - 1].get_or_insert(PixelBounds {
                min_x: x,
                min_y: y,
                max_x: x,
                max_y: y,
                count: 0,
            });
            b.min_x = b.min_x.min(x);
            b.max_x = b.max_x.max(x);
            b.min_y = b.min_y.min(y);
            b.max_y = b.max_y.max(y);
            b.count += 1;
        }
    }
    out
}

/// One annotation per visible car, in entity order.
pub fn annotate(spec: &SceneSpec, target: &RenderTarget) -> Result<Vec<Annotation>> {
    if target.entities.len() != spec.entity_count() {
        return Err(Error::EntityMismatch {
            spec: spec.entity_count(),
            target: target.entities.len(),
        });
    }
    let n_cars = spec.objects.len();
    let bounds = instance_bounds(target, n_cars);
    let camera = &target.camera;
    let mut out = Vec::new();
    for (k, obj) in spec.objects.iter().enumerate() {
        let stats = &target.entities[k];
        debug_assert_eq!(stats.kind, EntityKind::Car);
        let Some(px) = bounds[k] else { continue };
        if px.count < MIN_VISIBLE_PIXELS {
            continue;
        }
        let bbox = [
            f64::from(px.min_x),
            f64::from(px.min_y),
            f64::from(px.max_x + 1),
            f64::from(px.max_y + 1),
        ];
        let truncated = stats
            .projected_bounds
            .map_or(0.0, |full| truncation(full, target.width, target.height));
        let alone = stats.alone_pixels.unwrap_or(px.count).max(px.count);
        let occluded = occlusion_level(1.0 - px.count as f64 / alone as f64);

        let local = stats.local_bounds.expect("cars carry bounds");
        let ext = local.extent();
        let turn = rot_y(obj.yaw);
        let bottom = Vec3::new(
            0.5 * (local.min[0] + local.max[0]),
            local.min[1],
            0.5 * (local.min[2] + local.max[2]),
        );
        let location = camera.to_camera(&(turn * bottom + Vec3::from(obj.position)));
        let forward = camera.rotation * (turn * Vec3::x());
        let rotation_y = wrap_pi((-forward.z).atan2(forward.x));
        let alpha = wrap_pi(rotation_y - location.x.atan2(location.z));

        out.push(Annotation {
            class_name: CAR_CLASS.to_string(),
            truncated,
            occluded,
            alpha,
            bbox,
            dimensions: [ext.y, ext.z, ext.x],
            location: location.into(),
            rotation_y,
            score: None,
        });
    }
    Ok(out)
}

fn fixed2(out: &mut String, v: f64) {
    let s = format!("{v:.2}");
    out.push_str(if s == "-0.00" { "0.00" } else { &s });
}

/// One label line, newline-terminated.
pub fn format_kitti_line(a: &Annotation) -> String {
    let mut s = String::with_capacity(96);
    s.push_str(&a.class_name);
    s.push(' ');
    fixed2(&mut s, a.truncated);
    let _ = write!(s, " {} ", a.occluded);
    fixed2(&mut s, a.alpha);
    for v in a.bbox.iter().chain(&a.dimensions).chain(&a.location) {
        s.push(' ');
        fixed2(&mut s, *v);
    }
    s.push(' ');
    fixed2(&mut s, a.rotation_y);
    if let Some(score) = a.score {
        let _ = write!(s, " {score:.6}");
    }
    s.push('\n');
    s
}

pub fn format_kitti(annotations: &[Annotation]) -> String {
    annotations.iter().map(format_kitti_line).collect()
}

/// Writes a label file; an empty list yields an empty file.
pub fn write_kitti_labels(annotations: &[Annotation], path: &Path) -> Result<()> {
    std::fs::write(path, format_kitti(annotations)).map_err(|e| Error::io(path, e))
}

/// Parses one line with 15 fields (ground truth) or 16 (with score).
pub fn parse_kitti_line(line: &str) -> std::result::Result<Annotation, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 15 && fields.len() != 16 {
        return Err(format!("expected 15 or 16 fields, found {}", fields.len()));
    }
    let num = |i: usize| -> std::result::Result<f64, String> {
        fields[i].parse::<f64>().map_err(|_| format!("field {} `{}` is not a number", i + 1, fields[i]))
    };
    let occluded_raw = num(2)?;
    if occluded_raw.fract() != 0.0 || !(-1.0..=3.0).contains(&occluded_raw) {
        return Err(format!("occluded `{}` is not a level", fields[2]));
    }
    Ok(Annotation {
        class_name: fields[0].to_string(),
        truncated: num(1)?,
        occluded: occluded_raw.max(0.0) as u8,
        alpha: num(3)?,
        bbox: [num(4)?, num(5)?, num(6)?, num(7)?],
        dimensions: [num(8)?, num(9)?, num(10)?],
        location: [num(11)?, num(12)?, num(13)?],
        rotation_y: num(14)?,
        score: if fields.len() == 16 { Some(num(15)?) } else { None },
    })
}

pub fn read_kitti_labels(path: &Path) -> Result<Vec<Annotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_kitti_line(l).map_err(|reason| Error::Label {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(occlusion_level(0.0), 0);
        assert_eq!(occlusion_level(0.19), 0);
        assert_eq!(occlusion_level(0.2), 1);
        assert_eq!(occlusion_level(0.5), 2);
        assert_eq!(occlusion_level(0.8), 3);
        assert_eq!(occlusion_level(1.0), 3);
    }

    #[test]
    fn truncation_half_past_right_edge() {
        // 100 px wide image; box spans 80..120, so half its area is outside.
        assert!((truncation([80.0, 10.0, 120.0, 30.0], 100, 50) - 0.5).abs() < 1e-12);
        assert_eq!(truncation([10.0, 10.0, 20.0, 20.0], 100, 50), 0.0);
        assert!((truncation([-30.0, -10.0, 10.0, 30.0], 100, 50) - (1.0 - 10.0 * 30.0 / 1600.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_list_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("000000.txt");
        write_kitti_labels(&[], &p).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 0);
        assert!(read_kitti_labels(&p).unwrap().is_empty());
    }

    #[test]
    fn line_prefix() {
        let mut a = Annotation::from_box("Car", [1.0, 2.0, 30.0, 40.0]);
        a.alpha = -0.001;
        let line = format_kitti_line(&a);
        assert!(line.starts_with("Car 0.00 0 "), "{line}");
        assert!(line.ends_with('\n'));
        assert_eq!(line.split_whitespace().count(), 15);
        assert!(!line.contains("-0.00"));
    }

    #[test]
    fn write_parse_roundtrip() {
        let a = Annotation {
            class_name: "Car".into(),
            truncated: 0.123,
            occluded: 2,
            alpha: -1.234,
            bbox: [10.0, 20.0, 110.5, 80.25],
            dimensions: [1.52, 1.73, 4.5],
            location: [-3.1, 1.6, 17.42],
            rotation_y: 2.9,
            score: None,
        };
        let back = parse_kitti_line(&format_kitti_line(&a)).unwrap();
        assert_eq!(back.class_name, a.class_name);
        assert_eq!(back.occluded, a.occluded);
        let pairs = [
            (back.truncated, a.truncated),
            (back.alpha, a.alpha),
            (back.rotation_y, a.rotation_y),
        ];
        for (x, y) in pairs.into_iter().chain(back.bbox.into_iter().zip(a.bbox)).chain(back.location.into_iter().zip(a.location)) {
            assert!((x - y).abs() <= 0.005 + 1e-12);
        }
    }

    #[test]
    fn score_field() {
        let mut a = Annotation::from_box("Car", [0.0, 0.0, 5.0, 5.0]);
        a.score = Some(0.87654321);
        let back = parse_kitti_line(&format_kitti_line(&a)).unwrap();
        assert!((back.score.unwrap() - 0.876543).abs() < 1e-9);
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_kitti_line("Car 0 0").is_err());
        assert!(parse_kitti_line("Car x 0 0 0 0 0 0 0 0 0 0 0 0 0").is_err());
        assert!(parse_kitti_line("Car 0 7 0 0 0 0 0 0 0 0 0 0 0 0").is_err());
    }
}

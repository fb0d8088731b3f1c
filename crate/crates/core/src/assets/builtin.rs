//! Zero-dependency asset fleet: boxy cars, procedural textures and backgrounds.

use super::{make_composite, make_primitive, ImageAsset, Mesh, PrimitiveKind};
use crate::error::Result;
use crate::math::{rot_x, Mat3, Vec3};
use crate::rng::RngStream;

const TEXTURE_SEED: u64 = 0x7E57_0001;
const BACKGROUND_SEED: u64 = 0xBAC6_0001;

/// Proportions of one car body, in meters before length normalization.
struct CarShape {
    name: &'static str,
    length: f64,
    width: f64,
    body_height: f64,
    clearance: f64,
    cabin_height: f64,
    /// Cabin front and rear, as fractions of length measured from the rear.
    cabin_span: (f64, f64),
    wheel_radius: f64,
}

const SHAPES: [CarShape; 6] = [
    CarShape { name: "sedan", length: 4.6, width: 1.8, body_height: 0.65, clearance: 0.2, cabin_height: 0.55, cabin_span: (0.25, 0.7), wheel_radius: 0.33 },
    CarShape { name: "hatchback", length: 4.0, width: 1.75, body_height: 0.7, clearance: 0.2, cabin_height: 0.6, cabin_span: (0.05, 0.65), wheel_radius: 0.31 },
    CarShape { name: "wagon", length: 4.8, width: 1.8, body_height: 0.65, clearance: 0.2, cabin_height: 0.6, cabin_span: (0.05, 0.7), wheel_radius: 0.33 },
    CarShape { name: "coupe", length: 4.4, width: 1.8, body_height: 0.55, clearance: 0.15, cabin_height: 0.45, cabin_span: (0.3, 0.65), wheel_radius: 0.32 },
    CarShape { name: "suv", length: 4.7, width: 1.9, body_height: 0.85, clearance: 0.3, cabin_height: 0.7, cabin_span: (0.05, 0.72), wheel_radius: 0.38 },
    CarShape { name: "compact", length: 3.6, width: 1.65, body_height: 0.7, clearance: 0.18, cabin_height: 0.62, cabin_span: (0.1, 0.7), wheel_radius: 0.29 },
];

fn car(shape: &CarShape) -> Result<Mesh> {
    // Forward is +x, up is +y, width along z.
    let boxed = |size: Vec3, center: Vec3| -> Result<Mesh> {
        Ok(make_primitive(PrimitiveKind::Box, 4)?.transformed(&Mat3::from_diagonal(&size), &center))
    };
    let l = shape.length;
    let body_y = shape.clearance + 0.5 * shape.body_height;
    let mut parts = vec![boxed(
        Vec3::new(l, shape.body_height, shape.width),
        Vec3::new(0.0, body_y, 0.0),
    )?];
    let (rear, front) = shape.cabin_span;
    let cabin_len = (front - rear) * l;
    let cabin_x = -0.5 * l + 0.5 * (rear + front) * l;
    parts.push(boxed(
        Vec3::new(cabin_len, shape.cabin_height, shape.width * 0.88),
        Vec3::new(cabin_x, shape.clearance + shape.body_height + 0.5 * shape.cabin_height, 0.0),
    )?);
    let r = shape.wheel_radius;
    let wheel = make_primitive(PrimitiveKind::Cylinder, 14)?;
    let wheel_axis = rot_x(90.0) * Mat3::from_diagonal(&Vec3::new(2.0 * r, 0.25, 2.0 * r));
    for (sx, sz) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let center = Vec3::new(sx * 0.33 * l, r, sz * 0.5 * (shape.width - 0.2));
        parts.push(wheel.transformed(&wheel_axis, &center));
    }
    Mesh::merge(&parts)
}

pub fn builtin_cars() -> Result<Vec<(String, Mesh)>> {
    SHAPES.iter().map(|s| Ok((format!("builtin_{}", s.name), car(s)?))).collect()
}

pub fn builtin_distractors() -> Result<Vec<(String, Mesh)>> {
    let mut out = Vec::new();
    for kind in PrimitiveKind::ALL {
        out.push((format!("primitive_{kind}"), make_primitive(kind, 16)?));
    }
    for name in ["pedestrian", "tree", "lying_cylinder"] {
        out.push((format!("composite_{name}"), make_composite(name, 12)?));
    }
    Ok(out)
}

fn random_color(rng: &mut RngStream) -> [f64; 3] {
    [rng.next_f64(), rng.next_f64(), rng.next_f64()]
}

fn to_u8(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    std::array::from_fn(|k| a[k] + (b[k] - a[k]) * t)
}

/// Smooth value noise on a `cells`-periodic lattice.
fn value_noise(rng: &mut RngStream, cells: usize) -> impl Fn(f64, f64) -> f64 {
    let lattice: Vec<f64> = (0..cells * cells).map(|_| rng.next_f64()).collect();
    move |u: f64, v: f64| {
        let (x, y) = (u * cells as f64, v * cells as f64);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let at = |i: f64, j: f64| lattice[(j as usize % cells) * cells + (i as usize % cells)];
        let top = at(x0, y0) + (at(x0 + 1.0, y0) - at(x0, y0)) * s(fx);
        let bot = at(x0, y0 + 1.0) + (at(x0 + 1.0, y0 + 1.0) - at(x0, y0 + 1.0)) * s(fx);
        top + (bot - top) * s(fy)
    }
}

fn pattern_image(rng: &mut RngStream, width: u32, height: u32, style: usize) -> ImageAsset {
    let a = random_color(rng);
    let b = random_color(rng);
    let freq = 2.0 + rng.below(10) as f64;
    let angle = rng.uniform(0.0, std::f64::consts::PI);
    let cells = 4 + rng.below(8) as usize;
    let noise = value_noise(rng, cells);
    let (ca, sa) = (angle.cos(), angle.sin());
    let mut img = ImageAsset::filled(width, height, [0, 0, 0]);
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let v = (y as f64 + 0.5) / height as f64;
            let t = match style {
                0 => (((u * freq).floor() + (v * freq).floor()) as i64 % 2) as f64,
                1 => ((((u * ca + v * sa) * freq).fract()) < 0.5) as u8 as f64,
                2 => noise(u, v),
                3 => {
                    let (cu, cv) = ((u * freq).fract() - 0.5, (v * freq).fract() - 0.5);
                    ((cu * cu + cv * cv).sqrt() < 0.3) as u8 as f64
                }
                _ => (0.5 + 0.5 * ((u * ca + v * sa) * freq * std::f64::consts::TAU).sin()) * noise(u, v),
            };
            img.put(x, y, to_u8(lerp(a, b, t)));
        }
    }
    img
}

pub fn builtin_textures(count: usize) -> Vec<(String, ImageAsset)> {
    let mut rng = RngStream::from_seed(TEXTURE_SEED);
    (0..count)
        .map(|i| (format!("texture_{i:03}"), pattern_image(&mut rng, 64, 64, i % 5)))
        .collect()
}

/// Sky-over-ground gradients with a noise layer.
pub fn builtin_backgrounds(count: usize) -> Vec<(String, ImageAsset)> {
    let mut rng = RngStream::from_seed(BACKGROUND_SEED);
    let (w, h) = (480u32, 160u32);
    (0..count)
        .map(|i| {
            let sky = random_color(&mut rng);
            let horizon = random_color(&mut rng);
            let ground = random_color(&mut rng);
            let split = rng.uniform(0.3, 0.7);
            let cells = 8 + rng.below(16) as usize;
            let noise = value_noise(&mut rng, cells);
            let amp = rng.uniform(0.05, 0.4);
            let mut img = ImageAsset::filled(w, h, [0, 0, 0]);
            for y in 0..h {
                for x in 0..w {
                    let u = (x as f64 + 0.5) / w as f64;
                    let v = (y as f64 + 0.5) / h as f64;
                    let base = if v < split {
                        lerp(sky, horizon, v / split)
                    } else {
                        lerp(horizon, ground, (v - split) / (1.0 - split))
                    };
                    let n = (noise(u, v) - 0.5) * amp;
                    img.put(x, y, to_u8(base.map(|c| c + n)));
                }
            }
            (format!("background_{i:03}"), img)
        })
        .collect()
}

use std::sync::LazyLock;

use crate::assets::ImageAsset;

pub const GAMMA: f64 = 2.2;

/// 8-bit encoded value to linear intensity.
static DECODE: LazyLock<[f32; 256]> = LazyLock::new(|| std::array::from_fn(|v| (v as f64 / 255.0).powf(GAMMA) as f32));

/// Linear thresholds at which the encoded value steps up: `((k - 0.5) / 255)^2.2`.
static ENCODE_STEPS: LazyLock<[f32; 255]> =
    LazyLock::new(|| std::array::from_fn(|k| ((k as f64 + 0.5) / 255.0).powf(GAMMA) as f32));

#[inline]
pub fn decode_gamma(v: u8) -> f32 {
    DECODE[v as usize]
}

/// Linear `[0, 1]` to 8-bit with gamma 2.2, rounding to nearest.
#[inline]
pub fn encode_gamma(c: f32) -> u8 {
    ENCODE_STEPS.partition_point(|&t| t <= c) as u8
}

#[inline]
fn wrap(t: f64) -> f64 {
    t - t.floor()
}

/// Bilinear lookup with repeat wrapping. `texel` maps `(x, y)` to a value per channel.
#[inline]
fn bilinear(tex: &ImageAsset, uv: [f64; 2], texel: impl Fn(usize) -> [f32; 3]) -> [f32; 3] {
    let (w, h) = (tex.width as i64, tex.height as i64);
    // texel centers sit at (i + 0.5) / w
    let x = wrap(uv[0]) * w as f64 - 0.5;
    let y = wrap(uv[1]) * h as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
    let xi = |i: i64| i.rem_euclid(w) as usize;
    let yi = |j: i64| j.rem_euclid(h) as usize;
    let (ix0, iy0) = (x0 as i64, y0 as i64);
    let idx = |i: i64, j: i64| yi(j) * tex.width as usize + xi(i);
    let a = texel(idx(ix0, iy0));
    let b = texel(idx(ix0 + 1, iy0));
    let c = texel(idx(ix0, iy0 + 1));
    let d = texel(idx(ix0 + 1, iy0 + 1));
    std::array::from_fn(|k| {
        let top = a[k] + (b[k] - a[k]) * fx;
        let bot = c[k] + (d[k] - c[k]) * fx;
        top + (bot - top) * fy
    })
}

/// Bilinear, repeat-wrapped sample of the stored 8-bit values, scaled to `[0, 1]`.
pub fn sample_texture(tex: &ImageAsset, uv: [f64; 2]) -> [f32; 3] {
    bilinear(tex, uv, |i| {
        let p = &tex.pixels[3 * i..3 * i + 3];
        [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0]
    })
}

/// As [`sample_texture`] but filtering gamma-decoded (linear) texels.
pub fn sample_texture_linear(tex: &ImageAsset, uv: [f64; 2]) -> [f32; 3] {
    bilinear(tex, uv, |i| {
        let p = &tex.pixels[3 * i..3 * i + 3];
        [decode_gamma(p[0]), decode_gamma(p[1]), decode_gamma(p[2])]
    })
}

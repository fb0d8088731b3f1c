//! Binary-matte compositing of a render over a background photograph.

use crate::assets::ImageAsset;
use crate::renderer::{encode_gamma, RenderTarget};

/// Bilinear sample with clamp-to-edge at continuous source position `(x, y)`,
/// where integer coordinates are texel centers.
fn sample_clamped(img: &ImageAsset, x: f64, y: f64) -> [f64; 3] {
    let max_x = f64::from(img.width - 1);
    let max_y = f64::from(img.height - 1);
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as u32, y0 as u32);
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let (a, b, c, d) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
    std::array::from_fn(|k| {
        let top = f64::from(a[k]) + (f64::from(b[k]) - f64::from(a[k])) * fx;
        let bot = f64::from(c[k]) + (f64::from(d[k]) - f64::from(c[k])) * fx;
        top + (bot - top) * fy
    })
}

/// Resamples `src` onto a `width x height` grid covering the source window
/// `(x0, y0, w, h)`, pixel centers aligned.
pub fn resample(src: &ImageAsset, window: [f64; 4], width: u32, height: u32) -> ImageAsset {
    let [wx, wy, ww, wh] = window;
    let sx = ww / f64::from(width);
    let sy = wh / f64::from(height);
    let mut out = ImageAsset::filled(width, height, [0, 0, 0]);
    for y in 0..height {
        let fy = wy + (f64::from(y) + 0.5) * sy - 0.5;
        for x in 0..width {
            let fx = wx + (f64::from(x) + 0.5) * sx - 0.5;
            let v = sample_clamped(src, fx, fy);
            out.put(x, y, v.map(|c| c.round().clamp(0.0, 255.0) as u8));
        }
    }
    out
}

/// Center-crops `bg` to the target aspect ratio, then scales it bilinearly.
pub fn fit_background(bg: &ImageAsset, width: u32, height: u32) -> ImageAsset {
    if bg.width == width && bg.height == height {
        return bg.clone();
    }
    let (bw, bh) = (f64::from(bg.width), f64::from(bg.height));
    let target_aspect = f64::from(width) / f64::from(height);
    let window = if bw / bh > target_aspect {
        let cw = bh * target_aspect;
        [(bw - cw) / 2.0, 0.0, cw, bh]
    } else {
        let ch = bw / target_aspect;
        [0.0, (bh - ch) / 2.0, bw, ch]
    };
    resample(bg, window, width, height)
}

/// Rendered color wherever geometry was drawn, background elsewhere.
pub fn compose(target: &RenderTarget, background: &ImageAsset) -> ImageAsset {
    let mut out = fit_background(background, target.width, target.height);
    for (i, c) in target.color.iter().enumerate() {
        if target.covered(i) {
            out.pixels[3 * i..3 * i + 3].copy_from_slice(&c.map(encode_gamma));
        }
    }
    out
}

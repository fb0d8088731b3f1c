//! Training-time augmentations on (image, boxes) pairs.
//!
//! Photometric ops touch only pixels; geometric ops move pixels and boxes
//! together. [`augment`] draws every parameter up front from its stream and
//! records the ops it applied, so [`replay`] reproduces the output exactly.

use serde::{Deserialize, Serialize};

use crate::annotator::Annotation;
use crate::assets::ImageAsset;
use crate::compositor::resample;
use crate::config::AugmentationParams;
use crate::error::{Error, Result};
use crate::math::wrap_pi;
use crate::rng::RngStream;

/// An image with its object labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: ImageAsset,
    pub boxes: Vec<Annotation>,
}

/// One applied operation with everything needed to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugOp {
    Brightness { delta: f64 },
    Contrast { factor: f64 },
    Noise { sigma: f64, seed: u64 },
    Flip,
    Resize { scale: f64 },
    /// `window` is `[x, y, width, height]` in pixels.
    Crop { window: [u32; 4], min_visibility: f64 },
    Jitter { fraction: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub image: ImageAsset,
    pub boxes: Vec<Annotation>,
    pub applied_ops: Vec<AugOp>,
}

impl AugmentedSample {
    pub fn into_sample(self) -> Sample {
        Sample {
            image: self.image,
            boxes: self.boxes,
        }
    }
}

fn map_pixels(img: &ImageAsset, f: impl Fn(f64) -> f64) -> ImageAsset {
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        *out = f(v as f64).round().clamp(0.0, 255.0) as u8;
    }
    ImageAsset {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&v| lut[v as usize]).collect(),
    }
}

/// Adds `delta * 255` to every channel.
pub fn adjust_brightness(img: &ImageAsset, delta: f64) -> ImageAsset {
    if delta == 0.0 {
        return img.clone();
    }
    map_pixels(img, |v| v + delta * 255.0)
}

/// Scales every channel about mid-grey 128.
pub fn adjust_contrast(img: &ImageAsset, factor: f64) -> ImageAsset {
    if factor == 1.0 {
        return img.clone();
    }
    map_pixels(img, |v| (v - 128.0) * factor + 128.0)
}

/// Adds i.i.d. `N(0, (sigma * 255)^2)` to every channel sample.
pub fn add_gaussian_noise(img: &ImageAsset, sigma: f64, rng: &mut RngStream) -> ImageAsset {
    if sigma == 0.0 {
        return img.clone();
    }
    let s = sigma * 255.0;
    let mut out = img.clone();
    for v in &mut out.pixels {
        *v = (f64::from(*v) + s * rng.normal()).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Mirrors left to right; boxes map `(l, t, r, b) -> (W - r, t, W - l, b)`.
pub fn flip_horizontal(sample: &Sample) -> Sample {
    let img = &sample.image;
    let (w, h) = (img.width as usize, img.height as usize);
    let mut pixels = vec![0u8; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            let src = (y * w + x) * 3;
            let dst = (y * w + (w - 1 - x)) * 3;
            pixels[dst..dst + 3].copy_from_slice(&img.pixels[src..src + 3]);
        }
    }
    let wf = f64::from(img.width);
    let boxes = sample
        .boxes
        .iter()
        .map(|a| {
            let mut a = a.clone();
            let [l, t, r, b] = a.bbox;
            a.bbox = [wf - r, t, wf - l, b];
            if a.alpha != -10.0 {
                a.alpha = wrap_pi(std::f64::consts::PI - a.alpha);
            }
            if a.rotation_y != -10.0 {
                a.rotation_y = wrap_pi(std::f64::consts::PI - a.rotation_y);
            }
            if a.location[0] != -1000.0 {
                a.location[0] = -a.location[0];
            }
            a
        })
        .collect();
    Sample {
        image: ImageAsset {
            width: img.width,
            height: img.height,
            pixels,
        },
        boxes,
    }
}

/// Output size of [`resize`] for a given scale.
pub fn resized_dims(width: u32, height: u32, scale: f64) -> (u32, u32) {
    let d = |v: u32| ((f64::from(v) * scale).round() as u32).max(1);
    (d(width), d(height))
}

/// Bilinear rescale; boxes scale by the realized per-axis size ratio.
pub fn resize(sample: &Sample, scale: f64) -> Sample {
    let img = &sample.image;
    let (nw, nh) = resized_dims(img.width, img.height, scale);
    if nw == img.width && nh == img.height {
        return sample.clone();
    }
    let image = resample(img, [0.0, 0.0, f64::from(img.width), f64::from(img.height)], nw, nh);
    let sx = f64::from(nw) / f64::from(img.width);
    let sy = f64::from(nh) / f64::from(img.height);
    let boxes = sample
        .boxes
        .iter()
        .map(|a| {
            let mut a = a.clone();
            let [l, t, r, b] = a.bbox;
            a.bbox = [
                (l * sx).clamp(0.0, f64::from(nw)),
                (t * sy).clamp(0.0, f64::from(nh)),
                (r * sx).clamp(0.0, f64::from(nw)),
                (b * sy).clamp(0.0, f64::from(nh)),
            ];
            a
        })
        .filter(|a| a.bbox[0] < a.bbox[2] && a.bbox[1] < a.bbox[3])
        .collect();
    Sample { image, boxes }
}

fn box_area(b: &[f64; 4]) -> f64 {
    (b[2] - b[0]).max(0.0) * (b[3] - b[1]).max(0.0)
}

/// Cuts out `[x, y, width, height]`. Boxes are clipped to the window and
/// dropped when less than `min_visibility` of their area survives.
pub fn crop(sample: &Sample, window: [u32; 4], min_visibility: f64) -> Result<Sample> {
    let img = &sample.image;
    let [x0, y0, cw, ch] = window;
    if cw == 0 || ch == 0 || u64::from(x0) + u64::from(cw) > u64::from(img.width) || u64::from(y0) + u64::from(ch) > u64::from(img.height) {
        return Err(Error::CropWindow(format!(
            "window {window:?} does not fit a {}x{} image",
            img.width, img.height
        )));
    }
    if window == [0, 0, img.width, img.height] {
        return Ok(sample.clone());
    }
    let mut pixels = Vec::with_capacity(cw as usize * ch as usize * 3);
    for y in y0..y0 + ch {
        let start = (y as usize * img.width as usize + x0 as usize) * 3;
        pixels.extend_from_slice(&img.pixels[start..start + cw as usize * 3]);
    }
    let (fx, fy, fw, fh) = (f64::from(x0), f64::from(y0), f64::from(cw), f64::from(ch));
    let boxes = sample
        .boxes
        .iter()
        .filter_map(|a| {
            let [l, t, r, b] = a.bbox;
            let clipped = [
                (l - fx).clamp(0.0, fw),
                (t - fy).clamp(0.0, fh),
                (r - fx).clamp(0.0, fw),
                (b - fy).clamp(0.0, fh),
            ];
            let kept = box_area(&clipped);
            if kept <= 0.0 || kept < min_visibility * box_area(&a.bbox) {
                return None;
            }
            let mut a = a.clone();
            a.bbox = clipped;
            Some(a)
        })
        .collect();
    Ok(Sample {
        image: ImageAsset {
            width: cw,
            height: ch,
            pixels,
        },
        boxes,
    })
}

/// Moves each box edge by up to `fraction` of the box size; pixels untouched.
pub fn jitter_boxes(sample: &Sample, fraction: f64, rng: &mut RngStream) -> Sample {
    if fraction == 0.0 {
        return sample.clone();
    }
    let (w, h) = (f64::from(sample.image.width), f64::from(sample.image.height));
    let boxes = sample
        .boxes
        .iter()
        .filter_map(|a| {
            let [l, t, r, b] = a.bbox;
            let (bw, bh) = (r - l, b - t);
            let mut edge = |v: f64, size: f64, limit: f64| (v + rng.uniform_closed(-fraction, fraction) * size).clamp(0.0, limit);
            let jittered = [edge(l, bw, w), edge(t, bh, h), edge(r, bw, w), edge(b, bh, h)];
            if jittered[0] < jittered[2] && jittered[1] < jittered[3] {
                let mut a = a.clone();
                a.bbox = jittered;
                Some(a)
            } else {
                None
            }
        })
        .collect();
    Sample {
        image: sample.image.clone(),
        boxes,
    }
}

/// Applies one recorded op.
pub fn apply_op(sample: &Sample, op: &AugOp) -> Result<Sample> {
    let with_image = |image: ImageAsset| Sample {
        image,
        boxes: sample.boxes.clone(),
    };
    Ok(match *op {
        AugOp::Brightness { delta } => with_image(adjust_brightness(&sample.image, delta)),
        AugOp::Contrast { factor } => with_image(adjust_contrast(&sample.image, factor)),
        AugOp::Noise { sigma, seed } => with_image(add_gaussian_noise(&sample.image, sigma, &mut RngStream::from_seed(seed))),
        AugOp::Flip => flip_horizontal(sample),
        AugOp::Resize { scale } => resize(sample, scale),
        AugOp::Crop { window, min_visibility } => crop(sample, window, min_visibility)?,
        AugOp::Jitter { fraction, seed } => jitter_boxes(sample, fraction, &mut RngStream::from_seed(seed)),
    })
}

/// Re-runs an op record from the original sample.
pub fn replay(sample: &Sample, ops: &[AugOp]) -> Result<Sample> {
    let mut cur = sample.clone();
    for op in ops {
        cur = apply_op(&cur, op)?;
    }
    Ok(cur)
}

/// Draw order: brightness, contrast, noise sigma, noise seed, flip, resize
/// scale, crop retain fraction, crop x, crop y, jitter fraction, jitter seed.
/// Every draw happens whether or not its op ends up applied.
pub fn augment(sample: &Sample, params: &AugmentationParams, rng: &mut RngStream) -> AugmentedSample {
    let draw = |rng: &mut RngStream, i: crate::config::Interval| rng.uniform_closed(i.lo, i.hi);
    let delta = draw(rng, params.brightness_delta_range);
    let factor = draw(rng, params.contrast_factor_range);
    let sigma = draw(rng, params.noise_sigma_range);
    let noise_seed = rng.next_u64();
    let flip = rng.bernoulli(params.flip_probability);
    let scale = draw(rng, params.resize_scale_range);
    let retain = draw(rng, params.crop_retain_range);
    let crop_u = rng.next_f64();
    let crop_v = rng.next_f64();
    let fraction = rng.uniform_closed(0.0, params.box_jitter_fraction);
    let jitter_seed = rng.next_u64();

    let mut ops = Vec::new();
    if delta != 0.0 {
        ops.push(AugOp::Brightness { delta });
    }
    if factor != 1.0 {
        ops.push(AugOp::Contrast { factor });
    }
    if sigma != 0.0 {
        ops.push(AugOp::Noise { sigma, seed: noise_seed });
    }
    if flip {
        ops.push(AugOp::Flip);
    }
    let (mut w, mut h) = (sample.image.width, sample.image.height);
    if resized_dims(w, h, scale) != (w, h) {
        ops.push(AugOp::Resize { scale });
        (w, h) = resized_dims(w, h, scale);
    }
    let side = retain.sqrt();
    let cw = ((f64::from(w) * side).round() as u32).clamp(1, w);
    let ch = ((f64::from(h) * side).round() as u32).clamp(1, h);
    if (cw, ch) != (w, h) {
        let x = ((crop_u * f64::from(w - cw + 1)) as u32).min(w - cw);
        let y = ((crop_v * f64::from(h - ch + 1)) as u32).min(h - ch);
        ops.push(AugOp::Crop {
            window: [x, y, cw, ch],
            min_visibility: params.min_box_visibility,
        });
    }
    if fraction != 0.0 {
        ops.push(AugOp::Jitter { fraction, seed: jitter_seed });
    }

    let out = replay(sample, &ops).expect("crop window is built inside the image");
    AugmentedSample {
        image: out.image,
        boxes: out.boxes,
        applied_ops: ops,
    }
}

//! Generation, augmentation, and evaluation parameters.
//!
//! The on-disk format is TOML with four top-level items, all optional:
//!
//! ```toml
//! seed = 0
//!
//! [randomization]
//! image_width = 1200
//! image_height = 400
//! min_cars = 1
//! max_cars = 14
//! min_distractors = 0
//! max_distractors = 10
//! azimuth_range = [0.0, 360.0]          # degrees, half-open
//! elevation_range = [5.0, 30.0]         # degrees, closed
//! camera_jitter_range = [-30.0, 30.0]   # pan, tilt and roll, degrees
//! camera_distance_range = [5.0, 25.0]   # meters
//! field_of_view = 90.0                  # horizontal, degrees
//! light_count_range = [1, 12]
//! light_intensity_range = [0.5, 4.0]
//! ambient_plane_light = true
//! ambient_intensity_range = [0.05, 0.35]
//! ground_plane_probability = 0.5
//! texture_pool_fraction = 1.0
//! car_length = 4.5                      # meters, longest horizontal extent
//! enable_distractors = true
//! enable_object_textures = true
//! fixed_light = false
//! enable_photometric_aug = true
//! enable_geometric_aug = true
//!
//! [augmentation]
//! brightness_delta_range = [-0.2, 0.2]
//! contrast_factor_range = [0.8, 1.2]
//! noise_sigma_range = [0.0, 0.05]
//! flip_probability = 0.5
//! resize_scale_range = [0.8, 1.2]
//! crop_retain_range = [0.7, 1.0]
//! box_jitter_fraction = 0.05
//! min_box_visibility = 0.25
//!
//! [evaluation]
//! iou_threshold = 0.5
//! min_box_height_px = 40.0
//! max_truncation = 0.15
//! ```
//!
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A real interval stored as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn validate(&self, key: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::invalid(key, [self.lo, self.hi], "non-finite bound"));
        }
        if self.lo > self.hi {
            return Err(Error::invalid(key, [self.lo, self.hi], "invalid range"));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// A closed integer interval stored as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct CountRange {
    pub lo: u32,
    pub hi: u32,
}

impl CountRange {
    pub const fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }
}

impl From<[u32; 2]> for CountRange {
    fn from([lo, hi]: [u32; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<CountRange> for [u32; 2] {
    fn from(r: CountRange) -> Self {
        [r.lo, r.hi]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationParams {
    pub image_width: u32,
    pub image_height: u32,
    pub min_cars: u32,
    pub max_cars: u32,
    pub min_distractors: u32,
    pub max_distractors: u32,
    /// Degrees, sampled half-open.
    pub azimuth_range: Interval,
    /// Degrees, sampled closed.
    pub elevation_range: Interval,
    /// Degrees, shared by pan, tilt and roll.
    pub camera_jitter_range: Interval,
    /// Meters from the look-at point.
    pub camera_distance_range: Interval,
    /// Horizontal field of view, degrees.
    pub field_of_view: f64,
    pub light_count_range: CountRange,
    pub light_intensity_range: Interval,
    pub ambient_plane_light: bool,
    pub ambient_intensity_range: Interval,
    pub ground_plane_probability: f64,
    pub texture_pool_fraction: f64,
    /// Car meshes are rescaled so their longest horizontal extent equals this.
    pub car_length: f64,
    pub enable_distractors: bool,
    pub enable_object_textures: bool,
    pub fixed_light: bool,
    pub enable_photometric_aug: bool,
    pub enable_geometric_aug: bool,
}

impl Default for RandomizationParams {
    fn default() -> Self {
        Self {
            image_width: 1200,
            image_height: 400,
            min_cars: 1,
            max_cars: 14,
            min_distractors: 0,
            max_distractors: 10,
            azimuth_range: Interval::new(0.0, 360.0),
            elevation_range: Interval::new(5.0, 30.0),
            camera_jitter_range: Interval::new(-30.0, 30.0),
            camera_distance_range: Interval::new(5.0, 25.0),
            field_of_view: 90.0,
            light_count_range: CountRange::new(1, 12),
            light_intensity_range: Interval::new(0.5, 4.0),
            ambient_plane_light: true,
            ambient_intensity_range: Interval::new(0.05, 0.35),
            ground_plane_probability: 0.5,
            texture_pool_fraction: 1.0,
            car_length: 4.5,
            enable_distractors: true,
            enable_object_textures: true,
            fixed_light: false,
            enable_photometric_aug: true,
            enable_geometric_aug: true,
        }
    }
}

fn check_probability(key: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(key, p, "must lie in [0, 1]"));
    }
    Ok(())
}

fn check_counts(key: &str, lo: u32, hi: u32) -> Result<()> {
    if lo > hi {
        return Err(Error::invalid(key, [lo, hi], "invalid range"));
    }
    Ok(())
}

impl RandomizationParams {
    pub fn validate(&self) -> Result<()> {
        if self.image_width == 0 {
            return Err(Error::invalid("image_width", self.image_width, "must be >= 1"));
        }
        if self.image_height == 0 {
            return Err(Error::invalid("image_height", self.image_height, "must be >= 1"));
        }
        check_counts("min_cars/max_cars", self.min_cars, self.max_cars)?;
        check_counts("min_distractors/max_distractors", self.min_distractors, self.max_distractors)?;

        self.azimuth_range.validate("azimuth_range")?;
        let az = self.azimuth_range;
        if az.lo < 0.0 || az.hi > 360.0 || az.lo == az.hi {
            return Err(Error::invalid("azimuth_range", [az.lo, az.hi], "must be a non-empty subset of [0, 360)"));
        }
        self.elevation_range.validate("elevation_range")?;
        let el = self.elevation_range;
        if el.lo < -90.0 || el.hi > 90.0 {
            return Err(Error::invalid("elevation_range", [el.lo, el.hi], "must lie in [-90, 90]"));
        }
        self.camera_jitter_range.validate("camera_jitter_range")?;
        self.camera_distance_range.validate("camera_distance_range")?;
        if self.camera_distance_range.lo <= 0.0 {
            return Err(Error::invalid(
                "camera_distance_range",
                [self.camera_distance_range.lo, self.camera_distance_range.hi],
                "distance must be positive",
            ));
        }
        if !(self.field_of_view > 0.0 && self.field_of_view < 180.0) {
            return Err(Error::invalid("field_of_view", self.field_of_view, "must lie in (0, 180)"));
        }
        let lights = self.light_count_range;
        check_counts("light_count_range", lights.lo, lights.hi)?;
        if lights.lo == 0 {
            return Err(Error::invalid("light_count_range", [lights.lo, lights.hi], "at least one light required"));
        }
        self.light_intensity_range.validate("light_intensity_range")?;
        if self.light_intensity_range.lo < 0.0 {
            return Err(Error::invalid("light_intensity_range", self.light_intensity_range.lo, "must be >= 0"));
        }
        self.ambient_intensity_range.validate("ambient_intensity_range")?;
        if self.ambient_intensity_range.lo < 0.0 {
            return Err(Error::invalid("ambient_intensity_range", self.ambient_intensity_range.lo, "must be >= 0"));
        }
        check_probability("ground_plane_probability", self.ground_plane_probability)?;
        if !(self.texture_pool_fraction > 0.0 && self.texture_pool_fraction <= 1.0) {
            return Err(Error::invalid("texture_pool_fraction", self.texture_pool_fraction, "must lie in (0, 1]"));
        }
        if !(self.car_length.is_finite() && self.car_length > 0.0) {
            return Err(Error::invalid("car_length", self.car_length, "must be positive"));
        }
        Ok(())
    }

    pub fn focal_length_px(&self) -> f64 {
        0.5 * f64::from(self.image_width) / (0.5 * self.field_of_view.to_radians()).tan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationParams {
    /// Fraction of the 8-bit dynamic range.
    pub brightness_delta_range: Interval,
    pub contrast_factor_range: Interval,
    /// Fraction of the 8-bit dynamic range.
    pub noise_sigma_range: Interval,
    pub flip_probability: f64,
    pub resize_scale_range: Interval,
    /// Fraction of image area kept by the crop window.
    pub crop_retain_range: Interval,
    pub box_jitter_fraction: f64,
    pub min_box_visibility: f64,
}

impl Default for AugmentationParams {
    fn default() -> Self {
        Self {
            brightness_delta_range: Interval::new(-0.2, 0.2),
            contrast_factor_range: Interval::new(0.8, 1.2),
            noise_sigma_range: Interval::new(0.0, 0.05),
            flip_probability: 0.5,
            resize_scale_range: Interval::new(0.8, 1.2),
            crop_retain_range: Interval::new(0.7, 1.0),
            box_jitter_fraction: 0.05,
            min_box_visibility: 0.25,
        }
    }
}

impl AugmentationParams {
    /// Parameters that leave every sample untouched.
    pub fn identity() -> Self {
        Self {
            brightness_delta_range: Interval::point(0.0),
            contrast_factor_range: Interval::point(1.0),
            noise_sigma_range: Interval::point(0.0),
            flip_probability: 0.0,
            resize_scale_range: Interval::point(1.0),
            crop_retain_range: Interval::point(1.0),
            box_jitter_fraction: 0.0,
            min_box_visibility: self::AugmentationParams::default().min_box_visibility,
        }
    }

    /// Collapses the photometric and/or geometric ops to identity.
    pub fn gated(&self, photometric: bool, geometric: bool) -> Self {
        let id = Self::identity();
        let mut out = self.clone();
        if !photometric {
            out.brightness_delta_range = id.brightness_delta_range;
            out.contrast_factor_range = id.contrast_factor_range;
            out.noise_sigma_range = id.noise_sigma_range;
        }
        if !geometric {
            out.flip_probability = id.flip_probability;
            out.resize_scale_range = id.resize_scale_range;
            out.crop_retain_range = id.crop_retain_range;
            out.box_jitter_fraction = id.box_jitter_fraction;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.brightness_delta_range.validate("brightness_delta_range")?;
        let b = self.brightness_delta_range;
        if b.lo < -1.0 || b.hi > 1.0 {
            return Err(Error::invalid("brightness_delta_range", [b.lo, b.hi], "must lie in [-1, 1]"));
        }
        self.contrast_factor_range.validate("contrast_factor_range")?;
        if self.contrast_factor_range.lo < 0.0 {
            return Err(Error::invalid("contrast_factor_range", self.contrast_factor_range.lo, "must be >= 0"));
        }
        self.noise_sigma_range.validate("noise_sigma_range")?;
        if self.noise_sigma_range.lo < 0.0 {
            return Err(Error::invalid("noise_sigma_range", self.noise_sigma_range.lo, "must be >= 0"));
        }
        check_probability("flip_probability", self.flip_probability)?;
        self.resize_scale_range.validate("resize_scale_range")?;
        if self.resize_scale_range.lo <= 0.0 {
            return Err(Error::invalid("resize_scale_range", self.resize_scale_range.lo, "must be positive"));
        }
        self.crop_retain_range.validate("crop_retain_range")?;
        let c = self.crop_retain_range;
        if c.lo <= 0.0 || c.hi > 1.0 {
            return Err(Error::invalid("crop_retain_range", [c.lo, c.hi], "must lie in (0, 1]"));
        }
        if !(0.0..0.5).contains(&self.box_jitter_fraction) {
            return Err(Error::invalid("box_jitter_fraction", self.box_jitter_fraction, "must lie in [0, 0.5)"));
        }
        if !(self.min_box_visibility > 0.0 && self.min_box_visibility <= 1.0) {
            return Err(Error::invalid("min_box_visibility", self.min_box_visibility, "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    pub iou_threshold: f64,
    pub min_box_height_px: f64,
    pub max_truncation: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            min_box_height_px: 40.0,
            max_truncation: 0.15,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::invalid("iou_threshold", self.iou_threshold, "must lie in (0, 1]"));
        }
        if !(self.min_box_height_px >= 0.0) {
            return Err(Error::invalid("min_box_height_px", self.min_box_height_px, "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.max_truncation) {
            return Err(Error::invalid("max_truncation", self.max_truncation, "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Everything a config file can hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub randomization: RandomizationParams,
    pub augmentation: AugmentationParams,
    pub evaluation: EvalParams,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.randomization.validate()?;
        self.augmentation.validate()?;
        self.evaluation.validate()
    }

    /// SHA-256 over the canonical JSON form of the parsed parameters.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<Config> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::ConfigParse(e.to_string()))?;
    Config::from_toml_str(text)
}

/// Named one-at-a-time ablations of the full randomization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    NoLightAug,
    FixedLight,
    NoTexture,
    TexturesHalf,
    NoAugmentation,
    NoDistractors,
}

impl Ablation {
    pub const ALL: [Ablation; 7] = [
        Ablation::Full,
        Ablation::NoLightAug,
        Ablation::FixedLight,
        Ablation::NoTexture,
        Ablation::TexturesHalf,
        Ablation::NoAugmentation,
        Ablation::NoDistractors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoLightAug => "no_light_aug",
            Ablation::FixedLight => "fixed_light",
            Ablation::NoTexture => "no_texture",
            Ablation::TexturesHalf => "textures_half",
            Ablation::NoAugmentation => "no_augmentation",
            Ablation::NoDistractors => "no_distractors",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAblation(s.to_string()))
    }
}

/// Returns copies of the parameters with one component switched off.
///
/// `NoLightAug` keeps random lights but pins brightness and contrast to
/// identity; Gaussian noise stays on. `NoAugmentation` turns off both
/// augmentation families.
pub fn apply_ablation(
    rand: &RandomizationParams,
    aug: &AugmentationParams,
    mode: Ablation,
) -> (RandomizationParams, AugmentationParams) {
    let mut rand = rand.clone();
    let mut aug = aug.clone();
    match mode {
        Ablation::Full => {}
        Ablation::NoLightAug => {
            aug.brightness_delta_range = Interval::point(0.0);
            aug.contrast_factor_range = Interval::point(1.0);
        }
        Ablation::FixedLight => rand.fixed_light = true,
        Ablation::NoTexture => rand.enable_object_textures = false,
        Ablation::TexturesHalf => rand.texture_pool_fraction = 0.5,
        Ablation::NoAugmentation => {
            rand.enable_photometric_aug = false;
            rand.enable_geometric_aug = false;
        }
        Ablation::NoDistractors => rand.enable_distractors = false,
    }
    (rand, aug)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.randomization.light_count_range, CountRange::new(1, 12));
        assert_eq!(cfg.randomization.max_cars, 14);
        assert_eq!(cfg.evaluation.iou_threshold, 0.5);
        assert_eq!(cfg.evaluation.min_box_height_px, 40.0);
        assert_eq!(cfg.evaluation.max_truncation, 0.15);
    }

    #[test]
    fn explicit_max_cars_matches_default() {
        let cfg = Config::from_toml_str("[randomization]\nmax_cars = 14\n").unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn reversed_elevation_is_rejected() {
        let err = Config::from_toml_str("[randomization]\nelevation_range = [30.0, 5.0]\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("elevation_range"), "{msg}");
        assert!(msg.contains("invalid range"), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = Config::from_toml_str("[randomization]\nmax_car = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse(_)));
        assert!(err.to_string().contains("max_car"));
    }

    #[test]
    fn min_above_max_rejected() {
        assert!(Config::from_toml_str("[randomization]\nmin_cars = 5\nmax_cars = 2\n").is_err());
    }

    #[test]
    fn azimuth_outside_circle_rejected() {
        assert!(Config::from_toml_str("[randomization]\nazimuth_range = [0.0, 400.0]\n").is_err());
        assert!(Config::from_toml_str("[randomization]\nazimuth_range = [10.0, 10.0]\n").is_err());
    }

    #[test]
    fn eval_bounds() {
        assert!(Config::from_toml_str("[evaluation]\niou_threshold = 0.0\n").is_err());
        assert!(Config::from_toml_str("[evaluation]\nmax_truncation = 1.5\n").is_err());
        assert!(Config::from_toml_str("[augmentation]\nmin_box_visibility = 0.0\n").is_err());
    }

    #[test]
    fn load_is_pure_function_of_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 9\n[randomization]\nmax_cars = 4\n").unwrap();
        let a = load_config(&path).unwrap();
        let b = load_config(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.seed, 9);
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = Config::default();
        let back = Config::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn ablation_names_roundtrip() {
        for a in Ablation::ALL {
            assert_eq!(a.name().parse::<Ablation>().unwrap(), a);
        }
        assert!(matches!("bogus".parse::<Ablation>(), Err(Error::UnknownAblation(_))));
    }

    #[test]
    fn full_is_identity_and_modes_are_idempotent() {
        let r = RandomizationParams::default();
        let a = AugmentationParams::default();
        assert_eq!(apply_ablation(&r, &a, Ablation::Full), (r.clone(), a.clone()));
        for mode in Ablation::ALL {
            let once = apply_ablation(&r, &a, mode);
            let twice = apply_ablation(&once.0, &once.1, mode);
            assert_eq!(once, twice, "{mode}");
        }
    }

    #[test]
    fn no_distractors_only_touches_flag() {
        let r = RandomizationParams::default();
        let a = AugmentationParams::default();
        let (r2, a2) = apply_ablation(&r, &a, Ablation::NoDistractors);
        assert!(!r2.enable_distractors);
        assert_eq!(a2, a);
        assert_eq!(RandomizationParams { enable_distractors: true, ..r2 }, r);
    }

    #[test]
    fn textures_half_sets_fraction() {
        let (r2, _) = apply_ablation(&RandomizationParams::default(), &AugmentationParams::default(), Ablation::TexturesHalf);
        assert_eq!(r2.texture_pool_fraction, 0.5);
    }

    #[test]
    fn gated_identity() {
        let a = AugmentationParams::default().gated(false, false);
        let id = AugmentationParams::identity();
        assert_eq!(a, AugmentationParams { min_box_visibility: a.min_box_visibility, ..id });
    }
}

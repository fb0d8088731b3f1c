//! Randomized scene descriptions.
//!
//! `sample_scene` consumes its stream in a fixed order:
//!
//! 1. car count, uniform over `[min_cars, max_cars]`;
//! 2. azimuth (half-open), elevation, distance, pan, tilt, roll;
//! 3. per car: ground position by rejection inside the footprint of the
//!    un-jittered camera aimed at the origin, mesh index, yaw, texture index;
//! 4. the camera is re-aimed at the car centroid and the jitter applied;
//! 5. distractor count, then per distractor: depth (volume-uniform between the
//!    near plane and the farthest car), pixel position, mesh, three angles,
//!    log-uniform scale, texture-or-color choice and its payload;
//! 6. light count, per light position and intensity, then ambient level;
//! 7. background index, ground-plane toggle, ground texture.

mod camera;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use camera::{camera_matrices, Camera, CameraPose, NEAR_PLANE};

use crate::assets::AssetCatalog;
use crate::config::RandomizationParams;
use crate::math::{sin_cos_deg, Vec3};
use crate::rng::RngStream;

/// Closest camera depth at which cars are placed.
pub const MIN_CAR_DEPTH: f64 = 2.0;
/// Cars are placed no deeper than this multiple of the camera distance.
pub const MAX_CAR_DEPTH_FACTOR: f64 = 2.0;
const PLACEMENT_TRIES: usize = 256;
/// Distractor scale bounds relative to car scale.
pub const DISTRACTOR_SCALE: (f64, f64) = (0.3, 2.0);
pub const FIXED_LIGHT_ELEVATION: f64 = 45.0;
pub const FIXED_LIGHT_DISTANCE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub mesh: usize,
    /// `None` renders the neutral base color.
    pub texture: Option<usize>,
    pub position: [f64; 3],
    /// Degrees about +y.
    pub yaw: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Texture(usize),
    Color([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorInstance {
    pub mesh: usize,
    pub surface: Surface,
    pub position: [f64; 3],
    /// Degrees, applied as yaw (y), pitch (x), roll (z).
    pub orientation: [f64; 3],
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    pub position: [f64; 3],
    pub intensity: [f64; 3],
}

/// Complete description of one randomized scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub image_index: u64,
    pub seed: u64,
    pub camera: CameraPose,
    pub objects: Vec<ObjectInstance>,
    pub distractors: Vec<DistractorInstance>,
    pub lights: Vec<PointLight>,
    pub ambient: f64,
    pub background_index: usize,
    pub ground_plane: bool,
    pub ground_texture_index: Option<usize>,
}

impl SceneSpec {
    /// Cars first, then distractors; entity id `k` is index `k - 1` here.
    pub fn entity_count(&self) -> usize {
        self.objects.len() + self.distractors.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// SHA-256 of the compact JSON record.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(self).expect("scene spec serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}

/// The per-image stream for `(master_seed, image_index)`.
pub fn derive_stream(master_seed: u64, image_index: u64) -> RngStream {
    RngStream::derive(master_seed, image_index)
}

/// Single light used by the fixed-light ablation: same azimuth as the camera,
/// 45° up, 1.5x the camera distance from the look-at point, with intensity set
/// so normal-incidence irradiance at the look-at point is 1.
pub fn fixed_light(camera: &CameraPose) -> PointLight {
    let (sa, ca) = sin_cos_deg(camera.azimuth);
    let (se, ce) = sin_cos_deg(FIXED_LIGHT_ELEVATION);
    let d = FIXED_LIGHT_DISTANCE_FACTOR * camera.distance;
    let pos = Vec3::from(camera.look_at) + d * Vec3::new(ce * sa, se, ce * ca);
    let i = 1.0 + crate::renderer::ATTENUATION * d * d;
    PointLight {
        position: pos.into(),
        intensity: [i; 3],
    }
}

fn sample_car_position(rng: &mut RngStream, camera: &Camera, distance: f64) -> Vec3 {
    let half = MAX_CAR_DEPTH_FACTOR * distance;
    let (w, h) = (f64::from(camera.width), f64::from(camera.height));
    for _ in 0..PLACEMENT_TRIES {
        let p = Vec3::new(rng.uniform(-half, half), 0.0, rng.uniform(-half, half));
        let c = camera.to_camera(&p);
        if c.z < MIN_CAR_DEPTH || c.z > MAX_CAR_DEPTH_FACTOR * distance {
            continue;
        }
        let (u, v) = camera.project(&c);
        if (0.0..w).contains(&u) && (0.0..h).contains(&v) {
            return p;
        }
    }
    Vec3::zeros()
}

/// Samples one scene. Total: never fails for a validated config and non-empty pools.
pub fn sample_scene(rng: &mut RngStream, params: &RandomizationParams, catalog: &AssetCatalog) -> SceneSpec {
    sample_scene_indexed(rng, params, catalog, 0, 0)
}

/// As [`sample_scene`], recording the image index and master seed in the spec.
pub fn sample_scene_indexed(
    rng: &mut RngStream,
    params: &RandomizationParams,
    catalog: &AssetCatalog,
    master_seed: u64,
    image_index: u64,
) -> SceneSpec {
    let (w, h) = (params.image_width, params.image_height);
    let texture_len = catalog.texture_pool_len(params.texture_pool_fraction);

    let n_cars = rng.int_range(params.min_cars, params.max_cars);
    let azimuth = rng.uniform(params.azimuth_range.lo, params.azimuth_range.hi);
    let elevation = rng.uniform_closed(params.elevation_range.lo, params.elevation_range.hi);
    let distance = rng.uniform_closed(params.camera_distance_range.lo, params.camera_distance_range.hi);
    let jitter = params.camera_jitter_range;
    let pan = rng.uniform_closed(jitter.lo, jitter.hi);
    let tilt = rng.uniform_closed(jitter.lo, jitter.hi);
    let roll = rng.uniform_closed(jitter.lo, jitter.hi);

    let nominal_pose = CameraPose {
        azimuth,
        elevation,
        distance,
        pan: 0.0,
        tilt: 0.0,
        roll: 0.0,
        look_at: [0.0; 3],
    };
    let nominal = camera_matrices(&nominal_pose, w, h, params.field_of_view).expect("validated camera");

    let mut objects = Vec::with_capacity(n_cars as usize);
    for _ in 0..n_cars {
        let position = sample_car_position(rng, &nominal, distance);
        let mesh = rng.index(catalog.cars.len());
        let yaw = rng.uniform(0.0, 360.0);
        let texture = params.enable_object_textures.then(|| rng.index(texture_len));
        objects.push(ObjectInstance {
            mesh,
            texture,
            position: position.into(),
            yaw,
            scale: 1.0,
        });
    }

    let centroid = if objects.is_empty() {
        Vec3::zeros()
    } else {
        objects.iter().map(|o| Vec3::from(o.position)).sum::<Vec3>() / objects.len() as f64
    };
    let pose = CameraPose {
        pan,
        tilt,
        roll,
        look_at: centroid.into(),
        ..nominal_pose
    };
    let camera = camera_matrices(&pose, w, h, params.field_of_view).expect("validated camera");

    let mut distractors = Vec::new();
    if params.enable_distractors && !catalog.distractors.is_empty() {
        let n = rng.int_range(params.min_distractors, params.max_distractors);
        let far = objects
            .iter()
            .map(|o| camera.to_camera(&Vec3::from(o.position)).z)
            .fold(NEAR_PLANE + 1.0, f64::max);
        let (n3, f3) = (NEAR_PLANE.powi(3), far.powi(3));
        let (ls0, ls1) = (DISTRACTOR_SCALE.0.ln(), DISTRACTOR_SCALE.1.ln());
        for _ in 0..n {
            let z = (n3 + rng.next_f64() * (f3 - n3)).cbrt();
            let u = rng.uniform(0.0, f64::from(w));
            let v = rng.uniform(0.0, f64::from(h));
            let position = camera.to_world(&(camera.ray(u, v) * z));
            let mesh = rng.index(catalog.distractors.len());
            let orientation = [rng.uniform(0.0, 360.0), rng.uniform(0.0, 360.0), rng.uniform(0.0, 360.0)];
            let scale = rng.uniform_closed(ls0, ls1).exp().clamp(DISTRACTOR_SCALE.0, DISTRACTOR_SCALE.1);
            let surface = if rng.bernoulli(0.5) {
                Surface::Texture(rng.index(texture_len))
            } else {
                Surface::Color([rng.next_f64(), rng.next_f64(), rng.next_f64()])
            };
            distractors.push(DistractorInstance {
                mesh,
                surface,
                position: position.into(),
                orientation,
                scale,
            });
        }
    }

    let (lights, ambient) = if params.fixed_light {
        let ambient = if params.ambient_plane_light {
            0.5 * (params.ambient_intensity_range.lo + params.ambient_intensity_range.hi)
        } else {
            0.0
        };
        (vec![fixed_light(&pose)], ambient)
    } else {
        let n = rng.int_range(params.light_count_range.lo, params.light_count_range.hi);
        let mut lights = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let angle = rng.uniform(0.0, 360.0);
            let radius = rng.uniform(0.0, 1.5 * distance);
            let height = rng.uniform(1.0, 1.0 + 1.5 * distance);
            let (s, c) = sin_cos_deg(angle);
            let position = centroid + Vec3::new(radius * c, height, radius * s);
            let base = rng.uniform_closed(params.light_intensity_range.lo, params.light_intensity_range.hi);
            let tint = [rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)];
            lights.push(PointLight {
                position: position.into(),
                intensity: tint.map(|t| base * t),
            });
        }
        let ambient = if params.ambient_plane_light {
            rng.uniform_closed(params.ambient_intensity_range.lo, params.ambient_intensity_range.hi)
        } else {
            0.0
        };
        (lights, ambient)
    };

    let background_index = rng.index(catalog.backgrounds.len());
    let ground_plane = rng.bernoulli(params.ground_plane_probability);
    let ground_texture_index = ground_plane.then(|| rng.index(texture_len));

    SceneSpec {
        image_index,
        seed: master_seed,
        camera: pose,
        objects,
        distractors,
        lights,
        ambient,
        background_index,
        ground_plane,
        ground_texture_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> AssetCatalog {
        AssetCatalog::builtin(4.5).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let cat = catalog();
        let p = RandomizationParams::default();
        let a = sample_scene_indexed(&mut derive_stream(5, 17), &p, &cat, 5, 17);
        let b = sample_scene_indexed(&mut derive_stream(5, 17), &p, &cat, 5, 17);
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        let c = sample_scene_indexed(&mut derive_stream(5, 18), &p, &cat, 5, 18);
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn disabled_distractors_stay_empty() {
        let cat = catalog();
        let p = RandomizationParams {
            enable_distractors: false,
            min_distractors: 3,
            max_distractors: 3,
            ..Default::default()
        };
        for i in 0..200 {
            assert!(sample_scene(&mut derive_stream(1, i), &p, &cat).distractors.is_empty());
        }
    }

    #[test]
    fn fixed_light_is_single_and_fixed() {
        let cat = catalog();
        let p = RandomizationParams {
            fixed_light: true,
            ..Default::default()
        };
        for i in 0..50 {
            let s = sample_scene(&mut derive_stream(3, i), &p, &cat);
            assert_eq!(s.lights.len(), 1);
            assert_eq!(s.lights[0], fixed_light(&s.camera));
            let ambient = 0.5 * (p.ambient_intensity_range.lo + p.ambient_intensity_range.hi);
            assert_eq!(s.ambient, ambient);
        }
    }

    #[test]
    fn no_texture_flag_leaves_cars_plain() {
        let cat = catalog();
        let p = RandomizationParams {
            enable_object_textures: false,
            ..Default::default()
        };
        for i in 0..50 {
            let s = sample_scene(&mut derive_stream(3, i), &p, &cat);
            assert!(s.objects.iter().all(|o| o.texture.is_none()));
        }
    }

    #[test]
    fn texture_fraction_limits_indices() {
        let cat = catalog();
        let p = RandomizationParams {
            texture_pool_fraction: 0.5,
            ..Default::default()
        };
        let limit = cat.texture_pool_len(0.5);
        for i in 0..300 {
            let s = sample_scene(&mut derive_stream(8, i), &p, &cat);
            for o in &s.objects {
                assert!(o.texture.unwrap() < limit);
            }
            for d in &s.distractors {
                if let Surface::Texture(t) = d.surface {
                    assert!(t < limit);
                }
            }
            assert!(s.ground_texture_index.is_none_or(|t| t < limit));
        }
    }

    #[test]
    fn cars_land_in_front_of_camera() {
        let cat = catalog();
        let p = RandomizationParams::default();
        let mut in_front = 0;
        let mut total = 0;
        for i in 0..200 {
            let s = sample_scene(&mut derive_stream(2, i), &p, &cat);
            let cam = camera_matrices(&s.camera, p.image_width, p.image_height, p.field_of_view).unwrap();
            for o in &s.objects {
                total += 1;
                assert_eq!(o.position[1], 0.0);
                if cam.to_camera(&Vec3::from(o.position)).z > 0.0 {
                    in_front += 1;
                }
            }
        }
        assert!(in_front as f64 > 0.9 * total as f64, "{in_front}/{total}");
    }

    #[test]
    fn distractor_scales_are_bounded() {
        let cat = catalog();
        let p = RandomizationParams::default();
        for i in 0..200 {
            let s = sample_scene(&mut derive_stream(4, i), &p, &cat);
            for d in &s.distractors {
                assert!((DISTRACTOR_SCALE.0..=DISTRACTOR_SCALE.1).contains(&d.scale));
            }
        }
    }

    #[test]
    fn json_sidecar_roundtrip() {
        let cat = catalog();
        let s = sample_scene(&mut derive_stream(1, 1), &RandomizationParams::default(), &cat);
        assert_eq!(SceneSpec::from_json(&s.to_json()).unwrap(), s);
    }
}

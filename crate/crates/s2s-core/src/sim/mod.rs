//! Deterministic synthetic LiDAR models ray-cast against box-and-ground
//! scenes.
//!
//! Three presets mirror a heterogeneous sensor suite: two rotating sensors
//! with 360 degree coverage but different layer counts, and one solid-state
//! sensor with a narrow field of view. Elevation angles are spaced uniformly
//! within the elevation FoV — enough to create resolution and FoV domain
//! gaps between sensors, which is what the pipeline studies; this is not a
//! physically accurate beam model.

mod ray;
mod scene;

pub use ray::{ray_box, ray_ground, Pose};
pub use scene::{build_scene, Actor, Scene, SceneBox, SceneError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Rotating,
    SolidState,
}

/// Geometry of one LiDAR sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub name: String,
    pub kind: SensorKind,
    /// Number of elevation layers (scan lines).
    pub n_layers: u32,
    /// Azimuth field of view, degrees; 360 for rotating sensors.
    pub azimuth_fov_deg: f64,
    /// Lowest and highest elevation angle, degrees.
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    /// Azimuth sampling step, degrees.
    pub azimuth_step_deg: f64,
    /// Maximum range, meters.
    pub max_range: f64,
    /// Mount pose relative to the platform the sensor sits on.
    pub mount: Pose,
    /// Standard deviation of Gaussian range noise, meters; 0 disables noise.
    pub range_noise_sigma: f64,
}

impl SensorModel {
    /// Number of azimuth steps per sweep.
    pub fn azimuth_steps(&self) -> u32 {
        (self.azimuth_fov_deg / self.azimuth_step_deg).ceil() as u32
    }

    /// Total rays per frame: `n_layers * ceil(azimuth_fov / azimuth_step)`.
    pub fn ray_count(&self) -> u64 {
        self.n_layers as u64 * self.azimuth_steps() as u64
    }

    /// Elevation angle of a layer, degrees: layers are uniformly spaced over
    /// the elevation FoV, inclusive of both ends.
    pub fn layer_elevation_deg(&self, layer: u32) -> f64 {
        if self.n_layers <= 1 {
            return (self.elevation_min_deg + self.elevation_max_deg) / 2.0;
        }
        self.elevation_min_deg
            + layer as f64 * (self.elevation_max_deg - self.elevation_min_deg)
                / (self.n_layers - 1) as f64
    }

    /// Azimuth angle of a step, degrees, relative to the boresight. Rotating
    /// sensors sweep `[0, 360)`, bounded-FoV sensors are centered on zero.
    pub fn step_azimuth_deg(&self, step: u32) -> f64 {
        let start = if self.azimuth_fov_deg >= 360.0 {
            0.0
        } else {
            -self.azimuth_fov_deg / 2.0
        };
        start + step as f64 * self.azimuth_step_deg
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.range_noise_sigma = sigma;
        self
    }
}

/// Names of the three built-in presets.
pub const PRESET_NAMES: [&str; 3] = ["HDL64", "VLP32", "CUBE"];

/// The three sensor presets of the heterogeneous suite.
///
/// Elevation ranges follow publicly typical values for these sensor classes
/// and are approximations; the azimuth steps keep clouds in the 1e4..1e5
/// point range.
pub fn sensor_presets() -> [SensorModel; 3] {
    [
        SensorModel {
            name: "HDL64".into(),
            kind: SensorKind::Rotating,
            n_layers: 64,
            azimuth_fov_deg: 360.0,
            elevation_min_deg: -24.9,
            elevation_max_deg: 2.0,
            azimuth_step_deg: 0.2,
            max_range: 120.0,
            mount: Pose::IDENTITY,
            range_noise_sigma: 0.0,
        },
        SensorModel {
            name: "VLP32".into(),
            kind: SensorKind::Rotating,
            n_layers: 32,
            azimuth_fov_deg: 360.0,
            elevation_min_deg: -25.0,
            elevation_max_deg: 15.0,
            azimuth_step_deg: 0.2,
            max_range: 200.0,
            mount: Pose::IDENTITY,
            range_noise_sigma: 0.0,
        },
        SensorModel {
            name: "CUBE".into(),
            kind: SensorKind::SolidState,
            n_layers: 52,
            azimuth_fov_deg: 70.0,
            elevation_min_deg: -15.0,
            elevation_max_deg: 15.0,
            azimuth_step_deg: 0.4,
            max_range: 75.0,
            mount: Pose::IDENTITY,
            range_noise_sigma: 0.0,
        },
    ]
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<SensorModel> {
    sensor_presets().into_iter().find(|m| m.name == name)
}

/// Casts one frame of rays and returns the hits as a sensor-frame cloud.
///
/// The sensor sits at `platform.compose(model.mount)`. One ray is cast per
/// (layer, azimuth step); the nearest hit among the ground plane and all
/// scene boxes within `max_range` becomes a point. With
/// `range_noise_sigma > 0`, Gaussian range noise seeded by `seed` is added;
/// identical (model, platform, scene, seed) always produce identical clouds.
pub fn cast_rays(model: &SensorModel, platform: &Pose, scene: &Scene, seed: u64) -> PointCloud {
    let sensor = sensor_world_pose(model, platform);
    let origin = [sensor.x, sensor.y, sensor.z];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (model.range_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, model.range_noise_sigma).expect("sigma is positive and finite"));

    let mut points = Vec::new();
    for layer in 0..model.n_layers {
        let elevation = model.layer_elevation_deg(layer).to_radians();
        let (es, ec) = elevation.sin_cos();
        for step in 0..model.azimuth_steps() {
            let azimuth = model.step_azimuth_deg(step).to_radians();
            let (az_s, az_c) = azimuth.sin_cos();
            let dir = sensor.rotate_dir([ec * az_c, ec * az_s, es]);

            let mut nearest: Option<f64> = None;
            if let Some(t) = ray_ground(origin, dir) {
                nearest = Some(t);
            }
            for b in &scene.boxes {
                if let Some(t) = ray_box(origin, dir, b.center, b.size, b.yaw) {
                    if nearest.is_none_or(|n| t < n) {
                        nearest = Some(t);
                    }
                }
            }
            let Some(mut t) = nearest.filter(|&t| t <= model.max_range) else {
                continue;
            };
            if let Some(noise) = &noise {
                t = (t + noise.sample(&mut rng)).max(0.0);
            }
            let hit = [
                origin[0] + dir[0] * t,
                origin[1] + dir[1] * t,
                origin[2] + dir[2] * t,
            ];
            let local = sensor.inverse_transform_point(hit);
            points.push([local[0] as f32, local[1] as f32, local[2] as f32]);
        }
    }
    PointCloud::new(points).expect("finite geometry yields finite points")
}

/// World pose of the sensor head: the platform pose composed with the mount.
pub fn sensor_world_pose(model: &SensorModel, platform: &Pose) -> Pose {
    platform.compose(&model.mount)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn downward_layer_sensor() -> SensorModel {
        SensorModel {
            name: "test".into(),
            kind: SensorKind::Rotating,
            n_layers: 1,
            azimuth_fov_deg: 360.0,
            elevation_min_deg: -45.0,
            elevation_max_deg: -45.0,
            azimuth_step_deg: 10.0,
            max_range: 100.0,
            mount: Pose::IDENTITY,
            range_noise_sigma: 0.0,
        }
    }

    #[test]
    fn presets_match_sensor_suite() {
        let [hdl64, vlp32, cube] = sensor_presets();
        assert_eq!(hdl64.n_layers, 64);
        assert_eq!(hdl64.azimuth_fov_deg, 360.0);
        assert_eq!(vlp32.n_layers, 32);
        assert_eq!(vlp32.azimuth_fov_deg, 360.0);
        assert_eq!(cube.n_layers, 52);
        assert_eq!(cube.azimuth_fov_deg, 70.0);
        assert_eq!(cube.elevation_max_deg - cube.elevation_min_deg, 30.0);
        assert_eq!(cube.kind, SensorKind::SolidState);
        assert!(preset("HDL64").is_some());
        assert!(preset("nope").is_none());
    }

    #[test]
    fn slanted_ground_range_is_analytic() {
        // sensor 2 m above bare ground, one layer at -45 degrees: every hit
        // is at range 2 / sin(45 deg)
        let model = downward_layer_sensor();
        let cloud = cast_rays(&model, &Pose::new(0.0, 0.0, 2.0, 0.0), &Scene::default(), 0);
        assert_eq!(cloud.len() as u64, model.ray_count());
        let expected = 2.0 / (45.0f64.to_radians().sin());
        for p in cloud.points() {
            let range =
                ((p[0] as f64).powi(2) + (p[1] as f64).powi(2) + (p[2] as f64).powi(2)).sqrt();
            assert!((range - expected).abs() < 1e-6, "range {range}");
        }
    }

    #[test]
    fn horizontal_rays_over_empty_scene_miss() {
        let mut model = downward_layer_sensor();
        model.elevation_min_deg = 0.0;
        model.elevation_max_deg = 0.0;
        let cloud = cast_rays(&model, &Pose::new(0.0, 0.0, 2.0, 0.0), &Scene::default(), 0);
        assert!(cloud.is_empty());
    }

    #[test]
    fn ray_count_and_fov_bounds() {
        let [hdl64, _, cube] = sensor_presets();
        assert_eq!(hdl64.ray_count(), 64 * 1800);
        assert_eq!(cube.ray_count(), 52 * 175);
        // CUBE azimuths stay within +-35 degrees of boresight
        for step in 0..cube.azimuth_steps() {
            let az = cube.step_azimuth_deg(step);
            assert!((-35.0..=35.0).contains(&az), "azimuth {az}");
        }
        // elevations stay within the FoV and cover it
        assert_eq!(cube.layer_elevation_deg(0), -15.0);
        assert_eq!(cube.layer_elevation_deg(51), 15.0);
    }

    #[test]
    fn hdl64_returns_cover_all_layers_in_closed_scene() {
        // an enclosing room guarantees a hit for every layer
        let scene = Scene::from_json(
            r#"{ "boxes": [
                { "center": [0.0, 0.0, 5.0], "size": [40.0, 40.0, 14.0], "label": "Room" }
            ] }"#,
        )
        .unwrap();
        let [hdl64, _, _] = sensor_presets();
        let cloud = cast_rays(&hdl64, &Pose::new(0.0, 0.0, 2.0, 0.0), &scene, 0);
        let mut elevations: Vec<i64> = cloud
            .points()
            .iter()
            .map(|p| {
                let horiz = ((p[0] as f64).powi(2) + (p[1] as f64).powi(2)).sqrt();
                let e = (p[2] as f64).atan2(horiz).to_degrees();
                (e * 100.0).round() as i64
            })
            .collect();
        elevations.sort_unstable();
        elevations.dedup();
        assert_eq!(elevations.len(), 64);
    }

    #[test]
    fn deterministic_for_fixed_seed_even_with_noise() {
        let scene = Scene::from_json(
            r#"{ "boxes": [
                { "center": [8.0, 0.0, 1.0], "size": [4.0, 2.0, 2.0], "label": "Car" }
            ] }"#,
        )
        .unwrap();
        let model = downward_layer_sensor().with_noise(0.05);
        let pose = Pose::new(0.0, 0.0, 2.0, 0.3);
        let a = cast_rays(&model, &pose, &scene, 7);
        let b = cast_rays(&model, &pose, &scene, 7);
        assert_eq!(a, b);
        let c = cast_rays(&model, &pose, &scene, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn every_point_lies_on_a_scene_surface() {
        let scene = Scene::from_json(
            r#"{ "boxes": [
                { "center": [8.0, 1.0, 1.0], "size": [4.0, 2.0, 2.0], "yaw": 0.4, "label": "Car" },
                { "center": [-6.0, -3.0, 0.75], "size": [4.5, 1.9, 1.5], "label": "Car" }
            ] }"#,
        )
        .unwrap();
        let [_, vlp32, _] = sensor_presets();
        let pose = Pose::new(0.0, 0.0, 1.8, 0.2);
        let cloud = cast_rays(&vlp32, &pose, &scene, 0);
        assert!(!cloud.is_empty());
        assert!(cloud.len() as u64 <= vlp32.ray_count());
        let sensor = sensor_world_pose(&vlp32, &pose);
        for p in cloud.points() {
            let w = sensor.transform_point([p[0] as f64, p[1] as f64, p[2] as f64]);
            // distance to the nearest surface: ground plane or a box face
            let mut dist = w[2].abs();
            for b in &scene.boxes {
                let frame = Pose::new(b.center[0], b.center[1], b.center[2], b.yaw);
                let l = frame.inverse_transform_point(w);
                let dx = (l[0].abs() - b.size[0] / 2.0).abs();
                let dy = (l[1].abs() - b.size[1] / 2.0).abs();
                let dz = (l[2].abs() - b.size[2] / 2.0).abs();
                let inside_x = l[0].abs() <= b.size[0] / 2.0 + 1e-6;
                let inside_y = l[1].abs() <= b.size[1] / 2.0 + 1e-6;
                let inside_z = l[2].abs() <= b.size[2] / 2.0 + 1e-6;
                // on a face: within bounds on two axes, at the boundary on one
                if inside_x && inside_y && inside_z {
                    dist = dist.min(dx.min(dy).min(dz));
                }
            }
            assert!(dist <= 1e-4, "point {w:?} is {dist} m off-surface");
        }
    }

    #[test]
    fn max_range_is_respected() {
        let mut model = downward_layer_sensor();
        model.max_range = 2.0; // ground at 2.828 m is out of reach
        let cloud = cast_rays(&model, &Pose::new(0.0, 0.0, 2.0, 0.0), &Scene::default(), 0);
        assert!(cloud.is_empty());
    }
}

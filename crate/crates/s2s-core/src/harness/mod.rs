//! Scenario orchestration: per-vehicle sensing, grid exchange, fusion at the
//! ego, and domain-gap metrics.
//!
//! One scenario run executes, per frame: cast rays for every vehicle, crop
//! each cloud to the evaluation range around the ego, voxelize, round-trip
//! every grid through the wire codec, merge the non-ego grids into the
//! collective stream, and run the fusion network. Per-vehicle work is
//! independent and runs in parallel; all joins are order-canonical, so the
//! resulting BEV map is bit-identical under any permutation of the senders.

mod assign;
mod report;

pub use assign::{assign_sensors, AssignmentPolicy};
pub use report::{BevInfo, CavReport, FrameReport, FrameTiming, OverlapEntry, ScenarioReport};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{EvalError, EvalRange};
use crate::grid::{
    dims_for_extent, merge_grids, voxelize_counted, GridConfig, GridError, PointCloud,
    SparseVoxelGrid,
};
use crate::net::{forward, BevFeatureMap, ModelWeights, NetError};
use crate::sim::{cast_rays, preset, sensor_world_pose, Scene, SceneError};
use crate::wire::{decode, encode, WireError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown sensor preset {name:?}")]
    UnknownSensor { name: String },
    #[error("no sensor assigned to {cav:?}")]
    MissingAssignment { cav: String },
    #[error("scenario references unknown actor {id:?}")]
    UnknownActor { id: String },
    #[error("scenario file {path}: {message}")]
    Spec { path: String, message: String },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A fully resolved scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub scene: Scene,
    /// Actor id of the ego vehicle.
    pub ego: String,
    pub policy: AssignmentPolicy,
    /// Optional override pinning the ego's sensor regardless of policy.
    pub ego_sensor: Option<String>,
    pub grid: GridConfig,
    pub eval_range: EvalRange,
    pub frames: u32,
    /// Gaussian range noise applied to every sensor, meters.
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Serialized scenario file. The `scene` field is a path relative to the
/// scenario file; `grid` takes either explicit `dims` or an `extent` that is
/// a whole number of voxels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scene: String,
    pub ego: String,
    pub assignment: AssignmentPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ego_sensor: Option<String>,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_range: Option<EvalRange>,
    #[serde(default = "default_frames")]
    pub frames: u32,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_frames() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f32; 3],
    pub voxel_size: [f32; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[u32; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f32; 3]>,
}

impl GridSpec {
    pub fn resolve(&self) -> Result<GridConfig, GridError> {
        let dims = match (self.dims, self.extent) {
            (Some(dims), None) => dims,
            (None, Some(extent)) => dims_for_extent(extent, self.voxel_size)?,
            (Some(_), Some(_)) => {
                return Err(GridError::InvalidConfig(
                    "grid takes dims or extent, not both".into(),
                ))
            }
            (None, None) => {
                return Err(GridError::InvalidConfig(
                    "grid needs dims or extent".into(),
                ))
            }
        };
        GridConfig::new(self.origin, self.voxel_size, dims)
    }
}

impl Scenario {
    /// Loads a scenario spec and its referenced scene from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Spec {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let spec: ScenarioSpec =
            serde_json::from_str(&text).map_err(|e| HarnessError::Spec {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_spec(&spec, base)
    }

    pub fn from_spec(spec: &ScenarioSpec, base_dir: &Path) -> Result<Self, HarnessError> {
        let scene = Scene::load(base_dir.join(&spec.scene))?;
        let scenario = Self {
            scene,
            ego: spec.ego.clone(),
            policy: spec.assignment.clone(),
            ego_sensor: spec.ego_sensor.clone(),
            grid: spec.grid.resolve()?,
            eval_range: spec.eval_range.unwrap_or_default(),
            frames: spec.frames.max(1),
            noise_sigma: spec.noise_sigma,
            seed: spec.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.scene.actor(&self.ego).is_none() {
            return Err(HarnessError::UnknownActor {
                id: self.ego.clone(),
            });
        }
        if let Some(name) = &self.ego_sensor {
            if preset(name).is_none() {
                return Err(HarnessError::UnknownSensor { name: name.clone() });
            }
        }
        Ok(())
    }
}

/// Report plus the raw BEV maps, one per frame.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: ScenarioReport,
    pub bev_maps: Vec<BevFeatureMap>,
    /// Per-frame sensing artifacts, in actor order.
    pub artifacts: Vec<FrameArtifacts>,
}

/// Raw per-vehicle products of one frame.
#[derive(Debug, Clone)]
pub struct FrameArtifacts {
    /// Sensor-frame clouds as sensed, keyed by actor id.
    pub clouds: Vec<(String, PointCloud)>,
    /// Decoded ego-frame grids, keyed by actor id.
    pub grids: Vec<(String, SparseVoxelGrid)>,
}

/// Keeps points inside the evaluation range (closed intervals).
pub fn crop_to_range(cloud: &PointCloud, range: &EvalRange) -> PointCloud {
    let points = cloud
        .points()
        .iter()
        .filter(|p| range.contains([p[0] as f64, p[1] as f64, p[2] as f64]))
        .copied()
        .collect();
    PointCloud::new(points).expect("filtering preserves finiteness")
}

/// Jaccard overlap of two grids' occupied sets: |A and B| / |A or B|, with
/// 1.0 for two empty grids. Quantifies how similarly two sensors see the
/// same scene.
pub fn domain_overlap(a: &SparseVoxelGrid, b: &SparseVoxelGrid) -> Result<f64, GridError> {
    if a.config() != b.config() {
        return Err(GridError::IncompatibleConfigs(format!(
            "{:?} vs {:?}",
            a.config(),
            b.config()
        )));
    }
    let mut intersection = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a.coords()[i].cmp(&b.coords()[j]) {
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    let union = a.len() + b.len() - intersection;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Stable per-vehicle, per-frame RNG seed, independent of processing order.
fn derive_seed(base: u64, id: &str, frame: u32) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(id.as_bytes());
    hasher.update(frame.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[0..8].try_into().unwrap())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut acc, b| {
            use std::fmt::Write;
            write!(acc, "{b:02x}").unwrap();
            acc
        })
}

/// Runs a scenario: sense, exchange, fuse, and report, frame by frame.
pub fn run_scenario(
    scenario: &Scenario,
    weights: &ModelWeights,
) -> Result<ScenarioOutput, HarnessError> {
    scenario.validate()?;
    let scene = &scenario.scene;
    let ego_actor = scene.actor(&scenario.ego).expect("validated above");
    let ego_frame = scene.vehicle_frame(ego_actor);

    let ids: Vec<String> = scene.actors.iter().map(|a| a.id.clone()).collect();
    // the fixed policy falls back to sensors declared on the scene actors
    let mut policy = scenario.policy.clone();
    if let AssignmentPolicy::Fixed { map } = &mut policy {
        for actor in &scene.actors {
            if let Some(sensor) = &actor.sensor {
                map.entry(actor.id.clone()).or_insert_with(|| sensor.clone());
            }
        }
    }
    let mut assignment = assign_sensors(&ids, &policy)?;
    if let Some(name) = &scenario.ego_sensor {
        let model = preset(name).expect("validated above");
        assignment.insert(scenario.ego.clone(), model);
    }

    let mut frames = Vec::with_capacity(scenario.frames as usize);
    let mut bev_maps = Vec::with_capacity(scenario.frames as usize);
    let mut artifacts = Vec::with_capacity(scenario.frames as usize);
    for frame in 0..scenario.frames {
        let frame_start = Instant::now();

        // per-vehicle sensing, cropping, voxelization, and codec round-trip
        let per_cav_start = Instant::now();
        let per_cav: Result<Vec<(CavReport, SparseVoxelGrid, PointCloud)>, HarnessError> = scene
            .actors
            .par_iter()
            .map(|actor| {
                let model = assignment[&actor.id]
                    .clone()
                    .with_noise(scenario.noise_sigma);
                let platform = scene.roof_pose(actor);
                let view = scene.without_actor_box(actor);
                let seed = derive_seed(scenario.seed, &actor.id, frame);
                let cloud = cast_rays(&model, &platform, &view, seed);

                let sensor_pose = sensor_world_pose(&model, &platform);
                let world = sensor_pose.transform_cloud(&cloud);
                let ego_local = ego_frame.inverse_transform_cloud(&world);
                let cropped = crop_to_range(&ego_local, &scenario.eval_range);
                let (grid, _outside_grid) = voxelize_counted(&cropped, &scenario.grid)?;

                let bytes = encode(&grid)?;
                let decoded = decode(&bytes)?;
                let report = CavReport {
                    id: actor.id.clone(),
                    sensor: model.name.clone(),
                    is_ego: actor.id == scenario.ego,
                    points: cloud.len(),
                    points_in_range: cropped.len(),
                    voxels: decoded.len(),
                    wire_bytes: bytes.len(),
                };
                Ok((report, decoded, cloud))
            })
            .collect();
        let per_cav = per_cav?;
        let per_cav_ms = per_cav_start.elapsed().as_secs_f64() * 1e3;

        let merge_start = Instant::now();
        let ego_grid = per_cav
            .iter()
            .find(|(r, _, _)| r.is_ego)
            .map(|(_, g, _)| g.clone())
            .expect("ego actor is in the actor list");
        let sender_grids: Vec<SparseVoxelGrid> = per_cav
            .iter()
            .filter(|(r, _, _)| !r.is_ego)
            .map(|(_, g, _)| g.clone())
            .collect();
        let collective = if sender_grids.is_empty() {
            SparseVoxelGrid::empty(scenario.grid)?
        } else {
            merge_grids(&sender_grids)?
        };
        let all_grids: Vec<SparseVoxelGrid> =
            per_cav.iter().map(|(_, g, _)| g.clone()).collect();
        let fused_voxels = merge_grids(&all_grids)?.len();

        let mut overlaps = Vec::new();
        for i in 0..per_cav.len() {
            for j in (i + 1)..per_cav.len() {
                overlaps.push(OverlapEntry {
                    a: per_cav[i].0.id.clone(),
                    b: per_cav[j].0.id.clone(),
                    jaccard: domain_overlap(&per_cav[i].1, &per_cav[j].1)?,
                });
            }
        }
        let merge_ms = merge_start.elapsed().as_secs_f64() * 1e3;

        let forward_start = Instant::now();
        let bev = forward(&ego_grid, &collective, weights)?;
        let forward_ms = forward_start.elapsed().as_secs_f64() * 1e3;

        let mut bev_bytes = Vec::new();
        bev.write_to(&mut bev_bytes).expect("writing to a Vec");
        let mut clouds = Vec::with_capacity(per_cav.len());
        let mut grids = Vec::with_capacity(per_cav.len());
        let mut cav_reports = Vec::with_capacity(per_cav.len());
        for (report, grid, cloud) in per_cav {
            clouds.push((report.id.clone(), cloud));
            grids.push((report.id.clone(), grid));
            cav_reports.push(report);
        }
        artifacts.push(FrameArtifacts { clouds, grids });
        frames.push(FrameReport {
            frame,
            cavs: cav_reports,
            fused_voxels,
            overlaps,
            bev: BevInfo {
                nx: bev.nx,
                ny: bev.ny,
                channels: bev.channels,
                sha256: sha256_hex(&bev_bytes),
            },
            timing: Some(FrameTiming {
                per_cav_ms,
                merge_ms,
                forward_ms,
                total_ms: frame_start.elapsed().as_secs_f64() * 1e3,
            }),
        });
        bev_maps.push(bev);
    }

    Ok(ScenarioOutput {
        report: ScenarioReport {
            ego: scenario.ego.clone(),
            cav_count: scene.actors.len(),
            grid: scenario.grid,
            frames,
        },
        bev_maps,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ChannelPlan;
    use crate::sim::{Actor, SceneBox};

    fn small_plan() -> ModelWeights {
        ModelWeights::init(
            99,
            ChannelPlan {
                input_width: 3,
                channels: [4, 4, 4, 4],
            },
        )
    }

    fn desk_grid_config() -> GridConfig {
        GridConfig::new([-16.0, -16.0, -1.0], [0.5; 3], [64, 64, 8]).unwrap()
    }

    fn desk_eval_range() -> EvalRange {
        EvalRange::new([-16.0, 16.0], [-16.0, 16.0], [-1.0, 3.0]).unwrap()
    }

    fn vehicle(x: f64, y: f64, yaw: f64) -> SceneBox {
        SceneBox {
            center: [x, y, 0.75],
            size: [4.5, 1.9, 1.5],
            yaw,
            label: "Car".into(),
        }
    }

    /// Ego plus `senders` vehicles around it, with walls for structure.
    pub(crate) fn test_scene(senders: usize) -> Scene {
        let mut boxes = vec![vehicle(0.0, 0.0, 0.0)];
        let mut actors = vec![Actor {
            id: "ego".into(),
            box_index: 0,
            sensor: Some("HDL64".into()),
        }];
        let positions = [
            (8.0, 3.0, 0.4),
            (-7.0, -2.0, 2.0),
            (3.0, -8.0, 1.2),
            (-4.0, 9.0, -0.8),
        ];
        for (i, (x, y, yaw)) in positions.iter().take(senders).enumerate() {
            boxes.push(vehicle(*x, *y, *yaw));
            actors.push(Actor {
                id: format!("cav{i}"),
                box_index: boxes.len() - 1,
                sensor: Some("VLP32".into()),
            });
        }
        // walls give the sensors something to see in every direction
        boxes.push(SceneBox {
            center: [13.0, 0.0, 1.5],
            size: [0.5, 26.0, 3.0],
            yaw: 0.0,
            label: "Wall".into(),
        });
        boxes.push(SceneBox {
            center: [-13.0, 0.0, 1.5],
            size: [0.5, 26.0, 3.0],
            yaw: 0.0,
            label: "Wall".into(),
        });
        boxes.push(SceneBox {
            center: [0.0, 13.0, 1.5],
            size: [26.0, 0.5, 3.0],
            yaw: 0.0,
            label: "Wall".into(),
        });
        boxes.push(SceneBox {
            center: [0.0, -13.0, 1.5],
            size: [26.0, 0.5, 3.0],
            yaw: 0.0,
            label: "Wall".into(),
        });
        Scene { boxes, actors }
    }

    pub(crate) fn test_scenario(senders: usize) -> Scenario {
        Scenario {
            scene: test_scene(senders),
            ego: "ego".into(),
            policy: AssignmentPolicy::Fixed {
                map: std::iter::once(("ego".to_string(), "HDL64".to_string()))
                    .chain((0..senders).map(|i| (format!("cav{i}"), "VLP32".to_string())))
                    .collect(),
            },
            ego_sensor: None,
            grid: desk_grid_config(),
            eval_range: desk_eval_range(),
            frames: 1,
            noise_sigma: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn ego_only_scenario_matches_local_pass() {
        let scenario = test_scenario(0);
        let weights = small_plan();
        let out = run_scenario(&scenario, &weights).unwrap();
        let frame = &out.report.frames[0];
        assert_eq!(frame.cavs.len(), 1);
        // with no senders the fused set is exactly the ego's
        assert_eq!(frame.fused_voxels, frame.cavs[0].voxels);

        let ego_grid = {
            let actor = scenario.scene.actor("ego").unwrap();
            let model = preset("HDL64").unwrap();
            let cloud = cast_rays(
                &model,
                &scenario.scene.roof_pose(actor),
                &scenario.scene.without_actor_box(actor),
                derive_seed(7, "ego", 0),
            );
            let world = sensor_world_pose(&model, &scenario.scene.roof_pose(actor))
                .transform_cloud(&cloud);
            let local = scenario
                .scene
                .vehicle_frame(actor)
                .inverse_transform_cloud(&world);
            let cropped = crop_to_range(&local, &scenario.eval_range);
            voxelize_counted(&cropped, &scenario.grid).unwrap().0
        };
        let local_only = crate::net::forward_local(&ego_grid, &weights).unwrap();
        assert!(out.bev_maps[0].bit_eq(&local_only));
    }

    #[test]
    fn colocated_identical_sensors_duplicate_the_ego_grid() {
        // a second vehicle with the same sensor at the same pose sees the
        // same scene, so its grid has the same coordinate set as the ego's
        let mut scenario = test_scenario(0);
        scenario.scene.actors.push(Actor {
            id: "twin".into(),
            box_index: 0, // same body box as the ego
            sensor: Some("HDL64".into()),
        });
        if let AssignmentPolicy::Fixed { map } = &mut scenario.policy {
            map.insert("twin".into(), "HDL64".into());
        }
        let out = run_scenario(&scenario, &small_plan()).unwrap();
        let frame = &out.report.frames[0];
        assert_eq!(frame.cavs.len(), 2);
        assert_eq!(frame.cavs[0].voxels, frame.cavs[1].voxels);
        assert_eq!(frame.fused_voxels, frame.cavs[0].voxels);
        assert!((frame.overlaps[0].jaccard - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sender_permutations_produce_bit_identical_bev() {
        let scenario = test_scenario(3);
        let weights = small_plan();
        let baseline = run_scenario(&scenario, &weights).unwrap();

        // swap the two sender actors' order
        let mut permuted = scenario.clone();
        permuted.scene.actors.swap(1, 3);
        let out = run_scenario(&permuted, &weights).unwrap();
        assert!(out.bev_maps[0].bit_eq(&baseline.bev_maps[0]));
        assert_eq!(
            out.report.frames[0].bev.sha256,
            baseline.report.frames[0].bev.sha256
        );
    }

    #[test]
    fn wire_accounting_matches_size_law() {
        let scenario = test_scenario(2);
        let out = run_scenario(&scenario, &small_plan()).unwrap();
        for cav in &out.report.frames[0].cavs {
            assert_eq!(cav.wire_bytes, 40 + 6 * cav.voxels);
        }
    }

    #[test]
    fn adding_a_sender_never_shrinks_the_fused_set() {
        let weights = small_plan();
        let two = run_scenario(&test_scenario(2), &weights).unwrap();
        let three = run_scenario(&test_scenario(3), &weights).unwrap();
        assert!(
            three.report.frames[0].fused_voxels >= two.report.frames[0].fused_voxels,
            "fused set shrank when a sender was added"
        );
    }

    #[test]
    fn domain_overlap_basics() {
        let config = desk_grid_config();
        let a = SparseVoxelGrid::new(config, vec![[0, 0, 0], [1, 0, 0]]).unwrap();
        let b = SparseVoxelGrid::new(config, vec![[1, 0, 0], [2, 0, 0]]).unwrap();
        assert!((domain_overlap(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((domain_overlap(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let empty = SparseVoxelGrid::empty(config).unwrap();
        assert_eq!(domain_overlap(&empty, &empty).unwrap(), 1.0);
        let disjoint = SparseVoxelGrid::new(config, vec![[5, 5, 5]]).unwrap();
        assert_eq!(domain_overlap(&a, &disjoint).unwrap(), 0.0);

        let other = GridConfig::new([0.0; 3], [0.5; 3], [64, 64, 8]).unwrap();
        let c = SparseVoxelGrid::empty(other).unwrap();
        assert!(domain_overlap(&a, &c).is_err());
    }

    #[test]
    fn sensor_domain_gap_direction() {
        // one scene, one pose, three sensors: the narrow-FoV solid-state
        // sensor overlaps the HDL64 view less than the other rotating sensor
        let scenario = test_scenario(0);
        let scene = &scenario.scene;
        let actor = scene.actor("ego").unwrap();
        let view = scene.without_actor_box(actor);
        let platform = scene.roof_pose(actor);
        let frame = scene.vehicle_frame(actor);

        let grid_for = |name: &str| {
            let model = preset(name).unwrap();
            let cloud = cast_rays(&model, &platform, &view, 0);
            let world = sensor_world_pose(&model, &platform).transform_cloud(&cloud);
            let local = frame.inverse_transform_cloud(&world);
            let cropped = crop_to_range(&local, &scenario.eval_range);
            voxelize_counted(&cropped, &scenario.grid).unwrap().0
        };
        let hdl = grid_for("HDL64");
        let vlp = grid_for("VLP32");
        let cube = grid_for("CUBE");
        let hdl_vlp = domain_overlap(&hdl, &vlp).unwrap();
        let hdl_cube = domain_overlap(&hdl, &cube).unwrap();
        assert!(
            hdl_cube < hdl_vlp,
            "expected overlap(HDL64, CUBE) {hdl_cube} < overlap(HDL64, VLP32) {hdl_vlp}"
        );
        // and strictly below self-overlap
        assert!(hdl_cube < domain_overlap(&hdl, &hdl).unwrap());
    }

    #[test]
    fn scenario_spec_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scene_json = serde_json::to_string(&test_scene(2)).unwrap();
        std::fs::write(dir.path().join("scene.json"), scene_json).unwrap();
        let spec = ScenarioSpec {
            scene: "scene.json".into(),
            ego: "ego".into(),
            assignment: AssignmentPolicy::Random { seed: 3 },
            ego_sensor: Some("HDL64".into()),
            grid: GridSpec {
                origin: [-16.0, -16.0, -1.0],
                voxel_size: [0.5; 3],
                dims: None,
                extent: Some([32.0, 32.0, 4.0]),
            },
            eval_range: None,
            frames: 2,
            noise_sigma: 0.0,
            seed: 1,
        };
        let spec_path = dir.path().join("scenario.json");
        std::fs::write(&spec_path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
        let scenario = Scenario::load(&spec_path).unwrap();
        assert_eq!(scenario.grid.dims, [64, 64, 8]);
        assert_eq!(scenario.frames, 2);
        assert_eq!(scenario.eval_range, EvalRange::default());

        let out = run_scenario(&scenario, &small_plan()).unwrap();
        assert_eq!(out.report.frames.len(), 2);
        assert_eq!(out.bev_maps.len(), 2);
        // ego sensor override pins the ego to HDL64
        let ego_row = out.report.frames[0]
            .cavs
            .iter()
            .find(|c| c.is_ego)
            .unwrap();
        assert_eq!(ego_row.sensor, "HDL64");
    }

    #[test]
    fn noisy_multi_frame_runs_are_deterministic() {
        let mut scenario = test_scenario(1);
        scenario.frames = 2;
        scenario.noise_sigma = 0.05;
        let weights = small_plan();
        let a = run_scenario(&scenario, &weights).unwrap();
        let b = run_scenario(&scenario, &weights).unwrap();
        assert_eq!(a.report.frames[0].bev.sha256, b.report.frames[0].bev.sha256);
        assert_eq!(a.report.frames[1].bev.sha256, b.report.frames[1].bev.sha256);
        // per-frame seeds differ, so noisy frames see different clouds
        assert_ne!(
            a.report.frames[0].bev.sha256, a.report.frames[1].bev.sha256,
            "noise should vary between frames"
        );
        assert!(a.bev_maps[0].bit_eq(&b.bev_maps[0]));
    }

    #[test]
    fn unknown_actor_is_rejected() {
        let mut scenario = test_scenario(1);
        scenario.ego = "ghost".into();
        assert!(matches!(
            run_scenario(&scenario, &small_plan()),
            Err(HarnessError::UnknownActor { .. })
        ));
    }
}

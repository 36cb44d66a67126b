//! Scenario report types, serialized to JSON by the CLI.

use serde::Serialize;

use crate::grid::GridConfig;

/// One vehicle's sensing and transmission numbers for one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavReport {
    pub id: String,
    pub sensor: String,
    pub is_ego: bool,
    /// Points sensed (sensor frame, before cropping).
    pub points: usize,
    /// Points inside the evaluation range around the ego.
    pub points_in_range: usize,
    /// Occupied voxels after quantization.
    pub voxels: usize,
    /// Encoded message size; always `40 + 6 * voxels`.
    pub wire_bytes: usize,
}

/// Jaccard overlap between two vehicles' grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapEntry {
    pub a: String,
    pub b: String,
    pub jaccard: f64,
}

/// Shape and digest of the fused BEV map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BevInfo {
    pub nx: u32,
    pub ny: u32,
    pub channels: u32,
    /// SHA-256 of the serialized map; equal digests mean bit-identical maps.
    pub sha256: String,
}

/// Wall-clock stage timings, milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameTiming {
    /// Sensing, cropping, voxelization, and codec round-trip for all
    /// vehicles (runs in parallel).
    pub per_cav_ms: f64,
    /// Grid merging and overlap computation.
    pub merge_ms: f64,
    /// The fusion network forward pass.
    pub forward_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame: u32,
    pub cavs: Vec<CavReport>,
    /// Voxel count of the union of every vehicle's grid (ego included).
    pub fused_voxels: usize,
    pub overlaps: Vec<OverlapEntry>,
    pub bev: BevInfo,
    /// Omitted from serialized reports when stripped for reproducibility.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<FrameTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub ego: String,
    pub cav_count: usize,
    pub grid: GridConfig,
    pub frames: Vec<FrameReport>,
}

impl ScenarioReport {
    /// Drops timing data so that serialized reports are byte-identical
    /// across reruns.
    pub fn strip_timing(&mut self) {
        for frame in &mut self.frames {
            frame.timing = None;
        }
    }
}

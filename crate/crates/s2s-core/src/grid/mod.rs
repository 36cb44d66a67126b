//! Point clouds, grid geometry, sparse voxel grids, and voxelization.
//!
//! A [`SparseVoxelGrid`] is the unit of exchange between vehicles: a uniform
//! grid described by a [`GridConfig`] of which only the occupied cell
//! coordinates are stored. Voxelization uses half-open cells `[low, high)`
//! per axis, so every kept point quantizes to exactly one cell and points on
//! the upper grid boundary are dropped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::SparseTensor;

pub mod io;

/// Largest voxel count per axis representable by the `u16` coordinate width.
pub const MAX_DIM: u32 = u16::MAX as u32;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid config: {0}")]
    InvalidConfig(String),
    #[error("voxel coordinate {coord:?} out of bounds for dims {dims:?}")]
    OutOfBounds { coord: [u16; 3], dims: [u32; 3] },
    #[error("grid configs are incompatible: {0}")]
    IncompatibleConfigs(String),
    #[error("cannot merge an empty list of grids")]
    EmptyMerge,
    #[error("extent {extent:?} m does not match dims {dims:?} x voxel size {voxel_size:?} m within one voxel")]
    ExtentMismatch {
        extent: [f32; 3],
        dims: [u32; 3],
        voxel_size: [f32; 3],
    },
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("failed to read point cloud: {0}")]
    CloudIo(String),
}

/// Sensor-frame 3D points, optionally with per-point intensity in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<[f32; 3]>,
    intensity: Option<Vec<f32>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f32; 3]>) -> Result<Self, GridError> {
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(GridError::InvalidCloud(format!(
                    "point {i} has non-finite coordinate {p:?}"
                )));
            }
        }
        Ok(Self {
            points,
            intensity: None,
        })
    }

    pub fn with_intensity(points: Vec<[f32; 3]>, intensity: Vec<f32>) -> Result<Self, GridError> {
        if intensity.len() != points.len() {
            return Err(GridError::InvalidCloud(format!(
                "intensity length {} does not match point count {}",
                intensity.len(),
                points.len()
            )));
        }
        if let Some(v) = intensity.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(GridError::InvalidCloud(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.intensity = Some(intensity);
        Ok(cloud)
    }

    pub fn points(&self) -> &[[f32; 3]] {
        &self.points
    }

    pub fn intensity(&self) -> Option<&[f32]> {
        self.intensity.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Geometry of a uniform voxel grid: minimum corner, cell size, and cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Minimum corner of the grid, meters.
    pub origin: [f32; 3],
    /// Cell edge lengths, meters.
    pub voxel_size: [f32; 3],
    /// Number of cells per axis.
    pub dims: [u32; 3],
}

impl GridConfig {
    pub fn new(origin: [f32; 3], voxel_size: [f32; 3], dims: [u32; 3]) -> Result<Self, GridError> {
        let config = Self {
            origin,
            voxel_size,
            dims,
        };
        config.validate()?;
        Ok(config)
    }

    /// Derives dims from a declared extent, requiring the extent to be a whole
    /// number of voxels per axis (within one voxel of rounding slack).
    pub fn from_extent(
        origin: [f32; 3],
        extent: [f32; 3],
        voxel_size: [f32; 3],
    ) -> Result<Self, GridError> {
        let dims = dims_for_extent(extent, voxel_size)?;
        Self::new(origin, voxel_size, dims)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !self.origin.iter().all(|c| c.is_finite()) {
            return Err(GridError::InvalidConfig(format!(
                "origin {:?} must be finite",
                self.origin
            )));
        }
        if !self.voxel_size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(GridError::InvalidConfig(format!(
                "voxel size {:?} must be positive and finite",
                self.voxel_size
            )));
        }
        for (axis, &n) in self.dims.iter().enumerate() {
            if n == 0 {
                return Err(GridError::InvalidConfig(format!(
                    "dims {:?} must be at least 1 per axis",
                    self.dims
                )));
            }
            if n > MAX_DIM {
                return Err(GridError::InvalidConfig(format!(
                    "dim {} on axis {} exceeds the coordinate width limit {}",
                    n, axis, MAX_DIM
                )));
            }
        }
        Ok(())
    }

    /// Total grid extent per axis, `dims * voxel_size`, meters.
    pub fn extent(&self) -> [f32; 3] {
        std::array::from_fn(|a| (self.dims[a] as f64 * self.voxel_size[a] as f64) as f32)
    }

    /// Returns dims after asserting that `dims * voxel_size` matches the
    /// declared extent within one voxel per axis.
    pub fn check_extent(&self, declared: [f32; 3]) -> Result<[u32; 3], GridError> {
        self.validate()?;
        for a in 0..3 {
            let actual = self.dims[a] as f64 * self.voxel_size[a] as f64;
            if (actual - declared[a] as f64).abs() > self.voxel_size[a] as f64 {
                return Err(GridError::ExtentMismatch {
                    extent: declared,
                    dims: self.dims,
                    voxel_size: self.voxel_size,
                });
            }
        }
        Ok(self.dims)
    }

    /// Quantizes a point to its voxel coordinate, or `None` if it falls
    /// outside the grid. Cells are half-open: a point exactly on the upper
    /// grid boundary is outside.
    pub fn quantize(&self, p: [f32; 3]) -> Option<[u16; 3]> {
        let mut coord = [0u16; 3];
        for a in 0..3 {
            let rel = (p[a] as f64 - self.origin[a] as f64) / self.voxel_size[a] as f64;
            let idx = rel.floor();
            if idx < 0.0 || idx >= self.dims[a] as f64 {
                return None;
            }
            coord[a] = idx as u16;
        }
        Some(coord)
    }

    /// Center point of a voxel, `origin + (coord + 0.5) * voxel_size`.
    pub fn voxel_center(&self, coord: [u16; 3]) -> Result<[f32; 3], GridError> {
        if !self.coord_in_bounds(coord) {
            return Err(GridError::OutOfBounds {
                coord,
                dims: self.dims,
            });
        }
        Ok(self.center_unchecked(coord))
    }

    pub(crate) fn center_unchecked(&self, coord: [u16; 3]) -> [f32; 3] {
        let mut c = [0.0f32; 3];
        for a in 0..3 {
            c[a] = (self.origin[a] as f64 + (coord[a] as f64 + 0.5) * self.voxel_size[a] as f64)
                as f32;
        }
        c
    }

    pub fn coord_in_bounds(&self, coord: [u16; 3]) -> bool {
        (0..3).all(|a| (coord[a] as u32) < self.dims[a])
    }
}

/// Computes voxel counts for a declared extent, requiring the extent to be a
/// whole number of voxels per axis.
pub fn dims_for_extent(extent: [f32; 3], voxel_size: [f32; 3]) -> Result<[u32; 3], GridError> {
    let mut dims = [0u32; 3];
    for a in 0..3 {
        if !(voxel_size[a].is_finite() && voxel_size[a] > 0.0) {
            return Err(GridError::InvalidConfig(format!(
                "voxel size {:?} must be positive and finite",
                voxel_size
            )));
        }
        let n = (extent[a] as f64 / voxel_size[a] as f64).round();
        if !(1.0..=MAX_DIM as f64).contains(&n) {
            return Err(GridError::InvalidConfig(format!(
                "extent {} / voxel size {} gives {} cells on axis {}, outside [1, {}]",
                extent[a], voxel_size[a], n, a, MAX_DIM
            )));
        }
        let actual = n * voxel_size[a] as f64;
        if (actual - extent[a] as f64).abs() > voxel_size[a] as f64 {
            return Err(GridError::ExtentMismatch {
                extent,
                dims: [n as u32; 3],
                voxel_size,
            });
        }
        dims[a] = n as u32;
    }
    Ok(dims)
}

/// Occupied cells of a uniform grid, stored as sorted integer coordinates.
///
/// The coordinate list is always lexicographically sorted and duplicate-free,
/// which makes equality, union, and the wire encoding canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVoxelGrid {
    config: GridConfig,
    coords: Vec<[u16; 3]>,
}

impl SparseVoxelGrid {
    /// Builds a grid from arbitrary coordinates; they are sorted and
    /// de-duplicated, and must lie within `config.dims`.
    pub fn new(config: GridConfig, mut coords: Vec<[u16; 3]>) -> Result<Self, GridError> {
        config.validate()?;
        for &coord in &coords {
            if !config.coord_in_bounds(coord) {
                return Err(GridError::OutOfBounds {
                    coord,
                    dims: config.dims,
                });
            }
        }
        coords.sort_unstable();
        coords.dedup();
        Ok(Self { config, coords })
    }

    pub fn empty(config: GridConfig) -> Result<Self, GridError> {
        Self::new(config, Vec::new())
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    /// Occupied coordinates in lexicographic order.
    pub fn coords(&self) -> &[[u16; 3]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, coord: [u16; 3]) -> bool {
        self.coords.binary_search(&coord).is_ok()
    }

    /// Skips config validation; for exercising downstream guards in tests.
    #[cfg(test)]
    pub(crate) fn with_unvalidated_config(config: GridConfig, coords: Vec<[u16; 3]>) -> Self {
        Self { config, coords }
    }
}

/// Quantizes a cloud onto a grid. A cell is occupied iff at least one point
/// falls inside it; points outside the grid extent are dropped.
pub fn voxelize(cloud: &PointCloud, config: &GridConfig) -> Result<SparseVoxelGrid, GridError> {
    voxelize_counted(cloud, config).map(|(grid, _)| grid)
}

/// Like [`voxelize`], also reporting how many points fell outside the grid.
pub fn voxelize_counted(
    cloud: &PointCloud,
    config: &GridConfig,
) -> Result<(SparseVoxelGrid, usize), GridError> {
    config.validate()?;
    let mut coords = Vec::with_capacity(cloud.len());
    let mut dropped = 0usize;
    for &p in cloud.points() {
        match config.quantize(p) {
            Some(c) => coords.push(c),
            None => dropped += 1,
        }
    }
    coords.sort_unstable();
    coords.dedup();
    Ok((
        SparseVoxelGrid {
            config: *config,
            coords,
        },
        dropped,
    ))
}

/// Set union of grids sharing one config.
pub fn merge_grids(grids: &[SparseVoxelGrid]) -> Result<SparseVoxelGrid, GridError> {
    let first = grids.first().ok_or(GridError::EmptyMerge)?;
    let mut coords = Vec::with_capacity(grids.iter().map(|g| g.len()).sum());
    for g in grids {
        if g.config != first.config {
            return Err(GridError::IncompatibleConfigs(format!(
                "{:?} vs {:?}",
                g.config, first.config
            )));
        }
        coords.extend_from_slice(&g.coords);
    }
    coords.sort_unstable();
    coords.dedup();
    Ok(SparseVoxelGrid {
        config: first.config,
        coords,
    })
}

/// Lifts a coordinate-only grid to a sparse tensor whose per-site feature is
/// the 3-component voxel center point.
pub fn center_features(grid: &SparseVoxelGrid) -> SparseTensor {
    let mut features = Vec::with_capacity(grid.len() * 3);
    for &coord in grid.coords() {
        features.extend_from_slice(&grid.config.center_unchecked(coord));
    }
    SparseTensor::from_sorted_parts(grid.config.dims, grid.coords().to_vec(), features, 3)
        .expect("grid coordinates are sorted, unique and in bounds")
}

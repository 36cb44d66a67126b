//! Collective perception on sparse voxel grids.
//!
//! Vehicles sense their surroundings with heterogeneous LiDAR sensors,
//! quantize each point cloud to a coordinate-only sparse voxel grid, and
//! exchange those grids over a compact binary codec. A dual-backbone sparse
//! convolution network fuses the ego stream with the collective stream via a
//! scatter (element-wise max union) operation at matched resolutions and
//! projects the result to a bird's eye view feature map. A 3D detection
//! evaluation toolkit (rotated-box IoU, average precision, range and
//! visibility filters) closes the loop.
//!
//! The crate is organized along the pipeline:
//!
//! - [`grid`]: point clouds, grid geometry, voxelization, grid merging
//! - [`wire`]: the exchange codec and bandwidth accounting
//! - [`sparse`]: sparse tensors, rulebooks, submanifold/strided convolution
//! - [`net`]: fusion network, scatter operation, BEV projection, weights
//! - [`sim`]: synthetic LiDAR sensors and box-and-ground scenes
//! - [`harness`]: scenario orchestration, sensor assignment, reports
//! - [`eval`]: rotated 3D IoU, matching, average precision, filters

pub mod eval;
pub mod grid;
pub mod harness;
pub mod net;
pub mod sim;
pub mod sparse;
pub mod wire;

#[cfg(test)]
pub(crate) mod test_util;

pub use grid::{
    center_features, dims_for_extent, merge_grids, voxelize, voxelize_counted, GridConfig,
    GridError, PointCloud, SparseVoxelGrid,
};
pub use net::{
    conv_block, forward, forward_local, scatter, to_bev, BevFeatureMap, BlockWeights, ChannelPlan,
    ModelWeights, NetError, WeightsError,
};
pub use sparse::{
    batchnorm_relu, build_rulebook, sparse_conv, strided_out_dims, submanifold_conv, ConvMode,
    ConvParams, NormParams, Rulebook, ShapeError, SparseTensor,
};
pub use wire::{bandwidth_report, decode, encode, BandwidthReport, WireError};

// The guide's code blocks run as doc-tests so the book cannot drift from
// the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(VoxelGrids, "../../../book/src/voxel-grids.md");
    chapter!(WireFormat, "../../../book/src/wire-format.md");
    chapter!(SparseConvolution, "../../../book/src/sparse-convolution.md");
    chapter!(FusionNetwork, "../../../book/src/fusion-network.md");
    chapter!(LidarSimulation, "../../../book/src/lidar-simulation.md");
    chapter!(Scenarios, "../../../book/src/scenarios.md");
    chapter!(Evaluation, "../../../book/src/evaluation.md");
    chapter!(Cli, "../../../book/src/cli.md");
}

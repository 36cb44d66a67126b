//! The dual-backbone fusion network.
//!
//! Two structurally identical streams of four convolution blocks process the
//! ego voxel grid (local backbone) and the merged collective voxel grid
//! (collective backbone). After every block the streams share the same
//! spatial resolution and the collective output is scattered into the local
//! stream, which feeds the next local block; the collective backbone always
//! consumes its own un-fused stream. After the fourth fusion point a final
//! resolution-preserving convolution runs and the result is projected to a
//! bird's eye view map.

use thiserror::Error;

mod bev;
mod scatter;
mod weights;

pub use bev::{to_bev, BevFeatureMap, BEV_MAGIC, BEV_VERSION};
pub use scatter::scatter;
pub use weights::{
    BlockWeights, ChannelPlan, ModelWeights, WeightsError, BLOCK_STRIDES, DEFAULT_CHANNELS,
    INPUT_WIDTH, WEIGHTS_MAGIC, WEIGHTS_VERSION,
};

use crate::grid::{center_features, GridError, SparseVoxelGrid};
use crate::sparse::{batchnorm_relu, sparse_conv, submanifold_conv, ConvMode, ShapeError, SparseTensor};

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One convolution block: strided-or-unit conv, then two submanifold convs,
/// each followed by batchnorm and ReLU.
pub fn conv_block(input: &SparseTensor, w: &BlockWeights) -> Result<SparseTensor, ShapeError> {
    let x = match w.conv0.mode() {
        ConvMode::Submanifold => submanifold_conv(input, &w.conv0)?,
        ConvMode::Strided => sparse_conv(input, &w.conv0)?,
    };
    let x = batchnorm_relu(&x, &w.norm0)?;
    let x = batchnorm_relu(&submanifold_conv(&x, &w.conv1)?, &w.norm1)?;
    batchnorm_relu(&submanifold_conv(&x, &w.conv2)?, &w.norm2)
}

/// Full forward pass: fuse the collective stream into the local stream at
/// every block boundary, apply the final convolution, and project to BEV.
///
/// Both grids must share one `GridConfig`; the scatter points require equal
/// resolutions throughout, which the fixed [1, 2, 2, 2] stride schedule
/// guarantees.
pub fn forward(
    ego: &SparseVoxelGrid,
    collective: &SparseVoxelGrid,
    w: &ModelWeights,
) -> Result<BevFeatureMap, NetError> {
    if ego.config() != collective.config() {
        return Err(NetError::Grid(GridError::IncompatibleConfigs(format!(
            "ego {:?} vs collective {:?}",
            ego.config(),
            collective.config()
        ))));
    }
    let mut local = center_features(ego);
    let mut coll = center_features(collective);
    for i in 0..4 {
        let coll_next = conv_block(&coll, &w.collective_blocks[i])?;
        let local_input = if i == 0 {
            local
        } else {
            scatter(&local, &coll)?
        };
        local = conv_block(&local_input, &w.local_blocks[i])?;
        coll = coll_next;
    }
    let fused = scatter(&local, &coll)?;
    finish(&fused, w).map_err(NetError::from)
}

/// Local-only forward pass: the same local backbone with no collective
/// stream and no scatter calls anywhere.
pub fn forward_local(ego: &SparseVoxelGrid, w: &ModelWeights) -> Result<BevFeatureMap, NetError> {
    let mut local = center_features(ego);
    for i in 0..4 {
        local = conv_block(&local, &w.local_blocks[i])?;
    }
    finish(&local, w).map_err(NetError::from)
}

fn finish(fused: &SparseTensor, w: &ModelWeights) -> Result<BevFeatureMap, ShapeError> {
    let out = batchnorm_relu(&submanifold_conv(fused, &w.final_conv)?, &w.final_norm)?;
    Ok(to_bev(&out))
}

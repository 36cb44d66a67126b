//! A small sparse convolution engine for 3D voxel features.
//!
//! [`SparseTensor`] carries the active voxel coordinates of a grid together
//! with a fixed-width `f32` feature vector per site. Convolutions come in two
//! flavors: submanifold (active set preserved, no dilation) and strided
//! (downsampling, output wherever the receptive field touches an active
//! input). Both are driven by a precomputed [`Rulebook`] of
//! (input site, output site) pairs per kernel offset.
//!
//! Sites are kept in lexicographic coordinate order and accumulation follows
//! a fixed offset-major schedule, so identical inputs and weights produce
//! bit-identical outputs regardless of how the inputs were assembled.

use thiserror::Error;

mod conv;
pub mod dense;
mod rulebook;

pub use conv::{batchnorm_relu, sparse_conv, submanifold_conv};
pub use rulebook::{build_rulebook, strided_out_dims, Rulebook};

/// Kernel edge length; every convolution in the network is 3x3x3.
pub const KERNEL_SIZE: usize = 3;
/// Number of kernel offsets, `3^3`.
pub const KERNEL_VOLUME: usize = 27;
/// Zero padding applied on every axis of every convolution.
pub const PADDING: u32 = 1;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("feature width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("tensor dims mismatch: {a:?} vs {b:?}")]
    DimsMismatch { a: [u32; 3], b: [u32; 3] },
    #[error("invalid sparse tensor: {0}")]
    InvalidTensor(String),
    #[error("invalid conv params: {0}")]
    InvalidParams(String),
    #[error("invalid norm params: {0}")]
    InvalidNorm(String),
}

/// Active voxel coordinates paired with fixed-width `f32` feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    dims: [u32; 3],
    coords: Vec<[u16; 3]>,
    features: Vec<f32>,
    width: usize,
}

impl SparseTensor {
    pub fn empty(dims: [u32; 3], width: usize) -> Self {
        Self {
            dims,
            coords: Vec::new(),
            features: Vec::new(),
            width,
        }
    }

    /// Builds a tensor from parallel coordinate/feature arrays. Coordinates
    /// may arrive in any order; sites are sorted into canonical order with
    /// their features. Duplicate or out-of-bounds coordinates and non-finite
    /// features are rejected.
    pub fn from_parts(
        dims: [u32; 3],
        coords: Vec<[u16; 3]>,
        features: Vec<f32>,
        width: usize,
    ) -> Result<Self, ShapeError> {
        if features.len() != coords.len() * width {
            return Err(ShapeError::InvalidTensor(format!(
                "{} feature values for {} sites of width {}",
                features.len(),
                coords.len(),
                width
            )));
        }
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_unstable_by_key(|&i| coords[i]);
        let mut sorted_coords = Vec::with_capacity(coords.len());
        let mut sorted_features = Vec::with_capacity(features.len());
        for &i in &order {
            sorted_coords.push(coords[i]);
            sorted_features.extend_from_slice(&features[i * width..(i + 1) * width]);
        }
        Self::from_sorted_parts(dims, sorted_coords, sorted_features, width)
    }

    /// Like [`SparseTensor::from_parts`] but requires coordinates already in
    /// lexicographic order.
    pub fn from_sorted_parts(
        dims: [u32; 3],
        coords: Vec<[u16; 3]>,
        features: Vec<f32>,
        width: usize,
    ) -> Result<Self, ShapeError> {
        if features.len() != coords.len() * width {
            return Err(ShapeError::InvalidTensor(format!(
                "{} feature values for {} sites of width {}",
                features.len(),
                coords.len(),
                width
            )));
        }
        for pair in coords.windows(2) {
            if pair[0] >= pair[1] {
                return Err(ShapeError::InvalidTensor(format!(
                    "coordinates not sorted/unique at {:?}, {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        for &c in &coords {
            if (0..3).any(|a| c[a] as u32 >= dims[a]) {
                return Err(ShapeError::InvalidTensor(format!(
                    "coordinate {c:?} out of bounds for dims {dims:?}"
                )));
            }
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(ShapeError::InvalidTensor(format!(
                "non-finite feature value {v}"
            )));
        }
        Ok(Self {
            dims,
            coords,
            features,
            width,
        })
    }

    pub fn dims(&self) -> [u32; 3] {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Active coordinates in lexicographic order.
    pub fn coords(&self) -> &[[u16; 3]] {
        &self.coords
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn feature(&self, site: usize) -> &[f32] {
        &self.features[site * self.width..(site + 1) * self.width]
    }

    pub fn index_of(&self, coord: [u16; 3]) -> Option<usize> {
        self.coords.binary_search(&coord).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    /// Output active set equals the input active set.
    Submanifold,
    /// Generative convolution; output wherever the receptive field touches an
    /// active input, usually with stride 2 to downsample.
    Strided,
}

/// Weights and geometry of one 3x3x3 convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    mode: ConvMode,
    stride: [u32; 3],
    c_in: usize,
    c_out: usize,
    /// Kernel tensor of shape (3, 3, 3, c_in, c_out), offset-major.
    weights: Vec<f32>,
}

impl ConvParams {
    pub fn submanifold(c_in: usize, c_out: usize, weights: Vec<f32>) -> Result<Self, ShapeError> {
        Self::new(ConvMode::Submanifold, [1, 1, 1], c_in, c_out, weights)
    }

    pub fn strided(
        c_in: usize,
        c_out: usize,
        stride: [u32; 3],
        weights: Vec<f32>,
    ) -> Result<Self, ShapeError> {
        Self::new(ConvMode::Strided, stride, c_in, c_out, weights)
    }

    fn new(
        mode: ConvMode,
        stride: [u32; 3],
        c_in: usize,
        c_out: usize,
        weights: Vec<f32>,
    ) -> Result<Self, ShapeError> {
        if c_in == 0 || c_out == 0 {
            return Err(ShapeError::InvalidParams(
                "channel counts must be positive".into(),
            ));
        }
        if stride != [1, 1, 1] && stride != [2, 2, 2] {
            return Err(ShapeError::InvalidParams(format!(
                "stride must be (1,1,1) or (2,2,2), got {stride:?}"
            )));
        }
        if mode == ConvMode::Submanifold && stride != [1, 1, 1] {
            return Err(ShapeError::InvalidParams(
                "submanifold mode requires stride (1,1,1)".into(),
            ));
        }
        let expected = KERNEL_VOLUME * c_in * c_out;
        if weights.len() != expected {
            return Err(ShapeError::InvalidParams(format!(
                "kernel has {} values, expected 27*{c_in}*{c_out} = {expected}",
                weights.len()
            )));
        }
        if let Some(v) = weights.iter().find(|v| !v.is_finite()) {
            return Err(ShapeError::InvalidParams(format!(
                "non-finite kernel value {v}"
            )));
        }
        Ok(Self {
            mode,
            stride,
            c_in,
            c_out,
            weights,
        })
    }

    /// Submanifold kernel that copies features through the center offset.
    pub fn identity(channels: usize) -> Self {
        let mut weights = vec![0.0f32; KERNEL_VOLUME * channels * channels];
        let center = 13; // offset (1,1,1)
        for c in 0..channels {
            weights[(center * channels + c) * channels + c] = 1.0;
        }
        Self::submanifold(channels, channels, weights).expect("identity kernel is well-formed")
    }

    pub fn mode(&self) -> ConvMode {
        self.mode
    }

    pub fn stride(&self) -> [u32; 3] {
        self.stride
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    /// Kernel slice for one offset index in `0..27`, laid out `[c_in][c_out]`.
    pub fn offset_weights(&self, offset: usize) -> &[f32] {
        let len = self.c_in * self.c_out;
        &self.weights[offset * len..(offset + 1) * len]
    }
}

/// Inference-time batch normalization parameters for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub epsilon: f32,
}

impl NormParams {
    pub const DEFAULT_EPSILON: f32 = 1e-5;

    pub fn new(
        gamma: Vec<f32>,
        beta: Vec<f32>,
        running_mean: Vec<f32>,
        running_var: Vec<f32>,
    ) -> Result<Self, ShapeError> {
        let c = gamma.len();
        if beta.len() != c || running_mean.len() != c || running_var.len() != c {
            return Err(ShapeError::InvalidNorm(format!(
                "parameter widths differ: gamma {}, beta {}, mean {}, var {}",
                gamma.len(),
                beta.len(),
                running_mean.len(),
                running_var.len()
            )));
        }
        if let Some(v) = running_var.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Err(ShapeError::InvalidNorm(format!(
                "running variance {v} must be non-negative"
            )));
        }
        Ok(Self {
            gamma,
            beta,
            running_mean,
            running_var,
            epsilon: Self::DEFAULT_EPSILON,
        })
    }

    /// gamma = 1, beta = 0, mean = 0, var = 1: normalization is a no-op up to
    /// the epsilon term.
    pub fn identity(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }
}

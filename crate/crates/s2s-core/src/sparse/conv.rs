//! Forward passes: submanifold convolution, strided convolution, and fused
//! batchnorm + ReLU.

use super::{build_rulebook, ConvMode, ConvParams, NormParams, Rulebook, SparseTensor, ShapeError};

/// Submanifold convolution: the output active set is exactly the input
/// active set; each site accumulates over its existing neighbors only.
pub fn submanifold_conv(
    input: &SparseTensor,
    params: &ConvParams,
) -> Result<SparseTensor, ShapeError> {
    if params.mode() != ConvMode::Submanifold {
        return Err(ShapeError::InvalidParams(
            "submanifold_conv requires submanifold mode".into(),
        ));
    }
    apply(input, params)
}

/// Strided (generative) convolution: the output lives on the downsampled
/// grid, active wherever the receptive field covers at least one input site.
pub fn sparse_conv(input: &SparseTensor, params: &ConvParams) -> Result<SparseTensor, ShapeError> {
    if params.mode() != ConvMode::Strided {
        return Err(ShapeError::InvalidParams(
            "sparse_conv requires strided mode".into(),
        ));
    }
    apply(input, params)
}

fn apply(input: &SparseTensor, params: &ConvParams) -> Result<SparseTensor, ShapeError> {
    if input.width() != params.c_in() {
        return Err(ShapeError::WidthMismatch {
            expected: params.c_in(),
            got: input.width(),
        });
    }
    let rulebook = build_rulebook(input, params);
    Ok(apply_rulebook(input, params, &rulebook))
}

/// Accumulates features along the rulebook in a fixed offset-major order, so
/// the result is bit-reproducible for a given input/weight pair.
fn apply_rulebook(input: &SparseTensor, params: &ConvParams, rb: &Rulebook) -> SparseTensor {
    let c_out = params.c_out();
    let mut out = vec![0.0f32; rb.out_coords.len() * c_out];
    for (offset, pairs) in rb.pairs.iter().enumerate() {
        let w = params.offset_weights(offset);
        for &(in_idx, out_idx) in pairs {
            let f = input.feature(in_idx as usize);
            let acc = &mut out[out_idx as usize * c_out..(out_idx as usize + 1) * c_out];
            for (ci, &x) in f.iter().enumerate() {
                let row = &w[ci * c_out..(ci + 1) * c_out];
                for (co, &wv) in row.iter().enumerate() {
                    acc[co] += wv * x;
                }
            }
        }
    }
    SparseTensor::from_sorted_parts(rb.out_dims, rb.out_coords.clone(), out, c_out)
        .expect("rulebook output is sorted, unique and in bounds")
}

/// Per-channel `max(0, gamma * (x - mean) / sqrt(var + eps) + beta)`; the
/// active set is unchanged.
pub fn batchnorm_relu(input: &SparseTensor, params: &NormParams) -> Result<SparseTensor, ShapeError> {
    if input.width() != params.width() {
        return Err(ShapeError::WidthMismatch {
            expected: params.width(),
            got: input.width(),
        });
    }
    let width = input.width();
    let mut features = Vec::with_capacity(input.features().len());
    for site in 0..input.len() {
        for (c, &x) in input.feature(site).iter().enumerate() {
            let normed = params.gamma[c] * (x - params.running_mean[c])
                / (params.running_var[c] + params.epsilon).sqrt()
                + params.beta[c];
            features.push(normed.max(0.0));
        }
    }
    SparseTensor::from_sorted_parts(input.dims(), input.coords().to_vec(), features, width)
}

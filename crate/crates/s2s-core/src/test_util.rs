//! Shared helpers for unit tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::sparse::SparseTensor;

/// Random sparse tensor with ~30% occupancy and features in [-2, 2).
pub(crate) fn random_tensor(rng: &mut ChaCha8Rng, dims: [u32; 3], width: usize) -> SparseTensor {
    random_tensor_filled(rng, dims, width, 0.3)
}

pub(crate) fn random_tensor_filled(
    rng: &mut ChaCha8Rng,
    dims: [u32; 3],
    width: usize,
    fill: f64,
) -> SparseTensor {
    let mut coords = Vec::new();
    for x in 0..dims[0] as u16 {
        for y in 0..dims[1] as u16 {
            for z in 0..dims[2] as u16 {
                if rng.random_bool(fill) {
                    coords.push([x, y, z]);
                }
            }
        }
    }
    let features: Vec<f32> = (0..coords.len() * width)
        .map(|_| rng.random_range(-2.0f32..2.0))
        .collect();
    SparseTensor::from_parts(dims, coords, features, width).unwrap()
}

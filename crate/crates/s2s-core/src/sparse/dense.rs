//! Dense reference convolution.
//!
//! A textbook zero-padded 3D convolution over a dense array, used as the
//! independent oracle for the sparse engine. It shares nothing with the
//! rulebook path beyond the kernel layout convention. Intended for small
//! grids (<= 16 cells per axis) in tests; memory is O(nx*ny*nz*width).

use super::{ConvParams, SparseTensor, PADDING};

/// Dense 4D array over a full grid, laid out `((x * ny + y) * nz + z) * width + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    pub dims: [usize; 3],
    pub width: usize,
    pub data: Vec<f32>,
}

impl DenseTensor {
    pub fn zeros(dims: [usize; 3], width: usize) -> Self {
        Self {
            dims,
            width,
            data: vec![0.0; dims[0] * dims[1] * dims[2] * width],
        }
    }

    pub fn from_sparse(t: &SparseTensor) -> Self {
        let dims = [t.dims()[0] as usize, t.dims()[1] as usize, t.dims()[2] as usize];
        let mut dense = Self::zeros(dims, t.width());
        for (i, &c) in t.coords().iter().enumerate() {
            let idx = dense.flat_index([c[0] as usize, c[1] as usize, c[2] as usize]);
            dense.data[idx..idx + t.width()].copy_from_slice(t.feature(i));
        }
        dense
    }

    fn flat_index(&self, p: [usize; 3]) -> usize {
        ((p[0] * self.dims[1] + p[1]) * self.dims[2] + p[2]) * self.width
    }

    pub fn get(&self, p: [usize; 3]) -> &[f32] {
        let idx = self.flat_index(p);
        &self.data[idx..idx + self.width]
    }

    pub fn get_mut(&mut self, p: [usize; 3]) -> &mut [f32] {
        let idx = self.flat_index(p);
        &mut self.data[idx..idx + self.width]
    }
}

/// Textbook 3D convolution with zero padding 1 and the stride taken from
/// `params`: `out[o] = sum_k W[k] * in[o * stride + k - 1]`.
pub fn dense_conv3d(input: &DenseTensor, params: &ConvParams) -> DenseTensor {
    assert_eq!(input.width, params.c_in(), "channel mismatch");
    let stride = params.stride();
    let mut out_dims = [0usize; 3];
    for a in 0..3 {
        out_dims[a] = (input.dims[a] + 2 * PADDING as usize - 3) / stride[a] as usize + 1;
    }
    let c_out = params.c_out();
    let mut out = DenseTensor::zeros(out_dims, c_out);
    for ox in 0..out_dims[0] {
        for oy in 0..out_dims[1] {
            for oz in 0..out_dims[2] {
                let mut acc = vec![0.0f32; c_out];
                for kx in 0..3usize {
                    for ky in 0..3usize {
                        for kz in 0..3usize {
                            let ix = (ox * stride[0] as usize + kx) as isize - 1;
                            let iy = (oy * stride[1] as usize + ky) as isize - 1;
                            let iz = (oz * stride[2] as usize + kz) as isize - 1;
                            if ix < 0
                                || iy < 0
                                || iz < 0
                                || ix >= input.dims[0] as isize
                                || iy >= input.dims[1] as isize
                                || iz >= input.dims[2] as isize
                            {
                                continue;
                            }
                            let f = input.get([ix as usize, iy as usize, iz as usize]);
                            let w = params.offset_weights((kx * 3 + ky) * 3 + kz);
                            for (ci, &x) in f.iter().enumerate() {
                                for co in 0..c_out {
                                    acc[co] += w[ci * c_out + co] * x;
                                }
                            }
                        }
                    }
                }
                out.get_mut([ox, oy, oz]).copy_from_slice(&acc);
            }
        }
    }
    out
}

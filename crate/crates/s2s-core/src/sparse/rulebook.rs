//! Rulebook construction: which input sites feed which output sites through
//! which kernel offset.
//!
//! The convention throughout is
//! `out[o] = sum_k W[k] * in[o * stride + k - 1]` per axis, i.e. zero padding
//! of one voxel and kernel offsets indexed `0..3` with `1` the center.

use super::{ConvMode, ConvParams, SparseTensor, KERNEL_VOLUME, PADDING};

/// Per-offset (input site index, output site index) pairs plus the output
/// active set, all in canonical order.
#[derive(Debug, Clone)]
pub struct Rulebook {
    pub in_dims: [u32; 3],
    pub out_dims: [u32; 3],
    /// Output active set, lexicographically sorted. For submanifold rulebooks
    /// this is identical to the input active set.
    pub out_coords: Vec<[u16; 3]>,
    /// For each of the 27 kernel offsets, the (input, output) index pairs.
    pub pairs: Vec<Vec<(u32, u32)>>,
}

impl Rulebook {
    pub fn pair_count(&self) -> usize {
        self.pairs.iter().map(|p| p.len()).sum()
    }
}

/// Output resolution of a strided 3x3x3 convolution with padding 1:
/// `floor((n + 2*1 - 3) / stride) + 1` per axis.
pub fn strided_out_dims(dims: [u32; 3], stride: [u32; 3]) -> [u32; 3] {
    let mut out = [0u32; 3];
    for a in 0..3 {
        out[a] = (dims[a] + 2 * PADDING - 3) / stride[a] + 1;
    }
    out
}

pub fn build_rulebook(input: &SparseTensor, params: &ConvParams) -> Rulebook {
    match params.mode() {
        ConvMode::Submanifold => build_submanifold(input),
        ConvMode::Strided => build_strided(input, params.stride()),
    }
}

fn offset_index(kx: i32, ky: i32, kz: i32) -> usize {
    ((kx * 3 + ky) * 3 + kz) as usize
}

fn build_submanifold(input: &SparseTensor) -> Rulebook {
    let dims = input.dims();
    let mut pairs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); KERNEL_VOLUME];
    for (out_idx, &c) in input.coords().iter().enumerate() {
        for kx in 0..3i32 {
            for ky in 0..3i32 {
                for kz in 0..3i32 {
                    let n = [
                        c[0] as i32 + kx - 1,
                        c[1] as i32 + ky - 1,
                        c[2] as i32 + kz - 1,
                    ];
                    if n.iter()
                        .zip(dims.iter())
                        .any(|(&v, &d)| v < 0 || v >= d as i32)
                    {
                        continue;
                    }
                    let neighbor = [n[0] as u16, n[1] as u16, n[2] as u16];
                    if let Some(in_idx) = input.index_of(neighbor) {
                        pairs[offset_index(kx, ky, kz)].push((in_idx as u32, out_idx as u32));
                    }
                }
            }
        }
    }
    Rulebook {
        in_dims: dims,
        out_dims: dims,
        out_coords: input.coords().to_vec(),
        pairs,
    }
}

fn build_strided(input: &SparseTensor, stride: [u32; 3]) -> Rulebook {
    let in_dims = input.dims();
    let out_dims = strided_out_dims(in_dims, stride);

    // candidate contributions (output coord, offset, input index)
    let mut triples: Vec<([u16; 3], usize, u32)> = Vec::new();
    for (in_idx, &c) in input.coords().iter().enumerate() {
        for kx in 0..3i32 {
            for ky in 0..3i32 {
                for kz in 0..3i32 {
                    let offsets = [kx, ky, kz];
                    let mut out = [0u16; 3];
                    let mut valid = true;
                    for a in 0..3 {
                        // out * stride + k - 1 = c  =>  out = (c + 1 - k) / stride
                        let numer = c[a] as i32 + 1 - offsets[a];
                        let s = stride[a] as i32;
                        if numer < 0 || numer % s != 0 {
                            valid = false;
                            break;
                        }
                        let o = numer / s;
                        if o >= out_dims[a] as i32 {
                            valid = false;
                            break;
                        }
                        out[a] = o as u16;
                    }
                    if valid {
                        triples.push((out, offset_index(kx, ky, kz), in_idx as u32));
                    }
                }
            }
        }
    }

    let mut out_coords: Vec<[u16; 3]> = triples.iter().map(|t| t.0).collect();
    out_coords.sort_unstable();
    out_coords.dedup();

    let mut pairs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); KERNEL_VOLUME];
    for (out, offset, in_idx) in triples {
        let out_idx = out_coords.binary_search(&out).expect("collected above") as u32;
        pairs[offset].push((in_idx, out_idx));
    }
    // canonical accumulation order within each offset
    for list in &mut pairs {
        list.sort_unstable_by_key(|&(i, o)| (o, i));
    }
    Rulebook {
        in_dims,
        out_dims,
        out_coords,
        pairs,
    }
}

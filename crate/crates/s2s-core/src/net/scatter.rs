//! The scatter operation: fusing two sparse tensors over the same grid.
//!
//! Voxels present in both tensors ("duplicate voxels") take the element-wise
//! maximum of the two feature vectors; voxels present in only one ("single
//! voxels") are copied unchanged; the active set is the union. Because max is
//! exact in floating point, scatter is commutative, associative, and
//! idempotent bit-for-bit, with the empty tensor as identity — the fused
//! result does not depend on the order contributions arrive in.

use crate::sparse::{ShapeError, SparseTensor};

pub fn scatter(a: &SparseTensor, b: &SparseTensor) -> Result<SparseTensor, ShapeError> {
    if a.dims() != b.dims() {
        return Err(ShapeError::DimsMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    if a.width() != b.width() {
        return Err(ShapeError::WidthMismatch {
            expected: a.width(),
            got: b.width(),
        });
    }
    let width = a.width();
    let mut coords = Vec::with_capacity(a.len() + b.len());
    let mut features = Vec::with_capacity((a.len() + b.len()) * width);

    // merge two sorted coordinate lists
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() || j < b.len() {
        let take_a = match (a.coords().get(i), b.coords().get(j)) {
            (Some(ca), Some(cb)) => {
                if ca == cb {
                    coords.push(*ca);
                    features.extend(
                        a.feature(i)
                            .iter()
                            .zip(b.feature(j))
                            .map(|(x, y)| x.max(*y)),
                    );
                    i += 1;
                    j += 1;
                    continue;
                }
                ca < cb
            }
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if take_a {
            coords.push(a.coords()[i]);
            features.extend_from_slice(a.feature(i));
            i += 1;
        } else {
            coords.push(b.coords()[j]);
            features.extend_from_slice(b.feature(j));
            j += 1;
        }
    }
    SparseTensor::from_sorted_parts(a.dims(), coords, features, width)
}

//! Bit-exact exchange format for coordinate-only sparse voxel grids.
//!
//! Message layout, little-endian throughout:
//!
//! | offset | size | field                        |
//! |--------|------|------------------------------|
//! | 0      | 12   | origin, 3 x f32 meters       |
//! | 12     | 12   | voxel_size, 3 x f32 meters   |
//! | 24     | 12   | dims, 3 x u32                |
//! | 36     | 4    | count, u32                   |
//! | 40     | 6*N  | count x (3 x u16) coordinates|
//!
//! Coordinates are written in lexicographic (x, y, z) order, so the encoding
//! is a pure function of the grid: equal grids produce identical bytes.

use thiserror::Error;

use crate::grid::{GridConfig, GridError, PointCloud, SparseVoxelGrid};

/// Fixed header size in bytes.
pub const HEADER_LEN: usize = 40;
/// Bytes per coordinate triple.
pub const COORD_LEN: usize = 6;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("grid dims {0:?} exceed the u16 coordinate range")]
    DimsExceedU16([u32; 3]),
    #[error("message truncated at byte {offset}: need {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("payload length {actual} does not match count {count} (expected {expected} bytes)")]
    CountMismatch {
        count: u32,
        expected: usize,
        actual: usize,
    },
    #[error("coordinate {coord:?} at byte {offset} out of bounds for dims {dims:?}")]
    CoordOutOfBounds {
        offset: usize,
        coord: [u16; 3],
        dims: [u32; 3],
    },
    #[error("duplicate coordinate {coord:?} at byte {offset}")]
    DuplicateCoord { offset: usize, coord: [u16; 3] },
    #[error("invalid header: {0}")]
    BadHeader(#[from] GridError),
}

/// Serialized size of a grid with `count` occupied voxels.
pub fn encoded_len(count: usize) -> usize {
    HEADER_LEN + COORD_LEN * count
}

/// Encodes a grid; output is canonical (coordinates sorted) and
/// `40 + 6 * count` bytes long.
pub fn encode(grid: &SparseVoxelGrid) -> Result<Vec<u8>, WireError> {
    let config = grid.config();
    if config.dims.iter().any(|&d| d > u16::MAX as u32) {
        return Err(WireError::DimsExceedU16(config.dims));
    }
    let mut bytes = Vec::with_capacity(encoded_len(grid.len()));
    for v in config.origin {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for v in config.voxel_size {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for d in config.dims {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    bytes.extend_from_slice(&(grid.len() as u32).to_le_bytes());
    // grid coordinates are already sorted lexicographically
    for c in grid.coords() {
        for v in c {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(bytes)
}

/// Decodes a message, validating the header, the size law, coordinate
/// bounds, and duplicate-freeness.
pub fn decode(bytes: &[u8]) -> Result<SparseVoxelGrid, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated {
            offset: bytes.len(),
            needed: HEADER_LEN - bytes.len(),
        });
    }
    let f32_at = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());

    let origin = [f32_at(0), f32_at(4), f32_at(8)];
    let voxel_size = [f32_at(12), f32_at(16), f32_at(20)];
    let dims = [u32_at(24), u32_at(28), u32_at(32)];
    let count = u32_at(36);

    let config = GridConfig::new(origin, voxel_size, dims)?;

    let expected = COORD_LEN * count as usize;
    let actual = bytes.len() - HEADER_LEN;
    if actual != expected {
        if actual < expected {
            return Err(WireError::Truncated {
                offset: bytes.len(),
                needed: expected - actual,
            });
        }
        return Err(WireError::CountMismatch {
            count,
            expected,
            actual,
        });
    }

    let mut coords = Vec::with_capacity(count as usize);
    let mut seen = std::collections::HashSet::with_capacity(count as usize);
    for i in 0..count as usize {
        let off = HEADER_LEN + i * COORD_LEN;
        let coord = [
            u16::from_le_bytes(bytes[off..off + 2].try_into().unwrap()),
            u16::from_le_bytes(bytes[off + 2..off + 4].try_into().unwrap()),
            u16::from_le_bytes(bytes[off + 4..off + 6].try_into().unwrap()),
        ];
        if coord.iter().zip(dims.iter()).any(|(&c, &d)| c as u32 >= d) {
            return Err(WireError::CoordOutOfBounds {
                offset: off,
                coord,
                dims,
            });
        }
        if !seen.insert(coord) {
            return Err(WireError::DuplicateCoord { offset: off, coord });
        }
        coords.push(coord);
    }
    // bounds and duplicates validated above; new() re-sorts canonically
    Ok(SparseVoxelGrid::new(config, coords).expect("validated payload"))
}

/// Transmission cost of a grid against the raw points it came from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BandwidthReport {
    /// `12 * point count`: three f32 per point.
    pub raw_bytes: usize,
    /// `40 + 6 * voxel count`.
    pub wire_bytes: usize,
    /// `1 - wire / raw`; zero for an empty cloud.
    pub reduction: f64,
}

pub fn bandwidth_report(cloud: &PointCloud, grid: &SparseVoxelGrid) -> BandwidthReport {
    let raw_bytes = 12 * cloud.len();
    let wire_bytes = encoded_len(grid.len());
    let reduction = if raw_bytes == 0 {
        0.0
    } else {
        1.0 - wire_bytes as f64 / raw_bytes as f64
    };
    BandwidthReport {
        raw_bytes,
        wire_bytes,
        reduction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config() -> GridConfig {
        GridConfig::new([0.0; 3], [0.5; 3], [32, 32, 8]).unwrap()
    }

    #[test]
    fn empty_grid_is_header_only() {
        let grid = SparseVoxelGrid::empty(config()).unwrap();
        let bytes = encode(&grid).unwrap();
        assert_eq!(bytes.len(), 40);
        assert_eq!(&bytes[36..40], &[0, 0, 0, 0]);
        assert_eq!(decode(&bytes).unwrap(), grid);
    }

    #[test]
    fn size_law() {
        let coords: Vec<[u16; 3]> = (0..1000u16).map(|i| [i % 32, (i / 32) % 32, i % 8]).collect();
        let grid = SparseVoxelGrid::new(config(), coords).unwrap();
        let bytes = encode(&grid).unwrap();
        assert_eq!(bytes.len(), encoded_len(grid.len()));
        assert_eq!(encoded_len(1000), 6040);
    }

    #[test]
    fn short_header_is_truncated_error() {
        let err = decode(&[0u8; 39]).unwrap_err();
        assert!(matches!(err, WireError::Truncated { .. }));
    }

    #[test]
    fn coordinate_at_dims_is_rejected() {
        let grid = SparseVoxelGrid::new(config(), vec![[0, 0, 0]]).unwrap();
        let mut bytes = encode(&grid).unwrap();
        // overwrite the x coordinate with dims[0]
        bytes[40..42].copy_from_slice(&32u16.to_le_bytes());
        let err = decode(&bytes).unwrap_err();
        assert!(matches!(err, WireError::CoordOutOfBounds { offset: 40, .. }));
    }

    #[test]
    fn duplicate_coordinate_is_rejected() {
        let grid = SparseVoxelGrid::new(config(), vec![[1, 2, 3], [4, 5, 6]]).unwrap();
        let mut bytes = encode(&grid).unwrap();
        let dup: Vec<u8> = bytes[40..46].to_vec();
        bytes[46..52].copy_from_slice(&dup);
        assert!(matches!(
            decode(&bytes).unwrap_err(),
            WireError::DuplicateCoord { offset: 46, .. }
        ));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let grid = SparseVoxelGrid::new(config(), vec![[1, 2, 3]]).unwrap();
        let mut bytes = encode(&grid).unwrap();
        bytes.extend_from_slice(&[0u8; 6]);
        assert!(matches!(
            decode(&bytes).unwrap_err(),
            WireError::CountMismatch { count: 1, .. }
        ));
        // and a count larger than the payload is a truncation
        let mut short = encode(&grid).unwrap();
        short[36..40].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            decode(&short).unwrap_err(),
            WireError::Truncated { .. }
        ));
    }

    #[test]
    fn bandwidth_formula_cases() {
        let config = GridConfig::new([0.0; 3], [0.05, 0.05, 0.10], [5600, 1600, 40]).unwrap();
        // 100,000 points quantizing to 20,000 voxels
        let cloud =
            PointCloud::new(vec![[0.0, 0.0, 0.0]; 100_000]).unwrap();
        let coords: Vec<[u16; 3]> = (0..20_000u32)
            .map(|i| [(i % 5600) as u16, (i / 5600) as u16, 0])
            .collect();
        let grid = SparseVoxelGrid::new(config, coords).unwrap();
        let report = bandwidth_report(&cloud, &grid);
        assert_eq!(report.raw_bytes, 1_200_000);
        assert_eq!(report.wire_bytes, 120_040);
        assert!((report.reduction - (1.0 - 120_040.0 / 1_200_000.0)).abs() < 1e-12);
        assert!((report.reduction - 0.8997).abs() < 1e-3);

        // a degenerate one-point cloud loses to the 40-byte header
        let tiny_cloud = PointCloud::new(vec![[0.0; 3]]).unwrap();
        let tiny_grid = SparseVoxelGrid::new(config, vec![[0, 0, 0]]).unwrap();
        let tiny = bandwidth_report(&tiny_cloud, &tiny_grid);
        assert_eq!((tiny.raw_bytes, tiny.wire_bytes), (12, 46));
        assert!(tiny.reduction < 0.0);

        // empty cloud reports zero reduction rather than dividing by zero
        let empty = bandwidth_report(
            &PointCloud::default(),
            &SparseVoxelGrid::empty(config).unwrap(),
        );
        assert_eq!(empty.reduction, 0.0);
    }

    #[test]
    fn dims_exceeding_u16_fail_to_encode() {
        // bypass GridConfig::new validation to exercise the encoder guard
        let oversized = GridConfig {
            origin: [0.0; 3],
            voxel_size: [0.05; 3],
            dims: [70_000, 10, 10],
        };
        let grid = SparseVoxelGrid::with_unvalidated_config(oversized, Vec::new());
        assert!(matches!(
            encode(&grid).unwrap_err(),
            WireError::DimsExceedU16(_)
        ));
    }

    proptest! {
        /// decode(encode(G)) == G and the size law holds.
        #[test]
        fn round_trip(
            coords in proptest::collection::vec((0u16..32, 0u16..32, 0u16..8), 0..300)
        ) {
            let grid = SparseVoxelGrid::new(
                config(),
                coords.into_iter().map(|(x, y, z)| [x, y, z]).collect(),
            )
            .unwrap();
            let bytes = encode(&grid).unwrap();
            prop_assert_eq!(bytes.len(), encoded_len(grid.len()));
            let decoded = decode(&bytes).unwrap();
            prop_assert_eq!(&decoded, &grid);
            // encoding is canonical: re-encoding is byte-identical
            let again = encode(&decoded).unwrap();
            prop_assert_eq!(again, bytes);
        }
    }
}

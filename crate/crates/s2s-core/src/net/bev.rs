//! Bird's eye view projection and the BEV dump format.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::sparse::SparseTensor;

/// Magic bytes of the BEV dump format.
pub const BEV_MAGIC: [u8; 4] = *b"S2SB";
/// Current BEV dump format version.
pub const BEV_VERSION: u32 = 1;

/// Dense 2D top-down feature map: the voxel features of each (x, y) column
/// concatenated along z.
///
/// Layout: `data[(ix * ny + iy) * channels + (z * width + c)]` where `width`
/// is the source tensor's feature width and `channels = nz * width`.
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatureMap {
    pub nx: u32,
    pub ny: u32,
    pub channels: u32,
    pub data: Vec<f32>,
}

impl BevFeatureMap {
    pub fn cell(&self, ix: u32, iy: u32) -> &[f32] {
        let idx = ((ix * self.ny + iy) * self.channels) as usize;
        &self.data[idx..idx + self.channels as usize]
    }

    /// True when every value is bit-identical; stricter than `==` for NaN-free
    /// maps only in that it compares representations, not numeric values.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.channels == other.channels
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Raw binary dump: magic "S2SB", version u32, nx, ny, channels u32, then
    /// `nx * ny * channels` f32 values, all little-endian.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&BEV_MAGIC)?;
        w.write_all(&BEV_VERSION.to_le_bytes())?;
        w.write_all(&self.nx.to_le_bytes())?;
        w.write_all(&self.ny.to_le_bytes())?;
        w.write_all(&self.channels.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn read_from(mut r: impl Read) -> std::io::Result<Self> {
        let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
        let mut header = [0u8; 20];
        r.read_exact(&mut header)?;
        if header[0..4] != BEV_MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at =
            |off: usize| u32::from_le_bytes(header[off..off + 4].try_into().unwrap());
        if u32_at(4) != BEV_VERSION {
            return Err(bad("unsupported version"));
        }
        let (nx, ny, channels) = (u32_at(8), u32_at(12), u32_at(16));
        let len = nx as usize * ny as usize * channels as usize;
        let mut bytes = vec![0u8; len * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            nx,
            ny,
            channels,
            data,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Self::read_from(File::open(path)?)
    }
}

/// Densifies a sparse tensor into a BEV map by concatenating each column's
/// voxel features along z; inactive cells contribute zeros.
pub fn to_bev(input: &SparseTensor) -> BevFeatureMap {
    let [nx, ny, nz] = input.dims();
    let width = input.width() as u32;
    let channels = nz * width;
    let mut data = vec![0.0f32; (nx * ny * channels) as usize];
    for (i, &c) in input.coords().iter().enumerate() {
        let base = ((c[0] as u32 * ny + c[1] as u32) * channels + c[2] as u32 * width) as usize;
        data[base..base + width as usize].copy_from_slice(input.feature(i));
    }
    BevFeatureMap {
        nx,
        ny,
        channels,
        data,
    }
}

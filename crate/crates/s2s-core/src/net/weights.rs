//! Network weights: block structure, seeded initialization, and the weight
//! file container.
//!
//! File layout, little-endian throughout:
//!
//! | field            | size | value                                   |
//! |------------------|------|-----------------------------------------|
//! | magic            | 4    | "S2SW"                                  |
//! | version          | 4    | u32, currently 1                        |
//! | input width      | 4    | u32 (3 for center-point features)       |
//! | channel plan     | 16   | 4 x u32 output channels per block       |
//! | weight arrays    | ...  | f32 arrays in declaration order         |
//!
//! Declaration order is: four local blocks, four collective blocks, final
//! convolution, final norm. Each block contributes `conv0, norm0, conv1,
//! norm1, conv2, norm2`; each norm contributes gamma, beta, running mean,
//! running variance. Strides are fixed at [1, 2, 2, 2] per stream and every
//! kernel is 3x3x3, so all array lengths follow from the header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sparse::{ConvParams, NormParams, ShapeError, KERNEL_VOLUME};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"S2SW";
pub const WEIGHTS_VERSION: u32 = 1;

/// Per-stream strides of the four convolution blocks: the first block keeps
/// resolution, the remaining three halve it.
pub const BLOCK_STRIDES: [u32; 4] = [1, 2, 2, 2];

/// Default channel plan: output channels of the four blocks in each stream.
pub const DEFAULT_CHANNELS: [usize; 4] = [16, 32, 64, 64];
/// Width of the input features (voxel center points).
pub const INPUT_WIDTH: usize = 3;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("weight file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes {0:?}, expected \"S2SW\"")]
    BadMagic([u8; 4]),
    #[error("unsupported weight format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed weight file: {0}")]
    Malformed(String),
    #[error("inconsistent weights: {0}")]
    Shape(#[from] ShapeError),
}

/// Channel layout of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelPlan {
    /// Feature width entering the first block of each stream.
    pub input_width: usize,
    /// Output channels of the four blocks.
    pub channels: [usize; 4],
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self {
            input_width: INPUT_WIDTH,
            channels: DEFAULT_CHANNELS,
        }
    }
}

impl ChannelPlan {
    /// Input channel count of block `i`.
    fn block_input(&self, i: usize) -> usize {
        if i == 0 {
            self.input_width
        } else {
            self.channels[i - 1]
        }
    }
}

/// One convolution block: a strided-or-unit-stride convolution followed by
/// two submanifold convolutions, each with its own normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub conv0: ConvParams,
    pub norm0: NormParams,
    pub conv1: ConvParams,
    pub norm1: NormParams,
    pub conv2: ConvParams,
    pub norm2: NormParams,
}

impl BlockWeights {
    /// Checks the internal channel chain and returns (c_in, c_out).
    pub fn channel_chain(&self) -> Result<(usize, usize), ShapeError> {
        let c = self.conv0.c_out();
        for (name, conv) in [("conv1", &self.conv1), ("conv2", &self.conv2)] {
            if conv.c_in() != c || conv.c_out() != c {
                return Err(ShapeError::InvalidParams(format!(
                    "{name} must be {c}->{c}, got {}->{}",
                    conv.c_in(),
                    conv.c_out()
                )));
            }
        }
        for (name, norm) in [
            ("norm0", &self.norm0),
            ("norm1", &self.norm1),
            ("norm2", &self.norm2),
        ] {
            if norm.width() != c {
                return Err(ShapeError::InvalidNorm(format!(
                    "{name} width {} does not match {c} channels",
                    norm.width()
                )));
            }
        }
        Ok((self.conv0.c_in(), c))
    }
}

/// All convolution kernels and normalization parameters for both backbones.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub plan: ChannelPlan,
    pub local_blocks: [BlockWeights; 4],
    pub collective_blocks: [BlockWeights; 4],
    /// Resolution-preserving submanifold convolution applied after the last
    /// fusion point.
    pub final_conv: ConvParams,
    pub final_norm: NormParams,
}

impl ModelWeights {
    /// Deterministic pseudo-random weights for a seed: kernels are uniform in
    /// `[-b, b]` with `b = 1/sqrt(27 * c_in)`, normalizations are identity.
    pub fn init(seed: u64, plan: ChannelPlan) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let local_blocks = init_stream(&mut rng, &plan);
        let collective_blocks = init_stream(&mut rng, &plan);
        let c_last = plan.channels[3];
        let final_conv = ConvParams::submanifold(
            c_last,
            c_last,
            random_kernel(&mut rng, c_last, c_last),
        )
        .expect("kernel length follows from the plan");
        let final_norm = NormParams::identity(c_last);
        Self {
            plan,
            local_blocks,
            collective_blocks,
            final_conv,
            final_norm,
        }
    }

    /// Verifies channel chains of both streams and the final layer.
    pub fn validate(&self) -> Result<(), ShapeError> {
        for (name, stream) in [
            ("local", &self.local_blocks),
            ("collective", &self.collective_blocks),
        ] {
            for (i, block) in stream.iter().enumerate() {
                let (c_in, c_out) = block.channel_chain()?;
                let want_in = self.plan.block_input(i);
                let want_out = self.plan.channels[i];
                if c_in != want_in || c_out != want_out {
                    return Err(ShapeError::InvalidParams(format!(
                        "{name} block {i} is {c_in}->{c_out}, plan requires {want_in}->{want_out}"
                    )));
                }
                let want_stride = [BLOCK_STRIDES[i]; 3];
                if block.conv0.stride() != want_stride {
                    return Err(ShapeError::InvalidParams(format!(
                        "{name} block {i} stride {:?}, expected {want_stride:?}",
                        block.conv0.stride()
                    )));
                }
            }
        }
        let c_last = self.plan.channels[3];
        if self.final_conv.c_in() != c_last
            || self.final_conv.c_out() != c_last
            || self.final_norm.width() != c_last
        {
            return Err(ShapeError::InvalidParams(
                "final layer channels do not match the plan".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, mut w: impl Write) -> Result<(), WeightsError> {
        w.write_all(&WEIGHTS_MAGIC)?;
        w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
        w.write_all(&(self.plan.input_width as u32).to_le_bytes())?;
        for c in self.plan.channels {
            w.write_all(&(c as u32).to_le_bytes())?;
        }
        for block in self.local_blocks.iter().chain(&self.collective_blocks) {
            write_block(&mut w, block)?;
        }
        write_array(&mut w, self.final_conv.weights())?;
        write_norm(&mut w, &self.final_norm)?;
        Ok(())
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> Result<(), WeightsError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<Self, WeightsError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != WEIGHTS_MAGIC {
            return Err(WeightsError::BadMagic(magic));
        }
        let version = read_u32(&mut r)?;
        if version != WEIGHTS_VERSION {
            return Err(WeightsError::UnsupportedVersion(version));
        }
        let input_width = read_u32(&mut r)? as usize;
        let mut channels = [0usize; 4];
        for c in channels.iter_mut() {
            *c = read_u32(&mut r)? as usize;
        }
        if input_width == 0 || channels.contains(&0) {
            return Err(WeightsError::Malformed(format!(
                "zero width in header: input {input_width}, channels {channels:?}"
            )));
        }
        let plan = ChannelPlan {
            input_width,
            channels,
        };
        let local_blocks = read_stream(&mut r, &plan)?;
        let collective_blocks = read_stream(&mut r, &plan)?;
        let c_last = plan.channels[3];
        let final_conv = ConvParams::submanifold(
            c_last,
            c_last,
            read_array(&mut r, KERNEL_VOLUME * c_last * c_last)?,
        )?;
        let final_norm = read_norm(&mut r, c_last)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(WeightsError::Malformed("trailing bytes after weights".into()));
        }
        let weights = Self {
            plan,
            local_blocks,
            collective_blocks,
            final_conv,
            final_norm,
        };
        weights.validate()?;
        Ok(weights)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, WeightsError> {
        Self::load(BufReader::new(File::open(path)?))
    }
}

fn random_kernel(rng: &mut ChaCha8Rng, c_in: usize, c_out: usize) -> Vec<f32> {
    let bound = (1.0 / (KERNEL_VOLUME * c_in) as f32).sqrt();
    (0..KERNEL_VOLUME * c_in * c_out)
        .map(|_| rng.random_range(-bound..bound))
        .collect()
}

fn init_stream(rng: &mut ChaCha8Rng, plan: &ChannelPlan) -> [BlockWeights; 4] {
    std::array::from_fn(|i| {
        let c_in = plan.block_input(i);
        let c_out = plan.channels[i];
        let conv0 = if BLOCK_STRIDES[i] == 1 {
            ConvParams::submanifold(c_in, c_out, random_kernel(rng, c_in, c_out))
        } else {
            ConvParams::strided(c_in, c_out, [2, 2, 2], random_kernel(rng, c_in, c_out))
        }
        .expect("kernel length follows from the plan");
        BlockWeights {
            conv0,
            norm0: NormParams::identity(c_out),
            conv1: ConvParams::submanifold(c_out, c_out, random_kernel(rng, c_out, c_out))
                .expect("kernel length follows from the plan"),
            norm1: NormParams::identity(c_out),
            conv2: ConvParams::submanifold(c_out, c_out, random_kernel(rng, c_out, c_out))
                .expect("kernel length follows from the plan"),
            norm2: NormParams::identity(c_out),
        }
    })
}

fn write_array(w: &mut impl Write, values: &[f32]) -> Result<(), WeightsError> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_norm(w: &mut impl Write, norm: &NormParams) -> Result<(), WeightsError> {
    write_array(w, &norm.gamma)?;
    write_array(w, &norm.beta)?;
    write_array(w, &norm.running_mean)?;
    write_array(w, &norm.running_var)
}

fn write_block(w: &mut impl Write, block: &BlockWeights) -> Result<(), WeightsError> {
    write_array(w, block.conv0.weights())?;
    write_norm(w, &block.norm0)?;
    write_array(w, block.conv1.weights())?;
    write_norm(w, &block.norm1)?;
    write_array(w, block.conv2.weights())?;
    write_norm(w, &block.norm2)
}

fn read_u32(r: &mut impl Read) -> Result<u32, WeightsError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_array(r: &mut impl Read, len: usize) -> Result<Vec<f32>, WeightsError> {
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            WeightsError::Malformed(format!("truncated array of {len} f32 values"))
        } else {
            WeightsError::Io(e)
        }
    })?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_norm(r: &mut impl Read, c: usize) -> Result<NormParams, WeightsError> {
    let gamma = read_array(r, c)?;
    let beta = read_array(r, c)?;
    let mean = read_array(r, c)?;
    let var = read_array(r, c)?;
    Ok(NormParams::new(gamma, beta, mean, var)?)
}

fn read_stream(r: &mut impl Read, plan: &ChannelPlan) -> Result<[BlockWeights; 4], WeightsError> {
    let mut blocks = Vec::with_capacity(4);
    for (i, &stride) in BLOCK_STRIDES.iter().enumerate() {
        let c_in = plan.block_input(i);
        let c_out = plan.channels[i];
        let kernel = read_array(r, KERNEL_VOLUME * c_in * c_out)?;
        let conv0 = if stride == 1 {
            ConvParams::submanifold(c_in, c_out, kernel)?
        } else {
            ConvParams::strided(c_in, c_out, [2, 2, 2], kernel)?
        };
        let norm0 = read_norm(r, c_out)?;
        let conv1 =
            ConvParams::submanifold(c_out, c_out, read_array(r, KERNEL_VOLUME * c_out * c_out)?)?;
        let norm1 = read_norm(r, c_out)?;
        let conv2 =
            ConvParams::submanifold(c_out, c_out, read_array(r, KERNEL_VOLUME * c_out * c_out)?)?;
        let norm2 = read_norm(r, c_out)?;
        blocks.push(BlockWeights {
            conv0,
            norm0,
            conv1,
            norm1,
            conv2,
            norm2,
        });
    }
    Ok(blocks.try_into().expect("exactly four blocks"))
}

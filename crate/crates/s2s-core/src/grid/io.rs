//! Point cloud file loaders and writers.
//!
//! Two formats are supported:
//! - `.xyz` plain text: one `x y z` float triple per line, whitespace
//!   separated; blank lines and `#` comment lines are skipped.
//! - raw binary: little-endian `u32` point count followed by `count * 3`
//!   little-endian `f32` values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridError, PointCloud};

pub fn load_xyz(path: impl AsRef<Path>) -> Result<PointCloud, GridError> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| GridError::CloudIo(format!("{}: {e}", path.display())))?;
    read_xyz(BufReader::new(file))
}

pub fn read_xyz(reader: impl BufRead) -> Result<PointCloud, GridError> {
    let mut points = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| GridError::CloudIo(format!("line {}: {e}", lineno + 1)))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut values = trimmed.split_whitespace().map(|tok| {
            tok.parse::<f32>().map_err(|_| {
                GridError::CloudIo(format!("line {}: bad float {tok:?}", lineno + 1))
            })
        });
        let mut p = [0.0f32; 3];
        for v in p.iter_mut() {
            *v = values.next().ok_or_else(|| {
                GridError::CloudIo(format!("line {}: expected 3 values", lineno + 1))
            })??;
        }
        // trailing columns (intensity etc.) are tolerated and ignored
        points.push(p);
    }
    PointCloud::new(points)
}

pub fn save_xyz(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), GridError> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| GridError::CloudIo(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    for p in cloud.points() {
        writeln!(w, "{} {} {}", p[0], p[1], p[2])
            .map_err(|e| GridError::CloudIo(e.to_string()))?;
    }
    w.flush().map_err(|e| GridError::CloudIo(e.to_string()))
}

pub fn load_bin(path: impl AsRef<Path>) -> Result<PointCloud, GridError> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| GridError::CloudIo(format!("{}: {e}", path.display())))?;
    read_bin(BufReader::new(file))
}

pub fn read_bin(mut reader: impl Read) -> Result<PointCloud, GridError> {
    let mut count_buf = [0u8; 4];
    reader
        .read_exact(&mut count_buf)
        .map_err(|e| GridError::CloudIo(format!("reading point count: {e}")))?;
    let count = u32::from_le_bytes(count_buf) as usize;
    let mut data = vec![0u8; count * 12];
    reader
        .read_exact(&mut data)
        .map_err(|e| GridError::CloudIo(format!("expected {count} points: {e}")))?;
    let mut points = Vec::with_capacity(count);
    for chunk in data.chunks_exact(12) {
        points.push([
            f32::from_le_bytes(chunk[0..4].try_into().unwrap()),
            f32::from_le_bytes(chunk[4..8].try_into().unwrap()),
            f32::from_le_bytes(chunk[8..12].try_into().unwrap()),
        ]);
    }
    PointCloud::new(points)
}

pub fn save_bin(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), GridError> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| GridError::CloudIo(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| {
        w.write_all(bytes)
            .map_err(|e| GridError::CloudIo(e.to_string()))
    };
    write(&(cloud.len() as u32).to_le_bytes())?;
    for p in cloud.points() {
        for v in p {
            write(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| GridError::CloudIo(e.to_string()))
}

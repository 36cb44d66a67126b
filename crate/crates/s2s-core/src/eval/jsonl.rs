//! Detection and ground-truth dumps: JSON lines, one frame per line.
//!
//! ```text
//! {"frame": 0, "boxes": [{"center": [1.0, 2.0, 0.5], "size": [4.5, 1.9, 1.5],
//!  "yaw": 0.0, "class": "Car", "confidence": 0.93}, ...]}
//! ```
//!
//! Ground-truth files use the same schema without `confidence`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Box3D, EvalError};

/// All boxes of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBoxes {
    pub frame: u64,
    pub boxes: Vec<Box3D>,
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<FrameBoxes>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut frames = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EvalError::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: FrameBoxes = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        for b in &frame.boxes {
            // re-validate through the constructor invariants
            Box3D::new(b.center, b.size, b.yaw, b.class, b.confidence).map_err(|e| {
                EvalError::Parse {
                    line: lineno + 1,
                    message: e.to_string(),
                }
            })?;
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn save_jsonl(frames: &[FrameBoxes], path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for frame in frames {
        let line = serde_json::to_string(frame).expect("frame boxes serialize");
        writeln!(w, "{line}").map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    w.flush().map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

//! 3D detection evaluation: yaw-rotated boxes, IoU, greedy matching,
//! average precision, and the range and visibility filters of the
//! evaluation protocol.

mod ap;
mod iou;
mod jsonl;

pub use ap::{average_precision, evaluate_frames, match_detections, ApResult, MatchResult};
pub use iou::iou3d;
pub use jsonl::{load_jsonl, save_jsonl, FrameBoxes};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{PointCloud, SparseVoxelGrid};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("jsonl parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Object classes of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectClass {
    Car,
    Van,
    Pedestrian,
    Cyclist,
    Motorbike,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 5] = [
        ObjectClass::Car,
        ObjectClass::Van,
        ObjectClass::Pedestrian,
        ObjectClass::Cyclist,
        ObjectClass::Motorbike,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ObjectClass::Car => "Car",
            ObjectClass::Van => "Van",
            ObjectClass::Pedestrian => "Pedestrian",
            ObjectClass::Cyclist => "Cyclist",
            ObjectClass::Motorbike => "Motorbike",
        }
    }
}

impl std::str::FromStr for ObjectClass {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| EvalError::InvalidBox(format!("unknown class {s:?}")))
    }
}

impl std::fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// IoU threshold per class: 0.7 for cars and vans, 0.5 for pedestrians,
/// cyclists, and motorbikes.
pub fn default_iou_threshold(class: ObjectClass) -> f64 {
    match class {
        ObjectClass::Car | ObjectClass::Van => 0.7,
        ObjectClass::Pedestrian | ObjectClass::Cyclist | ObjectClass::Motorbike => 0.5,
    }
}

/// Yaw-rotated 3D bounding box with class label and optional confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    /// Box center, meters.
    pub center: [f64; 3],
    /// Full edge lengths (length along heading, width, height), meters.
    pub size: [f64; 3],
    /// Heading about +z, radians, normalized to (-pi, pi].
    pub yaw: f64,
    pub class: ObjectClass,
    /// Detection confidence in [0, 1]; absent on ground truths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl Box3D {
    pub fn new(
        center: [f64; 3],
        size: [f64; 3],
        yaw: f64,
        class: ObjectClass,
        confidence: Option<f64>,
    ) -> Result<Self, EvalError> {
        if !size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(EvalError::InvalidBox(format!("size {size:?} must be positive")));
        }
        if !center.iter().all(|c| c.is_finite()) || !yaw.is_finite() {
            return Err(EvalError::InvalidBox("non-finite pose".into()));
        }
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(EvalError::InvalidBox(format!(
                    "confidence {c} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            center,
            size,
            yaw: normalize_yaw(yaw),
            class,
            confidence,
        })
    }

    /// BEV footprint corners, counterclockwise.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.size[0] / 2.0, self.size[1] / 2.0);
        let rot = |x: f64, y: f64| {
            [
                self.center[0] + c * x - s * y,
                self.center[1] + s * x + c * y,
            ]
        };
        [rot(hl, hw), rot(-hl, hw), rot(-hl, -hw), rot(hl, -hw)]
    }

    /// Vertical extent `[bottom, top]`.
    pub fn z_range(&self) -> [f64; 2] {
        [
            self.center[2] - self.size[2] / 2.0,
            self.center[2] + self.size[2] / 2.0,
        ]
    }

    pub fn volume(&self) -> f64 {
        self.size[0] * self.size[1] * self.size[2]
    }

    /// Whether a point lies inside the box (closed boundaries).
    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let local = [c * dx + s * dy, -s * dx + c * dy, p[2] - self.center[2]];
        local[0].abs() <= self.size[0] / 2.0
            && local[1].abs() <= self.size[1] / 2.0
            && local[2].abs() <= self.size[2] / 2.0
    }
}

/// Normalizes an angle to (-pi, pi].
pub fn normalize_yaw(yaw: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = yaw % two_pi;
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Axis-aligned evaluation region in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRange {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Default for EvalRange {
    /// The benchmark evaluation range: x in [-140, 140], y in [-40, 40],
    /// z in [-4, 1] meters.
    fn default() -> Self {
        Self {
            x: [-140.0, 140.0],
            y: [-40.0, 40.0],
            z: [-4.0, 1.0],
        }
    }
}

impl EvalRange {
    pub fn new(x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> Result<Self, EvalError> {
        for (axis, r) in [("x", &x), ("y", &y), ("z", &z)] {
            if !r.iter().all(|v| v.is_finite()) || r[0] >= r[1] {
                return Err(EvalError::InvalidRange(format!(
                    "{axis} range {r:?} must satisfy min < max"
                )));
            }
        }
        Ok(Self { x, y, z })
    }

    /// Whether a point lies inside the range; intervals are closed.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (self.x[0]..=self.x[1]).contains(&p[0])
            && (self.y[0]..=self.y[1]).contains(&p[1])
            && (self.z[0]..=self.z[1]).contains(&p[2])
    }
}

/// Keeps boxes whose center lies inside the range (closed intervals).
pub fn filter_range(boxes: &[Box3D], range: &EvalRange) -> Vec<Box3D> {
    boxes
        .iter()
        .filter(|b| range.contains(b.center))
        .cloned()
        .collect()
}

/// Training-time visibility filter: keeps boxes containing at least one ego
/// point or at least one shared voxel center.
pub fn filter_boxes_training(
    gts: &[Box3D],
    ego_cloud: &PointCloud,
    shared: &SparseVoxelGrid,
) -> Vec<Box3D> {
    let centers: Vec<[f64; 3]> = shared
        .coords()
        .iter()
        .map(|&c| {
            let p = shared
                .config()
                .voxel_center(c)
                .expect("grid coordinates are in bounds");
            [p[0] as f64, p[1] as f64, p[2] as f64]
        })
        .collect();
    gts.iter()
        .filter(|b| {
            ego_cloud
                .points()
                .iter()
                .any(|&p| b.contains_point([p[0] as f64, p[1] as f64, p[2] as f64]))
                || centers.iter().any(|&p| b.contains_point(p))
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridConfig, SparseVoxelGrid};

    fn car(center: [f64; 3]) -> Box3D {
        Box3D::new(center, [4.5, 1.9, 1.5], 0.0, ObjectClass::Car, None).unwrap()
    }

    #[test]
    fn thresholds_per_class() {
        assert_eq!(default_iou_threshold(ObjectClass::Car), 0.7);
        assert_eq!(default_iou_threshold(ObjectClass::Van), 0.7);
        assert_eq!(default_iou_threshold(ObjectClass::Pedestrian), 0.5);
        assert_eq!(default_iou_threshold(ObjectClass::Cyclist), 0.5);
        assert_eq!(default_iou_threshold(ObjectClass::Motorbike), 0.5);
    }

    #[test]
    fn range_filter_boundary_rules() {
        let range = EvalRange::default();
        let boxes = vec![car([150.0, 0.0, 0.0]), car([0.0, 0.0, 0.0]), car([140.0, 40.0, 1.0])];
        let kept = filter_range(&boxes, &range);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].center, [0.0, 0.0, 0.0]);
        // closed boundary keeps the corner case
        assert_eq!(kept[1].center, [140.0, 40.0, 1.0]);
    }

    #[test]
    fn yaw_is_normalized() {
        let b = Box3D::new([0.0; 3], [1.0; 3], 3.0 * std::f64::consts::PI, ObjectClass::Car, None)
            .unwrap();
        assert!((b.yaw - std::f64::consts::PI).abs() < 1e-12);
        assert!(Box3D::new([0.0; 3], [0.0, 1.0, 1.0], 0.0, ObjectClass::Car, None).is_err());
        assert!(Box3D::new([0.0; 3], [1.0; 3], 0.0, ObjectClass::Car, Some(1.5)).is_err());
    }

    #[test]
    fn contains_point_respects_rotation() {
        let b = Box3D::new(
            [0.0; 3],
            [4.0, 2.0, 2.0],
            std::f64::consts::FRAC_PI_2,
            ObjectClass::Car,
            None,
        )
        .unwrap();
        // after a 90 degree turn the long axis lies along y
        assert!(b.contains_point([0.0, 1.9, 0.0]));
        assert!(!b.contains_point([1.9, 0.0, 0.0]));
    }

    #[test]
    fn training_filter_examples() {
        let config = GridConfig::new([-8.0, -8.0, -1.0], [0.5; 3], [32, 32, 8]).unwrap();
        let empty = SparseVoxelGrid::empty(config).unwrap();

        // 5 points inside, no voxels: kept
        let gt = car([0.0, 0.0, 0.75]);
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.75]; 5]).unwrap();
        assert_eq!(
            filter_boxes_training(std::slice::from_ref(&gt), &cloud, &empty).len(),
            1
        );

        // no points, no voxels: removed
        let far = PointCloud::new(vec![[7.0, 7.0, 0.0]]).unwrap();
        assert!(filter_boxes_training(std::slice::from_ref(&gt), &far, &empty).is_empty());

        // only a shared voxel center inside: kept
        let coord = config.quantize([0.0, 0.0, 0.75]).unwrap();
        let shared = SparseVoxelGrid::new(config, vec![coord]).unwrap();
        assert_eq!(filter_boxes_training(&[gt], &far, &shared).len(), 1);
    }

    #[test]
    fn class_parsing() {
        assert_eq!("car".parse::<ObjectClass>().unwrap(), ObjectClass::Car);
        assert_eq!("Motorbike".parse::<ObjectClass>().unwrap(), ObjectClass::Motorbike);
        assert!("truck".parse::<ObjectClass>().is_err());
    }
}

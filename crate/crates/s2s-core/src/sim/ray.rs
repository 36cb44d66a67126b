//! Poses and ray intersection primitives for box-and-ground scenes.

use serde::{Deserialize, Serialize};

use crate::grid::PointCloud;

const T_EPSILON: f64 = 1e-9;

/// Rigid 2D-yaw pose in 3D space: translation plus rotation about +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Rotation about +z, radians.
    pub yaw: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        yaw: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw }
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.x + c * p[0] - s * p[1],
            self.y + s * p[0] + c * p[1],
            self.z + p[2],
        ]
    }

    /// Maps a point from the parent frame into this pose's local frame.
    pub fn inverse_transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.x;
        let dy = p[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.z]
    }

    /// Rotates a direction vector into the parent frame (no translation).
    pub fn rotate_dir(&self, d: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]]
    }

    /// `self` then `child`: the pose of `child` expressed in `self`'s parent
    /// frame.
    pub fn compose(&self, child: &Pose) -> Pose {
        let p = self.transform_point([child.x, child.y, child.z]);
        Pose {
            x: p[0],
            y: p[1],
            z: p[2],
            yaw: self.yaw + child.yaw,
        }
    }

    /// Transforms a cloud from this pose's local frame into the parent frame.
    pub fn transform_cloud(&self, cloud: &PointCloud) -> PointCloud {
        self.map_cloud(cloud, |pose, p| pose.transform_point(p))
    }

    /// Transforms a cloud from the parent frame into this pose's local frame.
    pub fn inverse_transform_cloud(&self, cloud: &PointCloud) -> PointCloud {
        self.map_cloud(cloud, |pose, p| pose.inverse_transform_point(p))
    }

    fn map_cloud(&self, cloud: &PointCloud, f: impl Fn(&Pose, [f64; 3]) -> [f64; 3]) -> PointCloud {
        let points = cloud
            .points()
            .iter()
            .map(|&p| {
                let q = f(self, [p[0] as f64, p[1] as f64, p[2] as f64]);
                [q[0] as f32, q[1] as f32, q[2] as f32]
            })
            .collect();
        PointCloud::new(points).expect("rigid transforms preserve finiteness")
    }
}

/// Intersection parameter with the ground plane z = 0, if the ray crosses it
/// in front of the origin.
pub fn ray_ground(origin: [f64; 3], dir: [f64; 3]) -> Option<f64> {
    if dir[2].abs() < T_EPSILON {
        return None;
    }
    let t = -origin[2] / dir[2];
    (t > T_EPSILON).then_some(t)
}

/// Intersection parameter with a yaw-rotated box (slab test in the box
/// frame). Rays starting inside the box hit the interior of the far face.
pub fn ray_box(
    origin: [f64; 3],
    dir: [f64; 3],
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
) -> Option<f64> {
    let frame = Pose::new(center[0], center[1], center[2], yaw);
    let o = frame.inverse_transform_point(origin);
    let (s, c) = yaw.sin_cos();
    let d = [c * dir[0] + s * dir[1], -s * dir[0] + c * dir[1], dir[2]];

    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for a in 0..3 {
        let half = size[a] / 2.0;
        if d[a].abs() < T_EPSILON {
            if o[a].abs() > half {
                return None;
            }
            continue;
        }
        let t1 = (-half - o[a]) / d[a];
        let t2 = (half - o[a]) / d[a];
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        t_enter = t_enter.max(lo);
        t_exit = t_exit.min(hi);
        if t_enter > t_exit {
            return None;
        }
    }
    if t_enter > T_EPSILON {
        Some(t_enter)
    } else if t_exit > T_EPSILON {
        Some(t_exit)
    } else {
        None
    }
}

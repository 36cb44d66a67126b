//! Rotated 3D intersection over union.
//!
//! The BEV footprints are convex quadrilaterals, so their intersection is
//! computed exactly by Sutherland-Hodgman clipping; the 3D intersection is
//! the clipped area times the vertical overlap.

use super::Box3D;

/// IoU of two yaw-rotated boxes, in [0, 1].
pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let inter_area = convex_intersection_area(&a.bev_corners(), &b.bev_corners());
    let [a_lo, a_hi] = a.z_range();
    let [b_lo, b_hi] = b.z_range();
    let dz = (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0.0);
    let intersection = inter_area * dz;
    let union = a.volume() + b.volume() - intersection;
    if union <= 0.0 {
        return 0.0;
    }
    (intersection / union).clamp(0.0, 1.0)
}

/// Area of the intersection of two convex polygons (counterclockwise
/// vertices); degenerate results count as zero.
fn convex_intersection_area(subject: &[[f64; 2]; 4], clip: &[[f64; 2]; 4]) -> f64 {
    let mut polygon: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..4 {
        if polygon.len() < 3 {
            return 0.0;
        }
        let edge_a = clip[i];
        let edge_b = clip[(i + 1) % 4];
        polygon = clip_by_half_plane(&polygon, edge_a, edge_b);
    }
    polygon_area(&polygon)
}

/// Keeps the part of `polygon` on the left of the directed edge a -> b.
fn clip_by_half_plane(polygon: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::with_capacity(polygon.len() + 1);
    for i in 0..polygon.len() {
        let current = polygon[i];
        let next = polygon[(i + 1) % polygon.len()];
        let (side_c, side_n) = (side(current), side(next));
        if side_c >= 0.0 {
            out.push(current);
        }
        if (side_c > 0.0 && side_n < 0.0) || (side_c < 0.0 && side_n > 0.0) {
            let t = side_c / (side_c - side_n);
            out.push([
                current[0] + t * (next[0] - current[0]),
                current[1] + t * (next[1] - current[1]),
            ]);
        }
    }
    out
}

/// Shoelace area; vertices in counterclockwise order give a positive value.
fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut twice_area = 0.0;
    for i in 0..polygon.len() {
        let p = polygon[i];
        let q = polygon[(i + 1) % polygon.len()];
        twice_area += p[0] * q[1] - q[0] * p[1];
    }
    (twice_area / 2.0).max(0.0)
}

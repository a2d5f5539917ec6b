//! Geometry of the random polytope: membership in a convex hull, exact
//! hull measures in dimensions 2 and 3, and the support function of a cloud.

mod membership;
mod planar;
mod spatial;

pub use membership::{in_hull, MembershipResult, Witness};
pub use planar::{convex_hull_2d, hull_measure_2d, polygon_area, polygon_perimeter};
pub use spatial::{convex_hull_3d, hull_measure_3d, Hull3};

use crate::error::{invalid, Error, Result};
use crate::linalg::VecD;

/// `h_{K_n}(u) = max_i <x_i, u>`.
pub fn cloud_support(points: &[VecD], u: &VecD) -> Result<f64> {
    if points.is_empty() {
        return Err(invalid("support of an empty cloud"));
    }
    if u.norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok(points
        .iter()
        .map(|x| x.dot(u))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Indices of the points that can be extreme in the hull. Exact hulls are
/// used in dimensions 2 and 3; otherwise every index is returned.
pub fn extreme_point_indices(points: &[VecD]) -> Vec<usize> {
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    match dim {
        1 => {
            let (mut lo, mut hi) = (0, 0);
            for (i, p) in points.iter().enumerate() {
                if p[0] < points[lo][0] {
                    lo = i;
                }
                if p[0] > points[hi][0] {
                    hi = i;
                }
            }
            if lo == hi {
                vec![lo]
            } else {
                vec![lo, hi]
            }
        }
        2 if points.len() >= 3 => {
            let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
            let idx = convex_hull_2d(&pts);
            if idx.len() >= 3 {
                idx
            } else {
                (0..points.len()).collect()
            }
        }
        3 if points.len() >= 4 => {
            let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
            match convex_hull_3d(&pts) {
                Ok(h) if !h.faces.is_empty() => h.vertex_indices(),
                _ => (0..points.len()).collect(),
            }
        }
        _ => (0..points.len()).collect(),
    }
}

//! Convex bodies with analytic support functions, boundary geometry and
//! intrinsic volumes: ball, ellipsoid, capsule (segment plus ball) and cube.
//! Every body is centered at the origin.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::{alpha, binom};
use crate::hull::in_hull;
use crate::linalg::{basis_vector, check_ambient_dim, complement_basis, symmetric_eigenvalues, Frame, VecD};
use crate::quadrature;

/// Default absolute membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyKind {
    Ball { radius: f64 },
    Ellipsoid { semiaxes: Vec<f64> },
    /// `core_length` is the length of the segment, `axis` a 0-based coordinate index.
    Capsule {
        cap_radius: f64,
        core_length: f64,
        axis: usize,
    },
    /// Axis-aligned cube `[-side/2, side/2]^d`.
    Cube { side: f64 },
}

impl BodyKind {
    pub fn name(&self) -> &'static str {
        match self {
            BodyKind::Ball { .. } => "ball",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::Capsule { .. } => "capsule",
            BodyKind::Cube { .. } => "cube",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    kind: BodyKind,
    dim: usize,
}

/// A point of `∂K` with its outer unit normal and principal curvatures.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub x: VecD,
    pub normal: VecD,
    pub curvatures: Option<Vec<f64>>,
}

/// Normalized elementary symmetric functions `H_0..H_{d-1}` of the principal curvatures.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureEval {
    pub h: Vec<f64>,
}

impl CurvatureEval {
    /// Gauss curvature `H_{d-1}`.
    pub fn gauss(&self) -> f64 {
        *self.h.last().expect("H_0 always present")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntrinsicVolume {
    pub value: f64,
    /// Set when the value comes from quadrature rather than a closed form.
    pub numeric: bool,
}

impl BoundaryPoint {
    pub fn curvature_functions(&self) -> Result<CurvatureEval> {
        let k = self
            .curvatures
            .as_ref()
            .ok_or_else(|| invalid("principal curvatures undefined at this point"))?;
        Ok(curvature_functions(k))
    }
}

pub fn curvature_functions(k: &[f64]) -> CurvatureEval {
    let m = k.len();
    // e[j] accumulates the j-th elementary symmetric polynomial.
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for &ki in k {
        for j in (1..=m).rev() {
            e[j] += e[j - 1] * ki;
        }
    }
    let h = e
        .iter()
        .enumerate()
        .map(|(j, ej)| ej / binom(m, j))
        .collect();
    CurvatureEval { h }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

impl Body {
    pub fn new(kind: BodyKind, dim: usize) -> Result<Self> {
        check_ambient_dim(dim)?;
        match &kind {
            BodyKind::Ball { radius } => positive("radius", *radius)?,
            BodyKind::Ellipsoid { semiaxes } => {
                if semiaxes.len() != dim {
                    return Err(Error::Dimension(format!(
                        "ellipsoid has {} semiaxes but d={dim}",
                        semiaxes.len()
                    )));
                }
                for &a in semiaxes {
                    positive("semiaxis", a)?;
                }
            }
            BodyKind::Capsule {
                cap_radius,
                core_length,
                axis,
            } => {
                positive("cap_radius", *cap_radius)?;
                if !(core_length.is_finite() && *core_length >= 0.0) {
                    return Err(invalid("core_length must be nonnegative"));
                }
                if *axis >= dim {
                    return Err(invalid(format!("capsule axis {axis} out of range for d={dim}")));
                }
            }
            BodyKind::Cube { side } => positive("side", *side)?,
        }
        Ok(Body { kind, dim })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Body::new(BodyKind::Ball { radius }, dim)
    }

    pub fn ellipsoid(semiaxes: &[f64]) -> Result<Self> {
        Body::new(
            BodyKind::Ellipsoid {
                semiaxes: semiaxes.to_vec(),
            },
            semiaxes.len(),
        )
    }

    pub fn capsule(dim: usize, cap_radius: f64, core_length: f64, axis: usize) -> Result<Self> {
        Body::new(
            BodyKind::Capsule {
                cap_radius,
                core_length,
                axis,
            },
            dim,
        )
    }

    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Body::new(BodyKind::Cube { side }, dim)
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_len(&self, v: &VecD) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "expected a {}-vector, got length {}",
                self.dim,
                v.len()
            )));
        }
        Ok(())
    }

    /// `h_K(u) = max_{x in K} <x, u>`; `u` need not be a unit vector.
    pub fn support(&self, u: &VecD) -> Result<f64> {
        self.check_len(u)?;
        let norm = u.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroDirection);
        }
        Ok(match &self.kind {
            BodyKind::Ball { radius } => radius * norm,
            BodyKind::Ellipsoid { semiaxes } => semiaxes
                .iter()
                .zip(u.iter())
                .map(|(a, ui)| (a * ui).powi(2))
                .sum::<f64>()
                .sqrt(),
            BodyKind::Capsule {
                cap_radius,
                core_length,
                axis,
            } => 0.5 * core_length * u[*axis].abs() + cap_radius * norm,
            BodyKind::Cube { side } => 0.5 * side * u.iter().map(|c| c.abs()).sum::<f64>(),
        })
    }

    pub fn contains(&self, p: &VecD, tol: f64) -> bool {
        if p.len() != self.dim {
            return false;
        }
        match &self.kind {
            BodyKind::Ball { radius } => p.norm() <= radius + tol,
            BodyKind::Ellipsoid { semiaxes } => ellipsoid_gauge(semiaxes, p) <= 1.0 + tol,
            BodyKind::Capsule {
                cap_radius,
                core_length,
                axis,
            } => capsule_core_distance(p, *core_length, *axis) <= cap_radius + tol,
            BodyKind::Cube { side } => p.amax() <= 0.5 * side + tol,
        }
    }

    /// Distance-like deviation of `x` from `∂K`; zero exactly on the boundary.
    pub fn boundary_residual(&self, x: &VecD) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => (x.norm() - radius).abs(),
            BodyKind::Ellipsoid { semiaxes } => {
                let amin = semiaxes.iter().copied().fold(f64::INFINITY, f64::min);
                (ellipsoid_gauge(semiaxes, x) - 1.0).abs() * amin
            }
            BodyKind::Capsule {
                cap_radius,
                core_length,
                axis,
            } => (capsule_core_distance(x, *core_length, *axis) - cap_radius).abs(),
            BodyKind::Cube { side } => (x.amax() - 0.5 * side).abs(),
        }
    }

    /// Distance from the origin to `∂K` along the unit direction `w`.
    pub fn radial(&self, w: &VecD) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semiaxes } => 1.0 / ellipsoid_gauge(semiaxes, w),
            BodyKind::Cube { side } => 0.5 * side / w.amax(),
            BodyKind::Capsule {
                cap_radius: r,
                core_length,
                axis,
            } => {
                let half = 0.5 * core_length;
                let wa = w[*axis];
                let perp = (w.norm_squared() - wa * wa).max(0.0).sqrt();
                let t_side = if perp > 0.0 { r / perp } else { f64::INFINITY };
                let t_end = if wa != 0.0 { half / wa.abs() } else { f64::INFINITY };
                let mut t = t_side.min(t_end);
                for s in [-1.0, 1.0] {
                    let b = s * half * wa;
                    let disc = b * b - half * half + r * r;
                    if disc >= 0.0 {
                        t = t.max(b + disc.sqrt());
                    }
                }
                t
            }
        }
    }

    /// The boundary point hit by the ray from the origin in direction `w`.
    pub fn boundary_point_towards(&self, w: &VecD) -> Result<BoundaryPoint> {
        self.check_len(w)?;
        let norm = w.norm();
        if norm == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let w = w / norm;
        let x = &w * self.radial(&w);
        self.normal_and_curvatures(&x)
    }

    fn boundary_tolerance(&self) -> f64 {
        1e-9 * self.circumradius().max(1.0)
    }

    /// Outer unit normal and principal curvatures at a boundary point.
    pub fn normal_and_curvatures(&self, x: &VecD) -> Result<BoundaryPoint> {
        self.check_len(x)?;
        let residual = self.boundary_residual(x);
        if residual > self.boundary_tolerance() {
            return Err(Error::NotOnBoundary { residual });
        }
        let d = self.dim;
        match &self.kind {
            BodyKind::Ball { radius } => Ok(BoundaryPoint {
                x: x.clone(),
                normal: x / x.norm(),
                curvatures: Some(vec![1.0 / radius; d - 1]),
            }),
            BodyKind::Ellipsoid { semiaxes } => {
                let grad = VecD::from_fn(d, |i, _| x[i] / (semiaxes[i] * semiaxes[i]));
                let gnorm = grad.norm();
                let normal = &grad / gnorm;
                let tangent = complement_basis(&normal);
                let t = DMatrix::from_columns(&tangent);
                let hess = DMatrix::from_diagonal(&VecD::from_fn(d, |i, _| {
                    1.0 / (semiaxes[i] * semiaxes[i])
                }));
                let shape = t.transpose() * hess * &t / gnorm;
                let k = symmetric_eigenvalues(shape)
                    .into_iter()
                    .map(|v| v.max(0.0))
                    .collect();
                Ok(BoundaryPoint {
                    x: x.clone(),
                    normal,
                    curvatures: Some(k),
                })
            }
            BodyKind::Capsule {
                cap_radius: r,
                core_length,
                axis,
            } => {
                let half = 0.5 * core_length;
                let c = x[*axis];
                if c.abs() <= half {
                    let mut normal = x.clone();
                    normal[*axis] = 0.0;
                    normal /= normal.norm();
                    let mut k = vec![1.0 / r; d - 1];
                    k[0] = 0.0;
                    Ok(BoundaryPoint {
                        x: x.clone(),
                        normal,
                        curvatures: Some(k),
                    })
                } else {
                    let mut normal = x.clone();
                    normal[*axis] -= half * c.signum();
                    normal /= normal.norm();
                    Ok(BoundaryPoint {
                        x: x.clone(),
                        normal,
                        curvatures: Some(vec![1.0 / r; d - 1]),
                    })
                }
            }
            BodyKind::Cube { side } => {
                let half = 0.5 * side;
                let edge_tol = 1e-12 * side;
                let mut facets = (0..d).filter(|&i| x[i].abs() >= half - edge_tol);
                let i = facets.next().ok_or(Error::NotOnBoundary { residual })?;
                if facets.next().is_some() {
                    return Err(Error::EdgePoint);
                }
                Ok(BoundaryPoint {
                    x: x.clone(),
                    normal: basis_vector(d, i) * x[i].signum(),
                    curvatures: Some(vec![0.0; d - 1]),
                })
            }
        }
    }

    pub fn rolling_radius(&self) -> Option<f64> {
        match &self.kind {
            BodyKind::Ball { radius } => Some(*radius),
            BodyKind::Ellipsoid { semiaxes } => {
                let amin = semiaxes.iter().copied().fold(f64::INFINITY, f64::min);
                let amax = semiaxes.iter().copied().fold(0.0, f64::max);
                Some(amin * amin / amax)
            }
            BodyKind::Capsule { cap_radius, .. } => Some(*cap_radius),
            BodyKind::Cube { .. } => None,
        }
    }

    /// `max_{x in K} |x|`.
    pub fn circumradius(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semiaxes } => semiaxes.iter().copied().fold(0.0, f64::max),
            BodyKind::Capsule {
                cap_radius,
                core_length,
                ..
            } => 0.5 * core_length + cap_radius,
            BodyKind::Cube { side } => 0.5 * side * (self.dim as f64).sqrt(),
        }
    }

    /// `(d-1)`-dimensional boundary measure.
    pub fn surface_area(&self) -> Result<IntrinsicVolume> {
        let d = self.dim;
        let df = d as f64;
        let exact = |value| Ok(IntrinsicVolume { value, numeric: false });
        match &self.kind {
            BodyKind::Ball { radius } => exact(df * alpha(d) * radius.powi(d as i32 - 1)),
            BodyKind::Cube { side } => exact(2.0 * df * side.powi(d as i32 - 1)),
            BodyKind::Capsule {
                cap_radius: r,
                core_length,
                ..
            } => exact(
                df * alpha(d) * r.powi(d as i32 - 1)
                    + (df - 1.0) * alpha(d - 1) * r.powi(d as i32 - 2) * core_length,
            ),
            BodyKind::Ellipsoid { .. } => {
                let (value, _) = quadrature::integrate_adaptive(self, 1e-10, |_| Ok(1.0))?;
                Ok(IntrinsicVolume { value, numeric: true })
            }
        }
    }

    /// Ground-truth intrinsic volume `V_j(K)`.
    pub fn intrinsic_volume(&self, j: usize) -> Result<IntrinsicVolume> {
        let d = self.dim;
        if j > d {
            return Err(invalid(format!("intrinsic volume index {j} exceeds d={d}")));
        }
        let exact = |value| Ok(IntrinsicVolume { value, numeric: false });
        if j == 0 {
            return exact(1.0);
        }
        match &self.kind {
            BodyKind::Ball { radius } => {
                exact(binom(d, j) * alpha(d) / alpha(d - j) * radius.powi(j as i32))
            }
            BodyKind::Cube { side } => exact(binom(d, j) * side.powi(j as i32)),
            BodyKind::Capsule {
                cap_radius: r,
                core_length,
                ..
            } => {
                // Parallel body of a segment; the segment has V_0 = 1, V_1 = length.
                let seg = [1.0, *core_length];
                let v = (0..=j.min(1))
                    .map(|k| {
                        binom(d - k, d - j) * alpha(d - k) / alpha(d - j)
                            * r.powi((j - k) as i32)
                            * seg[k]
                    })
                    .sum();
                exact(v)
            }
            BodyKind::Ellipsoid { semiaxes } => {
                if j == d {
                    return exact(alpha(d) * semiaxes.iter().product::<f64>());
                }
                if d > 3 {
                    return Err(Error::NoAnalyticValue {
                        what: format!("V_{j} of an ellipsoid in d={d}"),
                    });
                }
                // V_j = binom(d,j)/(d alpha_{d-j}) * integral of H_{d-1-j} over the boundary.
                let order = d - 1 - j;
                let (integral, _) = quadrature::integrate_adaptive(self, 1e-10, |bp| {
                    Ok(bp.curvature_functions()?.h[order])
                })?;
                Ok(IntrinsicVolume {
                    value: binom(d, j) / (d as f64 * alpha(d - j)) * integral,
                    numeric: true,
                })
            }
        }
    }

    /// The orthogonal projection `K|L`, prepared for repeated membership queries.
    pub fn shadow(&self, frame: &Frame) -> Result<Shadow> {
        if frame.ambient_dim() != self.dim {
            return Err(Error::Dimension(format!(
                "frame lives in R^{} but body in R^{}",
                frame.ambient_dim(),
                self.dim
            )));
        }
        let j = frame.dim();
        let b = frame.basis();
        let shape = match &self.kind {
            BodyKind::Ball { radius } => ShadowShape::Ball { radius: *radius },
            BodyKind::Ellipsoid { semiaxes } => {
                let qinv = DMatrix::from_diagonal(&VecD::from_fn(self.dim, |i, _| {
                    semiaxes[i] * semiaxes[i]
                }));
                let m = b.transpose() * qinv * b;
                let chol = m.cholesky().ok_or_else(|| {
                    Error::Numeric("singular shadow matrix for the ellipsoid".into())
                })?;
                ShadowShape::Ellipsoid { chol }
            }
            BodyKind::Capsule {
                cap_radius,
                core_length,
                axis,
            } => {
                let end = b.row(*axis).transpose() * (0.5 * core_length);
                ShadowShape::Capsule {
                    end,
                    radius: *cap_radius,
                }
            }
            BodyKind::Cube { side } => {
                let d = self.dim;
                let vertices = (0..1usize << d)
                    .map(|mask| {
                        let v = VecD::from_fn(d, |i, _| {
                            if mask >> i & 1 == 1 {
                                0.5 * side
                            } else {
                                -0.5 * side
                            }
                        });
                        b.tr_mul(&v)
                    })
                    .collect();
                ShadowShape::Polytope { vertices }
            }
        };
        let mut lo = Vec::with_capacity(j);
        let mut hi = Vec::with_capacity(j);
        for i in 0..j {
            let col = frame.column(i);
            hi.push(self.support(&col)?);
            lo.push(-self.support(&(-col))?);
        }
        Ok(Shadow { shape, lo, hi })
    }

    /// Whether `y` (frame coordinates) lies in `K|L`.
    pub fn projected_contains(&self, frame: &Frame, y: &VecD, tol: f64) -> Result<bool> {
        self.shadow(frame)?.contains(y, tol)
    }
}

fn ellipsoid_gauge(semiaxes: &[f64], p: &VecD) -> f64 {
    semiaxes
        .iter()
        .zip(p.iter())
        .map(|(a, x)| (x / a).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn capsule_core_distance(p: &VecD, core_length: f64, axis: usize) -> f64 {
    let half = 0.5 * core_length;
    let c = p[axis];
    let excess = (c.abs() - half).max(0.0);
    (p.norm_squared() - c * c + excess * excess).max(0.0).sqrt()
}

#[derive(Clone, Debug)]
enum ShadowShape {
    Ball { radius: f64 },
    Ellipsoid { chol: nalgebra::Cholesky<f64, nalgebra::Dyn> },
    Capsule { end: VecD, radius: f64 },
    Polytope { vertices: Vec<VecD> },
}

/// Projection of a body onto a frame, in frame coordinates.
#[derive(Clone, Debug)]
pub struct Shadow {
    shape: ShadowShape,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Shadow {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Axis-aligned bounding box in frame coordinates, from support values.
    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn box_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, y: &VecD, tol: f64) -> Result<bool> {
        if y.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "shadow point has length {} but the subspace has dimension {}",
                y.len(),
                self.dim()
            )));
        }
        Ok(match &self.shape {
            ShadowShape::Ball { radius } => y.norm() <= radius + tol,
            ShadowShape::Ellipsoid { chol } => {
                let z = chol.solve(y);
                y.dot(&z).max(0.0).sqrt() <= 1.0 + tol
            }
            ShadowShape::Capsule { end, radius } => {
                let len2 = end.norm_squared();
                let closest = if len2 > 0.0 {
                    end * (y.dot(end) / len2).clamp(-1.0, 1.0)
                } else {
                    VecD::zeros(y.len())
                };
                (y - closest).norm() <= radius + tol
            }
            ShadowShape::Polytope { vertices } => in_hull(vertices, y, tol.max(1e-12))?.inside,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_subspace, random_unit_vector, vector};
    use crate::rng::{derive_stream, SeedSpec};
    use crate::sampling::sample_boundary_uniform;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn support_examples() {
        let ball = Body::ball(3, 1.0).unwrap();
        let mut rng = derive_stream(SeedSpec::new(1, 0), 0);
        let u = random_unit_vector(3, &mut rng).unwrap();
        close(ball.support(&u).unwrap(), 1.0, 1e-15);

        let cube = Body::cube(2, 2.0).unwrap();
        let diag = vector(&[1.0, 1.0]) / 2f64.sqrt();
        close(cube.support(&diag).unwrap(), 2f64.sqrt(), 1e-15);

        let cap = Body::capsule(3, 1.0, 2.0, 0).unwrap();
        close(cap.support(&basis_vector(3, 0)).unwrap(), 2.0, 1e-15);

        assert_eq!(ball.support(&VecD::zeros(3)), Err(Error::ZeroDirection));
    }

    #[test]
    fn support_is_homogeneous_and_subadditive() {
        let bodies = [
            Body::ellipsoid(&[2.0, 1.0, 0.5]).unwrap(),
            Body::capsule(3, 0.7, 1.3, 2).unwrap(),
            Body::cube(3, 1.5).unwrap(),
        ];
        let mut rng = derive_stream(SeedSpec::new(2, 0), 0);
        for body in &bodies {
            for _ in 0..200 {
                let u = random_unit_vector(3, &mut rng).unwrap();
                let v = random_unit_vector(3, &mut rng).unwrap();
                let hu = body.support(&u).unwrap();
                close(body.support(&(&u * 3.5)).unwrap(), 3.5 * hu, 1e-12);
                assert!(body.support(&(&u + &v)).unwrap() <= hu + body.support(&v).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn contains_examples() {
        assert!(Body::ball(2, 1.0).unwrap().contains(&VecD::zeros(2), 0.0));
        let e = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        assert!(!e.contains(&vector(&[2.001, 0.0]), 1e-6));
        assert!(e.contains(&vector(&[1.999, 0.0]), 1e-6));
        // Distance to the core segment is sqrt(0.5^2 + 0.9^2) > 1.
        let cap = Body::capsule(2, 1.0, 2.0, 0).unwrap();
        assert!(!cap.contains(&vector(&[1.5, 0.9]), 1e-9));
        assert!(cap.contains(&vector(&[1.5, 0.8]), 1e-9));
    }

    #[test]
    fn ball_curvatures() {
        let ball = Body::ball(4, 2.0).unwrap();
        let bp = ball.boundary_point_towards(&vector(&[1.0, -2.0, 0.5, 3.0])).unwrap();
        assert_eq!(bp.curvatures.as_ref().unwrap(), &vec![0.5; 3]);
        let h = bp.curvature_functions().unwrap().h;
        for (j, hj) in h.iter().enumerate() {
            close(*hj, 0.5f64.powi(j as i32), 1e-15);
        }
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let (a, b) = (2.0, 1.0);
        let e = Body::ellipsoid(&[a, b]).unwrap();
        let bp = e.normal_and_curvatures(&vector(&[a, 0.0])).unwrap();
        close(bp.curvatures.unwrap()[0], a / (b * b), 1e-12);
        // Finite-difference curvature of (a cos t, b sin t) at t = 0.
        let h = 1e-4;
        let p = |t: f64| (a * t.cos(), b * t.sin());
        let (x0, y0) = p(-h);
        let (x1, y1) = p(0.0);
        let (x2, y2) = p(h);
        let (dx, dy) = ((x2 - x0) / (2.0 * h), (y2 - y0) / (2.0 * h));
        let (ddx, ddy) = ((x2 - 2.0 * x1 + x0) / (h * h), (y2 - 2.0 * y1 + y0) / (h * h));
        let k_fd = (dx * ddy - dy * ddx).abs() / (dx * dx + dy * dy).powf(1.5);
        close(k_fd, a / (b * b), 1e-6);
    }

    #[test]
    fn capsule_cylinder_curvatures() {
        let cap = Body::capsule(3, 0.5, 2.0, 0).unwrap();
        let bp = cap.normal_and_curvatures(&vector(&[0.3, 0.0, 0.5])).unwrap();
        assert_eq!(bp.curvatures.as_ref().unwrap(), &vec![0.0, 2.0]);
        let h = bp.curvature_functions().unwrap().h;
        close(h[1], 1.0, 1e-15);
        assert_eq!(h[2], 0.0);
        close(bp.normal[2], 1.0, 1e-15);
    }

    #[test]
    fn curvature_function_examples() {
        assert_eq!(curvature_functions(&[1.0, 1.0]).h, vec![1.0, 1.0, 1.0]);
        let r = 0.25;
        let h = curvature_functions(&[0.0, 1.0 / r]).h;
        close(h[1], 1.0 / (2.0 * r), 1e-15);
        assert_eq!(h[2], 0.0);
        let h = curvature_functions(&[2.0, 3.0, 4.0]).h;
        close(h[1], 3.0, 1e-14);
        close(h[2], 26.0 / 3.0, 1e-14);
        close(h[3], 24.0, 1e-14);
    }

    #[test]
    fn boundary_errors() {
        let ball = Body::ball(3, 1.0).unwrap();
        assert!(matches!(
            ball.normal_and_curvatures(&vector(&[0.5, 0.0, 0.0])),
            Err(Error::NotOnBoundary { .. })
        ));
        let cube = Body::cube(3, 1.0).unwrap();
        assert_eq!(
            cube.normal_and_curvatures(&vector(&[0.5, 0.5, 0.1])),
            Err(Error::EdgePoint)
        );
        let bp = cube.normal_and_curvatures(&vector(&[0.5, 0.2, 0.1])).unwrap();
        assert_eq!(bp.normal, basis_vector(3, 0));
        assert_eq!(bp.curvatures.unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn analytic_intrinsic_volumes() {
        close(Body::ball(2, 1.0).unwrap().intrinsic_volume(2).unwrap().value, PI, 1e-14);
        close(Body::cube(3, 1.0).unwrap().intrinsic_volume(1).unwrap().value, 3.0, 1e-14);
        let cap = Body::capsule(3, 1.0, 2.0, 1).unwrap();
        close(
            cap.intrinsic_volume(3).unwrap().value,
            4.0 * PI / 3.0 + 2.0 * PI,
            1e-12,
        );
        // V_2 = half the surface area, V_1 of a parallel body adds the segment length.
        close(cap.intrinsic_volume(2).unwrap().value, 0.5 * cap.surface_area().unwrap().value, 1e-12);
        close(cap.intrinsic_volume(1).unwrap().value, 4.0 + 2.0, 1e-12);
        close(Body::ball(3, 1.0).unwrap().intrinsic_volume(1).unwrap().value, 4.0, 1e-12);
        assert!(Body::ellipsoid(&[1.0, 2.0, 3.0, 4.0]).unwrap().intrinsic_volume(2).is_err());
    }

    #[test]
    fn ellipsoid_numeric_intrinsic_volumes() {
        // A degenerate ellipsoid equal to the unit ball.
        let e = Body::ellipsoid(&[1.0, 1.0, 1.0]).unwrap();
        for j in 0..=3 {
            let v = e.intrinsic_volume(j).unwrap().value;
            let w = Body::ball(3, 1.0).unwrap().intrinsic_volume(j).unwrap().value;
            close(v, w, 1e-8 * w);
        }
        // Ellipse perimeter (a=2, b=1) by an independent arc-length sum.
        let e2 = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let n = 200_000;
        let mut perim = 0.0;
        for i in 0..n {
            let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            perim += (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt() * 2.0 * PI / n as f64;
        }
        let v1 = e2.intrinsic_volume(1).unwrap();
        assert!(v1.numeric);
        close(v1.value, perim / 2.0, 1e-8);
    }

    #[test]
    fn rolling_radii() {
        assert_eq!(Body::ball(2, 2.0).unwrap().rolling_radius(), Some(2.0));
        assert_eq!(Body::ellipsoid(&[2.0, 1.0]).unwrap().rolling_radius(), Some(0.5));
        assert_eq!(Body::cube(2, 1.0).unwrap().rolling_radius(), None);
        // Minimal radius of curvature over a dense sweep of the ellipse.
        let e = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let min_radius = (0..10_000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 10_000.0;
                let bp = e.boundary_point_towards(&vector(&[t.cos(), t.sin()])).unwrap();
                1.0 / bp.curvatures.unwrap()[0]
            })
            .fold(f64::INFINITY, f64::min);
        close(min_radius, 0.5, 1e-9);
    }

    #[test]
    fn projected_contains_examples() {
        let mut rng = derive_stream(SeedSpec::new(3, 0), 0);
        let ball = Body::ball(3, 1.0).unwrap();
        let l = random_subspace(3, 2, &mut rng).unwrap();
        assert!(ball.projected_contains(&l, &VecD::zeros(2), 0.0).unwrap());

        let e = Body::ellipsoid(&[2.0, 1.0, 1.0]).unwrap();
        let plane = Frame::from_columns(&[basis_vector(3, 0), basis_vector(3, 1)]).unwrap();
        assert!(e.projected_contains(&plane, &vector(&[1.9, 0.0]), 1e-9).unwrap());
        assert!(!e.projected_contains(&plane, &vector(&[0.0, 1.1]), 1e-9).unwrap());

        let cube = Body::cube(3, 2.0).unwrap();
        let s = 0.5f64.sqrt();
        let tilted = Frame::from_columns(&[vector(&[s, s, 0.0]), basis_vector(3, 2)]).unwrap();
        let edge = 2f64.sqrt();
        assert!(!cube.projected_contains(&tilted, &vector(&[edge + 0.01, 0.0]), 1e-9).unwrap());
        assert!(cube.projected_contains(&tilted, &vector(&[edge - 0.01, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn steiner_polynomial_matches_parallel_volume() {
        for d in 2..=5 {
            let r = 0.8;
            let ball = Body::ball(d, r).unwrap();
            let cap = Body::capsule(d, r, 1.7, 0).unwrap();
            for lambda in [0.1, 0.5, 1.0] {
                let grown_ball = Body::ball(d, r + lambda).unwrap();
                let grown_cap = Body::capsule(d, r + lambda, 1.7, 0).unwrap();
                for (k, grown) in [(&ball, &grown_ball), (&cap, &grown_cap)] {
                    let steiner: f64 = (0..=d)
                        .map(|j| {
                            lambda.powi((d - j) as i32)
                                * alpha(d - j)
                                * k.intrinsic_volume(j).unwrap().value
                        })
                        .sum();
                    let direct = grown.intrinsic_volume(d).unwrap().value;
                    close(steiner, direct, 1e-10 * direct);
                }
            }
        }
    }

    #[test]
    fn sampled_points_satisfy_support_and_shadow_checks() {
        let bodies = [
            Body::ball(3, 1.3).unwrap(),
            Body::ellipsoid(&[2.0, 1.0, 0.7]).unwrap(),
            Body::capsule(3, 1.0, 2.0, 1).unwrap(),
            Body::cube(3, 1.0).unwrap(),
            Body::ellipsoid(&[1.5, 1.0]).unwrap(),
        ];
        let mut rng = derive_stream(SeedSpec::new(4, 0), 0);
        for body in &bodies {
            let d = body.dim();
            for trial in 0..2_000 {
                let bp = sample_boundary_uniform(body, &mut rng).unwrap();
                close((bp.normal.norm() - 1.0).abs(), 0.0, 1e-12);
                assert!((body.support(&bp.normal).unwrap() - bp.x.dot(&bp.normal)).abs() < 1e-8);
                if let Some(k) = &bp.curvatures {
                    assert!(k.iter().all(|&ki| ki >= 0.0));
                }
                let j = 1 + trial % d;
                let l = random_subspace(d, j, &mut rng).unwrap();
                let y = l.project(&bp.x).unwrap();
                assert!(body.projected_contains(&l, &y, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn ellipsoid_shape_operator_matches_second_fundamental_form() {
        let e = Body::ellipsoid(&[2.0, 1.0, 0.6]).unwrap();
        let mut rng = derive_stream(SeedSpec::new(5, 0), 0);
        for _ in 0..1_000 {
            let bp = sample_boundary_uniform(&e, &mut rng).unwrap();
            let tangent = complement_basis(&bp.normal);
            let h = 1e-3;
            // Depth below the tangent plane along -u, by bisection.
            let depth = |z: &VecD| {
                let p = &bp.x + z;
                let (mut lo, mut hi) = (-1.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let pt = &p - &bp.normal * mid;
                    if e.contains(&pt, 0.0) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let n = tangent.len();
            let mut form = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    let ea = &tangent[a] * h;
                    let eb = &tangent[b] * h;
                    let fpp = depth(&(&ea + &eb));
                    let fpm = depth(&(&ea - &eb));
                    let fmp = depth(&(-&ea + &eb));
                    let fmm = depth(&(-&ea - &eb));
                    form[(a, b)] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                }
            }
            let fd = symmetric_eigenvalues(form);
            let k = bp.curvatures.unwrap();
            for (x, y) in fd.iter().zip(&k) {
                assert!((x - y).abs() < 1e-4 * y.max(1.0), "{fd:?} vs {k:?}");
            }
        }
    }
}

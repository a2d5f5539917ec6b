//! Boundary integration `∫_{∂K} f dH^{d-1}`.
//!
//! Product Gauss-Legendre/trapezoid rules for `d ∈ {2, 3}`, built piecewise
//! per body so every panel is smooth; Monte Carlo through the radial
//! parametrization in higher dimension.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, BodyKind, BoundaryPoint};
use crate::error::{invalid, Result};
use crate::functionals::alpha;
use crate::linalg::{random_unit_vector, VecD};
use crate::rng::{derive_stream, SeedSpec};

/// How to evaluate a boundary integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadSpec {
    /// Double the rule order until two successive values agree to `rtol`.
    Adaptive { rtol: f64 },
    Fixed { order: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::Adaptive { rtol: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub point: BoundaryPoint,
    pub weight: f64,
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(m.max(1)).unwrap());
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

fn point(body: &Body, x: VecD) -> Result<BoundaryPoint> {
    body.normal_and_curvatures(&x)
}

fn direct(x: VecD, normal: VecD, k: Vec<f64>) -> BoundaryPoint {
    BoundaryPoint {
        x,
        normal,
        curvatures: Some(k),
    }
}

/// Unit sphere directions with surface weights: `(ω, dσ)`.
fn sphere_rule(d: usize, order: usize) -> Vec<(VecD, f64)> {
    if d == 2 {
        let n = 4 * order;
        let dt = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                (VecD::from_column_slice(&[t.cos(), t.sin()]), dt)
            })
            .collect()
    } else {
        let nphi = 2 * order;
        let dphi = 2.0 * PI / nphi as f64;
        let mut out = Vec::with_capacity(order * nphi);
        for (theta, wt) in gauss_legendre(order, 0.0, PI) {
            for i in 0..nphi {
                let phi = (i as f64 + 0.5) * dphi;
                let w = VecD::from_column_slice(&[
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ]);
                out.push((w, wt * theta.sin() * dphi));
            }
        }
        out
    }
}

/// Quadrature nodes on `∂K`, `d ∈ {2, 3}`.
pub fn boundary_rule(body: &Body, order: usize) -> Result<Vec<Node>> {
    let d = body.dim();
    if d > 3 {
        return Err(invalid("product boundary rules exist only for d <= 3"));
    }
    let mut nodes = Vec::new();
    match body.kind() {
        BodyKind::Ball { radius } => {
            for (w, dw) in sphere_rule(d, order) {
                nodes.push(Node {
                    point: direct(&w * *radius, w, vec![1.0 / radius; d - 1]),
                    weight: dw * radius.powi(d as i32 - 1),
                });
            }
        }
        BodyKind::Ellipsoid { semiaxes } => {
            let prod: f64 = semiaxes.iter().product();
            for (w, dw) in sphere_rule(d, order) {
                let x = VecD::from_fn(d, |i, _| semiaxes[i] * w[i]);
                let jac = prod * VecD::from_fn(d, |i, _| w[i] / semiaxes[i]).norm();
                nodes.push(Node {
                    point: point(body, x)?,
                    weight: dw * jac,
                });
            }
        }
        BodyKind::Capsule {
            cap_radius: r,
            core_length,
            axis,
        } => {
            let r = *r;
            let half = 0.5 * core_length;
            let others: Vec<usize> = (0..d).filter(|i| i != axis).collect();
            let embed = |a: f64, o: &[f64]| {
                let mut v = VecD::zeros(d);
                v[*axis] = a;
                for (idx, val) in others.iter().zip(o) {
                    v[*idx] = *val;
                }
                v
            };
            for s in [-1.0, 1.0] {
                // Hemispherical end cap around the axis direction s * e_axis.
                if d == 2 {
                    for (psi, wp) in gauss_legendre(2 * order, -0.5 * PI, 0.5 * PI) {
                        let w = embed(s * psi.cos(), &[psi.sin()]);
                        let x = &w * r + embed(s * half, &[0.0]);
                        nodes.push(Node {
                            point: direct(x, w, vec![1.0 / r]),
                            weight: wp * r,
                        });
                    }
                } else {
                    let nphi = 2 * order;
                    let dphi = 2.0 * PI / nphi as f64;
                    for (theta, wt) in gauss_legendre(order, 0.0, 0.5 * PI) {
                        for i in 0..nphi {
                            let phi = (i as f64 + 0.5) * dphi;
                            let w = embed(
                                s * theta.cos(),
                                &[theta.sin() * phi.cos(), theta.sin() * phi.sin()],
                            );
                            let x = &w * r + embed(s * half, &[0.0, 0.0]);
                            nodes.push(Node {
                                point: direct(x, w, vec![1.0 / r; 2]),
                                weight: wt * theta.sin() * dphi * r * r,
                            });
                        }
                    }
                }
            }
            if half > 0.0 {
                let zs = gauss_legendre(order, -half, half);
                if d == 2 {
                    for s in [-1.0, 1.0] {
                        for &(z, wz) in &zs {
                            nodes.push(Node {
                                point: direct(embed(z, &[s * r]), embed(0.0, &[s]), vec![0.0]),
                                weight: wz,
                            });
                        }
                    }
                } else {
                    let nphi = 4 * order;
                    let dphi = 2.0 * PI / nphi as f64;
                    for &(z, wz) in &zs {
                        for i in 0..nphi {
                            let phi = (i as f64 + 0.5) * dphi;
                            let n = embed(0.0, &[phi.cos(), phi.sin()]);
                            nodes.push(Node {
                                point: direct(embed(z, &[r * phi.cos(), r * phi.sin()]), n, vec![0.0, 1.0 / r]),
                                weight: wz * dphi * r,
                            });
                        }
                    }
                }
            }
        }
        BodyKind::Cube { side } => {
            let half = 0.5 * side;
            let line = gauss_legendre(order, -half, half);
            for i in 0..d {
                let others: Vec<usize> = (0..d).filter(|&k| k != i).collect();
                for s in [-1.0, 1.0] {
                    let mut normal = VecD::zeros(d);
                    normal[i] = s;
                    let mut push = |coords: &[(f64, f64)]| {
                        let mut x = VecD::zeros(d);
                        x[i] = s * half;
                        let mut weight = 1.0;
                        for (idx, (c, w)) in others.iter().zip(coords) {
                            x[*idx] = *c;
                            weight *= w;
                        }
                        nodes.push(Node {
                            point: direct(x, normal.clone(), vec![0.0; d - 1]),
                            weight,
                        });
                    };
                    if d == 2 {
                        for &p in &line {
                            push(&[p]);
                        }
                    } else {
                        for &p in &line {
                            for &q in &line {
                                push(&[p, q]);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(nodes)
}

pub fn integrate<F>(body: &Body, order: usize, f: F) -> Result<f64>
where
    F: Fn(&BoundaryPoint) -> Result<f64>,
{
    let mut sum = 0.0;
    for node in boundary_rule(body, order)? {
        sum += node.weight * f(&node.point)?;
    }
    Ok(sum)
}

/// Returns the value and the difference between the last two orders.
pub fn integrate_adaptive<F>(body: &Body, rtol: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(&BoundaryPoint) -> Result<f64>,
{
    if body.dim() > 3 {
        return integrate_monte_carlo(body, 400_000, 0x5eed, f);
    }
    let max_order = if body.dim() == 2 { 4096 } else { 256 };
    let mut order = 8;
    let mut prev = integrate(body, order, &f)?;
    loop {
        order *= 2;
        let cur = integrate(body, order, &f)?;
        let err = (cur - prev).abs();
        if err <= rtol * cur.abs().max(1e-300) || order >= max_order {
            return Ok((cur, err));
        }
        prev = cur;
    }
}

/// Radial-parametrization Monte Carlo: `ω` uniform on the sphere, weight
/// `dα_d r(ω)^{d-1} / <ω, u>`. Returns value and standard error.
pub fn integrate_monte_carlo<F>(body: &Body, samples: usize, seed: u64, f: F) -> Result<(f64, f64)>
where
    F: Fn(&BoundaryPoint) -> Result<f64>,
{
    if samples < 2 {
        return Err(invalid("Monte Carlo integration needs at least 2 samples"));
    }
    let d = body.dim();
    let sphere = d as f64 * alpha(d);
    let mut rng = derive_stream(SeedSpec::new(seed, 0x9a_0d), 0);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let w = random_unit_vector(d, &mut rng)?;
        let r = body.radial(&w);
        let bp = body.normal_and_curvatures(&(&w * r))?;
        let value = sphere * r.powi(d as i32 - 1) / w.dot(&bp.normal) * f(&bp)?;
        sum += value;
        sum2 += value * value;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

pub fn integrate_with<F>(body: &Body, spec: QuadSpec, f: F) -> Result<(f64, f64)>
where
    F: Fn(&BoundaryPoint) -> Result<f64>,
{
    match spec {
        QuadSpec::Adaptive { rtol } => integrate_adaptive(body, rtol, f),
        QuadSpec::Fixed { order } if body.dim() <= 3 => {
            let hi = integrate(body, order, &f)?;
            let lo = integrate(body, (order / 2).max(1), &f)?;
            Ok((hi, (hi - lo).abs()))
        }
        QuadSpec::Fixed { .. } => integrate_monte_carlo(body, 400_000, 0x5eed, f),
        QuadSpec::MonteCarlo { samples, seed } => integrate_monte_carlo(body, samples, seed, f),
    }
}

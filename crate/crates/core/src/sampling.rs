//! Boundary sampling with densities relative to the surface measure, and the
//! boundary mass of caps.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::bodies::{Body, BodyKind, BoundaryPoint};
use crate::error::{invalid, Error, Result};
use crate::functionals::alpha;
use crate::linalg::{complement_basis, random_unit_vector, VecD};
use crate::quadrature::{self, gauss_legendre};
use crate::rng::{derive_stream, SeedSpec};

const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// Proportional to `H_{d-1}(x)^exponent`.
    CurvaturePower { exponent: f64 },
    /// `base(x) * (1 + amplitude * exp(-|x - x0|^2 / (2 width^2)))`, with `x0`
    /// the boundary point in `direction` from the origin.
    Perturbed {
        base: Box<DensitySpec>,
        direction: Vec<f64>,
        amplitude: f64,
        width: f64,
    },
}

impl DensitySpec {
    pub fn label(&self) -> String {
        match self {
            DensitySpec::Uniform => "uniform".into(),
            DensitySpec::CurvaturePower { exponent } => format!("curvature_power({exponent})"),
            DensitySpec::Perturbed {
                base, amplitude, ..
            } => format!("perturbed({},{amplitude})", base.label()),
        }
    }
}

/// A density bound to a body, with its normalizer `Z` and envelope `M`.
#[derive(Clone, Debug)]
pub struct Density {
    spec: DensitySpec,
    normalizer: f64,
    sup_bound: f64,
    bump: Option<Bump>,
}

#[derive(Clone, Debug)]
struct Bump {
    base: Box<Density>,
    center: VecD,
    amplitude: f64,
    width: f64,
}

impl Density {
    pub fn uniform(body: &Body) -> Result<Density> {
        Density::new(body, DensitySpec::Uniform)
    }

    pub fn new(body: &Body, spec: DensitySpec) -> Result<Density> {
        let d = body.dim();
        match &spec {
            DensitySpec::Uniform => Ok(Density {
                normalizer: body.surface_area()?.value,
                sup_bound: 1.0,
                spec,
                bump: None,
            }),
            DensitySpec::CurvaturePower { exponent } => {
                let beta = *exponent;
                if !beta.is_finite() {
                    return Err(Error::InvalidDensity("exponent must be finite".into()));
                }
                if beta == 0.0 {
                    return Ok(Density {
                        normalizer: body.surface_area()?.value,
                        sup_bound: 1.0,
                        spec,
                        bump: None,
                    });
                }
                match body.kind() {
                    BodyKind::Ball { radius } => {
                        let h = radius.powi(-(d as i32 - 1)).powf(beta);
                        Ok(Density {
                            normalizer: body.surface_area()?.value * h,
                            sup_bound: h,
                            spec,
                            bump: None,
                        })
                    }
                    BodyKind::Ellipsoid { semiaxes } => {
                        let prod2: f64 = semiaxes.iter().map(|a| a * a).product();
                        let amax = semiaxes.iter().copied().fold(0.0, f64::max);
                        let amin = semiaxes.iter().copied().fold(f64::INFINITY, f64::min);
                        // Gauss curvature is extremal at the axis endpoints.
                        let kmax = amax.powi(d as i32 + 1) / prod2;
                        let kmin = amin.powi(d as i32 + 1) / prod2;
                        let sup_bound = kmax.powf(beta).max(kmin.powf(beta));
                        let mut density = Density {
                            normalizer: 1.0,
                            sup_bound,
                            spec,
                            bump: None,
                        };
                        density.normalizer = density.integrate_unnormalized(body)?;
                        Ok(density)
                    }
                    BodyKind::Capsule { .. } | BodyKind::Cube { .. } => Err(Error::InvalidDensity(
                        format!(
                            "density not positive: Gauss curvature vanishes on part of the {} boundary",
                            body.kind().name()
                        ),
                    )),
                }
            }
            DensitySpec::Perturbed {
                base,
                direction,
                amplitude,
                width,
            } => {
                if !(amplitude.is_finite() && *amplitude > -1.0) {
                    return Err(Error::InvalidDensity(
                        "bump amplitude must exceed -1 to keep the density positive".into(),
                    ));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidDensity("bump width must be positive".into()));
                }
                if direction.len() != d {
                    return Err(Error::Dimension(format!(
                        "bump direction has length {} but d={d}",
                        direction.len()
                    )));
                }
                let base = Density::new(body, (**base).clone())?;
                let center = body.boundary_point_towards(&VecD::from_column_slice(direction))?.x;
                let sup_bound = base.sup_bound * (1.0 + amplitude.max(0.0));
                let mut density = Density {
                    spec: spec.clone(),
                    normalizer: 1.0,
                    sup_bound,
                    bump: Some(Bump {
                        base: Box::new(base),
                        center,
                        amplitude: *amplitude,
                        width: *width,
                    }),
                };
                density.normalizer = density.integrate_unnormalized(body)?;
                Ok(density)
            }
        }
    }

    fn integrate_unnormalized(&self, body: &Body) -> Result<f64> {
        let (z, _) = quadrature::integrate_adaptive(body, 1e-10, |bp| self.unnormalized(bp))?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidDensity(format!("normalizer {z} is not positive")));
        }
        Ok(z)
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.spec, DensitySpec::Uniform)
            || matches!(self.spec, DensitySpec::CurvaturePower { exponent } if exponent == 0.0)
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Upper bound of the unnormalized density, used as rejection envelope.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn unnormalized(&self, bp: &BoundaryPoint) -> Result<f64> {
        match &self.spec {
            DensitySpec::Uniform => Ok(1.0),
            DensitySpec::CurvaturePower { exponent } => {
                if *exponent == 0.0 {
                    return Ok(1.0);
                }
                Ok(bp.curvature_functions()?.gauss().powf(*exponent))
            }
            DensitySpec::Perturbed { .. } => {
                let bump = self.bump.as_ref().expect("perturbed density carries its bump");
                let r2 = (&bp.x - &bump.center).norm_squared();
                let factor = 1.0 + bump.amplitude * (-r2 / (2.0 * bump.width * bump.width)).exp();
                Ok(bump.base.unnormalized(bp)? * factor)
            }
        }
    }

    /// Normalized density value `ρ(x)`.
    pub fn value(&self, bp: &BoundaryPoint) -> Result<f64> {
        Ok(self.unnormalized(bp)? / self.normalizer)
    }
}

/// `n` boundary points whose hull is the random polytope `K_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudSample {
    pub points: Vec<VecD>,
    /// Stream the cloud was drawn from, when known.
    pub seed: Option<(SeedSpec, u64)>,
}

impl CloudSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn uniform_point<R: Rng + ?Sized>(body: &Body, rng: &mut R) -> Result<VecD> {
    let d = body.dim();
    match body.kind() {
        BodyKind::Ball { radius } => Ok(random_unit_vector(d, rng)? * *radius),
        BodyKind::Ellipsoid { semiaxes } => {
            let amin = semiaxes.iter().copied().fold(f64::INFINITY, f64::min);
            for _ in 0..MAX_REJECTIONS {
                let w = random_unit_vector(d, rng)?;
                // Surface Jacobian of w -> A w relative to its maximum.
                let accept = amin * VecD::from_fn(d, |i, _| w[i] / semiaxes[i]).norm();
                if rng.random::<f64>() < accept {
                    return Ok(VecD::from_fn(d, |i, _| semiaxes[i] * w[i]));
                }
            }
            Err(Error::Envelope("ellipsoid rejection loop exceeded 10^6 iterations".into()))
        }
        BodyKind::Capsule {
            cap_radius: r,
            core_length,
            axis,
        } => {
            let df = d as f64;
            let caps = df * alpha(d) * r.powi(d as i32 - 1);
            let side = (df - 1.0) * alpha(d - 1) * r.powi(d as i32 - 2) * core_length;
            if rng.random::<f64>() * (caps + side) < caps {
                let w = random_unit_vector(d, rng)?;
                let mut x = &w * *r;
                let s = if w[*axis] >= 0.0 { 1.0 } else { -1.0 };
                x[*axis] += s * 0.5 * core_length;
                Ok(x)
            } else {
                let ring = if d == 2 {
                    VecD::from_element(1, if rng.random::<bool>() { 1.0 } else { -1.0 })
                } else {
                    random_unit_vector(d - 1, rng)?
                };
                let mut x = VecD::zeros(d);
                let mut k = 0;
                for i in 0..d {
                    if i == *axis {
                        x[i] = (rng.random::<f64>() - 0.5) * core_length;
                    } else {
                        x[i] = r * ring[k];
                        k += 1;
                    }
                }
                Ok(x)
            }
        }
        BodyKind::Cube { side } => {
            let half = 0.5 * side;
            loop {
                let facet = rng.random_range(0..2 * d);
                let mut x = VecD::from_fn(d, |_, _| (rng.random::<f64>() - 0.5) * side);
                if x.iter().any(|c| c.abs() >= half) {
                    // Edge or vertex: measure zero, resample.
                    continue;
                }
                x[facet / 2] = if facet % 2 == 0 { half } else { -half };
                return Ok(x);
            }
        }
    }
}

/// Draws a point from the normalized surface measure on `∂K`.
pub fn sample_boundary_uniform<R: Rng + ?Sized>(body: &Body, rng: &mut R) -> Result<BoundaryPoint> {
    let x = uniform_point(body, rng)?;
    body.normal_and_curvatures(&x)
}

/// Draws a point with density `ρ` by rejection against the uniform sampler.
pub fn sample_boundary<R: Rng + ?Sized>(body: &Body, density: &Density, rng: &mut R) -> Result<BoundaryPoint> {
    if density.is_uniform() {
        return sample_boundary_uniform(body, rng);
    }
    let m = density.sup_bound();
    for _ in 0..MAX_REJECTIONS {
        let bp = sample_boundary_uniform(body, rng)?;
        let value = density.unnormalized(&bp)?;
        if value > m * (1.0 + 1e-9) {
            return Err(Error::Envelope(format!(
                "density {value} exceeds envelope {m} at x = {:?}",
                bp.x.as_slice()
            )));
        }
        if rng.random::<f64>() * m < value {
            return Ok(bp);
        }
    }
    Err(Error::Envelope("density rejection loop exceeded 10^6 iterations".into()))
}

pub fn sample_cloud<R: Rng + ?Sized>(body: &Body, density: &Density, n: usize, rng: &mut R) -> Result<CloudSample> {
    if n == 0 {
        return Err(invalid("a cloud needs at least one point"));
    }
    let points = if density.is_uniform() {
        (0..n).map(|_| uniform_point(body, rng)).collect::<Result<Vec<_>>>()?
    } else {
        (0..n)
            .map(|_| sample_boundary(body, density, rng).map(|bp| bp.x))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(CloudSample { points, seed: None })
}

/// Cloud drawn from stream `k` of `seed`; reproducible across runs.
pub fn sample_cloud_seeded(body: &Body, density: &Density, n: usize, seed: SeedSpec, k: u64) -> Result<CloudSample> {
    let mut rng = derive_stream(seed, k);
    let mut cloud = sample_cloud(body, density, n, &mut rng)?;
    cloud.seed = Some((seed, k));
    Ok(cloud)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapMass {
    pub value: f64,
    pub stderr: f64,
    /// Closed form rather than numerical integration.
    pub exact: bool,
}

/// Boundary probability `s(t)` of the cap `{z ∈ K : <u(x), z> >= (1 - t) <u(x), x>}`.
pub fn cap_mass(body: &Body, density: &Density, bp: &BoundaryPoint, t: f64) -> Result<CapMass> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("cap parameter t must lie in (0, 1), got {t}")));
    }
    let d = body.dim();
    let h0 = bp.x.dot(&bp.normal);
    if matches!(body.kind(), BodyKind::Ball { .. }) && density.is_uniform() {
        // Normalized area of a spherical cap of relative height t.
        let value = 0.5 * beta_reg(0.5 * (d as f64 - 1.0), 0.5, t * (2.0 - t));
        return Ok(CapMass {
            value,
            stderr: 0.0,
            exact: true,
        });
    }
    let level = (1.0 - t) * h0;
    let in_cap = |w: &VecD| body.radial(w) * w.dot(&bp.normal) - level;
    let weight = |w: &VecD| -> Result<f64> {
        let r = body.radial(w);
        match body.normal_and_curvatures(&(w * r)) {
            Ok(p) => Ok(density.value(&p)? * r.powi(d as i32 - 1) / w.dot(&p.normal)),
            Err(Error::EdgePoint) => Ok(0.0),
            Err(e) => Err(e),
        }
    };
    let xhat = &bp.x / bp.x.norm();
    match d {
        2 => {
            let theta0 = xhat[1].atan2(xhat[0]);
            let dir = |a: f64| VecD::from_column_slice(&[a.cos(), a.sin()]);
            let edge = |s: f64| bisect(|delta| in_cap(&dir(theta0 + s * delta)), PI);
            let (lo, hi) = (theta0 - edge(-1.0), theta0 + edge(1.0));
            let integrate = |panels: usize| -> Result<f64> {
                let mut sum = 0.0;
                let width = (hi - lo) / panels as f64;
                for p in 0..panels {
                    let a = lo + p as f64 * width;
                    for (th, w) in gauss_legendre(16, a, a + width) {
                        sum += w * weight(&dir(th))?;
                    }
                }
                Ok(sum)
            };
            let fine = integrate(16)?;
            let coarse = integrate(8)?;
            Ok(CapMass {
                value: fine,
                stderr: (fine - coarse).abs(),
                exact: false,
            })
        }
        3 => {
            let perp = complement_basis(&xhat);
            let dir = |a: f64, phi: f64| {
                &xhat * a.cos() + (&perp[0] * phi.cos() + &perp[1] * phi.sin()) * a.sin()
            };
            let integrate = |nphi: usize, nalpha: usize| -> Result<f64> {
                let dphi = 2.0 * PI / nphi as f64;
                let mut sum = 0.0;
                for i in 0..nphi {
                    let phi = (i as f64 + 0.5) * dphi;
                    let amax = bisect(|a| in_cap(&dir(a, phi)), PI);
                    for (a, w) in gauss_legendre(nalpha, 0.0, amax) {
                        sum += w * a.sin() * weight(&dir(a, phi))?;
                    }
                }
                Ok(sum * dphi)
            };
            let fine = integrate(96, 48)?;
            let coarse = integrate(48, 24)?;
            Ok(CapMass {
                value: fine,
                stderr: (fine - coarse).abs(),
                exact: false,
            })
        }
        _ => {
            let samples = 1_000_000;
            let sphere = d as f64 * alpha(d);
            let mut rng = derive_stream(SeedSpec::new(0xca9, 0), 0);
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..samples {
                let w = random_unit_vector(d, &mut rng)?;
                let v = if in_cap(&w) >= 0.0 { sphere * weight(&w)? } else { 0.0 };
                sum += v;
                sum2 += v * v;
            }
            let n = samples as f64;
            let mean = sum / n;
            Ok(CapMass {
                value: mean,
                stderr: ((sum2 / n - mean * mean).max(0.0) / n).sqrt(),
                exact: false,
            })
        }
    }
}

/// Largest `s ∈ [0, upper]` with `g(s) >= 0`, for `g` positive at 0 and
/// negative at `upper` with a single sign change.
fn bisect<G: Fn(f64) -> f64>(g: G, upper: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * upper {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use crate::rng::{derive_stream, SeedSpec};
    use crate::stats::{ks_critical_1pct, ks_statistic};

    #[test]
    fn ball_samples_are_centered() {
        let ball = Body::ball(3, 1.0).unwrap();
        let mut rng = derive_stream(SeedSpec::new(41, 0), 0);
        let n = 100_000;
        let mut sum = VecD::zeros(3);
        for _ in 0..n {
            sum += sample_boundary_uniform(&ball, &mut rng).unwrap().x;
        }
        let se = (1.0f64 / 3.0 / n as f64).sqrt();
        assert!((sum / n as f64).amax() < 3.0 * se);
    }

    #[test]
    fn ball_octants_are_uniform() {
        let ball = Body::ball(3, 1.0).unwrap();
        let density = Density::uniform(&ball).unwrap();
        let mut rng = derive_stream(SeedSpec::new(42, 0), 0);
        let n = 100_000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            let x = sample_boundary(&ball, &density, &mut rng).unwrap().x;
            let oct = (x[0] > 0.0) as usize | ((x[1] > 0.0) as usize) << 1 | ((x[2] > 0.0) as usize) << 2;
            counts[oct] += 1;
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 1% critical value of chi-square with 7 degrees of freedom.
        assert!(chi2 < 18.475, "{chi2}");
    }

    #[test]
    fn capsule_cap_fraction() {
        let cap = Body::capsule(3, 1.0, 2.0, 0).unwrap();
        let mut rng = derive_stream(SeedSpec::new(43, 0), 0);
        let n = 100_000;
        let on_caps = (0..n)
            .filter(|_| sample_boundary_uniform(&cap, &mut rng).unwrap().x[0].abs() > 1.0)
            .count();
        assert!((on_caps as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn square_facet_fraction() {
        let cube = Body::cube(2, 1.0).unwrap();
        let mut rng = derive_stream(SeedSpec::new(44, 0), 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_boundary_uniform(&cube, &mut rng).unwrap().x[0] == 0.5)
            .count();
        assert!((hits as f64 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn curvature_power_endpoint_ratio() {
        let e = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let density = Density::new(&e, DensitySpec::CurvaturePower { exponent: 1.0 / 3.0 }).unwrap();
        let mut rng = derive_stream(SeedSpec::new(45, 0), 0);
        let n = 400_000;
        // Equal arc-length windows around (2,0) and (0,1), on both sides.
        let half_arc = 0.05;
        let (mut near_a, mut near_b) = (0usize, 0usize);
        for _ in 0..n {
            let x = sample_boundary(&e, &density, &mut rng).unwrap().x;
            if x[1].abs() < half_arc && x[0].abs() > 1.9 {
                near_a += 1;
            }
            if x[0].abs() < half_arc && x[1].abs() > 0.9 {
                near_b += 1;
            }
        }
        // Curvatures a/b² = 2 and b/a² = 1/4; the windows have equal arc
        // length up to second order.
        let ratio = near_a as f64 / near_b as f64;
        let target = 8f64.powf(1.0 / 3.0);
        assert!((ratio / target - 1.0).abs() < 0.05, "{ratio} vs {target}");
    }

    #[test]
    fn zero_bump_matches_base() {
        let e = Body::ellipsoid(&[1.5, 1.0]).unwrap();
        let base = Density::uniform(&e).unwrap();
        let bumped = Density::new(
            &e,
            DensitySpec::Perturbed {
                base: Box::new(DensitySpec::Uniform),
                direction: vec![1.0, 0.0],
                amplitude: 0.0,
                width: 0.3,
            },
        )
        .unwrap();
        assert!((bumped.normalizer() - base.normalizer()).abs() < 1e-9);
        let mut r1 = derive_stream(SeedSpec::new(46, 0), 0);
        let mut r2 = derive_stream(SeedSpec::new(46, 1), 0);
        let a: Vec<f64> = (0..20_000).map(|_| sample_boundary(&e, &base, &mut r1).unwrap().x[0]).collect();
        let b: Vec<f64> = (0..20_000).map(|_| sample_boundary(&e, &bumped, &mut r2).unwrap().x[0]).collect();
        assert!(ks_statistic(&a, &b) < ks_critical_1pct(a.len(), b.len()));
    }

    #[test]
    fn capsule_curvature_power_rejected() {
        let cap = Body::capsule(3, 1.0, 2.0, 0).unwrap();
        let err = Density::new(&cap, DensitySpec::CurvaturePower { exponent: 0.25 }).unwrap_err();
        assert!(err.to_string().contains("density not positive"));
        assert!(Density::new(&cap, DensitySpec::CurvaturePower { exponent: 0.0 }).is_ok());
    }

    #[test]
    fn densities_integrate_to_one() {
        let cases: Vec<(Body, DensitySpec)> = vec![
            (Body::ball(3, 1.0).unwrap(), DensitySpec::Uniform),
            (Body::ellipsoid(&[2.0, 1.0]).unwrap(), DensitySpec::CurvaturePower { exponent: 1.0 / 3.0 }),
            (Body::ellipsoid(&[1.5, 1.0, 0.7]).unwrap(), DensitySpec::CurvaturePower { exponent: 0.25 }),
            (
                Body::cube(3, 1.0).unwrap(),
                DensitySpec::Perturbed {
                    base: Box::new(DensitySpec::Uniform),
                    direction: vec![1.0, 0.2, 0.1],
                    amplitude: 2.0,
                    width: 0.2,
                },
            ),
            (Body::capsule(3, 1.0, 2.0, 2).unwrap(), DensitySpec::Uniform),
        ];
        for (body, spec) in cases {
            let density = Density::new(&body, spec).unwrap();
            // Importance-sampling check: E_uniform[ρ] * area = 1.
            let area = body.surface_area().unwrap().value;
            let mut rng = derive_stream(SeedSpec::new(47, 0), 0);
            let vals: Vec<f64> = (0..50_000)
                .map(|_| {
                    let bp = sample_boundary_uniform(&body, &mut rng).unwrap();
                    density.value(&bp).unwrap() * area
                })
                .collect();
            let s = crate::stats::Summary::from_values(&vals);
            assert!((s.mean - 1.0).abs() < 3.0 * s.stderr.max(1e-12) && (s.mean - 1.0).abs() < 1e-2, "{s:?}");
        }
    }

    #[test]
    fn seeded_clouds_are_reproducible() {
        let ball = Body::ball(2, 1.0).unwrap();
        let density = Density::uniform(&ball).unwrap();
        let seed = SeedSpec::new(48, 0);
        let a = sample_cloud_seeded(&ball, &density, 50, seed, 3).unwrap();
        let b = sample_cloud_seeded(&ball, &density, 50, seed, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_cloud_seeded(&ball, &density, 1, seed, 0).unwrap().len(), 1);
        assert!(sample_cloud_seeded(&ball, &density, 0, seed, 0).is_err());
    }

    #[test]
    fn ball_cap_mass_closed_forms() {
        let b3 = Body::ball(3, 1.0).unwrap();
        let d3 = Density::uniform(&b3).unwrap();
        let x3 = b3.boundary_point_towards(&vector(&[0.3, -0.4, 0.8])).unwrap();
        let b2 = Body::ball(2, 1.0).unwrap();
        let d2 = Density::uniform(&b2).unwrap();
        let x2 = b2.boundary_point_towards(&vector(&[0.3, -0.4])).unwrap();
        for t in [1e-4, 0.01, 0.3, 0.9] {
            let s = cap_mass(&b3, &d3, &x3, t).unwrap();
            assert!(s.exact);
            assert!((s.value - t / 2.0).abs() < 1e-14);
            let s2 = cap_mass(&b2, &d2, &x2, t).unwrap().value;
            assert!((s2 - (1.0 - t).acos() / PI).abs() < 1e-13);
        }
        assert!(cap_mass(&b3, &d3, &x3, 0.0).is_err());
        assert!(cap_mass(&b3, &d3, &x3, 1.0).is_err());
    }

    #[test]
    fn quadrature_cap_mass_matches_closed_form() {
        // A round ellipsoid takes the numerical path.
        for axes in [vec![1.0, 1.0], vec![1.0, 1.0, 1.0]] {
            let e = Body::ellipsoid(&axes).unwrap();
            let density = Density::uniform(&e).unwrap();
            let mut w = VecD::from_element(axes.len(), 0.3);
            w[0] = 1.0;
            let bp = e.boundary_point_towards(&w).unwrap();
            for t in [1e-4, 0.01, 0.2] {
                let s = cap_mass(&e, &density, &bp, t).unwrap();
                let exact = if axes.len() == 3 { t / 2.0 } else { (1.0 - t).acos() / PI };
                assert!((s.value - exact).abs() < 1e-9 * exact.max(1e-3), "{t}: {} vs {exact}", s.value);
            }
        }
    }

    #[test]
    fn cap_mass_increases_and_scales() {
        let bodies = [
            Body::ellipsoid(&[2.0, 1.0]).unwrap(),
            Body::ellipsoid(&[1.5, 1.0, 0.7]).unwrap(),
            Body::capsule(3, 1.0, 2.0, 0).unwrap(),
            Body::cube(2, 1.0).unwrap(),
            Body::ball(3, 1.0).unwrap(),
        ];
        let mut rng = derive_stream(SeedSpec::new(49, 0), 0);
        for body in &bodies {
            let density = Density::uniform(body).unwrap();
            for _ in 0..5 {
                let bp = sample_boundary_uniform(body, &mut rng).unwrap();
                let grid: Vec<f64> = (1..=12).map(|k| 0.02 * k as f64).collect();
                let s: Vec<f64> = grid.iter().map(|&t| cap_mass(body, &density, &bp, t).unwrap().value).collect();
                assert!(s[0] > 0.0);
                assert!(s.windows(2).all(|w| w[1] > w[0]), "{s:?}");
            }
        }
        // log s vs log t has slope (d-1)/2 at smooth points.
        for body in [&bodies[0], &bodies[1]] {
            let density = Density::uniform(body).unwrap();
            let d = body.dim() as f64;
            let bp = sample_boundary_uniform(body, &mut rng).unwrap();
            let ts: Vec<f64> = (0..9).map(|k| 1e-4 * 10f64.powf(k as f64 / 4.0)).collect();
            let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
            let ys: Vec<f64> = ts.iter().map(|&t| cap_mass(body, &density, &bp, t).unwrap().value.ln()).collect();
            let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
            let fit = crate::stats::weighted_least_squares(&design, &ys, &vec![1.0; 9], false).unwrap();
            let slope = fit.coefficients[1];
            assert!((slope / ((d - 1.0) / 2.0) - 1.0).abs() < 0.02, "{slope}");
        }
    }
}

//! Deterministic quantities behind the deficit asymptotics: unit-ball
//! volumes, the explicit volume constant, Kubota averages, the limit
//! curvature integral and its optimal-density variant.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::bodies::{Body, BodyKind, BoundaryPoint};
use crate::error::{invalid, Error, Result};
use crate::linalg::{random_subspace, spd_sqrt_pair, Frame, VecD};
use crate::quadrature::{gauss_legendre, integrate_with, QuadSpec};
use crate::rng::{derive_stream, SeedSpec};
use crate::sampling::{Density, DensitySpec};
use crate::stats::Summary;

/// Volume of the `j`-dimensional unit ball.
pub fn alpha(j: usize) -> f64 {
    PI.powf(j as f64 / 2.0) / gamma(j as f64 / 2.0 + 1.0)
}

pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form `c^{(d,d)}`, the constant of the volume deficit.
pub fn schuett_werner_constant(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::Dimension(format!("the volume constant needs d >= 2, got {d}")));
    }
    let df = d as f64;
    let kappa = 2.0 / (df - 1.0);
    let factorial: f64 = (1..=d + 1).map(|i| i as f64).product();
    Ok((df - 1.0).powf((df + 1.0) / (df - 1.0)) * gamma(df + 1.0 + kappa)
        / (2.0 * factorial * ((df - 1.0) * alpha(d - 1)).powf(kappa)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    /// `alpha[j]` for `j = 0..=d`.
    pub alpha: Vec<f64>,
    pub c_dd: f64,
}

impl Constants {
    pub fn new(d: usize) -> Result<Constants> {
        Ok(Constants {
            alpha: (0..=d).map(alpha).collect(),
            c_dd: schuett_werner_constant(d)?,
        })
    }
}

/// `binom(d,j) α_d / (α_j α_{d-j})`, the factor turning mean projection
/// volumes into `V_j`.
pub fn kubota_coefficient(d: usize, j: usize) -> f64 {
    binom(d, j) * alpha(d) / (alpha(j) * alpha(d - j))
}

/// `j`-volume of one random shadow by rejection in its bounding box.
fn shadow_volume<R: Rng + ?Sized>(body: &Body, frame: &Frame, samples: usize, rng: &mut R) -> Result<f64> {
    let shadow = body.shadow(frame)?;
    let (lo, hi) = shadow.bounding_box();
    let mut hits = 0usize;
    let mut y = VecD::zeros(shadow.dim());
    for _ in 0..samples {
        for i in 0..y.len() {
            y[i] = rng.random_range(lo[i]..hi[i]);
        }
        if shadow.contains(&y, 0.0)? {
            hits += 1;
        }
    }
    Ok(shadow.box_volume() * hits as f64 / samples as f64)
}

/// Monte Carlo Kubota average for `V_j(K)`, `1 <= j <= d-1`. The standard
/// error is taken over subspaces.
pub fn kubota_estimate(
    body: &Body,
    j: usize,
    num_subspaces: usize,
    samples_per_subspace: usize,
    seed: SeedSpec,
) -> Result<Summary> {
    let d = body.dim();
    if j == 0 || j >= d {
        return Err(Error::Dimension(format!("Kubota averaging needs 1 <= j <= d-1, got j={j}, d={d}")));
    }
    if num_subspaces < 2 || samples_per_subspace == 0 {
        return Err(invalid("need at least 2 subspaces and 1 sample per subspace"));
    }
    let coef = kubota_coefficient(d, j);
    let values = (0..num_subspaces as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = derive_stream(seed, k);
            let frame = random_subspace(d, j, &mut rng)?;
            Ok(coef * shadow_volume(body, &frame, samples_per_subspace, &mut rng)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Summary::from_values(&values))
}

/// `I_j = ∫_{∂K} ρ^{-2/(d-1)} H_{d-1}^{1/(d-1)} H_{d-j} dH^{d-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitIntegral {
    pub value: f64,
    pub stderr: f64,
    pub j: usize,
    pub body: String,
    pub density: String,
}

fn check_order(body: &Body, j: usize) -> Result<()> {
    if j == 0 || j > body.dim() {
        return Err(Error::Dimension(format!("order j={j} outside 1..={}", body.dim())));
    }
    Ok(())
}

fn limit_integrand(density: &Density, d: usize, j: usize, bp: &BoundaryPoint) -> Result<f64> {
    let h = bp.curvature_functions()?.h;
    let gauss = h[d - 1];
    if gauss <= 0.0 {
        return Ok(0.0);
    }
    let p = 1.0 / (d as f64 - 1.0);
    Ok(density.value(bp)?.powf(-2.0 * p) * gauss.powf(p) * h[d - j])
}

pub fn limit_integral(body: &Body, density: &Density, j: usize, quad: QuadSpec) -> Result<LimitIntegral> {
    check_order(body, j)?;
    if body.rolling_radius().is_none() {
        return Err(Error::NoRollingBall);
    }
    let d = body.dim();
    let (value, stderr) = integrate_with(body, quad, |bp| limit_integrand(density, d, j, bp))?;
    Ok(LimitIntegral {
        value,
        stderr,
        j,
        body: body.kind().name().to_string(),
        density: density.spec().label(),
    })
}

/// Known values of `c^{(j,d)}`: closed form on the diagonal, calibrated
/// entries elsewhere.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstantTable {
    calibrated: BTreeMap<(usize, usize), (f64, f64)>,
}

impl ConstantTable {
    pub fn new() -> ConstantTable {
        ConstantTable::default()
    }

    pub fn insert(&mut self, j: usize, d: usize, value: f64, stderr: f64) {
        self.calibrated.insert((j, d), (value, stderr));
    }

    /// `(c^{(j,d)}, stderr)`.
    pub fn get(&self, j: usize, d: usize) -> Result<(f64, f64)> {
        if j == d {
            return Ok((schuett_werner_constant(d)?, 0.0));
        }
        self.calibrated
            .get(&(j, d))
            .copied()
            .ok_or(Error::MissingCalibration { j, d })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub deficit: f64,
    pub constant: f64,
    pub integral: LimitIntegral,
}

/// `c^{(j,d)} I_j n^{-2/(d-1)}`.
pub fn predicted_deficit(
    body: &Body,
    density: &Density,
    j: usize,
    n: usize,
    table: &ConstantTable,
) -> Result<Prediction> {
    let (constant, _) = table.get(j, body.dim())?;
    let integral = limit_integral(body, density, j, QuadSpec::default())?;
    Ok(Prediction {
        deficit: constant * integral.value * rate_factor(body.dim(), n),
        constant,
        integral,
    })
}

/// `n^{-2/(d-1)}`.
pub fn rate_factor(d: usize, n: usize) -> f64 {
    (n as f64).powf(-2.0 / (d as f64 - 1.0))
}

/// `I_j` at the curvature-power density with exponent `beta`.
pub fn density_functional(body: &Body, beta: f64, j: usize) -> Result<f64> {
    let density = Density::new(body, DensitySpec::CurvaturePower { exponent: beta })?;
    Ok(limit_integral(body, &density, j, QuadSpec::Adaptive { rtol: 1e-10 })?.value)
}

/// `(jα_j / (dα_d)) ∫_{∂K} f H_{d-j} dH^{d-1}` by boundary quadrature.
pub fn curvature_weighted_integral<F>(body: &Body, j: usize, f: F) -> Result<(f64, f64)>
where
    F: Fn(&VecD) -> f64,
{
    check_order(body, j)?;
    let d = body.dim();
    let scale = j as f64 * alpha(j) / (d as f64 * alpha(d));
    let (v, err) = integrate_with(body, QuadSpec::Adaptive { rtol: 1e-10 }, |bp| {
        Ok(f(&bp.x) * bp.curvature_functions()?.h[d - j])
    })?;
    Ok((scale * v, scale * err))
}

/// `∫_{L} ∫_{∂(K|L)} f(x(y)) dH^{j-1}(y) dν_j(L)` by Monte Carlo over Haar
/// subspaces, where `x(y)` is the boundary point of `K` with normal in `L`
/// projecting to `y`. Available for balls and ellipsoids, `j ∈ {1, 2}`.
pub fn projected_boundary_average<F>(body: &Body, j: usize, f: F, num_subspaces: usize, seed: SeedSpec) -> Result<Summary>
where
    F: Fn(&VecD) -> f64 + Sync,
{
    let d = body.dim();
    if !(j == 1 || j == 2) || j > d {
        return Err(invalid(format!("projected boundary averages need j in {{1, 2}}, got {j}")));
    }
    let semiaxes: Vec<f64> = match body.kind() {
        BodyKind::Ball { radius } => vec![*radius; d],
        BodyKind::Ellipsoid { semiaxes } => semiaxes.clone(),
        other => {
            return Err(Error::NoAnalyticValue {
                what: format!("shadow boundary preimage of a {}", other.name()),
            })
        }
    };
    if num_subspaces < 2 {
        return Err(invalid("need at least 2 subspaces"));
    }
    let a2 = VecD::from_iterator(d, semiaxes.iter().map(|a| a * a));
    let values = (0..num_subspaces as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = derive_stream(seed, k);
            let frame = random_subspace(d, j, &mut rng)?;
            let b = frame.basis();
            // Boundary of K with normal in L: x = A² B c, c = M^{-1} y, M = Bᵀ A² B.
            let a2b = b.map_with_location(|i, _, v| v * a2[i]);
            let m = b.transpose() * &a2b;
            let (sqrt_m, inv_sqrt_m) = spd_sqrt_pair(&m)?;
            let preimage = |z: &VecD| -> VecD { &a2b * (&inv_sqrt_m * z) };
            if j == 1 {
                let z = VecD::from_element(1, 1.0);
                return Ok(f(&preimage(&z)) + f(&preimage(&-z)));
            }
            // y = M^{1/2} (cos θ, sin θ); the preimage uses z = (cos θ, sin θ).
            let panels = 32;
            let width = 2.0 * PI / panels as f64;
            let mut sum = 0.0;
            for p in 0..panels {
                let a = p as f64 * width;
                for (th, w) in gauss_legendre(16, a, a + width) {
                    let z = VecD::from_column_slice(&[th.cos(), th.sin()]);
                    let tangent = &sqrt_m * VecD::from_column_slice(&[-th.sin(), th.cos()]);
                    sum += w * tangent.norm() * f(&preimage(&z));
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Summary::from_values(&values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert!((alpha(0) - 1.0).abs() < 1e-12);
        assert!((alpha(1) - 2.0).abs() < 1e-12);
        assert!((alpha(2) - PI).abs() < 1e-12);
        assert!((alpha(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((alpha(4) - PI * PI / 2.0).abs() < 1e-12);
        let c = Constants::new(5).unwrap();
        assert_eq!(c.alpha.len(), 6);
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 2), 10.0);
        assert_eq!(binom(4, 0), 1.0);
        assert_eq!(binom(3, 4), 0.0);
        assert_eq!(binom(10, 10), 1.0);
    }

    #[test]
    fn volume_constant_closed_forms() {
        assert!((schuett_werner_constant(2).unwrap() - 0.5).abs() < 1e-13);
        assert!((schuett_werner_constant(3).unwrap() - 1.0 / PI).abs() < 1e-13);
        for d in 2..=6 {
            let c = schuett_werner_constant(d).unwrap();
            assert!(c.is_finite() && c > 0.0);
        }
        assert!(schuett_werner_constant(1).is_err());
    }

    #[test]
    fn kubota_matches_analytic() {
        let cases = [
            (Body::ball(3, 1.0).unwrap(), 1, 4.0),
            (Body::cube(3, 1.0).unwrap(), 1, 3.0),
            (Body::ball(3, 1.0).unwrap(), 2, 2.0 * PI),
        ];
        for (i, (body, j, exact)) in cases.into_iter().enumerate() {
            let est = kubota_estimate(&body, j, 400, 2000, SeedSpec::new(7, i as u64)).unwrap();
            assert!((est.mean - exact).abs() < 0.01 * exact, "{est:?} vs {exact}");
        }
    }

    #[test]
    fn ball_limit_integral_is_order_free() {
        for d in [2usize, 3] {
            let ball = Body::ball(d, 1.0).unwrap();
            let density = Density::uniform(&ball).unwrap();
            let target = (d as f64 * alpha(d)).powf((d as f64 + 1.0) / (d as f64 - 1.0));
            for j in 1..=d {
                let li = limit_integral(&ball, &density, j, QuadSpec::default()).unwrap();
                assert!((li.value - target).abs() < 1e-8 * target, "{li:?}");
            }
        }
        let circle = Body::ellipsoid(&[1.0, 1.0]).unwrap();
        let li = limit_integral(&circle, &Density::uniform(&circle).unwrap(), 2, QuadSpec::default()).unwrap();
        assert!((li.value - 8.0 * PI.powi(3)).abs() < 1e-7);
    }

    #[test]
    fn capsule_integral_counts_caps_only() {
        let cap = Body::capsule(3, 1.0, 2.0, 0).unwrap();
        let density = Density::uniform(&cap).unwrap();
        let coarse = limit_integral(&cap, &density, 3, QuadSpec::Fixed { order: 16 }).unwrap();
        let fine = limit_integral(&cap, &density, 3, QuadSpec::Fixed { order: 128 }).unwrap();
        let target = 32.0 * PI * PI;
        assert!((coarse.value - target).abs() < 1e-9 * target);
        assert!((fine.value - target).abs() < 1e-9 * target);
    }

    #[test]
    fn cube_has_no_limit_integral() {
        let cube = Body::cube(2, 1.0).unwrap();
        let err = limit_integral(&cube, &Density::uniform(&cube).unwrap(), 2, QuadSpec::default()).unwrap_err();
        assert_eq!(err, Error::NoRollingBall);
    }

    #[test]
    fn predictions_compose() {
        let table = ConstantTable::new();
        let b2 = Body::ball(2, 1.0).unwrap();
        let p = predicted_deficit(&b2, &Density::uniform(&b2).unwrap(), 2, 10, &table).unwrap();
        assert!((p.deficit - 4.0 * PI.powi(3) / 100.0).abs() < 1e-9);
        let b3 = Body::ball(3, 1.0).unwrap();
        let p = predicted_deficit(&b3, &Density::uniform(&b3).unwrap(), 3, 1000, &table).unwrap();
        assert!((p.deficit - 16.0 * PI / 1000.0).abs() < 1e-9);
        let missing = predicted_deficit(&b3, &Density::uniform(&b3).unwrap(), 1, 1000, &table);
        assert_eq!(missing.unwrap_err(), Error::MissingCalibration { j: 1, d: 3 });
        let mut table = ConstantTable::new();
        table.insert(1, 3, 0.2, 0.01);
        assert_eq!(table.get(1, 3).unwrap(), (0.2, 0.01));
        assert!((rate_factor(3, 4000) / rate_factor(3, 1000) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn density_functional_on_ball_ignores_beta() {
        let ball = Body::ball(2, 1.0).unwrap();
        let a = density_functional(&ball, 0.0, 2).unwrap();
        let b = density_functional(&ball, 0.7, 2).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn density_functional_at_zero_is_uniform() {
        let e = Body::ellipsoid(&[2.0, 1.0]).unwrap();
        let uniform = limit_integral(&e, &Density::uniform(&e).unwrap(), 2, QuadSpec::Adaptive { rtol: 1e-10 })
            .unwrap()
            .value;
        assert!((density_functional(&e, 0.0, 2).unwrap() - uniform).abs() < 1e-8 * uniform);
    }

    #[test]
    fn projected_averages_match_curvature_integrals() {
        let body = Body::ellipsoid(&[1.5, 1.0, 0.7]).unwrap();
        for j in [1usize, 2] {
            let (lhs, _) = curvature_weighted_integral(&body, j, |_| 1.0).unwrap();
            let rhs = projected_boundary_average(&body, j, |_| 1.0, 4000, SeedSpec::new(9, j as u64)).unwrap();
            assert!((lhs - rhs.mean).abs() < 3.0 * rhs.stderr.max(1e-12), "{lhs} vs {rhs:?}");
        }
        let ball = Body::ball(3, 1.0).unwrap();
        let (lhs, _) = curvature_weighted_integral(&ball, 1, |_| 1.0).unwrap();
        assert!((lhs - 2.0).abs() < 1e-9);
    }
}

//! Monte Carlo estimators of `V_j(K) - E V_j(K_n)`, the cap profiler,
//! calibration of the universal constants on the ball, and rate fits.
//!
//! Every replicate `k` draws from stream `k` of the caller's [`SeedSpec`]
//! and results are folded in stream order, so estimates do not depend on
//! the number of worker threads.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, BoundaryPoint};
use crate::error::{invalid, Error, Result};
use crate::functionals::{alpha, kubota_coefficient};
use crate::hull::{extreme_point_indices, hull_measure_2d, hull_measure_3d, in_hull};
use crate::linalg::{random_subspace, random_unit_vector, Frame, VecD};
use crate::rng::{derive_stream, SeedSpec, StreamRng};
use crate::sampling::{cap_mass, sample_cloud, Density};
use crate::stats::{weighted_least_squares, Summary};

/// Support-function directions per cloud.
pub const SUPPORT_DIRECTIONS: usize = 256;

/// Resampling budget for clouds whose 3D hull hits a degenerate facet.
const MAX_HULL_RETRIES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Exact hull measure of the cloud.
    Direct,
    /// Mean-width identity through support functions.
    Support,
    /// Kubota average of shadow deficits, by membership of projected points.
    Projection,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Support => "support",
            Route::Projection => "projection",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Route> {
        match s {
            "direct" => Ok(Route::Direct),
            "support" => Ok(Route::Support),
            "projection" => Ok(Route::Projection),
            other => Err(invalid(format!("unknown route '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(reps)`.
    pub stderr: f64,
    pub reps: usize,
    pub n: usize,
    pub route: Route,
}

impl Estimate {
    fn from_replicates(values: &[f64], n: usize, route: Route) -> Estimate {
        let s = Summary::from_values(values);
        Estimate {
            mean: s.mean,
            stderr: s.stderr,
            reps: values.len(),
            n,
            route,
        }
    }

    /// `(a - b) / sqrt(se_a² + se_b²)`.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        (self.mean - other.mean) / self.stderr.hypot(other.stderr)
    }
}

fn replicate<F>(reps: usize, seed: SeedSpec, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    if reps < 2 {
        return Err(invalid("at least 2 replicates are needed for a standard error"));
    }
    (0..reps as u64)
        .into_par_iter()
        .map(|k| f(&mut derive_stream(seed, k)))
        .collect()
}

/// Which route applies directly for `(j, d)`.
pub fn direct_route(j: usize, d: usize) -> Option<Route> {
    if j == d && d <= 3 {
        Some(Route::Direct)
    } else if j == 1 {
        Some(Route::Support)
    } else {
        None
    }
}

/// Hull volume of a cloud in `d ∈ {2, 3}`, resampling the whole cloud when
/// the 3D hull reports a degenerate facet.
fn hull_volume(body: &Body, density: &Density, n: usize, rng: &mut StreamRng) -> Result<f64> {
    let d = body.dim();
    for _ in 0..MAX_HULL_RETRIES {
        let cloud = sample_cloud(body, density, n, rng)?;
        if n <= d {
            return Ok(0.0);
        }
        match d {
            2 => return Ok(hull_measure_2d(&cloud.points)),
            3 => match hull_measure_3d(&cloud.points) {
                Ok((vol, _)) => return Ok(vol),
                Err(Error::DegenerateFacet { .. }) => continue,
                Err(e) => return Err(e),
            },
            _ => unreachable!("direct volume only in d <= 3"),
        }
    }
    Err(Error::Numeric(format!("{MAX_HULL_RETRIES} consecutive clouds produced degenerate hulls")))
}

fn fibonacci_sphere(m: usize) -> Vec<VecD> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            VecD::from_column_slice(&[r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Antithetic direction set whose average is an unbiased estimate of the
/// uniform average over the sphere.
fn support_directions(d: usize, rng: &mut StreamRng, fib: &[VecD]) -> Result<Vec<VecD>> {
    let half = SUPPORT_DIRECTIONS / 2;
    let mut dirs = Vec::with_capacity(SUPPORT_DIRECTIONS);
    match d {
        2 => {
            let step = 2.0 * PI / SUPPORT_DIRECTIONS as f64;
            let offset = rng.random::<f64>() * step;
            for i in 0..SUPPORT_DIRECTIONS {
                let a = offset + i as f64 * step;
                dirs.push(VecD::from_column_slice(&[a.cos(), a.sin()]));
            }
        }
        3 => {
            let rot = random_subspace(3, 3, rng)?;
            for u in fib {
                let v = rot.basis() * u;
                dirs.push(-&v);
                dirs.push(v);
            }
        }
        _ => {
            for _ in 0..half {
                let v = random_unit_vector(d, rng)?;
                dirs.push(-&v);
                dirs.push(v);
            }
        }
    }
    Ok(dirs)
}

/// Deficit by exact hull measure (`j = d <= 3`) or by the support-function
/// identity for `j = 1`.
pub fn deficit_direct(body: &Body, density: &Density, j: usize, n: usize, reps: usize, seed: SeedSpec) -> Result<Estimate> {
    let d = body.dim();
    match direct_route(j, d) {
        Some(Route::Direct) => {
            let vk = body.intrinsic_volume(d)?.value;
            let values = replicate(reps, seed, |rng| Ok(vk - hull_volume(body, density, n, rng)?))?;
            Ok(Estimate::from_replicates(&values, n, Route::Direct))
        }
        Some(Route::Support) => {
            // V_1 = (d α_d / α_{d-1}) E_u h(u) for u uniform on the sphere.
            let scale = d as f64 * alpha(d) / alpha(d - 1);
            let fib = if d == 3 { fibonacci_sphere(SUPPORT_DIRECTIONS / 2) } else { Vec::new() };
            let values = replicate(reps, seed, |rng| {
                let cloud = sample_cloud(body, density, n, rng)?;
                let extreme: Vec<&VecD> = extreme_point_indices(&cloud.points)
                    .into_iter()
                    .map(|i| &cloud.points[i])
                    .collect();
                let dirs = support_directions(d, rng, &fib)?;
                let mut sum = 0.0;
                for u in &dirs {
                    let h_n = extreme.iter().map(|x| x.dot(u)).fold(f64::NEG_INFINITY, f64::max);
                    sum += body.support(u)? - h_n;
                }
                Ok(scale * sum / dirs.len() as f64)
            })?;
            Ok(Estimate::from_replicates(&values, n, Route::Support))
        }
        _ => Err(Error::Route(format!(
            "no direct estimator for j={j}, d={d}; use the projection route"
        ))),
    }
}

/// Deficit by the integral-geometric form: Kubota coefficient times the
/// expected shadow area covered by `K|L` but not by `K_n|L`.
pub fn deficit_projection(
    body: &Body,
    density: &Density,
    j: usize,
    n: usize,
    reps: usize,
    y_samples: usize,
    seed: SeedSpec,
) -> Result<Estimate> {
    let d = body.dim();
    if j == 0 || j > d {
        return Err(Error::Dimension(format!("order j={j} outside 1..={d}")));
    }
    if y_samples == 0 {
        return Err(invalid("y_samples must be positive"));
    }
    let coef = kubota_coefficient(d, j);
    let values = replicate(reps, seed, |rng| {
        let frame = if j == d { Frame::identity(d) } else { random_subspace(d, j, rng)? };
        let shadow = body.shadow(&frame)?;
        let cloud = sample_cloud(body, density, n, rng)?;
        let projected = cloud
            .points
            .iter()
            .map(|x| frame.project(x))
            .collect::<Result<Vec<_>>>()?;
        let hull: Vec<VecD> = extreme_point_indices(&projected)
            .into_iter()
            .map(|i| projected[i].clone())
            .collect();
        let (lo, hi) = shadow.bounding_box();
        let mut y = VecD::zeros(j);
        let mut hits = 0usize;
        for _ in 0..y_samples {
            for i in 0..j {
                y[i] = rng.random_range(lo[i]..hi[i]);
            }
            if shadow.contains(&y, 0.0)? && !in_hull(&hull, &y, 1e-12)?.inside {
                hits += 1;
            }
        }
        Ok(coef * shadow.box_volume() * hits as f64 / y_samples as f64)
    })?;
    Ok(Estimate::from_replicates(&values, n, Route::Projection))
}

/// Dispatch to the estimator implementing `route`.
pub fn deficit(
    body: &Body,
    density: &Density,
    j: usize,
    n: usize,
    reps: usize,
    route: Route,
    y_samples: usize,
    seed: SeedSpec,
) -> Result<Estimate> {
    match route {
        Route::Projection => deficit_projection(body, density, j, n, reps, y_samples, seed),
        Route::Direct | Route::Support => {
            if direct_route(j, body.dim()) != Some(route) {
                return Err(Error::Route(format!(
                    "route {route} does not apply to j={j}, d={}",
                    body.dim()
                )));
            }
            deficit_direct(body, density, j, n, reps, seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapProfileResult {
    pub point: BoundaryPoint,
    /// `(t, s(t))` in the order given.
    pub grid: Vec<(f64, f64)>,
    /// Extrapolated `lim t^{-(d-1)/2} s(t)`.
    pub fitted_limit: f64,
    /// Closed-form limit; infinite where the Gauss curvature vanishes.
    pub closed_form: f64,
    /// `α_{d-1}^{-1/(d-1)} ρ^{-1/(d-1)} H_{d-1}^{1/(2(d-1))}`.
    pub g_x: f64,
    /// Set when `s(t)` decays slower than `t^{(d-1)/2}`, so the rescaled
    /// cap mass grows without bound.
    pub diverging: bool,
}

impl CapProfileResult {
    pub fn relative_error(&self) -> f64 {
        (self.fitted_limit / self.closed_form - 1.0).abs()
    }
}

/// Rescaled cap masses at `x` and their extrapolated limit.
pub fn cap_profile(body: &Body, density: &Density, x: &BoundaryPoint, t_grid: &[f64]) -> Result<CapProfileResult> {
    let d = body.dim();
    let rolling = body.rolling_radius().ok_or(Error::NoRollingBall)?;
    let t_max = rolling / body.circumradius();
    if t_grid.len() < 3 {
        return Err(invalid("cap profile needs at least 3 grid points"));
    }
    if let Some(t) = t_grid.iter().find(|&&t| !(t > 0.0 && t < t_max)) {
        return Err(invalid(format!("grid value t={t} outside (0, {t_max})")));
    }
    let half = (d as f64 - 1.0) / 2.0;
    let grid = t_grid
        .iter()
        .map(|&t| Ok((t, cap_mass(body, density, x, t)?.value)))
        .collect::<Result<Vec<_>>>()?;

    let ones = vec![1.0; grid.len()];
    let loglog: Vec<Vec<f64>> = grid.iter().map(|(t, _)| vec![1.0, t.ln()]).collect();
    let logs: Vec<f64> = grid.iter().map(|(_, s)| s.ln()).collect();
    let slope = weighted_least_squares(&loglog, &logs, &ones, false)?.coefficients[1];
    let diverging = slope < half - 0.2;

    // Ratio is smooth in t at points of positive curvature: fit a polynomial.
    let degree = if grid.len() >= 4 { 2 } else { 1 };
    let design: Vec<Vec<f64>> = grid.iter().map(|(t, _)| (0..=degree).map(|p| t.powi(p)).collect()).collect();
    let ratios: Vec<f64> = grid.iter().map(|(t, s)| s / t.powf(half)).collect();
    let fitted_limit = weighted_least_squares(&design, &ratios, &ones, false)?.coefficients[0];

    let rho = density.value(x)?;
    let gauss = x.curvature_functions()?.gauss();
    let support = x.x.dot(&x.normal);
    let closed_form = if gauss > 0.0 {
        rho * 2f64.powf(half) * support.powf(half) / gauss.sqrt() * alpha(d - 1)
    } else {
        f64::INFINITY
    };
    let p = 1.0 / (d as f64 - 1.0);
    let g_x = alpha(d - 1).powf(-p) * rho.powf(-p) * gauss.powf(p / 2.0);
    Ok(CapProfileResult {
        point: x.clone(),
        grid,
        fitted_limit,
        closed_form,
        g_x,
        diverging,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub j: usize,
    pub d: usize,
    pub c_jd: f64,
    pub stderr: f64,
    pub n_grid: Vec<usize>,
    /// Deficits at each grid point, rescaled by `n^{2/(d-1)}`.
    pub scaled: Vec<Estimate>,
}

/// Correction exponent of the extrapolation `a + b n^{-κ}`.
pub fn correction_exponent(d: usize) -> f64 {
    (2.0 / (d as f64 - 1.0)).min(1.0)
}

/// Fits `y(n) = a + b n^{-κ}` by weighted least squares; returns `(a, se_a)`.
pub fn extrapolate(points: &[(usize, Estimate)], kappa: f64) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Numeric("extrapolation needs at least 2 grid points".into()));
    }
    let design: Vec<Vec<f64>> = points.iter().map(|(n, _)| vec![1.0, (*n as f64).powf(-kappa)]).collect();
    let y: Vec<f64> = points.iter().map(|(_, e)| e.mean).collect();
    let known = points.iter().all(|(_, e)| e.stderr > 0.0);
    let weights: Vec<f64> = points
        .iter()
        .map(|(_, e)| if known { e.stderr.powi(-2) } else { 1.0 })
        .collect();
    let fit = weighted_least_squares(&design, &y, &weights, known)?;
    Ok((fit.coefficients[0], fit.stderr(0)))
}

/// Scales an estimate by `factor`.
fn scaled(e: &Estimate, factor: f64) -> Estimate {
    Estimate {
        mean: e.mean * factor,
        stderr: e.stderr * factor,
        ..*e
    }
}

/// Estimates `c^{(j,d)}` from uniform clouds on a ball of the given radius.
pub fn calibrate_c(j: usize, d: usize, n_grid: &[usize], reps: usize, radius: f64, seed: SeedSpec) -> Result<Calibration> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("calibration grid must hold at least 3 increasing values"));
    }
    let ball = Body::ball(d, radius)?;
    let density = Density::uniform(&ball)?;
    let route = direct_route(j, d).unwrap_or(Route::Projection);
    let ball_integral = (d as f64 * alpha(d)).powf((d as f64 + 1.0) / (d as f64 - 1.0)) * radius.powi(j as i32);
    let rate = 2.0 / (d as f64 - 1.0);
    let scaled_points = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let e = deficit(&ball, &density, j, n, reps, route, 4096, seed.child(i as u64))?;
            Ok((n, scaled(&e, (n as f64).powf(rate) / ball_integral)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (c_jd, stderr) = extrapolate(&scaled_points, correction_exponent(d))?;
    Ok(Calibration {
        j,
        d,
        c_jd,
        stderr,
        n_grid: n_grid.to_vec(),
        scaled: scaled_points.into_iter().map(|(_, e)| e).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub log_constant: f64,
    /// 95% interval for the exponent.
    pub exponent_ci: (f64, f64),
    pub n_grid: Vec<usize>,
    pub chi2_per_dof: f64,
}

/// Weighted fit of `log mean` against `log n`; the delta method gives
/// `var(log mean) = (stderr / mean)²`.
pub fn fit_rate(pairs: &[(usize, Estimate)]) -> Result<RateFit> {
    let mut ns: Vec<usize> = pairs.iter().map(|(n, _)| *n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Numeric("rate fit needs at least 3 distinct n".into()));
    }
    if let Some((n, e)) = pairs.iter().find(|(_, e)| !(e.mean > 0.0)) {
        return Err(Error::Numeric(format!("nonpositive mean {} at n={n}", e.mean)));
    }
    let design: Vec<Vec<f64>> = pairs.iter().map(|(n, _)| vec![1.0, (*n as f64).ln()]).collect();
    let y: Vec<f64> = pairs.iter().map(|(_, e)| e.mean.ln()).collect();
    let known = pairs.iter().all(|(_, e)| e.stderr > 0.0);
    let weights: Vec<f64> = pairs
        .iter()
        .map(|(_, e)| if known { (e.mean / e.stderr).powi(2) } else { 1.0 })
        .collect();
    let fit = weighted_least_squares(&design, &y, &weights, known)?;
    let exponent = fit.coefficients[1];
    let se = fit.stderr(1);
    Ok(RateFit {
        exponent,
        exponent_stderr: se,
        log_constant: fit.coefficients[0],
        exponent_ci: (exponent - 1.96 * se, exponent + 1.96 * se),
        n_grid: ns,
        chi2_per_dof: fit.chi2_per_dof,
    })
}

/// Haar-averaged projector, used by self-checks of the subspace sampler.
pub fn mean_projector(d: usize, j: usize, draws: usize, seed: SeedSpec) -> Result<DMatrix<f64>> {
    let mut rng = derive_stream(seed, 0);
    let mut acc = DMatrix::zeros(d, d);
    for _ in 0..draws {
        acc += random_subspace(d, j, &mut rng)?.projector();
    }
    Ok(acc / draws as f64)
}

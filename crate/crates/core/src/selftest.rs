//! Quick invariant suite over every layer, at sample counts small enough to
//! run in well under a minute on a desktop.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::bodies::{Body, BodyKind};
use crate::error::Result;
use crate::functionals::{alpha, kubota_estimate};
use crate::hull::{convex_hull_3d, hull_measure_2d, in_hull, Witness};
use crate::linalg::{gaussian_vector, project, random_subspace, random_unit_vector, VecD};
use crate::rng::{derive_stream, SeedSpec};
use crate::sampling::sample_boundary_uniform;
use crate::stats::{ks_critical_1pct, ks_statistic};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<28} {:>7.2}s  {}", self.name, self.seconds, self.detail)
    }
}

type Check = fn(SeedSpec) -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("frame_orthonormality", frame_orthonormality),
    ("mean_projector", mean_projector),
    ("haar_rotation_invariance", haar_rotation_invariance),
    ("projection_linearity", projection_linearity),
    ("membership_oracle", membership_oracle),
    ("membership_closure", membership_closure),
    ("hull_euler_monotone", hull_euler_monotone),
    ("steiner_parallel_bodies", steiner_parallel_bodies),
    ("support_consistency", support_consistency),
    ("curvature_checks", curvature_checks),
    ("projection_consistency", projection_consistency),
    ("kubota_vs_analytic", kubota_vs_analytic),
];

/// Runs every check; a check that errors counts as failed.
pub fn run_selftest(master_seed: u64) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let start = Instant::now();
            let (passed, detail) = match check(SeedSpec::new(master_seed, i as u64)) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn frame_orthonormality(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let mut worst = 0.0f64;
    let mut count = 0;
    for d in 2..=6 {
        for j in 1..=d {
            for _ in 0..500 {
                worst = worst.max(random_subspace(d, j, &mut rng)?.orthonormality_residual());
                count += 1;
            }
        }
    }
    Ok((worst < 1e-12, format!("{count} frames, max residual {worst:.2e}")))
}

fn mean_projector(seed: SeedSpec) -> Result<(bool, String)> {
    let p = crate::estimators::mean_projector(4, 2, 100_000, seed)?;
    let dev = (p - DMatrix::<f64>::identity(4, 4) * 0.5).amax();
    Ok((dev < 0.01, format!("max |E[P_L] - I/2| = {dev:.4}")))
}

fn haar_rotation_invariance(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let d = 3;
    let rotation = random_subspace(d, d, &mut rng)?.basis().clone();
    let v = random_unit_vector(d, &mut rng)?;
    let rv = &rotation * &v;
    let n = 100_000;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        a.push(random_subspace(d, 2, &mut rng)?.column(0).dot(&v));
        b.push(random_subspace(d, 2, &mut rng)?.column(0).dot(&rv));
    }
    let ks = ks_statistic(&a, &b);
    let crit = ks_critical_1pct(n, n);
    Ok((ks < crit, format!("KS {ks:.4} vs critical {crit:.4}")))
}

fn projection_linearity(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(2..=6);
        let j = rng.random_range(1..=d);
        let frame = random_subspace(d, j, &mut rng)?;
        let (x, y) = (gaussian_vector(d, &mut rng), gaussian_vector(d, &mut rng));
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let lhs = project(&(&x * a + &y * b), &frame)?;
        let rhs = project(&x, &frame)? * a + project(&y, &frame)? * b;
        worst = worst.max((lhs - rhs).amax());
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

/// Brute-force membership: by Carathéodory, `q` lies in the hull of points
/// in general position iff it lies in some simplex on `min(n, j+1)` of them.
fn caratheodory_inside(points: &[VecD], q: &VecD) -> bool {
    let j = q.len();
    let m = points.len().min(j + 1);
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let a = DMatrix::from_fn(j + 1, m, |r, c| if r < j { points[subset[c]][r] } else { 1.0 });
        let mut rhs = DVector::from_element(j + 1, 1.0);
        rhs.rows_mut(0, j).copy_from(q);
        if let Ok(lambda) = a.clone().svd(true, true).solve(&rhs, 1e-12) {
            let resid = (&a * &lambda - &rhs).amax();
            if resid < 1e-9 && lambda.iter().all(|&l| l >= -1e-9) {
                return true;
            }
        }
        // Advance to the next m-subset in lexicographic order.
        let n = points.len();
        let mut i = m;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if subset[i] < n - m + i {
                break;
            }
        }
        subset[i] += 1;
        for k in i + 1..m {
            subset[k] = subset[k - 1] + 1;
        }
    }
}

fn membership_oracle(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let instances = 1000;
    let mut disagreements = 0;
    let mut inside_count = 0;
    for _ in 0..instances {
        let j = rng.random_range(1..=4);
        let n = rng.random_range(1..=20);
        let points: Vec<VecD> = (0..n).map(|_| gaussian_vector(j, &mut rng)).collect();
        let q = if rng.random::<bool>() {
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            points.iter().zip(&w).fold(VecD::zeros(j), |acc, (p, wi)| acc + p * (wi / total))
        } else {
            gaussian_vector(j, &mut rng) * 1.5
        };
        let fast = in_hull(&points, &q, 1e-9)?.inside;
        let slow = caratheodory_inside(&points, &q);
        inside_count += slow as usize;
        disagreements += (fast != slow) as usize;
    }
    Ok((
        disagreements == 0,
        format!("{instances} instances, {inside_count} inside, {disagreements} disagreements"),
    ))
}

fn membership_closure(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let mut failures = 0;
    let mut witness_violations = 0;
    for _ in 0..300 {
        let j = rng.random_range(2..=5);
        let n = rng.random_range(3..=40);
        let points: Vec<VecD> = (0..n).map(|_| random_unit_vector(j, &mut rng).unwrap()).collect();
        for i in 0..n {
            failures += !in_hull(&points, &points[i], 1e-9)?.inside as usize;
        }
        for _ in 0..20 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let mid = (&points[a] + &points[b]) * 0.5;
            failures += !in_hull(&points, &mid, 1e-9)?.inside as usize;
        }
        let q = random_unit_vector(j, &mut rng)? * 1.05;
        let r = in_hull(&points, &q, 1e-9)?;
        if let Witness::Separating { direction, margin } = &r.witness {
            let bound = direction.dot(&q) - margin + 1e-10;
            if !(*margin > 0.0) || points.iter().any(|p| direction.dot(p) > bound) {
                witness_violations += 1;
            }
        }
    }
    Ok((
        failures == 0 && witness_violations == 0,
        format!("{failures} closure failures, {witness_violations} witness violations"),
    ))
}

fn hull_euler_monotone(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let mut euler_bad = 0;
    let mut monotone_bad = 0;
    for _ in 0..300 {
        let n = rng.random_range(8..=60);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let v = gaussian_vector(3, &mut rng);
                [v[0], v[1], v[2]]
            })
            .collect();
        let sub = convex_hull_3d(&pts[..n / 2 + 2])?;
        let full = convex_hull_3d(&pts)?;
        euler_bad += (full.euler_characteristic() != 2) as usize + (sub.euler_characteristic() != 2) as usize;
        monotone_bad += (full.volume() + 1e-12 < sub.volume()) as usize;
        let flat: Vec<VecD> = pts.iter().map(|p| VecD::from_column_slice(&p[..2])).collect();
        monotone_bad += (hull_measure_2d(&flat) + 1e-12 < hull_measure_2d(&flat[..n / 2])) as usize;
    }
    Ok((
        euler_bad == 0 && monotone_bad == 0,
        format!("{euler_bad} Euler failures, {monotone_bad} monotonicity failures"),
    ))
}

fn steiner_parallel_bodies(_: SeedSpec) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for d in 2..=5 {
        let bodies = [Body::ball(d, 1.3)?, Body::capsule(d, 0.7, 1.5, d - 1)?];
        for body in &bodies {
            for lambda in [0.1, 0.5, 1.0] {
                let grown = match body.kind() {
                    BodyKind::Ball { radius } => Body::ball(d, radius + lambda)?,
                    BodyKind::Capsule {
                        cap_radius,
                        core_length,
                        axis,
                    } => Body::capsule(d, cap_radius + lambda, *core_length, *axis)?,
                    _ => unreachable!(),
                };
                let lhs = grown.intrinsic_volume(d)?.value;
                let mut rhs = 0.0;
                for j in 0..=d {
                    rhs += lambda.powi((d - j) as i32) * alpha(d - j) * body.intrinsic_volume(j)?.value;
                }
                worst = worst.max((lhs - rhs).abs() / lhs);
            }
        }
    }
    Ok((worst < 1e-10, format!("max relative error {worst:.2e}")))
}

fn test_bodies() -> Result<Vec<Body>> {
    Ok(vec![
        Body::ball(2, 1.0)?,
        Body::ball(3, 1.5)?,
        Body::ellipsoid(&[2.0, 1.0])?,
        Body::ellipsoid(&[1.5, 1.0, 0.7])?,
        Body::capsule(3, 1.0, 2.0, 0)?,
        Body::capsule(2, 0.5, 1.0, 1)?,
        Body::cube(2, 1.0)?,
        Body::cube(3, 1.0)?,
        Body::ball(4, 1.0)?,
    ])
}

fn support_consistency(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let mut worst = 0.0f64;
    for body in test_bodies()? {
        for _ in 0..1200 {
            let bp = sample_boundary_uniform(&body, &mut rng)?;
            worst = worst.max((body.support(&bp.normal)? - bp.x.dot(&bp.normal)).abs());
            worst = worst.max(body.boundary_residual(&bp.x));
        }
    }
    Ok((worst < 1e-8, format!("max residual {worst:.2e}")))
}

fn curvature_checks(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let e = Body::ellipsoid(&[2.0, 1.0])?;
    let k = e.normal_and_curvatures(&VecD::from_column_slice(&[2.0, 0.0]))?.curvatures.unwrap()[0];
    let ellipse_ok = (k - 2.0).abs() < 1e-12;
    let cap = Body::capsule(3, 1.0, 2.0, 0)?;
    let mut cylinder_points = 0;
    let mut nonzero = 0;
    for _ in 0..2000 {
        let bp = sample_boundary_uniform(&cap, &mut rng)?;
        if bp.x[0].abs() < 1.0 {
            cylinder_points += 1;
            nonzero += (bp.curvature_functions()?.gauss() != 0.0) as usize;
        }
    }
    let ball = Body::ball(3, 2.0)?;
    let h = sample_boundary_uniform(&ball, &mut rng)?.curvature_functions()?.h;
    let ball_ok = h.iter().enumerate().all(|(j, hj)| (hj - 0.5f64.powi(j as i32)).abs() < 1e-12);
    Ok((
        ellipse_ok && nonzero == 0 && ball_ok,
        format!("ellipse vertex curvature {k:.6}, {nonzero}/{cylinder_points} cylinder points with H_2 != 0"),
    ))
}

fn projection_consistency(seed: SeedSpec) -> Result<(bool, String)> {
    let mut rng = derive_stream(seed, 0);
    let mut misses = 0;
    let mut trials = 0;
    for body in test_bodies()? {
        let d = body.dim();
        for _ in 0..120 {
            let j = rng.random_range(1..=d);
            let frame = random_subspace(d, j, &mut rng)?;
            let x = sample_boundary_uniform(&body, &mut rng)?.x;
            let y = project(&x, &frame)?;
            misses += !body.projected_contains(&frame, &y, 1e-9)? as usize;
            trials += 1;
        }
    }
    Ok((misses == 0, format!("{misses}/{trials} projected boundary points outside the shadow")))
}

fn kubota_vs_analytic(seed: SeedSpec) -> Result<(bool, String)> {
    let cases = [
        (Body::ball(3, 1.0)?, 1),
        (Body::ball(3, 1.0)?, 2),
        (Body::cube(3, 1.0)?, 1),
        (Body::cube(3, 1.0)?, 2),
        (Body::capsule(3, 1.0, 2.0, 0)?, 1),
        (Body::ellipsoid(&[1.5, 1.0, 0.7])?, 2),
    ];
    let mut worst_z = 0.0f64;
    for (i, (body, j)) in cases.iter().enumerate() {
        let exact = body.intrinsic_volume(*j)?.value;
        let est = kubota_estimate(body, *j, 200, 1000, seed.child(i as u64))?;
        // Balls have congruent shadows and a vanishing spread.
        let se = est.stderr.max(1e-9 * exact);
        worst_z = worst_z.max((est.mean - exact).abs() / se);
    }
    Ok((worst_z < 3.0, format!("max |z| {worst_z:.2} over {} cases", cases.len())))
}

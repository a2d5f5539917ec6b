//! Point-in-hull by Wolfe's minimum-norm-point method.
//!
//! The cloud is shifted by the query `q`; the algorithm walks affinely
//! independent corrals until the point of the hull nearest to `q` is found.
//! A vanishing distance proves membership with explicit convex coefficients;
//! otherwise the nearest point gives a strictly separating direction.

use crate::error::{invalid, Error, Result};
use crate::linalg::{VecD, MAX_DIM};

const MAX_ITERATIONS: usize = 10_000;
const MAX_CORRAL: usize = MAX_DIM + 1;
const ZERO_WEIGHT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// `q = Σ coefficients[k] * points[indices[k]]`, coefficients nonnegative summing to one.
    Convex {
        indices: Vec<usize>,
        coefficients: Vec<f64>,
    },
    /// Unit `direction` with `<direction, q> - max_i <direction, x_i> = margin > 0`.
    Separating { direction: VecD, margin: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipResult {
    pub inside: bool,
    /// Distance from `q` to the hull as found by the solver.
    pub distance: f64,
    pub witness: Witness,
}

struct Corral {
    idx: Vec<usize>,
    weights: Vec<f64>,
}

/// Decides `q ∈ conv(points)`; inside iff the final distance is at most `tol`.
pub fn in_hull(points: &[VecD], q: &VecD, tol: f64) -> Result<MembershipResult> {
    if points.is_empty() {
        return Err(invalid("membership test needs at least one point"));
    }
    if !(tol > 0.0) {
        return Err(invalid("membership tolerance must be positive"));
    }
    let m = q.len();
    if m == 0 || m > MAX_DIM || points.iter().any(|p| p.len() != m) {
        return Err(Error::Dimension("membership points and query differ in dimension".into()));
    }
    let n = points.len();
    let mut shifted = vec![0.0; n * m];
    for (i, p) in points.iter().enumerate() {
        for k in 0..m {
            shifted[i * m + k] = p[k] - q[k];
        }
    }
    let pt = |i: usize| &shifted[i * m..(i + 1) * m];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let start = (0..n)
        .min_by(|&a, &b| dot(pt(a), pt(a)).total_cmp(&dot(pt(b), pt(b))))
        .unwrap();
    let mut corral = Corral {
        idx: vec![start],
        weights: vec![1.0],
    };
    let mut x = pt(start).to_vec();

    let combine = |corral: &Corral, x: &mut Vec<f64>| {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &w) in corral.idx.iter().zip(&corral.weights) {
            for (xv, pv) in x.iter_mut().zip(pt(i)) {
                *xv += w * pv;
            }
        }
    };

    for _ in 0..MAX_ITERATIONS {
        let xx = dot(&x, &x);
        if xx.sqrt() <= tol {
            return Ok(inside_result(corral, xx.sqrt()));
        }
        let (best, best_val) = (0..n)
            .map(|i| (i, dot(&x, pt(i))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        // Optimality: no point improves on the current nearest point.
        if xx - best_val <= 1e-12 * xx || corral.idx.contains(&best) || corral.idx.len() >= MAX_CORRAL {
            return Ok(finish(corral, &x, xx, best_val, tol));
        }
        corral.idx.push(best);
        corral.weights.push(0.0);

        loop {
            let Some(mu) = affine_minimizer(&corral.idx, &pt, m) else {
                // Newest point is affinely dependent on the corral; no progress possible.
                corral.idx.pop();
                corral.weights.pop();
                combine(&corral, &mut x);
                let xx = dot(&x, &x);
                let best_val = (0..n).map(|i| dot(&x, pt(i))).fold(f64::INFINITY, f64::min);
                return Ok(finish(corral, &x, xx, best_val, tol));
            };
            if mu.iter().all(|&v| v > ZERO_WEIGHT) {
                corral.weights = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, mv) in corral.weights.iter().zip(&mu) {
                if *mv <= ZERO_WEIGHT && l - mv > 0.0 {
                    theta = theta.min(l / (l - mv));
                }
            }
            if theta <= 0.0 {
                // The entering point would leave immediately: stalled at the optimum.
                corral.idx.pop();
                corral.weights.pop();
                combine(&corral, &mut x);
                let xx = dot(&x, &x);
                let best_val = (0..n).map(|i| dot(&x, pt(i))).fold(f64::INFINITY, f64::min);
                return Ok(finish(corral, &x, xx, best_val, tol));
            }
            for (l, mv) in corral.weights.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * mv;
            }
            let mut k = 0;
            while k < corral.idx.len() {
                if corral.weights[k] <= ZERO_WEIGHT {
                    corral.idx.swap_remove(k);
                    corral.weights.swap_remove(k);
                } else {
                    k += 1;
                }
            }
            if corral.idx.is_empty() {
                return Err(Error::Numeric("min-norm corral collapsed".into()));
            }
            let total: f64 = corral.weights.iter().sum();
            corral.weights.iter_mut().for_each(|w| *w /= total);
        }
        combine(&corral, &mut x);
    }
    Err(Error::IterationCap {
        residual: dot(&x, &x).sqrt(),
    })
}

fn inside_result(corral: Corral, distance: f64) -> MembershipResult {
    MembershipResult {
        inside: true,
        distance,
        witness: Witness::Convex {
            indices: corral.idx,
            coefficients: corral.weights,
        },
    }
}

fn finish(corral: Corral, x: &[f64], xx: f64, best_val: f64, tol: f64) -> MembershipResult {
    let norm = xx.sqrt();
    if norm <= tol || best_val <= 0.0 {
        // Either within tolerance or numerically on the boundary.
        return inside_result(corral, norm);
    }
    let direction = VecD::from_iterator(x.len(), x.iter().map(|v| -v / norm));
    MembershipResult {
        inside: false,
        distance: norm,
        witness: Witness::Separating {
            direction,
            margin: best_val / norm,
        },
    }
}

/// Weights `μ` with `Σμ = 1` minimizing `|Σ μ_k p_k|` over the corral, or
/// `None` when the corral is affinely dependent.
fn affine_minimizer<'a, F>(idx: &[usize], pt: &F, m: usize) -> Option<Vec<f64>>
where
    F: Fn(usize) -> &'a [f64],
{
    let s = idx.len();
    if s == 1 {
        return Some(vec![1.0]);
    }
    // Minimize |p_0 + B c| with B = [p_k - p_0]; then μ_0 = 1 - Σ c.
    let k = s - 1;
    let p0 = pt(idx[0]);
    let mut b = [[0.0f64; MAX_DIM]; MAX_CORRAL];
    for r in 0..k {
        let pr = pt(idx[r + 1]);
        for c in 0..m {
            b[r][c] = pr[c] - p0[c];
        }
    }
    let mut g = [[0.0f64; MAX_CORRAL]; MAX_CORRAL];
    let mut rhs = [0.0f64; MAX_CORRAL];
    let mut scale = 0.0f64;
    for r in 0..k {
        for c in 0..k {
            g[r][c] = (0..m).map(|t| b[r][t] * b[c][t]).sum();
        }
        rhs[r] = -(0..m).map(|t| b[r][t] * p0[t]).sum::<f64>();
        scale = scale.max(g[r][r]);
    }
    // Cholesky in place.
    for c in 0..k {
        let mut diag = g[c][c];
        for t in 0..c {
            diag -= g[c][t] * g[c][t];
        }
        if diag <= 1e-13 * scale {
            return None;
        }
        let diag = diag.sqrt();
        g[c][c] = diag;
        for r in c + 1..k {
            let mut v = g[r][c];
            for t in 0..c {
                v -= g[r][t] * g[c][t];
            }
            g[r][c] = v / diag;
        }
    }
    let mut y = [0.0f64; MAX_CORRAL];
    for r in 0..k {
        let mut v = rhs[r];
        for t in 0..r {
            v -= g[r][t] * y[t];
        }
        y[r] = v / g[r][r];
    }
    let mut coef = [0.0f64; MAX_CORRAL];
    for r in (0..k).rev() {
        let mut v = y[r];
        for t in r + 1..k {
            v -= g[t][r] * coef[t];
        }
        coef[r] = v / g[r][r];
    }
    let mut mu = Vec::with_capacity(s);
    mu.push(1.0 - coef[..k].iter().sum::<f64>());
    mu.extend_from_slice(&coef[..k]);
    Some(mu)
}

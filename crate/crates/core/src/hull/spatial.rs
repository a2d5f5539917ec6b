//! Quickhull in three dimensions with per-facet outside sets.

use crate::error::{Error, Result};
use crate::hull::planar::{convex_hull_2d, polygon_area};
use crate::linalg::VecD;

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Debug)]
struct Face {
    v: [usize; 3],
    normal: P3,
    offset: f64,
    /// `neighbors[k]` shares the edge `v[k] -> v[(k + 1) % 3]`.
    neighbors: [usize; 3],
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn distance(&self, p: P3) -> f64 {
        dot(self.normal, p) - self.offset
    }
}

/// A closed triangulated hull with outward-oriented faces.
#[derive(Clone, Debug)]
pub struct Hull3 {
    pub points: Vec<P3>,
    /// Empty when the input is coplanar or lower dimensional.
    pub faces: Vec<[usize; 3]>,
    /// Area of the flat hull when the input is coplanar.
    flat_area: f64,
}

impl Hull3 {
    pub fn volume(&self) -> f64 {
        let Some(first) = self.faces.first() else {
            return 0.0;
        };
        let o = self.points[first[0]];
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.points[f[0]], self.points[f[1]], self.points[f[2]]);
                dot(sub(a, o), cross(sub(b, o), sub(c, o)))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Boundary area; a flat hull counts both sides.
    pub fn surface_area(&self) -> f64 {
        if self.faces.is_empty() {
            return 2.0 * self.flat_area;
        }
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.points[f[0]], self.points[f[1]], self.points[f[2]]);
                0.5 * norm(cross(sub(b, a), sub(c, a)))
            })
            .sum()
    }

    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.faces.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `V - E + F`; equals 2 for a closed polytope surface.
    pub fn euler_characteristic(&self) -> i64 {
        let f = self.faces.len() as i64;
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        self.vertex_indices().len() as i64 - edges.len() as i64 + f
    }
}

fn make_face(points: &[P3], v: [usize; 3]) -> Result<Face> {
    let (a, b, c) = (points[v[0]], points[v[1]], points[v[2]]);
    let n = cross(sub(b, a), sub(c, a));
    let len = norm(n);
    let scale = norm(sub(b, a)).max(norm(sub(c, a)));
    if !(len > 1e-14 * scale * scale) {
        return Err(Error::DegenerateFacet { facet: v });
    }
    let normal = [n[0] / len, n[1] / len, n[2] / len];
    Ok(Face {
        v,
        normal,
        offset: dot(normal, a),
        neighbors: [usize::MAX; 3],
        outside: Vec::new(),
        alive: true,
    })
}

fn flat_hull_area(points: &[P3], a: P3, b: P3, c: P3) -> f64 {
    let e1 = sub(b, a);
    let l1 = norm(e1);
    let e1 = [e1[0] / l1, e1[1] / l1, e1[2] / l1];
    let n = cross(e1, sub(c, a));
    let ln = norm(n);
    let n = [n[0] / ln, n[1] / ln, n[2] / ln];
    let e2 = cross(n, e1);
    let planar: Vec<[f64; 2]> = points
        .iter()
        .map(|&p| {
            let r = sub(p, a);
            [dot(r, e1), dot(r, e2)]
        })
        .collect();
    let verts: Vec<[f64; 2]> = convex_hull_2d(&planar).iter().map(|&i| planar[i]).collect();
    polygon_area(&verts)
}

/// Convex hull of 3D points. Coplanar input yields a hull without faces.
pub fn convex_hull_3d(points: &[P3]) -> Result<Hull3> {
    let n = points.len();
    let degenerate = |flat_area| Hull3 {
        points: points.to_vec(),
        faces: Vec::new(),
        flat_area,
    };
    if n < 4 {
        let area = if n == 3 {
            0.5 * norm(cross(sub(points[1], points[0]), sub(points[2], points[0])))
        } else {
            0.0
        };
        return Ok(degenerate(area));
    }
    let scale = points
        .iter()
        .map(|p| p[0].abs() + p[1].abs() + p[2].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let eps = 1e-12 * scale;

    // Initial simplex from axis extremes.
    let mut extremes = Vec::with_capacity(6);
    for axis in 0..3 {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in points.iter().enumerate() {
            if p[axis] < points[lo][axis] {
                lo = i;
            }
            if p[axis] > points[hi][axis] {
                hi = i;
            }
        }
        extremes.push(lo);
        extremes.push(hi);
    }
    let (mut a, mut b, mut best) = (0, 0, -1.0);
    for &i in &extremes {
        for &k in &extremes {
            let dist = norm(sub(points[i], points[k]));
            if dist > best {
                best = dist;
                a = i;
                b = k;
            }
        }
    }
    if best <= eps {
        return Ok(degenerate(0.0));
    }
    let ab = sub(points[b], points[a]);
    let (c, cdist) = (0..n)
        .map(|i| (i, norm(cross(ab, sub(points[i], points[a]))) / best))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    if cdist <= eps {
        return Ok(degenerate(0.0));
    }
    let plane = make_face(points, [a, b, c])?;
    let (dv, ddist) = (0..n)
        .map(|i| (i, plane.distance(points[i])))
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .unwrap();
    if ddist.abs() <= eps {
        return Ok(degenerate(flat_hull_area(points, points[a], points[b], points[c])));
    }
    let base = if ddist > 0.0 { [a, c, b] } else { [a, b, c] };
    let [p0, p1, p2] = base;
    let mut faces = vec![
        make_face(points, [p0, p1, p2])?,
        make_face(points, [p0, dv, p1])?,
        make_face(points, [p1, dv, p2])?,
        make_face(points, [p2, dv, p0])?,
    ];
    link_faces(&mut faces, &[0, 1, 2, 3]);

    for i in 0..n {
        if i == p0 || i == p1 || i == p2 || i == dv {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.distance(points[i]) > eps) {
            f.outside.push(i);
        }
    }

    let mut stack: Vec<usize> = (0..4).filter(|&f| !faces[f].outside.is_empty()).collect();
    let mut visible: Vec<usize> = Vec::new();
    let mut is_visible: Vec<bool> = vec![false; 4];
    let mut horizon: Vec<(usize, usize, usize)> = Vec::new();

    while let Some(fid) = stack.pop() {
        if !faces[fid].alive || faces[fid].outside.is_empty() {
            continue;
        }
        let (apex, _) = faces[fid]
            .outside
            .iter()
            .map(|&i| (i, faces[fid].distance(points[i])))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        let p = points[apex];

        visible.clear();
        horizon.clear();
        visible.push(fid);
        is_visible[fid] = true;
        let mut head = 0;
        while head < visible.len() {
            let f = visible[head];
            head += 1;
            for k in 0..3 {
                let nb = faces[f].neighbors[k];
                if is_visible[nb] {
                    continue;
                }
                if faces[nb].distance(p) > eps {
                    is_visible[nb] = true;
                    visible.push(nb);
                }
            }
        }
        for &f in &visible {
            for k in 0..3 {
                let nb = faces[f].neighbors[k];
                if !is_visible[nb] {
                    horizon.push((faces[f].v[k], faces[f].v[(k + 1) % 3], nb));
                }
            }
        }

        let first_new = faces.len();
        for &(u, w, nb) in &horizon {
            let mut face = make_face(points, [u, w, apex])?;
            face.neighbors[0] = nb;
            let id = faces.len();
            let slot = (0..3)
                .find(|&k| faces[nb].v[k] == w && faces[nb].v[(k + 1) % 3] == u)
                .ok_or(Error::DegenerateFacet { facet: [u, w, apex] })?;
            faces[nb].neighbors[slot] = id;
            faces.push(face);
            is_visible.push(false);
        }
        let new_ids: Vec<usize> = (first_new..faces.len()).collect();
        for &id in &new_ids {
            let [u, w, _] = faces[id].v;
            // Edge w -> apex borders the new face whose horizon edge starts at w.
            let next = new_ids.iter().copied().find(|&o| faces[o].v[0] == w);
            let prev = new_ids.iter().copied().find(|&o| faces[o].v[1] == u);
            match (next, prev) {
                (Some(nx), Some(pv)) => {
                    faces[id].neighbors[1] = nx;
                    faces[id].neighbors[2] = pv;
                }
                _ => return Err(Error::DegenerateFacet { facet: faces[id].v }),
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            faces[f].alive = false;
            orphans.append(&mut faces[f].outside);
        }
        for i in orphans {
            if i == apex {
                continue;
            }
            if let Some(&id) = new_ids
                .iter()
                .find(|&&id| faces[id].distance(points[i]) > eps)
            {
                faces[id].outside.push(i);
            }
        }
        for &f in &visible {
            is_visible[f] = false;
        }
        stack.extend(new_ids.iter().copied().filter(|&id| !faces[id].outside.is_empty()));
    }

    Ok(Hull3 {
        points: points.to_vec(),
        faces: faces.iter().filter(|f| f.alive).map(|f| f.v).collect(),
        flat_area: 0.0,
    })
}

fn link_faces(faces: &mut [Face], ids: &[usize]) {
    for &f in ids {
        for k in 0..3 {
            let (u, w) = (faces[f].v[k], faces[f].v[(k + 1) % 3]);
            for &g in ids {
                if g == f {
                    continue;
                }
                if (0..3).any(|m| faces[g].v[m] == w && faces[g].v[(m + 1) % 3] == u) {
                    faces[f].neighbors[k] = g;
                }
            }
        }
    }
}

/// `(volume, surface_area)` of the hull of 3D points.
pub fn hull_measure_3d(points: &[VecD]) -> Result<(f64, f64)> {
    let pts: Vec<P3> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
    let hull = convex_hull_3d(&pts)?;
    Ok((hull.volume(), hull.surface_area()))
}

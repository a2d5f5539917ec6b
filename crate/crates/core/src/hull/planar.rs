use crate::linalg::VecD;

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain. Returns hull vertex indices in counter-clockwise
/// order without collinear points.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let n = points.len();
    if n < 3 {
        return (0..n).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // All points collinear: return the two extremes.
        hull.dedup();
        hull.truncate(2);
    }
    hull
}

pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let origin = vertices[0];
    (1..n - 1)
        .map(|i| cross(origin, vertices[i], vertices[i + 1]))
        .sum::<f64>()
        .abs()
        * 0.5
}

pub fn polygon_perimeter(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 2.0 * (vertices[0][0] - vertices[1][0]).hypot(vertices[0][1] - vertices[1][1]);
    }
    (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
        .sum()
}

/// Area of the convex hull of planar points; zero for degenerate input.
pub fn hull_measure_2d(points: &[VecD]) -> f64 {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    let idx = convex_hull_2d(&pts);
    let verts: Vec<[f64; 2]> = idx.iter().map(|&i| pts[i]).collect();
    polygon_area(&verts)
}

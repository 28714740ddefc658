//! Bowyer-Watson Delaunay triangulation over planar points, returning the
//! unique edge set.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::kmeans::Point;

#[derive(Debug, Clone, Copy)]
struct Triangle {
    v: [usize; 3],
}

impl Triangle {
    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.v;
        [(a.min(b), a.max(b)), (b.min(c), b.max(c)), (a.min(c), a.max(c))]
    }
}

fn circumcircle_contains(pts: &[Point], t: &Triangle, p: Point) -> bool {
    let (ax, ay) = pts[t.v[0]];
    let (bx, by) = pts[t.v[1]];
    let (cx, cy) = pts[t.v[2]];
    // Standard incircle determinant, sign-adjusted for orientation.
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d.abs() < 1e-12 {
        return false; // degenerate triangle
    }
    let ux = ((ax * ax + ay * ay) * (by - cy)
        + (bx * bx + by * by) * (cy - ay)
        + (cx * cx + cy * cy) * (ay - by))
        / d;
    let uy = ((ax * ax + ay * ay) * (cx - bx)
        + (bx * bx + by * by) * (ax - cx)
        + (cx * cx + cy * cy) * (bx - ax))
        / d;
    let r2 = (ax - ux).powi(2) + (ay - uy).powi(2);
    (p.0 - ux).powi(2) + (p.1 - uy).powi(2) < r2 * (1.0 - 1e-12)
}

/// Delaunay edges as index pairs `(i, j)` with `i < j`. Errors on fewer
/// than 3 points, duplicate points, or all-collinear input.
pub fn delaunay_edges(points: &[Point]) -> Result<Vec<(usize, usize)>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Degenerate("need at least 3 points".into()));
    }
    {
        let mut seen = BTreeSet::new();
        for p in points {
            if !seen.insert((p.0.to_bits(), p.1.to_bits())) {
                return Err(Error::Degenerate("duplicate points".into()));
            }
        }
    }

    // Super-triangle generously enclosing the bounding box.
    let min_x = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;

    let mut pts: Vec<Point> = points.to_vec();
    let s0 = pts.len();
    pts.push((cx - 30.0 * span, cy - 10.0 * span));
    pts.push((cx + 30.0 * span, cy - 10.0 * span));
    pts.push((cx, cy + 30.0 * span));

    let mut triangles = vec![Triangle { v: [s0, s0 + 1, s0 + 2] }];
    for pi in 0..n {
        let p = pts[pi];
        let (bad, good): (Vec<Triangle>, Vec<Triangle>) =
            triangles.into_iter().partition(|t| circumcircle_contains(&pts, t, p));
        // Boundary of the cavity: edges not shared by two bad triangles.
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for t in &bad {
            for e in t.edges() {
                if let Some(pos) = boundary.iter().position(|x| *x == e) {
                    boundary.remove(pos);
                } else {
                    boundary.push(e);
                }
            }
        }
        triangles = good;
        for (a, b) in boundary {
            triangles.push(Triangle { v: [a, b, pi] });
        }
    }

    let mut edges = BTreeSet::new();
    for t in &triangles {
        if t.v.iter().any(|&v| v >= s0) {
            continue;
        }
        for e in t.edges() {
            edges.insert(e);
        }
    }
    if edges.is_empty() {
        return Err(Error::Degenerate("collinear or degenerate input".into()));
    }
    Ok(edges.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_five_edges() {
        let pts = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let edges = delaunay_edges(&pts).unwrap();
        // 4 hull edges + 1 diagonal
        assert_eq!(edges.len(), 5);
    }

    #[test]
    fn collinear_is_error() {
        let pts = vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)];
        assert!(delaunay_edges(&pts).is_err());
    }

    #[test]
    fn triangle_is_complete() {
        let pts = vec![(0.0, 0.0), (4.0, 0.0), (1.0, 3.0)];
        let edges = delaunay_edges(&pts).unwrap();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
        fn orient(p: Point, q: Point, r: Point) -> f64 {
            (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
        }
        let o1 = orient(a, b, c);
        let o2 = orient(a, b, d);
        let o3 = orient(c, d, a);
        let o4 = orient(c, d, b);
        o1 * o2 < 0.0 && o3 * o4 < 0.0
    }

    #[test]
    fn planarity_on_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let pts: Vec<Point> =
            (0..40).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect();
        let edges = delaunay_edges(&pts).unwrap();
        for (i, &(a, b)) in edges.iter().enumerate() {
            for &(c, d) in &edges[i + 1..] {
                assert!(
                    !segments_cross(pts[a], pts[b], pts[c], pts[d]),
                    "edges ({a},{b}) and ({c},{d}) cross"
                );
            }
        }
    }

    #[test]
    fn connected_graph() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        let pts: Vec<Point> =
            (0..30).map(|_| (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0))).collect();
        let edges = delaunay_edges(&pts).unwrap();
        let mut adj = vec![Vec::new(); pts.len()];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; pts.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
    }
}

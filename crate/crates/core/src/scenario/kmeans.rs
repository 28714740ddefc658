//! Seeded Lloyd's k-means over planar points.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

pub type Point = (f64, f64);

fn dist2(a: Point, b: Point) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Lloyd's iterations with seeded initialization; stops when the relative
/// inertia change drops below `1e-4` or after 300 iterations.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<Vec<Point>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k={k} out of range for {} points",
            points.len()
        )));
    }
    if k == points.len() {
        return Ok(points.to_vec());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids: Vec<Point> =
        sample(&mut rng, points.len(), k).into_iter().map(|i| points[i]).collect();

    let mut prev_inertia = f64::INFINITY;
    for _ in 0..300 {
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        let mut inertia = 0.0;
        let mut farthest: Vec<(f64, usize)> = Vec::new(); // (d2, point index)
        for (pi, p) in points.iter().enumerate() {
            let (ci, d2) = centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (i, dist2(*p, *c)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
                .unwrap();
            sums[ci].0 += p.0;
            sums[ci].1 += p.1;
            sums[ci].2 += 1;
            inertia += d2;
            farthest.push((d2, pi));
        }
        farthest.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut respawn = farthest.into_iter();
        for (i, (sx, sy, n)) in sums.into_iter().enumerate() {
            if n > 0 {
                centroids[i] = (sx / n as f64, sy / n as f64);
            } else if let Some((_, pi)) = respawn.next() {
                // Empty cluster: restart it at the farthest point.
                centroids[i] = points[pi];
            }
        }
        if prev_inertia.is_finite() {
            let rel = if prev_inertia > 0.0 {
                (prev_inertia - inertia).abs() / prev_inertia
            } else {
                0.0
            };
            if rel < 1e-4 {
                break;
            }
        }
        prev_inertia = inertia;
    }
    Ok(centroids)
}

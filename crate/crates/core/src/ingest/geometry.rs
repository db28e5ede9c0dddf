//! Small 3-vector helpers and a uniform-grid neighbour search.

use std::collections::HashMap;

pub type Vec3 = [f64; 3];

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Unit vector, or zero for a (near) zero input.
pub fn unit(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n < 1e-12 {
        [0.0; 3]
    } else {
        [a[0] / n, a[1] / n, a[2] / n]
    }
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let n = points.len().max(1) as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Gaussian radial basis expansion with `count` centres evenly spaced on
/// `[lo, hi]` and width equal to the spacing.
pub fn rbf(value: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|k| {
            let mu = lo + step * k as f64;
            let z = (value - mu) / step;
            (-z * z).exp()
        })
        .collect()
}

/// All unordered pairs `(i, j)`, `i < j`, whose distance satisfies the
/// predicate on `d`. Candidate pairs come from a grid with cell size
/// `reach`, so the predicate must be false for every `d > reach`.
pub fn neighbor_pairs(points: &[Vec3], reach: f64, keep: impl Fn(f64) -> bool) -> Vec<(usize, usize)> {
    // Slightly oversized cells so pairs at exactly `reach` never straddle
    // two cell boundaries through rounding.
    let size = reach * (1.0 + 1e-6);
    let cell = |p: Vec3| -> (i64, i64, i64) {
        (
            (p[0] / size).floor() as i64,
            (p[1] / size).floor() as i64,
            (p[2] / size).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        let (cx, cy, cz) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &j in bucket {
                            if j > i && keep(distance(p, points[j])) {
                                pairs.push((i, j));
                            }
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

//! Smallest enclosing circle of planar point sets (Welzl's algorithm in its
//! iterative incremental form).

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: (f64, f64),
    pub radius: f64,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

impl Circle {
    pub fn from_point(p: (f64, f64)) -> Self {
        Circle { center: p, radius: 0.0 }
    }

    pub fn from_two(a: (f64, f64), b: (f64, f64)) -> Self {
        let center = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        let radius = dist(center, a).max(dist(center, b));
        Circle { center, radius }
    }

    /// Circumcircle; `None` for (nearly) collinear points.
    pub fn from_three(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<Self> {
        let (bx, by) = (b.0 - a.0, b.1 - a.1);
        let (cx, cy) = (c.0 - a.0, c.1 - a.1);
        let d = 2.0 * (bx * cy - by * cx);
        let scale = (bx.abs() + by.abs()) * (cx.abs() + cy.abs());
        if d.abs() <= 1e-14 * scale {
            return None;
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = (a.0 + ux, a.1 + uy);
        let radius = dist(center, a).max(dist(center, b)).max(dist(center, c));
        Some(Circle { center, radius })
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        dist(self.center, p) <= self.radius * (1.0 + 1e-12) + 1e-300
    }
}

/// Exact smallest enclosing circle (expected linear time). The input order is
/// shuffled with a fixed seed, so the result is deterministic.
pub fn smallest_enclosing_circle(points: &[(f64, f64)]) -> Option<Circle> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    if pts.is_empty() {
        return None;
    }
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut c = Circle::from_point(pts[0]);
    for i in 1..pts.len() {
        if c.contains(pts[i]) {
            continue;
        }
        c = Circle::from_point(pts[i]);
        for j in 0..i {
            if c.contains(pts[j]) {
                continue;
            }
            c = Circle::from_two(pts[i], pts[j]);
            for k in 0..j {
                if c.contains(pts[k]) {
                    continue;
                }
                c = Circle::from_three(pts[i], pts[j], pts[k]).unwrap_or_else(|| {
                    // Collinear: the widest pair spans the circle.
                    let cands = [
                        Circle::from_two(pts[i], pts[j]),
                        Circle::from_two(pts[i], pts[k]),
                        Circle::from_two(pts[j], pts[k]),
                    ];
                    cands.into_iter().fold(cands[0], |a, b| if b.radius > a.radius { b } else { a })
                });
            }
        }
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn simple_configurations() {
        assert!(smallest_enclosing_circle(&[]).is_none());
        let c = smallest_enclosing_circle(&[(1.0, 2.0)]).unwrap();
        assert_eq!(c.radius, 0.0);
        let c = smallest_enclosing_circle(&[(-1.0, 0.0), (1.0, 0.0), (0.0, 0.5)]).unwrap();
        assert!((c.radius - 1.0).abs() < 1e-15 && c.center.0.abs() < 1e-15);
        let c = smallest_enclosing_circle(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!((c.radius - 0.5f64.sqrt()).abs() < 1e-15);
        let c = smallest_enclosing_circle(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap();
        assert!((c.radius - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let pts: Vec<(f64, f64)> =
                (0..25).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let c = smallest_enclosing_circle(&pts).unwrap();
            assert!(pts.iter().all(|&p| c.contains(p)));
            // Brute force over all pairs and triples.
            let mut best = f64::INFINITY;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let cand = Circle::from_two(pts[i], pts[j]);
                    if pts.iter().all(|&p| cand.contains(p)) {
                        best = best.min(cand.radius);
                    }
                    for k in j + 1..pts.len() {
                        if let Some(cand) = Circle::from_three(pts[i], pts[j], pts[k]) {
                            if pts.iter().all(|&p| cand.contains(p)) {
                                best = best.min(cand.radius);
                            }
                        }
                    }
                }
            }
            assert!((c.radius - best).abs() < 1e-12);
        }
    }
}

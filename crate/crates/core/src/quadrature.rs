//! Gauss–Legendre rules on `[-1, 1]` and their cumulative integration matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    /// `n`-point rule; nodes ascending. Exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f` with the rule mapped to `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        h * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>()
    }

    /// Matrix `S` with `S[i][j]` the weight of `f(x_j)` in `∫_{-1}^{x_i} f`, exact
    /// for polynomials of degree `< n` (integral of the interpolant).
    pub fn cumulative_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        // ∫_{-1}^{x_i} ℓ_j computed with the same rule mapped onto [-1, x_i].
        (0..n)
            .map(|i| {
                let xi = self.nodes[i];
                (0..n).map(|j| self.integrate(-1.0, xi, |t| self.lagrange(j, t))).collect()
            })
            .collect()
    }

    /// Lagrange basis polynomial `ℓ_j` on the rule's nodes.
    pub fn lagrange(&self, j: usize, t: f64) -> f64 {
        let xj = self.nodes[j];
        self.nodes.iter().enumerate().filter(|&(m, _)| m != j).map(|(_, &xm)| (t - xm) / (xj - xm)).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_tables() {
        let g = GaussLegendre::new(2);
        assert!((g.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((g.weights[0] - 1.0).abs() < 1e-15);
        let g = GaussLegendre::new(3);
        assert!((g.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((g.weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((g.weights[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_high_degree() {
        for n in [4usize, 8, 12] {
            let g = GaussLegendre::new(n);
            for d in 0..2 * n {
                let got = g.integrate(0.0, 2.0, |x| x.powi(d as i32));
                let want = 2f64.powi(d as i32 + 1) / (d as f64 + 1.0);
                assert!((got - want).abs() < 1e-12 * want, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn cumulative_matrix_integrates_polynomials() {
        let g = GaussLegendre::new(6);
        let s = g.cumulative_matrix();
        // f(x) = x⁴ − 2x: ∫_{-1}^{y} = (y⁵ + 1)/5 − (y² − 1).
        let f: Vec<f64> = g.nodes.iter().map(|x| x.powi(4) - 2.0 * x).collect();
        for (i, row) in s.iter().enumerate() {
            let y = g.nodes[i];
            let got: f64 = row.iter().zip(&f).map(|(a, b)| a * b).sum();
            let want = (y.powi(5) + 1.0) / 5.0 - (y * y - 1.0);
            assert!((got - want).abs() < 1e-14);
        }
    }
}

//! The symplectic form `ω(u, v) = ∫ u ∂ₓ⁻¹v dx`, canonical coordinates,
//! Hamiltonians and numerical probes of symplecticity and nonsqueezing.
//!
//! With `û(k) = e_k + i f_k`, `ω(u, v) = 2π Σ_{k≥1} (2/k)(e_k(u)f_k(v) − e_k(v)f_k(u))`,
//! so the chart `x_k = Λ_k e_k`, `y_k = Λ_k f_k` with `Λ_k = 2√(π/k)` turns
//! `ω` into the standard form. The chart's Euclidean norm is the homogeneous
//! `Ḣ^{−1/2}` norm.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::flows::{rhs, FlowSpec};
use crate::fourier::{apply_multiplier, product, FourierField, Multiplier, C64};
use crate::geometry::{smallest_enclosing_circle, Circle};
use crate::integrator::{evolve, EvolveOptions};

pub fn omega(u: &FourierField, v: &FourierField) -> f64 {
    let s: f64 = u
        .coeffs()
        .iter()
        .zip(v.coeffs())
        .enumerate()
        .map(|(i, (a, b))| 2.0 / (i as f64 + 1.0) * (a.re * b.im - b.re * a.im))
        .sum();
    2.0 * PI * s
}

/// Canonical coordinates `(x_1..x_N, y_1..y_N)` on `P_{≤N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticChart {
    pub n: usize,
    pub scaling: Vec<f64>,
}

impl SymplecticChart {
    pub fn new(n: usize) -> Self {
        let scaling = (1..=n).map(|k| 2.0 * (PI / k as f64).sqrt()).collect();
        SymplecticChart { n, scaling }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Coordinates of the modes `1..=N` of `u`.
    pub fn to_chart(&self, u: &FourierField) -> Vec<f64> {
        let mut x = vec![0.0; 2 * self.n];
        for k in 1..=self.n {
            let c = u.get(k as i64);
            x[k - 1] = self.scaling[k - 1] * c.re;
            x[self.n + k - 1] = self.scaling[k - 1] * c.im;
        }
        x
    }

    /// Field in band `k_max ≥ N` with the given coordinates.
    pub fn from_chart(&self, x: &[f64], k_max: usize) -> FourierField {
        assert_eq!(x.len(), 2 * self.n);
        let mut u = FourierField::zeros(k_max.max(self.n));
        for k in 1..=self.n {
            let l = self.scaling[k - 1];
            u.set(k, C64::new(x[k - 1] / l, x[self.n + k - 1] / l));
        }
        u
    }
}

/// Standard form `Σ (x_k y'_k − x'_k y_k)`.
pub fn omega0(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    (0..n).map(|k| a[k] * b[n + k] - b[k] * a[n + k]).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Hamiltonian {
    /// `H[u] = ∫ ½u_x² + u³`.
    KdV,
    /// `H_N[u] = ∫ −½u_x² − (Bu)³`.
    Truncated { b: Multiplier },
}

/// `∫ u_x² dx`.
fn dirichlet(u: &FourierField) -> f64 {
    let s: f64 = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i as f64 + 1.0;
            k * k * c.norm_sqr()
        })
        .sum();
    4.0 * PI * s
}

/// `∫ u³ dx`, exact.
pub fn cubic(u: &FourierField) -> f64 {
    product(u, u, u.k_max()).field.dot(u)
}

/// `∫ u⁴ dx`, exact.
pub fn quartic(u: &FourierField) -> f64 {
    let sq = product(u, u, 2 * u.k_max());
    2.0 * PI * sq.mean * sq.mean + sq.field.dot(&sq.field)
}

pub fn hamiltonian(u: &FourierField, which: &Hamiltonian) -> f64 {
    match which {
        Hamiltonian::KdV => 0.5 * dirichlet(u) + cubic(u),
        Hamiltonian::Truncated { b } => -0.5 * dirichlet(u) - cubic(&apply_multiplier(b, u)),
    }
}

/// Functional `G` with `ω(v, rhs(u)) = dG[u](v)`.
///
/// For the Hamiltonian truncation this is `−H_N`; for `P_{≤N}` KdV it is
/// `∫ ½u_x² + (P_{≤N}u)³`, which generates the flow on `P_{≤N}` data; for mKdV
/// it is `∫ ½v_x² + ½v⁴ − 3π(P₀(v²))²`.
pub fn generating_hamiltonian(spec: &FlowSpec, u: &FourierField) -> Result<f64> {
    Ok(match spec {
        FlowSpec::Airy => 0.5 * dirichlet(u),
        FlowSpec::KdV => hamiltonian(u, &Hamiltonian::KdV),
        FlowSpec::PKdV { n } => 0.5 * dirichlet(u) + cubic(&u.with_band((*n).min(u.k_max()))),
        FlowSpec::HamTrunc { b, .. } => -hamiltonian(u, &Hamiltonian::Truncated { b: b.clone() }),
        FlowSpec::MKdV => {
            let p0 = product(u, u, 0).mean;
            0.5 * dirichlet(u) + 0.5 * quartic(u) - 3.0 * PI * p0 * p0
        }
        FlowSpec::BKdV { .. } => return Err(Error::NoHamiltonian("bkdv")),
        FlowSpec::B2KdV { .. } => return Err(Error::NoHamiltonian("b2kdv")),
    })
}

/// Conserved quantity recorded in trajectory ledgers: `H` for KdV-type flows,
/// the printed `H_N` for the Hamiltonian truncation.
pub fn conserved_hamiltonian(spec: &FlowSpec, u: &FourierField) -> Option<f64> {
    match spec {
        FlowSpec::HamTrunc { b, .. } => Some(hamiltonian(u, &Hamiltonian::Truncated { b: b.clone() })),
        _ => generating_hamiltonian(spec, u).ok(),
    }
}

/// Largest relative mismatch between `ω(v, rhs(u))` and a Richardson-extrapolated
/// centred difference of the generating Hamiltonian along random directions `v`.
pub fn omega_gradient_check(spec: &FlowSpec, u: &FourierField, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = |w: &FourierField| generating_hamiltonian(spec, w);
    let f = rhs(spec, u)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut v = FourierField::zeros(u.k_max());
        for k in 1..=u.k_max() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            v.set(k, C64::new(re, im) / (k as f64));
        }
        let eps = 0.1;
        let diff = |e: f64| -> Result<(f64, f64)> {
            let (p, m) = (h(&u.axpy(e, &v))?, h(&u.axpy(-e, &v))?);
            Ok(((p - m) / (2.0 * e), (p.abs() + m.abs()) / e))
        };
        let (d1, s1) = diff(eps)?;
        let (d2, _) = diff(eps / 2.0)?;
        let fd = (4.0 * d2 - d1) / 3.0;
        let exact = omega(&v, &f);
        let scale = exact.abs().max(fd.abs()).max(1e-10 * s1).max(f64::MIN_POSITIVE);
        worst = worst.max((exact - fd).abs() / scale);
    }
    Ok(worst)
}

fn flow_in_chart(
    spec: &FlowSpec,
    chart: &SymplecticChart,
    k_max: usize,
    x: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let u = chart.from_chart(x, k_max);
    let tr = evolve(spec, &u, t, &EvolveOptions::new(dt))?;
    Ok(chart.to_chart(tr.final_state()))
}

/// Jacobian of the time-`t` flow map in chart coordinates, by central
/// differences with one Richardson level. Column `j` is `∂F/∂x_j`.
pub fn flow_jacobian(spec: &FlowSpec, u0: &FourierField, t: f64, n: usize, dt: f64) -> Result<Vec<Vec<f64>>> {
    let chart = SymplecticChart::new(n);
    let k_max = u0.k_max().max(n);
    let x0 = chart.to_chart(u0);
    let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eps = 1e-4 * norm.max(1.0);
    let mut cols = Vec::with_capacity(chart.dim());
    for j in 0..chart.dim() {
        let central = |e: f64| -> Result<Vec<f64>> {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[j] += e;
            xm[j] -= e;
            let fp = flow_in_chart(spec, &chart, k_max, &xp, t, dt)?;
            let fm = flow_in_chart(spec, &chart, k_max, &xm, t, dt)?;
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * e)).collect())
        };
        let d1 = central(eps)?;
        let d2 = central(eps / 2.0)?;
        cols.push(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect());
    }
    Ok(cols)
}

/// `max |DᵀJD − J|` for the time-`t` flow map on `P_{≤N}`.
pub fn symplecticity_test(spec: &FlowSpec, u0: &FourierField, t: f64, n: usize, dt: f64) -> Result<f64> {
    if u0.support_max() > n {
        return Err(Error::invalid("u0", "initial datum must lie in the chart's band"));
    }
    let d = flow_jacobian(spec, u0, t, n, dt)?;
    let dim = 2 * n;
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            // (DᵀJD)_{ab} = ω₀(column a, column b).
            let got = omega0(&d[a], &d[b]);
            let want = if b == a + n && a < n {
                1.0
            } else if a == b + n && b < n {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((got - want).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSpec {
    pub k0: i64,
    /// Centre, in units of `û(k₀)`.
    pub z: C64,
    /// Radius, in chart units (same units as the ball radius).
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonsqueezeReport {
    pub r_hat: f64,
    pub radius: f64,
    pub ratio: f64,
    pub circle: Circle,
    /// Index into `directions` of the point farthest from the cylinder axis.
    pub witness: usize,
    pub witness_distance: f64,
    /// `true` when the farthest point lies outside the cylinder.
    pub escapes: bool,
    /// `true` when the enclosing circle is wider than the cylinder.
    pub wider_than_cylinder: bool,
    pub directions: Vec<Vec<f64>>,
    /// Disk coordinate `Λ_{k₀} û(T)(k₀)` of each sample.
    pub disk_points: Vec<(f64, f64)>,
}

/// Sphere directions: `samples` Gaussian directions followed by the `4N` signed axes.
pub fn sphere_directions(dim: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples + 2 * dim);
    while out.len() < samples {
        let d: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(d.into_iter().map(|x| x / norm).collect());
        }
    }
    for j in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[j] = s;
            out.push(d);
        }
    }
    out
}

/// Evolves the chart sphere of radius `R` about `u_star` and measures the image
/// in the `k₀` disk coordinate.
pub fn nonsqueeze_probe(
    spec: &FlowSpec,
    u_star: &FourierField,
    radius: f64,
    cyl: &CylinderSpec,
    t: f64,
    samples: usize,
    dt: f64,
    seed: u64,
) -> Result<NonsqueezeReport> {
    if samples < 16 {
        return Err(Error::invalid("samples", "need at least 16 samples"));
    }
    if !(radius > 0.0) || !(cyl.r > 0.0) {
        return Err(Error::invalid("R", "radii must be positive"));
    }
    let n = u_star.k_max();
    let k0 = cyl.k0.unsigned_abs() as usize;
    if cyl.k0 == 0 || k0 > n {
        return Err(Error::invalid("k0", "need 1 ≤ |k0| ≤ N"));
    }
    let chart = SymplecticChart::new(n);
    let x_star = chart.to_chart(u_star);
    let dirs = sphere_directions(chart.dim(), samples, seed);
    let lam = chart.scaling[k0 - 1];
    let mut points = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let x: Vec<f64> = x_star.iter().zip(d).map(|(a, b)| a + radius * b).collect();
        let u = chart.from_chart(&x, n);
        let tr = evolve(spec, &u, t, &EvolveOptions::new(dt))?;
        let c = tr.final_state().get(cyl.k0) * lam;
        points.push((c.re, c.im));
    }
    let circle = smallest_enclosing_circle(&points).expect("nonempty sample set");
    let centre = cyl.z * lam;
    let (witness, witness_distance) = points
        .iter()
        .map(|p| (p.0 - centre.re).hypot(p.1 - centre.im))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(NonsqueezeReport {
        r_hat: circle.radius,
        radius,
        ratio: circle.radius / radius,
        circle,
        witness,
        witness_distance,
        escapes: witness_distance > cyl.r,
        wider_than_cylinder: circle.radius > cyl.r,
        directions: dirs,
        disk_points: points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{bump_b, derivative, synthesize};
    use rand::Rng;

    fn random_field(rng: &mut ChaCha8Rng, k: usize, amp: f64) -> FourierField {
        let coeffs =
            (1..=k).map(|j| C64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)) / j as f64).collect();
        FourierField::from_coeffs(coeffs).unwrap()
    }

    #[test]
    fn omega_examples() {
        let c = FourierField::cosine(2, 1, 1.0);
        let s = FourierField::sine(2, 1, 1.0);
        assert!((omega(&c, &s) + PI).abs() < 1e-15);
        assert_eq!(omega(&c, &c), 0.0);
        assert_eq!(omega(&c, &FourierField::cosine(2, 2, 1.0)), 0.0);
    }

    #[test]
    fn omega_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_field(&mut rng, 7, 1.0);
        let v = random_field(&mut rng, 7, 1.0);
        let m = 32;
        let su = synthesize(&u, m).unwrap();
        let sv = synthesize(&derivative(&v, -1), m).unwrap();
        let quad: f64 = su.iter().zip(&sv).map(|(a, b)| a * b).sum::<f64>() * 2.0 * PI / m as f64;
        assert!((quad - omega(&u, &v)).abs() < 1e-12 * quad.abs().max(1.0));
    }

    #[test]
    fn chart_fidelity_and_bilinearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chart = SymplecticChart::new(10);
        for _ in 0..1000 {
            let u = random_field(&mut rng, 10, 1.0);
            let v = random_field(&mut rng, 10, 1.0);
            let w = omega(&u, &v);
            let w0 = omega0(&chart.to_chart(&u), &chart.to_chart(&v));
            assert!((w - w0).abs() <= 1e-12 * w.abs().max(1e-3));
            assert!((w + omega(&v, &u)).abs() < 1e-14);
        }
        let u = random_field(&mut rng, 10, 1.0);
        assert!(chart.from_chart(&chart.to_chart(&u), 10).max_abs_diff(&u) < 1e-15);
    }

    #[test]
    fn nondegenerate_conjugate_pairs() {
        let chart = SymplecticChart::new(6);
        for k in 1..=6 {
            let mut e = vec![0.0; 12];
            e[k - 1] = 1.0;
            let mut f = vec![0.0; 12];
            f[6 + k - 1] = 1.0;
            let (ue, uf) = (chart.from_chart(&e, 6), chart.from_chart(&f, 6));
            assert!((omega(&ue, &uf) - 1.0).abs() < 1e-14);
            // In Fourier units: ω(cos kx, −sin kx)-type pairs carry 2π·(2/k)·(1/Λ_k²).
            let l = chart.scaling[k - 1];
            assert!((2.0 * PI * 2.0 / k as f64 / (l * l) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_values() {
        let c = FourierField::cosine(3, 1, 1.0);
        assert!((hamiltonian(&c, &Hamiltonian::KdV) - PI / 2.0).abs() < 1e-14);
        assert_eq!(hamiltonian(&FourierField::zeros(3), &Hamiltonian::KdV), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_field(&mut rng, 6, 1.0);
        let h = hamiltonian(&u, &Hamiltonian::KdV);
        let hn = hamiltonian(&u, &Hamiltonian::Truncated { b: Multiplier::Identity });
        assert!((h + hn).abs() < 1e-13 * h.abs());
        // ∫u³ against a padded quadrature.
        let s = synthesize(&u, 64).unwrap();
        let q: f64 = s.iter().map(|x| x * x * x).sum::<f64>() * 2.0 * PI / 64.0;
        assert!((q - cubic(&u)).abs() < 1e-12);
        let q4: f64 = s.iter().map(|x| x.powi(4)).sum::<f64>() * 2.0 * PI / 64.0;
        assert!((q4 - quartic(&u)).abs() < 1e-12);
    }

    #[test]
    fn gradient_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&mut rng, 16, 1.0);
        assert!(omega_gradient_check(&FlowSpec::KdV, &u, 5, 1).unwrap() < 1e-9);
        assert!(omega_gradient_check(&FlowSpec::MKdV, &u, 5, 1).unwrap() < 1e-9);
        let b = bump_b(16).unwrap();
        let ht = FlowSpec::HamTrunc { n: 16, b };
        assert!(omega_gradient_check(&ht, &u, 5, 1).unwrap() < 1e-9);
        let low = u.with_band(8).with_band(16);
        assert!(omega_gradient_check(&FlowSpec::PKdV { n: 8 }, &low, 5, 1).unwrap() < 1e-9);
        let z = omega_gradient_check(&FlowSpec::KdV, &FourierField::zeros(8), 3, 1).unwrap();
        assert!(z < 1e-6, "{z}");
        assert!(matches!(
            omega_gradient_check(&FlowSpec::BKdV { b: bump_b(8).unwrap() }, &u, 1, 1),
            Err(Error::NoHamiltonian(_))
        ));
    }

    #[test]
    fn identity_flow_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_field(&mut rng, 4, 0.2);
        assert!(symplecticity_test(&FlowSpec::KdV, &u, 0.0, 4, 1e-3).unwrap() <= 1e-10);
    }

    #[test]
    fn probe_identity_and_linear() {
        let u_star = FourierField::zeros(4);
        let cyl = CylinderSpec { k0: 1, z: C64::new(0.0, 0.0), r: 0.1 };
        for (spec, t) in [(FlowSpec::KdV, 0.0), (FlowSpec::Airy, 0.7)] {
            let rep = nonsqueeze_probe(&spec, &u_star, 0.3, &cyl, t, 32, 1e-2, 7).unwrap();
            assert!((rep.r_hat - 0.3).abs() < 1e-10, "{}", rep.r_hat);
            assert!(rep.escapes && rep.wider_than_cylinder);
        }
    }
}

//! Band-limited real mean-zero fields on the circle and Fourier multipliers.
//!
//! A [`FourierField`] stores `û(1), …, û(K)`; negative frequencies follow from
//! Hermitian symmetry and `û(0) = 0` always, so every field synthesizes to a
//! real function with zero mean.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::smoothstep;

pub type C64 = Complex<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    coeffs: Vec<C64>,
}

impl FourierField {
    pub fn zeros(k_max: usize) -> Self {
        FourierField { coeffs: vec![C64::zero(); k_max] }
    }

    /// Builds a field from `û(1..=K)`, rejecting non-finite amplitudes.
    pub fn from_coeffs(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("field coefficients"));
        }
        Ok(FourierField { coeffs })
    }

    /// `amp · cos(kx)` in band `k_max`.
    pub fn cosine(k_max: usize, k: usize, amp: f64) -> Self {
        let mut f = Self::zeros(k_max.max(k));
        f.set(k, C64::new(amp / 2.0, 0.0));
        f
    }

    /// `amp · sin(kx)` in band `k_max`.
    pub fn sine(k_max: usize, k: usize, amp: f64) -> Self {
        let mut f = Self::zeros(k_max.max(k));
        f.set(k, C64::new(0.0, -amp / 2.0));
        f
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient at any integer frequency (zero outside the band and at 0).
    #[inline]
    pub fn get(&self, k: i64) -> C64 {
        if k == 0 {
            return C64::zero();
        }
        let idx = k.unsigned_abs() as usize;
        if idx > self.coeffs.len() {
            return C64::zero();
        }
        let c = self.coeffs[idx - 1];
        if k > 0 {
            c
        } else {
            c.conj()
        }
    }

    /// Sets `û(k)` for `1 ≤ k ≤ K`.
    pub fn set(&mut self, k: usize, c: C64) {
        assert!(k >= 1 && k <= self.coeffs.len(), "frequency {k} outside band");
        self.coeffs[k - 1] = c;
    }

    /// Same field truncated or zero-padded to band `k_max`.
    pub fn with_band(&self, k_max: usize) -> Self {
        let mut coeffs = vec![C64::zero(); k_max];
        let n = k_max.min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        FourierField { coeffs }
    }

    /// Largest frequency carrying a nonzero coefficient.
    pub fn support_max(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, a: f64) -> Self {
        FourierField { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `self + a·other`, in the larger of the two bands.
    pub fn axpy(&self, a: f64, other: &FourierField) -> Self {
        let k = self.k_max().max(other.k_max());
        let mut out = self.with_band(k);
        for (o, c) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *o += c * a;
        }
        out
    }

    /// Real L² pairing `∫ u v dx`.
    pub fn dot(&self, other: &FourierField) -> f64 {
        let s: f64 = self.coeffs.iter().zip(other.coeffs.iter()).map(|(a, b)| (a * b.conj()).re).sum();
        4.0 * PI * s
    }

    /// `Σ_{k≠0} |û(k)|²` over both signs, i.e. `‖u‖²_{L²}/(2π)`.
    pub fn l2_sum(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference, across the union of the two bands.
    pub fn max_abs_diff(&self, other: &FourierField) -> f64 {
        let k = self.k_max().max(other.k_max());
        (1..=k as i64).map(|j| (self.get(j) - other.get(j)).norm()).fold(0.0, f64::max)
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(-1.0)
    }
}

impl Mul<&FourierField> for f64 {
    type Output = FourierField;
    fn mul(self, rhs: &FourierField) -> FourierField {
        rhs.scale(self)
    }
}

/// Real, even Fourier multiplier. `symbol` accepts real arguments so that the
/// modified-energy symbols can be probed off the integer lattice; sharp
/// cutoffs jump at half-integers, which leaves them smooth near every integer.
#[derive(Clone, Debug, PartialEq)]
pub enum Multiplier {
    Identity,
    /// `χ_{|k| ≤ n}`.
    SharpCutoff {
        n: usize,
    },
    /// Smooth bump: 1 on `|k| ≤ n/2`, 0 on `|k| ≥ n`, quintic smoothstep between.
    Bump {
        n: usize,
    },
    /// Modified-energy weight `m(k)`; see [`crate::imethod::IMultiplier`].
    IMethod {
        threshold: f64,
        s: f64,
    },
    /// Symbol tabulated on `|k| = 0, 1, …`; zero past the table.
    Table(Vec<f64>),
    Product(Box<Multiplier>, Box<Multiplier>),
}

impl Multiplier {
    pub fn symbol(&self, k: f64) -> f64 {
        let a = k.abs();
        match self {
            Multiplier::Identity => 1.0,
            Multiplier::SharpCutoff { n } => {
                if a <= *n as f64 + 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Multiplier::Bump { n } => {
                let n = *n as f64;
                if a <= n / 2.0 {
                    1.0
                } else if a >= n {
                    0.0
                } else {
                    smoothstep((n - a) / (n / 2.0))
                }
            }
            Multiplier::IMethod { threshold, s } => {
                crate::imethod::IMultiplier { threshold: *threshold, s: *s }.symbol(k)
            }
            Multiplier::Table(t) => {
                let idx = libm::round(a) as usize;
                t.get(idx).copied().unwrap_or(0.0)
            }
            Multiplier::Product(x, y) => x.symbol(k) * y.symbol(k),
        }
    }

    #[inline]
    pub fn at(&self, k: i64) -> f64 {
        self.symbol(k as f64)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Multiplier::Identity => "identity",
            Multiplier::SharpCutoff { .. } => "sharp-cutoff",
            Multiplier::Bump { .. } => "bump-b",
            Multiplier::IMethod { .. } => "imethod-m",
            Multiplier::Table(_) => "custom",
            Multiplier::Product(..) => "product",
        }
    }

    /// Pointwise product of two symbols.
    pub fn times(self, other: Multiplier) -> Multiplier {
        match (self, other) {
            (Multiplier::Identity, m) | (m, Multiplier::Identity) => m,
            (a, b) => Multiplier::Product(Box::new(a), Box::new(b)),
        }
    }

    /// Symbol values at `k = 0..=k_max`.
    pub fn table(&self, k_max: usize) -> Vec<f64> {
        (0..=k_max).map(|k| self.at(k as i64)).collect()
    }

    /// Every symbol value in `0..=k_max` is exactly zero or one.
    pub fn is_projection(&self, k_max: usize) -> bool {
        self.table(k_max).iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// The smooth bump `b` adapted to `[-n, n]`.
pub fn bump_b(n: usize) -> Result<Multiplier> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid("N", "bump needs a positive even N ≥ 2"));
    }
    Ok(Multiplier::Bump { n })
}

pub fn sharp_cutoff(n: usize) -> Multiplier {
    Multiplier::SharpCutoff { n }
}

pub fn apply_multiplier(m: &Multiplier, u: &FourierField) -> FourierField {
    let coeffs = u.coeffs.iter().enumerate().map(|(i, c)| c * m.at(i as i64 + 1)).collect();
    FourierField { coeffs }
}

/// `P_{≤n} u`.
pub fn project(u: &FourierField, n: usize) -> FourierField {
    u.with_band(n.min(u.k_max())).with_band(u.k_max())
}

/// `(ik)^order û(k)`; negative orders are antiderivatives (fields are mean-zero).
pub fn derivative(u: &FourierField, order: i32) -> FourierField {
    let coeffs = u.coeffs.iter().enumerate().map(|(i, c)| c * ik_pow(i as f64 + 1.0, order)).collect();
    FourierField { coeffs }
}

pub(crate) fn ik_pow(k: f64, order: i32) -> C64 {
    let mag = k.powi(order);
    let phase = match order.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => I,
        2 => C64::new(-1.0, 0.0),
        _ => -I,
    };
    phase * mag
}

/// `(2π Σ_{k≠0} ⟨k⟩^{2s} |û(k)|²)^{1/2}`.
pub fn sobolev_norm(u: &FourierField, s: f64) -> f64 {
    let sum: f64 = u
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i as f64 + 1.0;
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum();
    (4.0 * PI * sum).sqrt()
}

/// Homogeneous `(2π Σ_{k≠0} |k|^{2s} |û(k)|²)^{1/2}`.
pub fn homogeneous_norm(u: &FourierField, s: f64) -> f64 {
    let sum: f64 = u.coeffs.iter().enumerate().map(|(i, c)| (i as f64 + 1.0).powf(2.0 * s) * c.norm_sqr()).sum();
    (4.0 * PI * sum).sqrt()
}

struct Twiddles {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(m: usize) -> Self {
        let (cos, sin) = (0..m)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / m as f64;
                (x.cos(), x.sin())
            })
            .unzip();
        Twiddles { cos, sin }
    }
}

/// Samples `u(x_j)`, `x_j = 2πj/m`.
pub fn synthesize(u: &FourierField, m: usize) -> Result<Vec<f64>> {
    let need = 2 * u.k_max() + 2;
    if m < need {
        return Err(Error::GridTooSmall { got: m, need, k_max: u.k_max() });
    }
    let tw = Twiddles::new(m);
    let mut out = vec![0.0; m];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, c) in u.coeffs.iter().enumerate() {
            let idx = ((i + 1) * j) % m;
            acc += c.re * tw.cos[idx] - c.im * tw.sin[idx];
        }
        *o = 2.0 * acc;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub field: FourierField,
    /// The discarded `û(0)`.
    pub mean: f64,
}

/// Discrete version of `û(k) = (1/2π) ∫ u e^{-ikx} dx` on a uniform grid.
pub fn analyze(samples: &[f64], k_max: usize) -> Result<Analysis> {
    let m = samples.len();
    let need = 2 * k_max + 2;
    if m < need {
        return Err(Error::GridTooSmall { got: m, need, k_max });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("analysis samples"));
    }
    let tw = Twiddles::new(m);
    let inv = 1.0 / m as f64;
    let mean = samples.iter().sum::<f64>() * inv;
    let coeffs = (1..=k_max)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &x) in samples.iter().enumerate() {
                let idx = (k * j) % m;
                re += x * tw.cos[idx];
                im -= x * tw.sin[idx];
            }
            C64::new(re * inv, im * inv)
        })
        .collect();
    Ok(Analysis { field: FourierField { coeffs }, mean })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Product {
    pub field: FourierField,
    /// `P₀(uv)`.
    pub mean: f64,
}

/// Exact convolution `(û * v̂)(k)` for `0 ≤ k ≤ k_out`; no aliasing is involved.
///
/// With the `fft` feature, large bands are convolved by a zero-padded FFT.
pub fn product(u: &FourierField, v: &FourierField, k_out: usize) -> Product {
    #[cfg(feature = "fft")]
    if u.k_max() + v.k_max() >= FFT_THRESHOLD {
        let c = fft::convolve(u, v, k_out);
        return Product { field: FourierField { coeffs: c[1..].to_vec() }, mean: c[0].re };
    }
    product_direct(u, v, k_out)
}

/// Combined input band from which [`product`] switches to the FFT route.
pub const FFT_THRESHOLD: usize = 48;

/// [`product`] by direct summation, for any band.
pub fn product_direct(u: &FourierField, v: &FourierField, k_out: usize) -> Product {
    let ku = u.k_max() as i64;
    let kv = v.k_max() as i64;
    let full_u = full_spectrum(u);
    let full_v = full_spectrum(v);
    let conv = |k: i64| -> C64 {
        let lo = (-ku).max(k - kv);
        let hi = ku.min(k + kv);
        let mut acc = C64::zero();
        for k1 in lo..=hi {
            acc += full_u[(k1 + ku) as usize] * full_v[(k - k1 + kv) as usize];
        }
        acc
    };
    let mean = conv(0).re;
    let coeffs = (1..=k_out as i64).map(conv).collect();
    Product { field: FourierField { coeffs }, mean }
}

#[cfg(feature = "fft")]
mod fft {
    use super::{FourierField, C64};
    use alloc::vec;
    use alloc::vec::Vec;
    use core::cell::RefCell;
    use rustfft::FftPlanner;

    std::thread_local! {
        static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    }

    /// `(û * v̂)(k)` for `0 ≤ k ≤ k_out`. The transform length exceeds
    /// `K_u + K_v + k_out`, so wrap-around never reaches the requested modes.
    pub(super) fn convolve(u: &FourierField, v: &FourierField, k_out: usize) -> Vec<C64> {
        let len = (u.k_max() + v.k_max() + k_out + 1).next_power_of_two();
        let load = |f: &FourierField| {
            let mut buf = vec![C64::new(0.0, 0.0); len];
            for (i, c) in f.coeffs().iter().enumerate() {
                buf[i + 1] = *c;
                buf[len - i - 1] = c.conj();
            }
            buf
        };
        let (mut a, mut b) = (load(u), load(v));
        PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            let inverse = p.plan_fft_inverse(len);
            let forward = p.plan_fft_forward(len);
            inverse.process(&mut a);
            inverse.process(&mut b);
            for (x, y) in a.iter_mut().zip(&b) {
                // Samples of real fields: drop the rounding-level imaginary parts.
                *x = C64::new(x.re * y.re, 0.0);
            }
            forward.process(&mut a);
        });
        let scale = 1.0 / len as f64;
        a.truncate(k_out + 1);
        a.iter().map(|c| c * scale).collect()
    }
}

/// Coefficients on `-K..=K` (index `k + K`), with a zero at the centre.
pub(crate) fn full_spectrum(u: &FourierField) -> Vec<C64> {
    let k = u.k_max() as i64;
    (-k..=k).map(|j| u.get(j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rng: &mut ChaCha8Rng, k: usize) -> FourierField {
        let coeffs = (0..k).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        FourierField::from_coeffs(coeffs).unwrap()
    }

    #[test]
    fn cosine_synthesizes_to_samples() {
        let u = FourierField::cosine(1, 1, 1.0);
        let s = synthesize(&u, 8).unwrap();
        for (j, x) in s.iter().enumerate() {
            assert!((x - (2.0 * PI * j as f64 / 8.0).cos()).abs() < 1e-14);
        }
        assert!(synthesize(&FourierField::zeros(3), 8).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn synthesize_rejects_small_grid() {
        let u = FourierField::zeros(4);
        assert!(matches!(synthesize(&u, 9), Err(Error::GridTooSmall { need: 10, .. })));
    }

    #[test]
    fn analyze_closed_forms() {
        let m = 32;
        let xs: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
        let cosx: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        let a = analyze(&cosx, 4).unwrap();
        assert!((a.field.get(1) - C64::new(0.5, 0.0)).norm() < 1e-12);
        for k in 2..=4 {
            assert!(a.field.get(k).norm() < 1e-12);
        }
        let sin2: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
        let a = analyze(&sin2, 4).unwrap();
        assert!((a.field.get(2) - C64::new(0.0, -0.5)).norm() < 1e-12);
        let c = analyze(&[3.0; 16], 4).unwrap();
        assert!(c.field.is_zero() || c.field.max_abs() < 1e-15);
        assert!((c.mean - 3.0).abs() < 1e-15);
        assert!(matches!(analyze(&[f64::NAN; 16], 4), Err(Error::NonFinite(_))));
    }

    #[test]
    fn roundtrip_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &k in &[1usize, 7, 64, 256] {
            let u = random_field(&mut rng, k);
            let back = analyze(&synthesize(&u, 2 * k + 2).unwrap(), k).unwrap().field;
            assert!(back.max_abs_diff(&u) <= 1e-12 * u.max_abs().max(1.0));
        }
    }

    #[test]
    fn multipliers() {
        let mut u = FourierField::zeros(3);
        u.set(1, C64::new(1.0, 0.0));
        u.set(3, C64::new(1.0, 0.0));
        let p = apply_multiplier(&sharp_cutoff(2), &u);
        assert_eq!(p.get(1), C64::new(1.0, 0.0));
        assert_eq!(p.get(3), C64::zero());
        assert_eq!(apply_multiplier(&Multiplier::Identity, &u), u);
        let b = bump_b(8).unwrap();
        let mut w = FourierField::zeros(8);
        w.set(3, C64::new(1.0, 0.0));
        assert_eq!(apply_multiplier(&b, &w), w);
        assert_eq!(b.at(4), 1.0);
        assert_eq!(b.at(8), 0.0);
        assert!((b.at(6) - 0.5).abs() < 1e-15);
        for k in -20..=20 {
            assert_eq!(b.at(k), b.at(-k));
        }
        assert!(bump_b(7).is_err());
        assert!(bump_b(0).is_err());
    }

    #[test]
    fn bump_is_monotone_on_transition() {
        for n in [4usize, 8, 16, 64] {
            let b = bump_b(n).unwrap();
            for k in n / 2..n {
                assert!(b.at(k as i64) >= b.at(k as i64 + 1));
            }
            assert_eq!(b.at((n / 2) as i64), 1.0);
            assert_eq!(b.at(n as i64 + 3), 0.0);
        }
    }

    #[test]
    fn sobolev_norm_examples() {
        let u = FourierField::cosine(1, 1, 1.0);
        assert!((sobolev_norm(&u, 0.0) - PI.sqrt()).abs() < 1e-14);
        assert!((sobolev_norm(&u, -0.5) - (PI / 2f64.sqrt()).sqrt()).abs() < 1e-14);
        assert_eq!(sobolev_norm(&FourierField::zeros(5), 1.0), 0.0);
    }

    #[test]
    fn l2_norm_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_field(&mut rng, 12);
        let m = 64;
        let quad: f64 = synthesize(&u, m).unwrap().iter().map(|x| x * x).sum::<f64>() * 2.0 * PI / m as f64;
        let n = sobolev_norm(&u, 0.0);
        assert!((n * n - quad).abs() <= 1e-10 * quad);
    }

    #[test]
    fn cos_squared_product() {
        let u = FourierField::cosine(1, 1, 1.0);
        let p = product(&u, &u, 4);
        assert!((p.mean - 0.5).abs() < 1e-15);
        assert!((p.field.get(2) - C64::new(0.25, 0.0)).norm() < 1e-15);
        assert!(p.field.get(1).norm() < 1e-15 && p.field.get(3).norm() < 1e-15);
        let z = product(&u, &FourierField::zeros(3), 4);
        assert!(z.field.is_zero() && z.mean == 0.0);
    }

    #[cfg(feature = "fft")]
    #[test]
    fn fft_route_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (ku, kv, k_out) in [(40, 40, 80), (64, 3, 20), (100, 100, 100)] {
            let (u, v) = (random_field(&mut rng, ku), random_field(&mut rng, kv));
            let a = product(&u, &v, k_out);
            let b = product_direct(&u, &v, k_out);
            let scale = u.max_abs() * v.max_abs() * (ku + kv) as f64;
            assert!(a.field.max_abs_diff(&b.field) < 1e-14 * scale);
            assert!((a.mean - b.mean).abs() < 1e-14 * scale);
        }
    }

    #[test]
    fn product_matches_pointwise_on_padded_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&mut rng, 9);
        let v = random_field(&mut rng, 6);
        let k_out = 15;
        let p = product(&u, &v, k_out);
        let m = 64;
        let su = synthesize(&u, m).unwrap();
        let sv = synthesize(&v, m).unwrap();
        let uv: Vec<f64> = su.iter().zip(&sv).map(|(a, b)| a * b).collect();
        let a = analyze(&uv, k_out).unwrap();
        assert!(a.field.max_abs_diff(&p.field) < 1e-13);
        assert!((a.mean - p.mean).abs() < 1e-13);
    }

    #[test]
    fn derivative_pairs() {
        let c = FourierField::cosine(2, 1, 1.0);
        let d = derivative(&c, 1);
        assert!((d.get(1) - C64::new(0.0, 0.5)).norm() < 1e-15);
        let s = FourierField::sine(2, 1, 1.0);
        let anti = derivative(&s, -1);
        assert!((anti.get(1) - C64::new(-0.5, 0.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(&mut rng, 10);
        assert!(derivative(&derivative(&u, 1), -1).max_abs_diff(&u) < 1e-14);
    }

    #[test]
    fn cutoff_is_idempotent_and_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_field(&mut rng, 12);
        let v = random_field(&mut rng, 12);
        let p = sharp_cutoff(5);
        let pu = apply_multiplier(&p, &u);
        assert_eq!(apply_multiplier(&p, &pu), pu);
        let lhs = pu.dot(&v);
        let rhs = u.dot(&apply_multiplier(&p, &v));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field(k: usize) -> impl Strategy<Value = FourierField> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), k)
                .prop_map(|v| FourierField::from_coeffs(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
        }

        proptest! {
            #[test]
            fn product_commutes_and_is_bilinear(u in field(6), v in field(5), w in field(5), a in -2.0f64..2.0) {
                let uv = product(&u, &v, 11);
                let vu = product(&v, &u, 11);
                prop_assert!(uv.field.max_abs_diff(&vu.field) < 1e-13);
                let lhs = product(&u, &v.axpy(a, &w), 11);
                let rhs = uv.field.axpy(a, &product(&u, &w, 11).field);
                prop_assert!(lhs.field.max_abs_diff(&rhs) < 1e-12);
            }

            #[test]
            fn synthesis_is_real_roundtrip(u in field(20)) {
                let back = analyze(&synthesize(&u, 64).unwrap(), 20).unwrap();
                prop_assert!(back.field.max_abs_diff(&u) < 1e-13);
                prop_assert!(back.mean.abs() < 1e-13);
            }
        }
    }
}

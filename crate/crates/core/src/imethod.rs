//! Modified energies for the I-method: the multilinear functionals `Λₙ`, the
//! multiplier hierarchy `M₃, σ₃, M₄, σ₄, M₅`, the energies `E₂, E₃, E₄`, the
//! differentiation law along a trajectory and sampled checks of the symbol bounds.
//!
//! For a symmetric symbol `M` and the flow `∂ₜû = ik³û + 3ik b(k)(u²)^`,
//!
//! `d/dt Λₙ(M) = iΛₙ(Mαₙ) + 3in Λₙ₊₁(M(k₁, …, kₙ₋₁, kₙ+kₙ₊₁) b(kₙ+kₙ₊₁)(kₙ+kₙ₊₁))`
//!
//! with `αₙ = k₁³ + … + kₙ³`. Cancelling the first term against the lower
//! level gives `σₙ = iMₙ/αₙ` and, with `f(k) = m(k)²b(k)k`,
//!
//! * `M₃ = −2i(f₁+f₂+f₃)`, `σ₃ = 2(f₁+f₂+f₃)/(3k₁k₂k₃)`,
//! * `M₄ = 9i[σ₃(k₁,k₂,k₃₄)b₃₄k₃₄]_sym = i Σ_{i<j} b_{ij}(f_i+f_j−f_{ij})/(k_ik_j)`,
//! * `M₅ = 12i[σ₄(k₁,k₂,k₃,k₄₅)b₄₅k₄₅]_sym`.
//!
//! The `M`'s are purely imaginary and the `σ`'s real.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flows::FlowSpec;
use crate::fourier::{full_spectrum, FourierField, Multiplier, C64};
use crate::integrator::Trajectory;
use crate::smoothstep;

/// `m(k)`: 1 on `|k| ≤ A`, `(|k|/A)^s` on `|k| ≥ 2A`, and
/// `exp(s·ln2·t·S(t))` with `t = log₂(|k|/A)` in between (`S` the quintic
/// smoothstep), which is C², even and nonincreasing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IMultiplier {
    pub threshold: f64,
    pub s: f64,
}

impl IMultiplier {
    pub fn new(threshold: f64, s: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::invalid("A", "threshold must be positive"));
        }
        if !(-0.5..0.0).contains(&s) && !(s == 0.0 && threshold.is_infinite()) {
            return Err(Error::invalid("s", "need -1/2 ≤ s < 0"));
        }
        Ok(IMultiplier { threshold, s })
    }

    /// `m ≡ 1`.
    pub fn identity() -> Self {
        IMultiplier { threshold: f64::INFINITY, s: 0.0 }
    }

    pub fn symbol(&self, k: f64) -> f64 {
        let a = k.abs();
        if a <= self.threshold {
            1.0
        } else if a >= 2.0 * self.threshold {
            (a / self.threshold).powf(self.s)
        } else {
            let t = (a / self.threshold).log2();
            (self.s * LN_2 * t * smoothstep(t)).exp()
        }
    }

    pub fn as_multiplier(&self) -> Multiplier {
        Multiplier::IMethod { threshold: self.threshold, s: self.s }
    }
}

/// Function on the zero-sum hyperplane `Γₙ`.
pub struct MultilinearSymbol<'a> {
    pub arity: usize,
    eval: Box<dyn Fn(&[f64]) -> C64 + 'a>,
}

impl<'a> MultilinearSymbol<'a> {
    pub fn new(arity: usize, eval: impl Fn(&[f64]) -> C64 + 'a) -> Self {
        MultilinearSymbol { arity, eval: Box::new(eval) }
    }

    pub fn eval(&self, k: &[f64]) -> C64 {
        debug_assert_eq!(k.len(), self.arity);
        (self.eval)(k)
    }

    /// Average over all `n!` orderings of the arguments.
    pub fn symmetrize(self) -> MultilinearSymbol<'a> {
        let n = self.arity;
        let perms = permutations(n);
        let count = perms.len() as f64;
        MultilinearSymbol::new(n, move |k: &[f64]| {
            let mut buf = vec![0.0; n];
            let mut acc = Neumaier::default();
            for p in &perms {
                for (slot, &j) in buf.iter_mut().zip(p) {
                    *slot = k[j];
                }
                acc.add((self.eval)(&buf));
            }
            acc.total() / count
        })
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // Next lexicographic permutation.
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Neumaier-compensated complex sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier_add(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

impl Neumaier {
    pub fn add(&mut self, z: C64) {
        neumaier_add(&mut self.re, z.re);
        neumaier_add(&mut self.im, z.im);
    }

    pub fn total(&self) -> C64 {
        C64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// `Λₙ(M; u) = Σ_{Γₙ, |kᵢ| ≤ K} M(k) Π û(kᵢ)` by direct enumeration
/// (lexicographic order, compensated sum), `n ∈ {2, …, 5}`.
pub fn lambda_n(m: &MultilinearSymbol<'_>, u: &FourierField) -> C64 {
    let n = m.arity;
    assert!((2..=5).contains(&n), "arity must be between 2 and 5");
    let kk = u.k_max() as i64;
    let full = full_spectrum(u);
    let coef = |k: i64| full[(k + kk) as usize];
    let mut acc = Neumaier::default();
    let mut idx = vec![-kk; n - 1];
    let mut args = vec![0.0; n];
    'outer: loop {
        let last: i64 = -idx.iter().sum::<i64>();
        if last != 0 && last.abs() <= kk && idx.iter().all(|&k| k != 0) {
            let mut prod = coef(last);
            for &k in &idx {
                prod *= coef(k);
            }
            if !prod.is_zero() {
                for (a, &k) in args.iter_mut().zip(&idx) {
                    *a = k as f64;
                }
                args[n - 1] = last as f64;
                acc.add(m.eval(&args) * prod);
            }
        }
        // Odometer increment.
        for pos in (0..n - 1).rev() {
            if idx[pos] < kk {
                idx[pos] += 1;
                continue 'outer;
            }
            idx[pos] = -kk;
        }
        break;
    }
    acc.total()
}

fn sorted<const N: usize>(mut k: [f64; N]) -> [f64; N] {
    k.sort_by(|a, b| a.total_cmp(b));
    k
}

/// Outcome of a `σ₄` evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sigma4Value {
    pub value: f64,
    /// Spread of the directional limits when the point is resonant.
    pub spread: Option<f64>,
    /// Estimated rounding error of the limits.
    pub noise: f64,
}

impl Sigma4Value {
    /// Directional limits differ by more than `LIMIT_TOL` relative, beyond rounding.
    pub fn disagrees(&self) -> bool {
        self.spread.is_some_and(|s| s > LIMIT_TOL * self.value.abs() + 2.0 * self.noise)
    }
}

/// Zero-sum directions used for the `σ₄` limits (fourth entry balances the sum).
// Generic irrational entries; any likeness to named constants is incidental.
#[allow(clippy::approx_constant)]
const LIMIT_DIRECTIONS: [[f64; 3]; 3] = [
    [0.318_309_886, -0.577_215_665, 0.141_421_356],
    [-0.271_828_183, 0.693_147_181, 0.414_213_562],
    [0.5, 0.223_606_798, -0.707_106_781],
];

/// Tolerance on the relative spread of directional limits.
pub const LIMIT_TOL: f64 = 1e-6;

/// The symbol hierarchy for a weight `m` and a flow multiplier `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    pub m: IMultiplier,
    pub b: Multiplier,
}

impl Hierarchy {
    pub fn new(m: IMultiplier, b: Multiplier) -> Self {
        Hierarchy { m, b }
    }

    /// `f(k) = m(k)²b(k)k`.
    #[inline]
    pub fn f(&self, k: f64) -> f64 {
        let m = self.m.symbol(k);
        m * m * self.b.symbol(k) * k
    }

    pub fn alpha3(k: [f64; 3]) -> f64 {
        3.0 * k[0] * k[1] * k[2]
    }

    pub fn alpha4(k: [f64; 4]) -> f64 {
        3.0 * (k[0] + k[1]) * (k[0] + k[2]) * (k[0] + k[3])
    }

    pub fn m3(&self, k: [f64; 3]) -> C64 {
        let k = sorted(k);
        C64::new(0.0, -2.0 * (self.f(k[0]) + self.f(k[1]) + self.f(k[2])))
    }

    pub fn sigma3(&self, k: [f64; 3]) -> f64 {
        let k = sorted(k);
        2.0 * (self.f(k[0]) + self.f(k[1]) + self.f(k[2])) / (3.0 * k[0] * k[1] * k[2])
    }

    /// `Im M₄`; `M₄ = i·m4_im`.
    pub fn m4_im(&self, k: [f64; 4]) -> f64 {
        let k = sorted(k);
        let f: [f64; 4] = [self.f(k[0]), self.f(k[1]), self.f(k[2]), self.f(k[3])];
        let mut acc = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let kij = k[i] + k[j];
                acc += self.b.symbol(kij) * (f[i] + f[j] - self.f(kij)) / (k[i] * k[j]);
            }
        }
        acc
    }

    pub fn m4(&self, k: [f64; 4]) -> C64 {
        C64::new(0.0, self.m4_im(k))
    }

    /// `σ₄ = iM₄/α₄ = −Im M₄/α₄` away from the resonant variety, without limits.
    fn sigma4_raw(&self, k: [f64; 4]) -> f64 {
        -self.m4_im(k) / Self::alpha4(k)
    }

    fn is_resonant(k: [f64; 4]) -> bool {
        let scale = k.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        let tol = 1e-9 * scale;
        (k[0] + k[1]).abs() <= tol || (k[0] + k[2]).abs() <= tol || (k[0] + k[3]).abs() <= tol
    }

    /// Sum of the absolute values of the terms of `Im M₄`, for rounding estimates.
    fn m4_magnitude(&self, k: [f64; 4]) -> f64 {
        let f: [f64; 4] = core::array::from_fn(|i| self.f(k[i]));
        let mut acc = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let kij = k[i] + k[j];
                acc += (self.b.symbol(kij) * (f[i].abs() + f[j].abs() + self.f(kij).abs()) / (k[i] * k[j])).abs();
            }
        }
        acc
    }

    /// Limit of `σ₄` at `k` along a zero-sum direction: Richardson-extrapolated
    /// symmetric differences at `ε = 10⁻³` and `5·10⁻⁴`. Also returns a bound
    /// on the rounding error of the extrapolated value.
    pub fn sigma4_directional(&self, k: [f64; 4], d3: [f64; 3]) -> (f64, f64) {
        let d = [d3[0], d3[1], d3[2], -(d3[0] + d3[1] + d3[2])];
        let scale = k.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        let mut noise: f64 = 0.0;
        let mut sym = |e: f64| {
            let e = e * scale;
            let plus: [f64; 4] = core::array::from_fn(|i| k[i] + e * d[i]);
            let minus: [f64; 4] = core::array::from_fn(|i| k[i] - e * d[i]);
            for q in [plus, minus] {
                noise = noise.max(self.m4_magnitude(q) / Self::alpha4(q).abs());
            }
            0.5 * (self.sigma4_raw(plus) + self.sigma4_raw(minus))
        };
        let (a, b) = (sym(1e-3), sym(5e-4));
        ((4.0 * b - a) / 3.0, 16.0 * f64::EPSILON * noise)
    }

    /// `σ₄(k)`, taking directional limits on the resonant variety.
    pub fn sigma4(&self, k: [f64; 4]) -> Sigma4Value {
        let k = sorted(k);
        if !Self::is_resonant(k) {
            let noise = 16.0 * f64::EPSILON * self.m4_magnitude(k) / Self::alpha4(k).abs();
            return Sigma4Value { value: self.sigma4_raw(k), spread: None, noise };
        }
        let mut vals = [0.0; LIMIT_DIRECTIONS.len()];
        let mut noise: f64 = 0.0;
        for (v, d) in vals.iter_mut().zip(&LIMIT_DIRECTIONS) {
            let (x, n) = self.sigma4_directional(k, *d);
            *v = x;
            noise = noise.max(n);
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let value = vals.iter().sum::<f64>() / vals.len() as f64;
        Sigma4Value { value, spread: Some(hi - lo), noise }
    }

    /// `σ₄(k)`, failing when the directional limits disagree.
    pub fn sigma4_checked(&self, k: [f64; 4]) -> Result<f64> {
        let v = self.sigma4(k);
        if v.disagrees() {
            return Err(Error::LimitDisagreement {
                point: k.map(|x| libm::round(x) as i64),
                spread: v.spread.unwrap_or(0.0),
            });
        }
        Ok(v.value)
    }

    /// Symmetric `M₅`; terms with `kᵢ+kⱼ = 0` vanish.
    pub fn m5(&self, k: [f64; 5]) -> C64 {
        self.m5_with_noise(k).0
    }

    /// `M₅` and a bound on its rounding error.
    pub fn m5_with_noise(&self, k: [f64; 5]) -> (C64, f64) {
        let k = sorted(k);
        let mut acc = 0.0;
        let mut noise = 0.0;
        for i in 0..5 {
            for j in i + 1..5 {
                let kij = k[i] + k[j];
                if kij == 0.0 {
                    continue;
                }
                let rest: Vec<f64> = (0..5).filter(|&l| l != i && l != j).map(|l| k[l]).collect();
                let s4 = self.sigma4([rest[0], rest[1], rest[2], kij]);
                let w = self.b.symbol(kij) * kij;
                acc += s4.value * w;
                noise += (s4.noise + f64::EPSILON * s4.value.abs()) * w.abs();
            }
        }
        // 12i · (1/10) Σ over the ten pairs.
        (C64::new(0.0, 1.2 * acc), 1.2 * noise)
    }

    /// The five symbols as [`MultilinearSymbol`]s.
    pub fn symbols(&self) -> HierarchySymbols<'_> {
        HierarchySymbols {
            m3: MultilinearSymbol::new(3, move |k| self.m3([k[0], k[1], k[2]])),
            sigma3: MultilinearSymbol::new(3, move |k| C64::new(self.sigma3([k[0], k[1], k[2]]), 0.0)),
            m4: MultilinearSymbol::new(4, move |k| self.m4([k[0], k[1], k[2], k[3]])),
            sigma4: MultilinearSymbol::new(4, move |k| C64::new(self.sigma4([k[0], k[1], k[2], k[3]]).value, 0.0)),
            m5: MultilinearSymbol::new(5, move |k| self.m5([k[0], k[1], k[2], k[3], k[4]])),
        }
    }
}

pub struct HierarchySymbols<'a> {
    pub m3: MultilinearSymbol<'a>,
    pub sigma3: MultilinearSymbol<'a>,
    pub m4: MultilinearSymbol<'a>,
    pub sigma4: MultilinearSymbol<'a>,
    pub m5: MultilinearSymbol<'a>,
}

/// `σ₄` on all integer tuples `(k₁, k₂, k₃, −k₁−k₂−k₃)` with `|kᵢ| ≤ K`, `i ≤ 3`.
pub struct Sigma4Table {
    k: i64,
    values: Vec<f64>,
    /// Resonant points whose directional limits disagreed, with the spread.
    pub flagged: Vec<([i64; 4], f64)>,
}

impl Sigma4Table {
    pub fn new(h: &Hierarchy, k_max: usize) -> Self {
        let k = k_max as i64;
        let w = (2 * k + 1) as usize;
        let mut values = vec![0.0; w * w * w];
        let mut cache: BTreeMap<[i64; 4], f64> = BTreeMap::new();
        let mut flagged = Vec::new();
        for k1 in -k..=k {
            for k2 in -k..=k {
                for k3 in -k..=k {
                    let k4 = -(k1 + k2 + k3);
                    if k1 == 0 || k2 == 0 || k3 == 0 || k4 == 0 {
                        continue;
                    }
                    let idx = (((k1 + k) as usize * w) + (k2 + k) as usize) * w + (k3 + k) as usize;
                    let resonant = (k1 + k2) * (k1 + k3) * (k1 + k4) == 0;
                    let tuple = [k1 as f64, k2 as f64, k3 as f64, k4 as f64];
                    values[idx] = if resonant {
                        let mut key = [k1, k2, k3, k4];
                        key.sort();
                        *cache.entry(key).or_insert_with(|| {
                            let v = h.sigma4(tuple);
                            if v.disagrees() {
                                flagged.push((key, v.spread.unwrap_or(0.0)));
                            }
                            v.value
                        })
                    } else {
                        h.sigma4_raw(sorted(tuple))
                    };
                }
            }
        }
        Sigma4Table { k, values, flagged }
    }

    #[inline]
    pub fn get(&self, k1: i64, k2: i64, k3: i64) -> f64 {
        let w = (2 * self.k + 1) as usize;
        self.values[(((k1 + self.k) as usize * w) + (k2 + self.k) as usize) * w + (k3 + self.k) as usize]
    }
}

/// Parameters of the modified energies.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyParams {
    pub m: IMultiplier,
    /// Multiplier of the flow (`b`, or `b·χ_{|k|≤K}` for a Galerkin run in band `K`).
    pub b: Multiplier,
    /// Also evaluate `Λ₃(M₃), Λ₄(M₄), Λ₅(M₅)`.
    pub derivatives: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Energies {
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub lambda3_m3: Option<f64>,
    pub lambda4_m4: Option<f64>,
    pub lambda5_m5: Option<f64>,
    /// Largest `|Im Λ| / max(|Λ|, 1e-300)` among the computed functionals.
    pub imag_residue: f64,
}

/// Band-limited coefficient lookup on `[-K, K]` and the self-convolution
/// `(û*û)(s)` for `|s| ≤ 2K` (nonzero frequencies only).
struct Spectrum {
    k: i64,
    full: Vec<C64>,
    conv: Vec<C64>,
}

impl Spectrum {
    fn new(u: &FourierField) -> Self {
        let k = u.k_max() as i64;
        let full = full_spectrum(u);
        let conv = (-2 * k..=2 * k)
            .map(|s| {
                let mut acc = C64::zero();
                for a in (s - k).max(-k)..=(s + k).min(k) {
                    acc += full[(a + k) as usize] * full[(s - a + k) as usize];
                }
                acc
            })
            .collect();
        Spectrum { k, full, conv }
    }

    #[inline]
    fn at(&self, k: i64) -> C64 {
        if k.abs() > self.k {
            C64::zero()
        } else {
            self.full[(k + self.k) as usize]
        }
    }

    #[inline]
    fn conv(&self, s: i64) -> C64 {
        if s.abs() > 2 * self.k {
            return C64::zero();
        }
        self.conv[(s + 2 * self.k) as usize]
    }
}

fn residue(z: C64) -> f64 {
    z.im.abs() / z.norm().max(1e-300)
}

/// `E₂`, `E₃`, `E₄` (and optionally their predicted derivatives) at `u`.
pub fn energies(u: &FourierField, p: &EnergyParams) -> Result<Energies> {
    let h = Hierarchy::new(p.m, p.b.clone());
    let k = u.k_max() as i64;
    let sp = Spectrum::new(u);
    let table = Sigma4Table::new(&h, u.k_max());
    let fk: Vec<f64> = (-3 * k..=3 * k).map(|j| h.f(j as f64)).collect();
    let f = |j: i64| fk[(j + 3 * k) as usize];
    let bk: Vec<f64> = (-3 * k..=3 * k).map(|j| h.b.at(j)).collect();
    let b = |j: i64| bk[(j + 3 * k) as usize];

    let e2: f64 = 2.0
        * u.coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = h.m.symbol(i as f64 + 1.0);
                m * m * c.norm_sqr()
            })
            .sum::<f64>();

    let mut l3 = Neumaier::default();
    let mut l3m = Neumaier::default();
    let mut l4m = Neumaier::default();
    for k1 in -k..=k {
        for k2 in -k..=k {
            let k3 = -(k1 + k2);
            if k1 == 0 || k2 == 0 || k3 == 0 {
                continue;
            }
            let pair = sp.at(k1) * sp.at(k2);
            let fs = f(k1) + f(k2) + f(k3);
            if k3.abs() <= k {
                let prod = pair * sp.at(k3);
                l3.add(prod * (2.0 * fs / (3.0 * (k1 * k2 * k3) as f64)));
                l3m.add(prod * C64::new(0.0, -2.0 * fs));
            }
            // Λ₄(M₄) through its generator 6i b(k₁₂)(f₁+f₂−f₁₂)/(k₁k₂) and (û*û)(−k₁₂).
            let k12 = k1 + k2;
            if k12 != 0 {
                let g = 6.0 * b(k12) * (f(k1) + f(k2) - f(k12)) / (k1 * k2) as f64;
                l4m.add(pair * sp.conv(-k12) * C64::new(0.0, g));
            }
        }
    }
    let lambda3_sigma3 = l3.total();

    let mut l4 = Neumaier::default();
    let mut l5m = Neumaier::default();
    for k1 in -k..=k {
        for k2 in -k..=k {
            for k3 in -k..=k {
                if k1 == 0 || k2 == 0 || k3 == 0 {
                    continue;
                }
                let s = -(k1 + k2 + k3);
                if s == 0 {
                    continue;
                }
                let sig = table.get(k1, k2, k3);
                let triple = sp.at(k1) * sp.at(k2) * sp.at(k3);
                if s.abs() <= k {
                    l4.add(triple * sp.at(s) * sig);
                }
                if p.derivatives {
                    // Generator 12i σ₄(k₁,k₂,k₃,k₄₅) b₄₅ k₄₅ with k₄₅ = s.
                    let g = 12.0 * sig * b(s) * s as f64;
                    l5m.add(triple * sp.conv(s) * C64::new(0.0, g));
                }
            }
        }
    }
    let lambda4_sigma4 = l4.total();
    let mut imag_residue = residue(lambda3_sigma3).max(residue(lambda4_sigma4));
    let e3 = e2 + lambda3_sigma3.re;
    let e4 = e3 + lambda4_sigma4.re;
    let (mut d3, mut d4, mut d5) = (None, None, None);
    if p.derivatives {
        let (a, b_, c) = (l3m.total(), l4m.total(), l5m.total());
        imag_residue = imag_residue.max(residue(a)).max(residue(b_)).max(residue(c));
        d3 = Some(a.re);
        d4 = Some(b_.re);
        d5 = Some(c.re);
    }
    Ok(Energies { e2, e3, e4, lambda3_m3: d3, lambda4_m4: d4, lambda5_m5: d5, imag_residue })
}

/// One row of the differentiation-law table.
#[derive(Clone, Debug, PartialEq)]
pub struct LawResidual {
    pub time: f64,
    pub step: f64,
    /// Centred differences of `E₂, E₃, E₄`.
    pub fd: [f64; 3],
    /// `Λ₃(M₃), Λ₄(M₄), Λ₅(M₅)` at the middle state.
    pub predicted: [f64; 3],
    /// `|fd − predicted| / max(|predicted|, floor)`, floor `1e−12·E₂`.
    pub relative: [f64; 3],
}

/// Effective flow multiplier for the I-method identities of a quadratic flow
/// run in band `K` (the Galerkin truncation is part of the flow).
pub fn flow_multiplier(flow: &FlowSpec, k_max: usize) -> Result<Multiplier> {
    let b = match flow {
        FlowSpec::KdV | FlowSpec::BKdV { .. } | FlowSpec::PKdV { .. } | FlowSpec::B2KdV { .. } => {
            flow.quadratic_multiplier().expect("quadratic flow")
        }
        _ => return Err(Error::invalid("flow", "differentiation law needs a KdV-type flow")),
    };
    Ok(b.times(Multiplier::SharpCutoff { n: k_max }))
}

/// Compares centred time differences of the energies with the predicted
/// derivatives, on every triple of consecutive, equally spaced samples.
pub fn differentiation_law_check(traj: &Trajectory, flow: &FlowSpec, m: IMultiplier) -> Result<Vec<LawResidual>> {
    let k = traj.states.first().map(|s| s.k_max()).unwrap_or(0);
    let p = EnergyParams { m, b: flow_multiplier(flow, k)?, derivatives: true };
    let mut rows = Vec::new();
    for i in 1..traj.times.len().saturating_sub(1) {
        let (t0, t1, t2) = (traj.times[i - 1], traj.times[i], traj.times[i + 1]);
        let h = t1 - t0;
        if ((t2 - t1) - h).abs() > 1e-9 * h.abs() {
            continue;
        }
        let lo = energies(&traj.states[i - 1], &EnergyParams { derivatives: false, ..p.clone() })?;
        let hi = energies(&traj.states[i + 1], &EnergyParams { derivatives: false, ..p.clone() })?;
        let mid = energies(&traj.states[i], &p)?;
        let fd = [(hi.e2 - lo.e2) / (2.0 * h), (hi.e3 - lo.e3) / (2.0 * h), (hi.e4 - lo.e4) / (2.0 * h)];
        let predicted = [mid.lambda3_m3.unwrap_or(0.0), mid.lambda4_m4.unwrap_or(0.0), mid.lambda5_m5.unwrap_or(0.0)];
        let floor = 1e-12 * mid.e2.abs().max(f64::MIN_POSITIVE);
        let relative = core::array::from_fn(|j| (fd[j] - predicted[j]).abs() / predicted[j].abs().max(floor));
        rows.push(LawResidual { time: t1, step: h, fd, predicted, relative });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    M3Bound,
    M4Bound,
    M5Bound,
    TestLemma,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseStats {
    pub case: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub lemma: Lemma,
    pub trials: usize,
    /// Largest sampled `|symbol| / bound` (upper-bound lemmas) or
    /// `LHS / N_soprano²` (test lemma).
    pub sampled_max: f64,
    /// `sampled_max` after local hill-climbing from the best samples; this is
    /// the fitted implicit constant of an upper-bound lemma.
    pub max_ratio: f64,
    /// Smallest sampled ratio; the fitted constant of the test lemma.
    pub min_ratio: f64,
    /// Tuple attaining `max_ratio` (`min_ratio` for the test lemma).
    pub witness: Vec<f64>,
    pub vanishing_checked: usize,
    pub vanishing_violations: usize,
    pub cases: Vec<CaseStats>,
}

fn log_uniform(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    let x = (rng.random::<f64>() * hi.ln()).exp();
    if rng.random::<bool>() {
        x
    } else {
        -x
    }
}

fn log_uniform_int(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    let x = log_uniform(rng, hi);
    let r = libm::round(x);
    if r == 0.0 {
        x.signum()
    } else {
        r
    }
}

fn min_abs(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
}

/// Completes the free coordinates with `−Σ` to a zero-sum tuple.
fn close(free: &[f64]) -> Vec<f64> {
    let mut k = free.to_vec();
    k.push(-free.iter().sum::<f64>());
    k
}

struct Bounds<'a> {
    h: &'a Hierarchy,
    a: f64,
    perms5: Vec<Vec<usize>>,
}

impl Bounds<'_> {
    fn msq(&self, x: f64) -> f64 {
        let v = self.h.m.symbol(x);
        v * v
    }

    fn free_len(lemma: Lemma) -> usize {
        match lemma {
            Lemma::M3Bound => 2,
            Lemma::M4Bound | Lemma::TestLemma => 3,
            Lemma::M5Bound => 4,
        }
    }

    /// `|symbol| / bound` at the zero-sum completion of `free`.
    fn ratio(&self, lemma: Lemma, free: &[f64]) -> Option<f64> {
        let k = close(free);
        if k.contains(&0.0) {
            return None;
        }
        let a = self.a;
        match lemma {
            Lemma::M3Bound => {
                let bound = k.iter().map(|&x| self.msq(x)).fold(0.0, f64::max) * min_abs(&k);
                Some(self.h.m3([k[0], k[1], k[2]]).norm() / bound)
            }
            Lemma::M4Bound => {
                let kk = [k[0], k[1], k[2], k[3]];
                let pairs = [kk[0] + kk[1], kk[0] + kk[2], kk[0] + kk[3]];
                if pairs.contains(&0.0) {
                    return None;
                }
                let n_star = min_abs(&kk).min(min_abs(&pairs));
                let denom: f64 = kk.iter().map(|x| a + x.abs()).product();
                let bound = Hierarchy::alpha4(kk).abs() * self.msq(n_star) / denom;
                Some(self.h.m4(kk).norm() / bound)
            }
            Lemma::M5Bound => {
                let kk = [k[0], k[1], k[2], k[3], k[4]];
                if min_abs(&kk) < 1e-9 * kk.iter().map(|x| x.abs()).fold(0.0, f64::max) {
                    return None;
                }
                let mut acc = 0.0;
                for p in &self.perms5 {
                    let q: [f64; 5] = core::array::from_fn(|i| kk[p[i]]);
                    let k45 = q[3] + q[4];
                    let n_star = min_abs(&[q[0], q[1], q[2], k45, q[0] + q[1], q[0] + q[2], q[0] + k45]);
                    let denom = (a + q[0].abs()) * (a + q[1].abs()) * (a + q[2].abs()) * (a + k45.abs());
                    acc += self.msq(n_star) * k45.abs() / denom;
                }
                let bound = acc / self.perms5.len() as f64;
                (bound > 0.0).then(|| self.h.m5(kk).norm() / bound)
            }
            Lemma::TestLemma => {
                let pairs = [k[1] + k[2], k[2] + k[3], k[1] + k[3]];
                if pairs.contains(&0.0) {
                    return None;
                }
                let mut by_size = [k[0], k[1], k[2], k[3]];
                by_size.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
                let [sop, alto, tenor, bari] = by_size;
                let lhs = ((sop + bari) * (alto + bari) * (tenor + bari)).abs() * bari.abs();
                Some(lhs / (sop * sop))
            }
        }
    }

    /// Exact-vanishing check at a tuple inside the low-frequency region:
    /// `true` when the symbol exceeds its rounding bound.
    fn violates(&self, lemma: Lemma, free: &[f64]) -> bool {
        let k = close(free);
        let scale: f64 = k.iter().map(|x| x.abs()).sum();
        match lemma {
            Lemma::M3Bound => self.h.m3([k[0], k[1], k[2]]).norm() > 64.0 * f64::EPSILON * scale,
            Lemma::M4Bound => {
                let kk = [k[0], k[1], k[2], k[3]];
                let tol = 64.0 * f64::EPSILON * scale / kk.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
                self.h.m4(kk).norm() > tol
            }
            Lemma::M5Bound => {
                let (m5, noise) = self.h.m5_with_noise([k[0], k[1], k[2], k[3], k[4]]);
                m5.norm() > 4.0 * noise
            }
            Lemma::TestLemma => false,
        }
    }

    /// Compass search for a larger ratio starting at `free`; integer lattice
    /// steps for integer lemmas, relative steps otherwise. Coordinates stay
    /// within `[−hi, hi]`.
    fn climb(&self, lemma: Lemma, free: &[f64], integer: bool, hi: f64) -> (f64, Vec<f64>) {
        let mut x = free.to_vec();
        let mut best = self.ratio(lemma, &x).unwrap_or(0.0);
        let mut step = if integer { libm::floor(hi / 4.0).max(1.0) } else { 0.25 };
        let min_step = if integer { 1.0 } else { 1e-6 };
        while step >= min_step {
            let mut improved = false;
            for i in 0..x.len() {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] += sign * if integer { step } else { step * x[i].abs().max(1.0) };
                    if close(&y).iter().any(|v| v.abs() > hi) {
                        continue;
                    }
                    if let Some(r) = self.ratio(lemma, &y) {
                        if r > best {
                            best = r;
                            x = y;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step = if integer { libm::floor(step / 2.0) } else { step / 2.0 };
            }
        }
        (best, close(&x))
    }
}

/// Case of the test lemma: `0` for `N_b ≪ N_t ≪ N_a`, `1` for `N_b ∼ N_t ≪ N_a`,
/// `2` for `N_b ≪ N_t ∼ N_a`, `3` for `N_b ∼ N_t ∼ N_a`, with `x ≪ y` meaning `4x ≤ y`.
pub fn test_lemma_case(k: &[f64; 4]) -> usize {
    let mut n: [f64; 4] = k.map(|x| x.abs());
    n.sort_by(|x, y| y.total_cmp(x));
    let much = |x: f64, y: f64| 4.0 * x <= y;
    match (much(n[3], n[2]), much(n[2], n[1])) {
        (true, true) => 0,
        (false, true) => 1,
        (true, false) => 2,
        (false, false) => 3,
    }
}

/// Randomized check of the symbol bounds of the hierarchy and of the exact
/// vanishing for frequencies `≤ min(A, N/2)/4`.
///
/// Bound-region tuples are drawn log-uniformly up to `4N` (integers for
/// `M₃`, `M₄` and the test lemma, reals for `M₅`); the best eight samples are
/// then refined by a compass search. Vanishing-region tuples are uniform reals.
/// The test lemma is stratified over its four cases.
pub fn bound_sampler(lemma: Lemma, trials: usize, a: f64, n: usize, s: f64, seed: u64) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let m = IMultiplier::new(a, s)?;
    let h = Hierarchy::new(m, crate::fourier::bump_b(n)?);
    let bounds = Bounds { h: &h, a, perms5: permutations(5) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = 4.0 * n as f64;
    let small = a.min(n as f64 / 2.0) / 4.0;
    let dim = Bounds::free_len(lemma);
    let integer = lemma != Lemma::M5Bound;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| if integer { log_uniform_int(rng, hi) } else { log_uniform(rng, hi) }).collect()
    };

    let mut cases: Vec<CaseStats> =
        (1..=4).map(|case| CaseStats { case, samples: 0, min_ratio: f64::INFINITY, max_ratio: 0.0 }).collect();
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut min_witness = Vec::new();
    let mut record = |r: f64, free: Vec<f64>, case: usize, top: &mut Vec<(f64, Vec<f64>)>| {
        let c = &mut cases[case];
        c.samples += 1;
        c.max_ratio = c.max_ratio.max(r);
        c.min_ratio = c.min_ratio.min(r);
        if r < min_ratio {
            min_ratio = r;
            min_witness = close(&free);
        }
        if top.len() < 8 || r > top[top.len() - 1].0 {
            top.push((r, free));
            top.sort_by(|x, y| y.0.total_cmp(&x.0));
            top.truncate(8);
        }
    };

    if lemma == Lemma::TestLemma {
        let per_case = trials.div_ceil(4);
        for case in 0..4 {
            let (mut got, mut attempts) = (0, 0);
            while got < per_case && attempts < 200 * per_case {
                attempts += 1;
                let free = draw(&mut rng);
                let k = close(&free);
                if test_lemma_case(&[k[0], k[1], k[2], k[3]]) != case {
                    continue;
                }
                if let Some(r) = bounds.ratio(lemma, &free) {
                    got += 1;
                    record(r, free, case, &mut top);
                }
            }
        }
    } else {
        for _ in 0..trials {
            let free = draw(&mut rng);
            if let Some(r) = bounds.ratio(lemma, &free) {
                record(r, free, 0, &mut top);
            }
        }
    }
    let sampled_max = top.first().map(|t| t.0).unwrap_or(0.0);
    let (mut max_ratio, mut witness) = (sampled_max, top.first().map(|t| close(&t.1)).unwrap_or_default());
    if lemma != Lemma::TestLemma {
        for (_, start) in &top {
            let (r, x) = bounds.climb(lemma, start, integer, hi);
            if r > max_ratio {
                max_ratio = r;
                witness = x;
            }
        }
    } else {
        witness = min_witness;
    }

    let (mut vanishing_checked, mut vanishing_violations) = (0, 0);
    if lemma != Lemma::TestLemma {
        let mut attempts = 0;
        while vanishing_checked < trials && attempts < 100 * trials {
            attempts += 1;
            let free: Vec<f64> = (0..dim).map(|_| rng.random_range(-small..small)).collect();
            let k = close(&free);
            if k.iter().any(|x| x.abs() > small || x.abs() < 1e-3 * small) {
                continue;
            }
            vanishing_checked += 1;
            if bounds.violates(lemma, &free) {
                vanishing_violations += 1;
            }
        }
        cases.truncate(1);
    }
    Ok(BoundReport {
        lemma,
        trials,
        sampled_max,
        max_ratio,
        min_ratio,
        witness,
        vanishing_checked,
        vanishing_violations,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{bump_b, I};
    use crate::integrator::{evolve, EvolveOptions};

    fn random_field(seed: u64, k: usize, amp: f64) -> FourierField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs =
            (1..=k).map(|j| C64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)) / (j as f64)).collect();
        FourierField::from_coeffs(coeffs).unwrap()
    }

    fn hierarchy() -> Hierarchy {
        Hierarchy::new(IMultiplier::new(4.0, -0.5).unwrap(), bump_b(16).unwrap())
    }

    #[test]
    fn multiplier_shape() {
        let m = IMultiplier::new(4.0, -0.5).unwrap();
        assert_eq!(m.symbol(3.0), 1.0);
        assert_eq!(m.symbol(-4.0), 1.0);
        assert!((m.symbol(8.0) - 2f64.powf(-0.5)).abs() < 1e-15);
        assert!((m.symbol(36.0) - 3.0f64.powf(-1.0)).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..400 {
            let k = 4.0 + i as f64 * 0.01;
            let v = m.symbol(k);
            assert!(v <= prev + 1e-15);
            assert_eq!(v, m.symbol(-k));
            prev = v;
        }
        // C¹ at the joins: one-sided slopes agree.
        let slope = |x: f64, e: f64| (m.symbol(x + e) - m.symbol(x)) / e;
        assert!((slope(8.0, 1e-6) - slope(8.0, -1e-6)).abs() < 1e-5);
        assert!(IMultiplier::new(4.0, 0.5).is_err());
    }

    #[test]
    fn permutations_count() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(5).len(), 120);
        assert_eq!(permutations(3)[5], vec![2, 1, 0]);
    }

    #[test]
    fn lambda_examples() {
        let c = FourierField::cosine(3, 1, 1.0);
        let one2 = MultilinearSymbol::new(2, |_| C64::new(1.0, 0.0));
        assert!((lambda_n(&one2, &c) - C64::new(0.5, 0.0)).norm() < 1e-15);
        let one3 = MultilinearSymbol::new(3, |_| C64::new(1.0, 0.0));
        assert!(lambda_n(&one3, &c).norm() < 1e-15);
        let m = IMultiplier::new(2.0, -0.5).unwrap();
        let e2 = MultilinearSymbol::new(2, move |k| C64::new(m.symbol(k[0]) * m.symbol(k[1]), 0.0));
        assert!((lambda_n(&e2, &c) - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn symmetrize_examples() {
        let first = MultilinearSymbol::new(2, |k| C64::new(k[0], 0.0)).symmetrize();
        assert_eq!(first.eval(&[3.0, -3.0]), C64::new(0.0, 0.0));
        let raw = |k: &[f64]| C64::new(k[0] * k[1] * k[1] + k[2], k[0]);
        let s1 = MultilinearSymbol::new(3, raw).symmetrize();
        let s2 = MultilinearSymbol::new(3, raw).symmetrize().symmetrize();
        for k in [[1.0, 2.0, -3.0], [0.5, -2.5, 2.0]] {
            assert!((s1.eval(&k) - s2.eval(&k)).norm() < 1e-14);
            assert!((s1.eval(&k) - s1.eval(&[k[2], k[0], k[1]])).norm() < 1e-14);
        }
    }

    #[test]
    fn symbol_values() {
        let h = Hierarchy::new(IMultiplier::new(10.0, -0.5).unwrap(), bump_b(100).unwrap());
        assert_eq!(h.m3([2.0, 3.0, -5.0]), C64::new(0.0, 0.0));
        assert_eq!(Hierarchy::alpha4([1.0, 2.0, 3.0, -6.0]), -180.0);
        assert_eq!(1.0 + 8.0 + 27.0 - 216.0, 3.0 * 3.0 * 4.0 * -5.0);
    }

    #[test]
    fn cancellation_identities() {
        let h = hierarchy();
        for k1 in -12i64..=12 {
            for k2 in -12i64..=12 {
                let k3 = -(k1 + k2);
                if k1 * k2 * k3 == 0 {
                    continue;
                }
                let k = [k1 as f64, k2 as f64, k3 as f64];
                let lhs = C64::new(h.sigma3(k), 0.0) * I * Hierarchy::alpha3(k) + h.m3(k);
                assert!(lhs.norm() < 1e-12);
                for k3b in -12i64..=12 {
                    let k4 = -(k1 + k2 + k3b);
                    if k3b == 0 || k4 == 0 {
                        continue;
                    }
                    let q = [k1 as f64, k2 as f64, k3b as f64, k4 as f64];
                    let a4 = Hierarchy::alpha4(q);
                    if a4 == 0.0 {
                        // M₄ vanishes on the resonant variety.
                        assert!(h.m4(q).norm() < 1e-13, "{q:?}");
                    } else {
                        let lhs = C64::new(h.sigma4(q).value, 0.0) * I * a4 + h.m4(q);
                        assert!(lhs.norm() < 1e-12 * a4.abs());
                    }
                }
            }
        }
    }

    #[test]
    fn m4_closed_form_matches_symmetrized_generator() {
        let h = hierarchy();
        let generator = MultilinearSymbol::new(4, |k| {
            let k34 = k[2] + k[3];
            C64::new(0.0, 9.0) * h.sigma3([k[0], k[1], k34]) * h.b.symbol(k34) * k34
        })
        .symmetrize();
        for q in [[1.0, 2.0, 3.0, -6.0], [7.0, -3.0, 11.0, -15.0], [9.0, 9.0, -4.0, -14.0]] {
            assert!((generator.eval(&q) - h.m4(q)).norm() < 1e-13);
        }
    }

    #[test]
    fn symbols_are_imaginary_and_symmetric() {
        let h = hierarchy();
        let q = [7.0, -3.0, 11.0, -15.0];
        let p = [11.0, 7.0, -15.0, -3.0];
        assert_eq!(h.m4(q), h.m4(p));
        assert_eq!(h.sigma4(q), h.sigma4(p));
        assert_eq!(h.m4(q).re, 0.0);
        let five = [3.0, -5.0, 8.0, 1.0, -7.0];
        let five_p = [1.0, -7.0, 3.0, 8.0, -5.0];
        assert_eq!(h.m5(five), h.m5(five_p));
        assert_eq!(h.m5(five).re, 0.0);
    }

    #[test]
    fn sigma4_limits_agree_across_directions() {
        let h = hierarchy();
        for (k1, k2, k3) in [(1, -1, 5), (3, 4, -3), (2, 7, -7), (6, -6, 9), (12, -12, 2)] {
            let k4 = -(k1 + k2 + k3);
            let v = h.sigma4([k1 as f64, k2 as f64, k3 as f64, k4 as f64]);
            assert!(!v.disagrees(), "{v:?}");
        }
        let t = Sigma4Table::new(&Hierarchy::new(IMultiplier::new(4.0, -0.5).unwrap(), bump_b(64).unwrap()), 16);
        // Only points on two resonant planes at once may depend on the direction.
        for (k, _) in &t.flagged {
            let zero_pairs = [k[0] + k[1], k[0] + k[2], k[0] + k[3]].iter().filter(|&&x| x == 0).count();
            assert!(zero_pairs >= 2, "{k:?}");
        }
    }

    #[test]
    fn fast_functionals_match_brute_force() {
        let h = hierarchy();
        let u = random_field(3, 5, 0.5);
        let p = EnergyParams { m: h.m, b: h.b.clone(), derivatives: true };
        let e = energies(&u, &p).unwrap();
        let syms = h.symbols();
        let m3 = lambda_n(&syms.m3, &u);
        let m4 = lambda_n(&syms.m4, &u);
        let s3 = lambda_n(&syms.sigma3, &u);
        let s4 = lambda_n(&syms.sigma4, &u);
        assert!((m3.re - e.lambda3_m3.unwrap()).abs() < 1e-12);
        assert!((m4.re - e.lambda4_m4.unwrap()).abs() < 1e-12);
        assert!((e.e3 - e.e2 - s3.re).abs() < 1e-12);
        assert!((e.e4 - e.e3 - s4.re).abs() < 1e-12);
        let m5 = lambda_n(&syms.m5, &u.with_band(4));
        let e_small = energies(&u.with_band(4), &p).unwrap();
        assert!((m5.re - e_small.lambda5_m5.unwrap()).abs() < 1e-11 * m5.norm().max(1.0));
        assert!(m5.im.abs() < 1e-12 * m5.norm().max(1e-12));
    }

    #[test]
    fn energies_of_simple_fields() {
        let p = EnergyParams { m: IMultiplier::new(2.0, -0.5).unwrap(), b: bump_b(16).unwrap(), derivatives: true };
        let e = energies(&FourierField::cosine(3, 1, 1.0), &p).unwrap();
        assert!((e.e2 - 0.5).abs() < 1e-15);
        assert!((e.e3 - e.e2).abs() < 1e-15 && (e.e4 - e.e3).abs() < 1e-12);
        let z = energies(&FourierField::zeros(4), &p).unwrap();
        assert_eq!((z.e2, z.e3, z.e4), (0.0, 0.0, 0.0));
    }

    #[test]
    fn l2_collapse_without_weight() {
        let u = random_field(5, 8, 0.5);
        let p = EnergyParams { m: IMultiplier::identity(), b: Multiplier::Identity, derivatives: true };
        let e = energies(&u, &p).unwrap();
        assert_eq!(e.lambda3_m3.unwrap(), 0.0);
        assert!((e.e4 - e.e2).abs() < 1e-14);
        assert!((e.e2 - u.l2_sum()).abs() < 1e-15);
    }

    #[test]
    fn differentiation_law_small_band() {
        let k = 8;
        let flow = FlowSpec::BKdV { b: bump_b(8).unwrap() };
        let u0 = random_field(7, k, 0.4);
        let h = 1e-5;
        let traj = evolve(&flow, &u0, 0.05 + h, &EvolveOptions::new(h).with_samples(vec![0.05 - h, 0.05])).unwrap();
        let rows = differentiation_law_check(&traj, &flow, IMultiplier::new(2.0, -0.5).unwrap()).unwrap();
        let r = rows.iter().find(|r| (r.time - 0.05).abs() < 1e-12).unwrap();
        assert!(r.relative[0] < 1e-6, "{:?}", r);
        assert!(r.relative[1] < 1e-5, "{:?}", r);
        assert!(r.relative[2] < 1e-5, "{:?}", r);
    }

    #[test]
    fn vanishing_regions() {
        for lemma in [Lemma::M3Bound, Lemma::M4Bound, Lemma::M5Bound] {
            let r = bound_sampler(lemma, 2000, 16.0, 64, -0.5, 1).unwrap();
            assert_eq!(r.vanishing_checked, 2000);
            assert_eq!(r.vanishing_violations, 0, "{lemma:?}");
            assert!(r.max_ratio.is_finite() && r.max_ratio > 0.0);
        }
        let t = bound_sampler(Lemma::TestLemma, 2000, 16.0, 64, -0.5, 1).unwrap();
        assert!(t.min_ratio > 0.0);
        assert!(t.cases.iter().all(|c| c.samples > 0));
        assert_eq!(t.witness.iter().sum::<f64>(), 0.0);
    }
}

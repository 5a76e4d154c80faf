//! The Miura map `M(v) = v_x + v² − P₀(v²)`, its inverse through the ground
//! state of `L = −∂ₓ² + u`, the explicit inverse of `M′(v)`, and the modified
//! map `M_B(v) = v_x + B(1−P₀)(v²)` with its fixed-point inverse.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::fourier::{
    analyze, apply_multiplier, derivative, product, sobolev_norm, synthesize, FourierField, Multiplier, C64,
};

pub fn miura_forward(v: &FourierField) -> FourierField {
    let k = 2 * v.k_max();
    &derivative(v, 1).with_band(k) + &product(v, v, k).field
}

/// `M′(v)w = (1−P₀)(∂ₓ + 2v)w`.
pub fn miura_derivative(v: &FourierField, w: &FourierField) -> FourierField {
    let k = (v.k_max() + w.k_max()).max(w.k_max());
    derivative(w, 1).with_band(k).axpy(2.0, &product(v, w, k).field)
}

pub fn miura_b_forward(v: &FourierField, b: &Multiplier) -> FourierField {
    let k = 2 * v.k_max();
    &derivative(v, 1).with_band(k) + &apply_multiplier(b, &product(v, v, k).field)
}

/// `M′_B(v)f = f_x + 2B(1−P₀)(vf)`.
pub fn miura_b_derivative(v: &FourierField, f: &FourierField, b: &Multiplier) -> FourierField {
    let k = (v.k_max() + f.k_max()).max(f.k_max());
    derivative(f, 1).with_band(k).axpy(2.0, &apply_multiplier(b, &product(v, f, k).field))
}

/// Ground state of `L = −∂ₓ² + u`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub lambda1: f64,
    /// Coefficients of `φ₁` in the orthonormal basis `e^{ikx}/√(2π)`, index `k + K_eig`.
    pub coeffs: Vec<C64>,
    pub k_eig: usize,
    /// `φ₁` on the positivity grid `x_j = 2πj/M`.
    pub phi1: Vec<f64>,
    /// `‖Lφ₁ − λ₁φ₁‖_{L²}`, including the part of `uφ₁` outside the basis.
    pub residual: f64,
}

impl GroundState {
    pub fn min_phi(&self) -> f64 {
        self.phi1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_phi(&self) -> f64 {
        self.phi1.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Basis coefficient at frequency `k` (zero outside the basis).
    pub fn coeff(&self, k: i64) -> C64 {
        let kk = self.k_eig as i64;
        if k.abs() > kk {
            C64::zero()
        } else {
            self.coeffs[(k + kk) as usize]
        }
    }
}

/// Samples of `Σ_{|k|≤K} c_k e^{ikx_j}` with `c` indexed by `k + K`.
fn synthesize_full(c: &[C64], m: usize) -> Vec<C64> {
    let kk = (c.len() / 2) as i64;
    let tw: Vec<C64> = (0..m).map(|j| Complex::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
    (0..m)
        .map(|j| {
            c.iter()
                .enumerate()
                .map(|(i, ci)| {
                    let k = i as i64 - kk;
                    ci * tw[(k * j as i64).rem_euclid(m as i64) as usize]
                })
                .sum()
        })
        .collect()
}

pub fn ground_state(u: &FourierField, k_eig: usize, eig_tol: f64) -> Result<GroundState> {
    if k_eig < 2 * u.k_max() {
        return Err(Error::invalid("K_eig", format!("need K_eig ≥ 2K_u = {}", 2 * u.k_max())));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("potential"));
    }
    let kk = k_eig as i64;
    let dim = 2 * k_eig + 1;
    let h = DMatrix::<C64>::from_fn(dim, dim, |a, b| {
        let (j, k) = (a as i64 - kk, b as i64 - kk);
        let diag = if j == k { (j * j) as f64 } else { 0.0 };
        u.get(j - k) + diag
    });
    let eig = SymmetricEigen::try_new(h, 1e-15, 0).ok_or_else(|| Error::Eigen("no convergence".into()))?;
    let (idx, &lambda1) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Eigen("empty spectrum".into()))?;
    let col = eig.eigenvectors.column(idx);
    // Fix the phase so the mean coefficient is real positive, then impose the
    // Hermitian symmetry of a real eigenfunction.
    let c0 = col[k_eig];
    if c0.norm() < 1e-12 {
        return Err(Error::Eigen("ground state has vanishing mean coefficient".into()));
    }
    let phase = c0.conj() / c0.norm();
    let raw: Vec<C64> = col.iter().map(|c| c * phase).collect();
    let mut coeffs: Vec<C64> = (0..dim).map(|i| (raw[i] + raw[dim - 1 - i].conj()) * 0.5).collect();
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut coeffs {
        *c /= norm;
    }

    // Residual of Lφ − λφ over every frequency reached by uφ.
    let ku = u.k_max() as i64;
    let mut res2 = 0.0;
    for j in -(kk + ku)..=(kk + ku) {
        let own = if j.abs() <= kk { coeffs[(j + kk) as usize] } else { C64::zero() };
        let mut r = own * ((j * j) as f64 - lambda1);
        for k in (j - ku).max(-kk)..=(j + ku).min(kk) {
            r += u.get(j - k) * coeffs[(k + kk) as usize];
        }
        res2 += r.norm_sqr();
    }
    let residual = res2.sqrt();

    let m = 8 * (2 * k_eig + 2);
    let scale = 1.0 / (2.0 * PI).sqrt();
    let phi1: Vec<f64> = synthesize_full(&coeffs, m).iter().map(|z| z.re * scale).collect();
    let gs = GroundState { lambda1, coeffs, k_eig, phi1, residual };
    let min = gs.min_phi();
    if !(min > 0.0) {
        return Err(Error::GroundStateNotPositive { min });
    }
    if residual > eig_tol {
        return Err(Error::ResidualTooLarge { residual, tol: eig_tol });
    }
    Ok(gs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiuraOptions {
    /// Basis size of the eigenproblem; defaults to `4K_u`.
    pub k_eig: Option<usize>,
    /// Output band; defaults to `2K_u`.
    pub k_out: Option<usize>,
    pub newton_steps: usize,
    pub eig_tol: f64,
    /// Required `‖M(v) − u‖_{H^{−1/2}}`.
    pub tol: f64,
}

impl Default for MiuraOptions {
    fn default() -> Self {
        MiuraOptions { k_eig: None, k_out: None, newton_steps: 2, eig_tol: 1e-8, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiuraInverse {
    pub v: FourierField,
    pub ground: GroundState,
    /// `‖M(v) − u‖_{H^{−1/2}}`.
    pub residual: f64,
    /// `Σ_{k>K_out} |v̂(k)|²` of the logarithmic derivative before truncation.
    pub tail: f64,
}

pub fn miura_inverse(u: &FourierField, opts: &MiuraOptions) -> Result<MiuraInverse> {
    let ku = u.k_max().max(1);
    let k_eig = opts.k_eig.unwrap_or(4 * ku);
    let k_out = opts.k_out.unwrap_or(2 * ku);
    let ground = ground_state(u, k_eig, opts.eig_tol)?;

    // v = φ'/φ on a grid fine enough to resolve the quotient.
    let k_grid = 2 * k_out.max(k_eig);
    let m = 2 * k_grid + 2;
    let kk = k_eig as i64;
    let dphi: Vec<C64> =
        (0..ground.coeffs.len()).map(|i| ground.coeffs[i] * C64::new(0.0, (i as i64 - kk) as f64)).collect();
    let phi = synthesize_full(&ground.coeffs, m);
    let phi_x = synthesize_full(&dphi, m);
    let quotient: Vec<f64> = phi.iter().zip(&phi_x).map(|(p, d)| d.re / p.re).collect();
    let wide = analyze(&quotient, k_grid)?.field;
    let tail = 2.0 * wide.coeffs()[k_out.min(k_grid)..].iter().map(|c| c.norm_sqr()).sum::<f64>();
    let mut v = wide.with_band(k_out);

    let residual_of = |v: &FourierField| sobolev_norm(&(&miura_forward(v) - u), -0.5);
    let mut residual = residual_of(&v);
    for _ in 0..opts.newton_steps {
        if residual == 0.0 {
            break;
        }
        let r = &miura_forward(&v) - u;
        let dv = miura_derivative_inverse(&v, &r, k_out)?;
        let next = &v - &dv;
        let next_residual = residual_of(&next);
        if !next_residual.is_finite() || next_residual > 10.0 * residual.max(opts.tol) {
            return Err(Error::NewtonDivergence { residual: next_residual });
        }
        if next_residual <= residual {
            v = next;
            residual = next_residual;
        } else {
            break;
        }
    }
    if residual > opts.tol {
        return Err(Error::ResidualTooLarge { residual, tol: opts.tol });
    }
    Ok(MiuraInverse { v, ground, residual, tail })
}

/// Grid used by [`miura_derivative_inverse`] for a working band.
fn work_grid(k_work: usize) -> (usize, usize) {
    let k_big = 4 * k_work;
    (k_big, 2 * k_big + 2)
}

/// `A[V]w = Vw − V P₀(Vw)/P₀(V)` on grid samples, with `P₀` the grid mean.
fn apply_a(vv: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let m = vv.len() as f64;
    let p0v = vv.iter().sum::<f64>() / m;
    if !(p0v > 0.0) {
        return Err(Error::NonPositiveMean(p0v));
    }
    let vw: Vec<f64> = vv.iter().zip(w).map(|(a, b)| a * b).collect();
    let p0vw = vw.iter().sum::<f64>() / m;
    Ok(vw.iter().zip(vv).map(|(x, a)| x - a * p0vw / p0v).collect())
}

/// `M′(v)⁻¹f = A[e^{−2∂ₓ⁻¹v}] ∂ₓ⁻¹ A[e^{2∂ₓ⁻¹v}] f`, evaluated on a `4×`
/// oversampled grid and returned in band `k_work`.
pub fn miura_derivative_inverse(v: &FourierField, f: &FourierField, k_work: usize) -> Result<FourierField> {
    let k_work = k_work.max(1);
    let (k_big, m) = work_grid(k_work.max(v.k_max()).max(f.k_max()));
    let w = synthesize(&derivative(v, -1), m)?;
    let e_plus: Vec<f64> = w.iter().map(|x| (2.0 * x).exp()).collect();
    let e_minus: Vec<f64> = w.iter().map(|x| (-2.0 * x).exp()).collect();
    let fs = synthesize(f, m)?;
    let inner = analyze(&apply_a(&e_plus, &fs)?, k_big)?.field;
    let anti = synthesize(&derivative(&inner, -1), m)?;
    let outer = analyze(&apply_a(&e_minus, &anti)?, k_big)?.field;
    Ok(outer.with_band(k_work))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiuraBOptions {
    pub max_iter: usize,
    /// Stop once `‖Δw‖_{H^{1/2}} ≤ tol`.
    pub tol: f64,
    /// Working band for the correction; defaults to `max(2K_out, N)`.
    pub k_work: Option<usize>,
    pub inner: MiuraOptions,
}

impl Default for MiuraBOptions {
    fn default() -> Self {
        MiuraBOptions { max_iter: 60, tol: 1e-11, k_work: None, inner: MiuraOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiuraBInverse {
    pub v: FourierField,
    pub v_appr: FourierField,
    pub correction: FourierField,
    pub iterations: usize,
    /// `‖M_B(v) − u‖_{H^{−1/2}}`.
    pub certificate: f64,
}

/// Largest frequency where the multiplier is not identically one, probed on `0..=limit`.
fn support_edge(b: &Multiplier, limit: usize) -> usize {
    (0..=limit).rev().find(|&k| b.at(k as i64) != 0.0).unwrap_or(0)
}

/// Solves `M′_B(v)g = h` by the Neumann series `g ← M′(v)⁻¹(h + Dg)` with
/// `Dg = 2(1−B)(1−P₀)(vg)`.
fn solve_mb_derivative(
    v: &FourierField,
    h: &FourierField,
    b: &Multiplier,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<FourierField> {
    let one_minus_b = |f: &FourierField| f - &apply_multiplier(b, f);
    let mut g = miura_derivative_inverse(v, h, k)?;
    let mut prev = f64::INFINITY;
    for iteration in 0..max_iter {
        let d = one_minus_b(&product(v, &g, k).field).scale(2.0);
        let next = miura_derivative_inverse(v, &(&h.with_band(k) + &d), k)?;
        let change = sobolev_norm(&(&next - &g), 0.5);
        g = next;
        if change <= tol {
            return Ok(g);
        }
        if change > prev {
            return Err(Error::ContractionFailure { iteration, previous: prev, current: change });
        }
        prev = change;
    }
    Ok(g)
}

/// `v = v_appr + w` with `v_appr = M⁻¹u` and `w` the fixed point of
/// `w ↦ M′_B(v_appr)⁻¹[(1−B)(v_appr²) − B(1−P₀)(w²) − (M(v_appr) − u)]`.
pub fn miura_b_inverse(u: &FourierField, b: &Multiplier, opts: &MiuraBOptions) -> Result<MiuraBInverse> {
    let inv = miura_inverse(u, &opts.inner)?;
    let va = inv.v;
    let n_edge = support_edge(b, 4 * (va.k_max() + u.k_max()) + 64);
    let k = opts.k_work.unwrap_or((2 * va.k_max()).max(n_edge));
    let one_minus_b = |f: &FourierField| f - &apply_multiplier(b, f);
    let mismatch = &miura_forward(&va).with_band(k) - &u.with_band(k);
    let source = &one_minus_b(&product(&va, &va, k).field) - &mismatch;
    let inner_tol = opts.tol * 1e-2;

    let step = |w: &FourierField| -> Result<FourierField> {
        let quad = apply_multiplier(b, &product(w, w, k).field);
        solve_mb_derivative(&va, &(&source - &quad), b, k, inner_tol, opts.max_iter)
    };
    let mut w = FourierField::zeros(k);
    let mut prev = f64::INFINITY;
    let mut halved = false;
    let mut iterations = 0;
    for iteration in 0..opts.max_iter {
        iterations = iteration + 1;
        let target = step(&w)?;
        let mut delta = &target - &w;
        let mut size = sobolev_norm(&delta, 0.5);
        if size > prev {
            if halved {
                return Err(Error::ContractionFailure { iteration, previous: prev, current: size });
            }
            halved = true;
            delta = delta.scale(0.5);
            size *= 0.5;
        }
        w = &w + &delta;
        if size <= opts.tol {
            break;
        }
        prev = size;
    }
    let v = &va.with_band(k) + &w;
    let certificate = sobolev_norm(&(&miura_b_forward(&v, b) - u), -0.5);
    Ok(MiuraBInverse { v, v_appr: va, correction: w, iterations, certificate })
}

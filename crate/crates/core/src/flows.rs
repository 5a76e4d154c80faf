//! Right-hand sides of the KdV family, the renormalized mKdV nonlinearity
//! and its resonant/non-resonant splitting.
//!
//! All flows are written on the Fourier side as
//! `∂ₜû(k) = ik³û(k) + N̂(u)(k)`; the dispersive part is shared and only the
//! nonlinearity `N` differs between variants.

use alloc::format;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fourier::{apply_multiplier, derivative, product, FourierField, Multiplier, C64, I};

#[derive(Clone, Debug, PartialEq)]
pub enum FlowSpec {
    /// Linear Airy flow `u_t + u_xxx = 0` (nonlinearity switched off).
    Airy,
    /// `u_t + u_xxx = 6uu_x`.
    KdV,
    /// `u_t + u_xxx = P_{≤N}(6uu_x)`.
    PKdV { n: usize },
    /// `u_t + u_xxx = B(6uu_x)`.
    BKdV { b: Multiplier },
    /// `w_t + w_xxx = 6B²(ww_x)`.
    B2KdV { b: Multiplier },
    /// `u_t + u_xxx = 6B((Bu)(Bu_x))`, the Hamiltonian truncation.
    HamTrunc { n: usize, b: Multiplier },
    /// `v_t + v_xxx = 6(v² − P₀(v²))v_x`.
    MKdV,
}

impl FlowSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FlowSpec::Airy => "airy",
            FlowSpec::KdV => "kdv",
            FlowSpec::PKdV { .. } => "pkdv",
            FlowSpec::BKdV { .. } => "bkdv",
            FlowSpec::B2KdV { .. } => "b2kdv",
            FlowSpec::HamTrunc { .. } => "hamtrunc",
            FlowSpec::MKdV => "mkdv",
        }
    }

    /// Effective multiplier in front of `3ik(u²)^` for the quadratic flows.
    pub fn quadratic_multiplier(&self) -> Option<Multiplier> {
        match self {
            FlowSpec::KdV => Some(Multiplier::Identity),
            FlowSpec::PKdV { n } => Some(Multiplier::SharpCutoff { n: *n }),
            FlowSpec::BKdV { b } => Some(b.clone()),
            FlowSpec::B2KdV { b } => Some(b.clone().times(b.clone())),
            _ => None,
        }
    }

    /// Checks that a field of band `k` is admissible for this flow.
    pub fn check_band(&self, k: usize) -> Result<()> {
        match self {
            FlowSpec::PKdV { n } | FlowSpec::HamTrunc { n, .. } if *n > k => {
                Err(Error::BandLimit { field: k, reason: format!("{} needs N = {n} ≤ K", self.name()) })
            }
            _ => Ok(()),
        }
    }
}

/// Nonlinear part `N̂(u)(k)` for `1 ≤ k ≤ K`, in the band of `u`.
pub fn nonlinearity(spec: &FlowSpec, u: &FourierField) -> Result<FourierField> {
    spec.check_band(u.k_max())?;
    let k = u.k_max();
    Ok(match spec {
        FlowSpec::Airy => FourierField::zeros(k),
        FlowSpec::MKdV => mkdv_f_band(u, k),
        FlowSpec::HamTrunc { b, .. } => {
            let bu = apply_multiplier(b, u);
            apply_multiplier(b, &quadratic_term(&bu, k))
        }
        _ => {
            let m = spec.quadratic_multiplier().expect("quadratic flow");
            apply_multiplier(&m, &quadratic_term(u, k))
        }
    })
}

/// `6uu_x = 3∂ₓ(u²)` computed exactly up to band `k_out`.
pub fn quadratic_term(u: &FourierField, k_out: usize) -> FourierField {
    derivative(&product(u, u, k_out).field, 1).scale(3.0)
}

/// Full right-hand side `−u_xxx + N(u)`.
pub fn rhs(spec: &FlowSpec, u: &FourierField) -> Result<FourierField> {
    let mut out = nonlinearity(spec, u)?;
    for (i, (o, c)) in out.coeffs_mut().iter_mut().zip(u.coeffs()).enumerate() {
        let k = i as f64 + 1.0;
        *o += I * (k * k * k) * c;
    }
    Ok(out)
}

/// `F(v) = 6(v² − P₀(v²))v_x` in the band of `v`.
pub fn mkdv_f(v: &FourierField) -> FourierField {
    mkdv_f_band(v, v.k_max())
}

/// `F(v)` up to band `k_out` (the exact product lives in band `3K`).
pub fn mkdv_f_band(v: &FourierField, k_out: usize) -> FourierField {
    let sq = product(v, v, 2 * v.k_max()).field;
    product(&sq, &derivative(v, 1), k_out).field.scale(6.0)
}

/// Resonant part `F̂₀(k) = −6ik û(k)v̂(k)ŵ(−k)`, in the largest input band.
pub fn f0(u: &FourierField, v: &FourierField, w: &FourierField) -> FourierField {
    let k_max = u.k_max().max(v.k_max()).max(w.k_max());
    let coeffs = (1..=k_max as i64).map(|k| -6.0 * I * (k as f64) * u.get(k) * v.get(k) * w.get(-k)).collect();
    FourierField::from_coeffs(coeffs).expect("finite inputs")
}

/// Non-resonant part:
/// `2i k Σ û(k₁)v̂(k₂)ŵ(k₃)` over `k₁+k₂+k₃ = k` with
/// `(k₁+k₂)(k₁+k₃)(k₂+k₃) ≠ 0`, computed by direct summation up to band `k_out`.
///
/// The prefactor is `+2i`: it is the sign for which `F = F₀ + F≠0` holds.
pub fn fneq0(u: &FourierField, v: &FourierField, w: &FourierField, k_out: usize) -> FourierField {
    let (ku, kv, kw) = (u.k_max() as i64, v.k_max() as i64, w.k_max() as i64);
    let coeffs = (1..=k_out as i64)
        .map(|k| {
            let mut acc = C64::zero();
            for k1 in -ku..=ku {
                if k1 == 0 {
                    continue;
                }
                let a = u.get(k1);
                if a.is_zero() {
                    continue;
                }
                for k2 in -kv..=kv {
                    let k3 = k - k1 - k2;
                    if k2 == 0 || k3 == 0 || k3.abs() > kw {
                        continue;
                    }
                    if (k1 + k2) * (k1 + k3) * (k2 + k3) == 0 {
                        continue;
                    }
                    acc += a * v.get(k2) * w.get(k3);
                }
            }
            acc * Complex::new(0.0, 2.0 * k as f64)
        })
        .collect();
    FourierField::from_coeffs(coeffs).expect("finite inputs")
}

/// `k³ − (k₁³ + k₂³ + k₃³) − 3(k₁+k₂)(k₁+k₃)(k₂+k₃)` with `k = k₁+k₂+k₃`;
/// identically zero.
pub fn resonance_defect(k1: i64, k2: i64, k3: i64) -> i128 {
    let (a, b, c) = (k1 as i128, k2 as i128, k3 as i128);
    let k = a + b + c;
    k * k * k - (a * a * a + b * b * b + c * c * c) - 3 * (a + b) * (a + c) * (b + c)
}

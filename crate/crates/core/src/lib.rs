//! Spectral laboratory for the Korteweg-de Vries equation on the circle.
//!
//! Everything here is pure computation on band-limited, real, mean-zero
//! periodic fields stored by their positive-frequency Fourier coefficients.
//! The crate is `no_std` (it needs `alloc`); file formats, the CLI and the
//! scenario runner live in the `kdv-lab` companion crate.
//!
//! Conventions: `û(k) = (1/2π) ∫ u(x) e^{-ikx} dx`, synthesis carries no
//! factor, and `‖u‖_{H^s} = (2π)^{1/2} ‖⟨k⟩^s û‖_{ℓ²}`.

#![no_std]
// Band loops index several coefficient arrays at shifted offsets.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]
// `num_traits::Float` supplies the float methods only when std is absent
// from the whole crate graph; otherwise std's inherent methods win.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(any(test, feature = "fft"))]
extern crate std;

pub mod error;
pub mod experiments;
pub mod fit;
pub mod flows;
pub mod fourier;
pub mod geometry;
pub mod imethod;
pub mod integrator;
pub mod miura;
pub mod picard;
pub mod quadrature;
pub mod symplectic;

pub use error::{Error, Result};
pub use flows::FlowSpec;
pub use fourier::{FourierField, Multiplier, C64};
pub use integrator::{evolve, EvolveOptions, Trajectory};

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³`, clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    }
}

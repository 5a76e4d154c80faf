//! The three flow-comparison experiments: the sharp-truncation
//! counterexample, convergence of the smooth truncation to KdV, and the
//! insensitivity of low frequencies to high-frequency perturbations.
//!
//! Each experiment is split into a per-`N` row function so callers can run
//! rows in parallel, and a summary that fits the decay exponent.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::{power_law, PowerFit};
use crate::flows::FlowSpec;
use crate::fourier::{apply_multiplier, bump_b, homogeneous_norm, sharp_cutoff, sobolev_norm, FourierField, C64, I};
use crate::integrator::{evolve, EvolveOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleParams {
    pub sigma: f64,
    pub k0: usize,
    pub n: usize,
    pub t: f64,
    pub k: usize,
    pub dt: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams { sigma: 0.05, k0: 1, n: 32, t: 0.5, k: 80, dt: 2e-4 }
    }
}

/// Largest admissible `dt·3Nk₀(N+k₀)`: the phase of the slowest resonant
/// interaction feeding mode `k₀` must be resolved by the step.
pub const PHASE_PER_STEP: f64 = 0.7;

impl CounterexampleParams {
    /// Resolution guard, checked before any integration.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        if self.k0 == 0 || self.n <= self.k0 {
            return Err(Error::invalid("n", "need N > k0 ≥ 1"));
        }
        if !(self.t > 0.0) || !(self.dt > 0.0) {
            return Err(Error::invalid("t", "T and dt must be positive"));
        }
        if self.k < 2 * self.n + self.k0 {
            return Err(Error::Resolution(alloc::format!(
                "band K = {} below 2N + k0 = {}",
                self.k,
                2 * self.n + self.k0
            )));
        }
        let (n, k0) = (self.n as f64, self.k0 as f64);
        let phase = self.dt * 3.0 * n * k0 * (n + k0);
        if phase > PHASE_PER_STEP {
            return Err(Error::Resolution(alloc::format!(
                "dt = {} resolves only {phase:.3} rad of resonant phase per step (limit {PHASE_PER_STEP})",
                self.dt
            )));
        }
        Ok(())
    }

    /// `σ³cos(k₀x) + σN^{1/2}cos(Nx)` in band `K`.
    pub fn initial_data(&self) -> FourierField {
        let low = FourierField::cosine(self.k, self.k0, self.sigma.powi(3));
        let high = FourierField::cosine(self.k, self.n, self.sigma * (self.n as f64).sqrt());
        &low + &high
    }

    /// `−(3/2)iTσ⁵e^{ik₀³T}`.
    pub fn predicted(&self) -> C64 {
        let k0 = self.k0 as f64;
        -I * (1.5 * self.t * self.sigma.powi(5)) * C64::from_polar(1.0, k0 * k0 * k0 * self.t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    /// `û_PKdV(T)(k₀) − û_KdV(T)(k₀)`.
    pub measured: C64,
    pub predicted: C64,
    /// `|measured − predicted| / |predicted|`.
    pub ratio_error: f64,
    /// `|measured| / |predicted|`.
    pub modulus_ratio: f64,
    /// `arg(measured / predicted)` in `(−π, π]`.
    pub phase_offset: f64,
}

pub fn run_counterexample(p: &CounterexampleParams) -> Result<CounterexampleReport> {
    p.validate()?;
    let u0 = p.initial_data();
    let opts = EvolveOptions::new(p.dt);
    let kdv = evolve(&FlowSpec::KdV, &u0, p.t, &opts)?;
    let pkdv = evolve(&FlowSpec::PKdV { n: p.n }, &u0, p.t, &opts)?;
    let k0 = p.k0 as i64;
    let measured = pkdv.final_state().get(k0) - kdv.final_state().get(k0);
    let predicted = p.predicted();
    Ok(CounterexampleReport {
        params: p.clone(),
        measured,
        predicted,
        ratio_error: (measured - predicted).norm() / predicted.norm(),
        modulus_ratio: measured.norm() / predicted.norm(),
        phase_offset: (measured / predicted).arg(),
    })
}

/// Which truncation is compared against KdV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// `BKdV` with the smooth bump at `N`.
    Smooth,
    /// `PKdV` with the sharp cutoff at `N`.
    Sharp,
}

impl Truncation {
    pub fn flow(&self, n: usize) -> Result<FlowSpec> {
        Ok(match self {
            Truncation::Smooth => FlowSpec::BKdV { b: bump_b(n)? },
            Truncation::Sharp => FlowSpec::PKdV { n },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxParams {
    pub n_list: Vec<usize>,
    pub t: f64,
    pub s: f64,
    /// Band of all runs; must hold the KdV cascade of the data.
    pub k: usize,
    pub dt: f64,
    /// Sampling intervals on `[0, T]` for the supremum.
    pub samples: usize,
    pub truncation: Truncation,
}

impl ApproxParams {
    pub fn validate(&self, u0: &FourierField) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list", "must not be empty"));
        }
        if self.s < -0.5 {
            return Err(Error::invalid("s", "need s ≥ -1/2"));
        }
        if !(self.t > 0.0) || !(self.dt > 0.0) || self.samples == 0 {
            return Err(Error::invalid("t", "T, dt and samples must be positive"));
        }
        for &n in &self.n_list {
            if n > self.k {
                return Err(Error::Resolution(alloc::format!("N = {n} exceeds band K = {}", self.k)));
            }
            if u0.support_max() > n {
                return Err(Error::invalid("u0", "data must be band-limited within every N"));
            }
            self.truncation.flow(n)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    /// `sup_t ‖P(difference)‖_{H^s}` over the samples.
    pub error: f64,
    /// `sup_t |difference at k₀|` for the monitored mode, if any.
    pub mode_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayTable {
    pub rows: Vec<ErrorRow>,
    /// `None` when fewer than two rows have a positive error.
    pub fit: Option<PowerFit>,
    pub mode_fit: Option<PowerFit>,
}

impl DecayTable {
    pub fn from_rows(mut rows: Vec<ErrorRow>) -> Self {
        rows.sort_by_key(|r| r.n);
        let fit = power_law(&rows.iter().map(|r| (r.n as f64, r.error)).collect::<Vec<_>>()).ok();
        let mode: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.mode_error.map(|e| (r.n as f64, e))).collect();
        let mode_fit = if mode.len() == rows.len() { power_law(&mode).ok() } else { None };
        DecayTable { rows, fit, mode_fit }
    }

    /// Errors strictly decrease in `N`.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

/// Samples two evolutions on a common grid and returns the sup of the
/// projected `H^s` difference and of the difference at mode `k0`.
fn compare(
    a: (&FlowSpec, &FourierField),
    b: (&FlowSpec, &FourierField),
    t: f64,
    dt: f64,
    samples: usize,
    proj: usize,
    s: f64,
    k0: Option<usize>,
) -> Result<(f64, Option<f64>)> {
    let ev = EvolveOptions::new(dt).with_uniform_samples(t, samples);
    let ta = evolve(a.0, a.1, t, &ev)?;
    let tb = evolve(b.0, b.1, t, &ev)?;
    let cut = sharp_cutoff(proj);
    let mut sup: f64 = 0.0;
    let mut mode: f64 = 0.0;
    for (x, y) in ta.states.iter().zip(&tb.states) {
        let d = x - y;
        sup = sup.max(sobolev_norm(&apply_multiplier(&cut, &d), s));
        if let Some(k0) = k0 {
            mode = mode.max(d.get(k0 as i64).norm());
        }
    }
    Ok((sup, k0.map(|_| mode)))
}

/// `⌊√N⌋`, the low-frequency window of the approximation experiment.
pub fn low_window(n: usize) -> usize {
    libm::floor(libm::sqrt(n as f64)) as usize
}

/// One row of the approximation study: KdV versus the truncation at `N`,
/// measured under `P_{≤√N}` and at mode `k0`.
pub fn approx_bkdv_row(u0: &FourierField, n: usize, p: &ApproxParams, k0: Option<usize>) -> Result<ErrorRow> {
    let u = u0.with_band(p.k);
    let flow = p.truncation.flow(n)?;
    let (error, mode_error) = compare((&FlowSpec::KdV, &u), (&flow, &u), p.t, p.dt, p.samples, low_window(n), p.s, k0)?;
    Ok(ErrorRow { n, error, mode_error })
}

pub fn run_approx_bkdv(u0: &FourierField, p: &ApproxParams, k0: Option<usize>) -> Result<DecayTable> {
    p.validate(u0)?;
    let rows = p.n_list.iter().map(|&n| approx_bkdv_row(u0, n, p, k0)).collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::from_rows(rows))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbParams {
    pub n_list: Vec<usize>,
    pub t: f64,
    pub s: f64,
    /// Largest step; rows may use a smaller one (see [`PerturbParams::dt_for`]).
    pub dt: f64,
    pub samples: usize,
    /// Perturbation frequency as a multiple of `N` (must exceed 2).
    pub frequency_factor: usize,
    /// Homogeneous `Ḣ^{-1/2}` norm of the perturbation.
    pub amplitude: f64,
    /// Extra modes above the perturbation frequency.
    pub margin: usize,
}

impl PerturbParams {
    pub fn validate(&self, u0: &FourierField) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list", "must not be empty"));
        }
        if self.frequency_factor <= 2 {
            return Err(Error::invalid("frequency_factor", "perturbation must sit strictly above 2N"));
        }
        if !(self.t > 0.0) || !(self.dt > 0.0) || self.samples == 0 {
            return Err(Error::invalid("t", "T, dt and samples must be positive"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be nonnegative"));
        }
        for &n in &self.n_list {
            if u0.support_max() > 2 * n {
                return Err(Error::invalid("u0", "data must be supported in |k| ≤ 2N for every N"));
            }
        }
        Ok(())
    }

    /// Step for the row at `N`: the interaction of the perturbation at `fN`
    /// with the modes it excites within the margin has phase rate
    /// `3(fN)²·margin`, which the step must resolve to [`PHASE_PER_STEP`].
    pub fn dt_for(&self, n: usize) -> f64 {
        let kp = (self.frequency_factor * n) as f64;
        self.dt.min(PHASE_PER_STEP / (3.0 * kp * kp * self.margin.max(1) as f64))
    }

    pub fn band(&self, n: usize) -> usize {
        self.frequency_factor * n + self.margin
    }

    /// Cosine at `frequency_factor·N` with the requested `Ḣ^{-1/2}` norm.
    pub fn perturbation(&self, n: usize) -> FourierField {
        let unit = FourierField::cosine(self.band(n), self.frequency_factor * n, 1.0);
        let norm = homogeneous_norm(&unit, -0.5);
        unit.scale(self.amplitude / norm)
    }
}

pub fn perturb_high_row(u0: &FourierField, n: usize, p: &PerturbParams, k0: Option<usize>) -> Result<ErrorRow> {
    let u = u0.with_band(p.band(n));
    let v = &u + &p.perturbation(n);
    let (error, mode_error) =
        compare((&FlowSpec::KdV, &u), (&FlowSpec::KdV, &v), p.t, p.dt_for(n), p.samples, n, p.s, k0)?;
    Ok(ErrorRow { n, error, mode_error })
}

pub fn run_perturb_high(u0: &FourierField, p: &PerturbParams, k0: Option<usize>) -> Result<DecayTable> {
    p.validate(u0)?;
    let rows = p.n_list.iter().map(|&n| perturb_high_row(u0, n, p, k0)).collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn guard_rejects_underresolved_runs() {
        let mut p = CounterexampleParams::default();
        assert!(p.validate().is_ok());
        p.k = 60;
        assert!(matches!(p.validate(), Err(Error::Resolution(_))));
        p.k = 80;
        p.dt = 1e-3;
        assert!(matches!(p.validate(), Err(Error::Resolution(_))));
        p.dt = 2e-4;
        p.sigma = -0.1;
        assert!(matches!(p.validate(), Err(Error::InvalidArgument { name: "sigma", .. })));
    }

    #[test]
    fn prediction_formula() {
        let p = CounterexampleParams::default();
        let z = p.predicted();
        assert!((z.norm() - 1.5 * 0.5 * 0.05f64.powi(5)).abs() < 1e-20);
        assert!((z.arg() - (0.5 - core::f64::consts::FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_errors() {
        let u0 = FourierField::zeros(4);
        let p = ApproxParams {
            n_list: vec![8, 16],
            t: 0.1,
            s: -0.5,
            k: 16,
            dt: 1e-3,
            samples: 4,
            truncation: Truncation::Smooth,
        };
        let table = run_approx_bkdv(&u0, &p, Some(1)).unwrap();
        assert!(table.rows.iter().all(|r| r.error == 0.0));
        assert!(table.fit.is_none());
        let q = PerturbParams {
            n_list: vec![4, 8],
            t: 0.1,
            s: -0.5,
            dt: 1e-3,
            samples: 4,
            frequency_factor: 4,
            amplitude: 0.0,
            margin: 4,
        };
        let table = run_perturb_high(&u0, &q, None).unwrap();
        assert!(table.rows.iter().all(|r| r.error == 0.0));
    }

    #[test]
    fn perturbation_has_requested_norm() {
        let q = PerturbParams {
            n_list: vec![4],
            t: 0.1,
            s: -0.5,
            dt: 1e-3,
            samples: 4,
            frequency_factor: 4,
            amplitude: 0.3,
            margin: 4,
        };
        let p = q.perturbation(4);
        assert_eq!(p.support_max(), 16);
        assert!((homogeneous_norm(&p, -0.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn approx_rejects_rough_data() {
        let u0 = FourierField::cosine(16, 12, 1.0);
        let p = ApproxParams {
            n_list: vec![8],
            t: 0.1,
            s: -0.5,
            k: 16,
            dt: 1e-3,
            samples: 4,
            truncation: Truncation::Smooth,
        };
        assert!(run_approx_bkdv(&u0, &p, None).is_err());
    }
}

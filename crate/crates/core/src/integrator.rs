//! Integrating-factor RK4 for every [`FlowSpec`], with an invariant ledger.
//!
//! The dispersive factor `e^{ik³t}` is applied exactly (Lawson form), so the
//! step size is bounded by the nonlinearity only.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::flows::{nonlinearity, FlowSpec};
use crate::fourier::{apply_multiplier, sobolev_norm, FourierField, Multiplier, C64};
use crate::imethod::{self, Energies, EnergyParams};
use crate::symplectic;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Times (same sign as `T`) at which states and ledger entries are kept.
    /// `0` and `T` are always included.
    pub sample_times: Vec<f64>,
    /// Abort once the monitored `H^s` norm exceeds this.
    pub blowup_bound: f64,
    pub monitor_s: f64,
    /// When set, the ledger also records `E₂, E₃, E₄`.
    pub energies: Option<EnergyParams>,
}

impl EvolveOptions {
    pub fn new(dt: f64) -> Self {
        EvolveOptions { dt, sample_times: Vec::new(), blowup_bound: 1e6, monitor_s: 0.0, energies: None }
    }

    /// Default step `min(1e−3, 100·0.5/K³)`.
    pub fn default_dt(k: usize) -> f64 {
        let k3 = (k as f64).powi(3);
        (50.0f64 / k3).min(1e-3)
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    /// `n + 1` equally spaced samples on `[0, T]`.
    pub fn with_uniform_samples(mut self, t: f64, n: usize) -> Self {
        self.sample_times = (0..=n).map(|i| t * i as f64 / n as f64).collect();
        self
    }

    pub fn with_energies(mut self, p: EnergyParams) -> Self {
        self.energies = Some(p);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub time: f64,
    pub mean: f64,
    pub l2: f64,
    /// Conserved functional of the flow, when it has one.
    pub hamiltonian: Option<f64>,
    pub energies: Option<Energies>,
}

/// States at the sample times, ordered along the direction of integration
/// (times increase for `T > 0` and decrease for `T < 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FourierField>,
    pub ledger: Vec<LedgerEntry>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &FourierField {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn state_at(&self, t: f64) -> Option<&FourierField> {
        self.times.iter().position(|&s| s == t).map(|i| &self.states[i])
    }

    /// Largest relative drift of the L² norm from the initial entry.
    pub fn l2_drift(&self) -> f64 {
        relative_drift(self.ledger.iter().map(|e| e.l2))
    }

    /// Largest relative drift of the conserved functional, if any.
    pub fn hamiltonian_drift(&self) -> Option<f64> {
        let h: Option<Vec<f64>> = self.ledger.iter().map(|e| e.hamiltonian).collect();
        h.map(|v| relative_drift(v.into_iter()))
    }
}

fn relative_drift(mut it: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = it.next() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    it.map(|x| (x - first).abs() / scale).fold(0.0, f64::max)
}

/// Propagator `û(k) ↦ e^{ik³h}û(k)` tabulated for a band.
struct Phases {
    e: Vec<C64>,
}

impl Phases {
    fn new(k_max: usize, h: f64) -> Self {
        let e = (1..=k_max)
            .map(|k| {
                let k = k as f64;
                Complex::from_polar(1.0, k * k * k * h)
            })
            .collect();
        Phases { e }
    }

    fn apply(&self, u: &FourierField) -> FourierField {
        let mut out = u.clone();
        for (c, e) in out.coeffs_mut().iter_mut().zip(&self.e) {
            *c *= e;
        }
        out
    }
}

/// Free evolution `û(k) ↦ e^{ik³t}û(k)`.
pub fn airy(u: &FourierField, t: f64) -> FourierField {
    Phases::new(u.k_max(), t).apply(u)
}

/// One Lawson RK4 step of size `h` (either sign).
fn lawson_step(spec: &FlowSpec, u: &FourierField, half: &Phases, full: &Phases, h: f64) -> Result<FourierField> {
    let k1 = nonlinearity(spec, u)?;
    let eu_half = half.apply(u);
    let ua = half.apply(&u.axpy(h / 2.0, &k1));
    let k2 = nonlinearity(spec, &ua)?;
    let ub = eu_half.axpy(h / 2.0, &k2);
    let k3 = nonlinearity(spec, &ub)?;
    let uc = full.apply(u).axpy(h, &half.apply(&k3));
    let k4 = nonlinearity(spec, &uc)?;
    let mid = half.apply(&k2.axpy(1.0, &k3));
    let incr = full.apply(&k1).axpy(2.0, &mid).axpy(1.0, &k4);
    Ok(full.apply(u).axpy(h / 6.0, &incr))
}

fn sorted_samples(t_end: f64, extra: &[f64]) -> Result<Vec<f64>> {
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    let mut ts: Vec<f64> = vec![0.0, t_end];
    for &t in extra {
        if !t.is_finite() || t * dir < 0.0 || t.abs() > t_end.abs() {
            return Err(Error::invalid("sample_times", "samples must lie between 0 and T"));
        }
        ts.push(t);
    }
    ts.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
    ts.dedup();
    Ok(ts)
}

/// Integrates `spec` from `u0` to time `t_end`.
pub fn evolve(spec: &FlowSpec, u0: &FourierField, t_end: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::invalid("dt", "step must be positive and finite"));
    }
    if !t_end.is_finite() {
        return Err(Error::invalid("T", "final time must be finite"));
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    spec.check_band(u0.k_max())?;
    let samples = sorted_samples(t_end, &opts.sample_times)?;
    let k_max = u0.k_max();

    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), ledger: Vec::new(), steps: 0 };
    let mut u = u0.clone();
    let mut t = 0.0;
    let record = |traj: &mut Trajectory, t: f64, u: &FourierField| -> Result<()> {
        traj.ledger.push(ledger_entry(spec, u, t, opts.energies.as_ref())?);
        traj.times.push(t);
        traj.states.push(u.clone());
        Ok(())
    };
    record(&mut traj, 0.0, &u)?;
    for &target in &samples[1..] {
        let span = target - t;
        let n = libm::ceil(span.abs() / opts.dt).max(1.0) as usize;
        let h = span / n as f64;
        let half = Phases::new(k_max, h / 2.0);
        let full = Phases::new(k_max, h);
        for i in 0..n {
            u = lawson_step(spec, &u, &half, &full, h)?;
            traj.steps += 1;
            let norm = sobolev_norm(&u, opts.monitor_s);
            let now = t + h * (i + 1) as f64;
            if !norm.is_finite() {
                return Err(Error::NonFinite("state during integration"));
            }
            if norm > opts.blowup_bound {
                return Err(Error::Blowup { time: now, norm, bound: opts.blowup_bound });
            }
        }
        t = target;
        record(&mut traj, t, &u)?;
    }
    Ok(traj)
}

fn ledger_entry(spec: &FlowSpec, u: &FourierField, t: f64, e: Option<&EnergyParams>) -> Result<LedgerEntry> {
    let energies = match e {
        Some(p) => Some(imethod::energies(u, p)?),
        None => None,
    };
    Ok(LedgerEntry {
        time: t,
        mean: 0.0,
        l2: sobolev_norm(u, 0.0),
        hamiltonian: symplectic::conserved_hamiltonian(spec, u),
        energies,
    })
}

/// Options for [`flow_map_difference`].
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceOptions {
    pub dt: f64,
    /// Number of sampling intervals on `[0, T]`.
    pub samples: usize,
}

impl DifferenceOptions {
    pub fn new(dt: f64) -> Self {
        DifferenceOptions { dt, samples: 64 }
    }
}

/// Sampled `sup_t ‖P(S_A(t)u_A − S_B(t)u_B)‖_{H^s}`.
pub fn flow_map_difference(
    spec_a: &FlowSpec,
    u_a: &FourierField,
    spec_b: &FlowSpec,
    u_b: &FourierField,
    t_end: f64,
    projector: &Multiplier,
    s: f64,
    opts: &DifferenceOptions,
) -> Result<f64> {
    let ev = EvolveOptions::new(opts.dt).with_uniform_samples(t_end, opts.samples.max(1));
    let ta = evolve(spec_a, u_a, t_end, &ev)?;
    let tb = if spec_a == spec_b && u_a == u_b { ta.clone() } else { evolve(spec_b, u_b, t_end, &ev)? };
    Ok(ta
        .states
        .iter()
        .zip(&tb.states)
        .map(|(a, b)| sobolev_norm(&apply_multiplier(projector, &(a - b)), s))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::bump_b;

    fn smooth_data(k: usize) -> FourierField {
        &FourierField::cosine(k, 1, 1.0) + &FourierField::sine(k, 2, 0.5)
    }

    #[test]
    fn airy_mode_is_exact() {
        let u0 = smooth_data(16);
        for dt in [0.3, 1e-2] {
            let tr = evolve(&FlowSpec::Airy, &u0, 1.0, &EvolveOptions::new(dt)).unwrap();
            let want = airy(&u0, 1.0);
            assert!(tr.final_state().max_abs_diff(&want) < 1e-13);
        }
    }

    #[test]
    fn fourth_order_self_convergence() {
        let u0 = FourierField::cosine(32, 1, 1.0);
        let run = |dt: f64| evolve(&FlowSpec::KdV, &u0, 1.0, &EvolveOptions::new(dt)).unwrap().final_state().clone();
        let (a, b, c) = (run(1e-3), run(5e-4), run(2.5e-4));
        let ratio = a.max_abs_diff(&b) / b.max_abs_diff(&c);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn l2_conservation_kdv() {
        let u0 = FourierField::cosine(32, 1, 1.0);
        let tr = evolve(&FlowSpec::KdV, &u0, 1.0, &EvolveOptions::new(1e-3).with_uniform_samples(1.0, 8)).unwrap();
        assert!(tr.l2_drift() <= 1e-8, "{}", tr.l2_drift());
        assert!(tr.hamiltonian_drift().unwrap() <= 1e-8);
        assert!(tr.ledger.iter().all(|e| e.mean == 0.0));
    }

    #[test]
    fn time_reversal() {
        let u0 = smooth_data(24);
        let opts = EvolveOptions::new(1e-3);
        let fwd = evolve(&FlowSpec::KdV, &u0, 0.3, &opts).unwrap();
        let back = evolve(&FlowSpec::KdV, fwd.final_state(), -0.3, &opts).unwrap();
        assert!(back.final_state().max_abs_diff(&u0) < 1e-8);
        assert_eq!(back.times, vec![0.0, -0.3]);
    }

    #[test]
    fn samples_are_hit_exactly() {
        let u0 = smooth_data(8);
        let tr = evolve(&FlowSpec::KdV, &u0, 0.1, &EvolveOptions::new(0.03).with_samples(vec![0.05, 0.025])).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.025, 0.05, 0.1]);
        assert!(evolve(&FlowSpec::KdV, &u0, 0.1, &EvolveOptions::new(0.01).with_samples(vec![0.2])).is_err());
        assert!(evolve(&FlowSpec::KdV, &u0, 0.1, &EvolveOptions::new(0.0)).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        let u0 = smooth_data(8);
        let mut opts = EvolveOptions::new(1e-3);
        opts.blowup_bound = 0.5;
        assert!(matches!(evolve(&FlowSpec::KdV, &u0, 0.1, &opts), Err(Error::Blowup { .. })));
    }

    #[test]
    fn identical_flows_have_zero_difference() {
        let u0 = smooth_data(8);
        let d = flow_map_difference(
            &FlowSpec::KdV,
            &u0,
            &FlowSpec::KdV,
            &u0,
            0.1,
            &Multiplier::Identity,
            0.0,
            &DifferenceOptions::new(1e-3),
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn b2_intertwining() {
        let n = 16;
        let b = bump_b(n).unwrap();
        let u0 = &FourierField::cosine(n, 3, 0.4) + &FourierField::sine(n, 11, 0.3);
        let opts = EvolveOptions::new(1e-3);
        let lhs = evolve(&FlowSpec::HamTrunc { n, b: b.clone() }, &u0, 0.2, &opts).unwrap();
        let lhs = apply_multiplier(&b, lhs.final_state());
        let rhs = evolve(&FlowSpec::B2KdV { b: b.clone() }, &apply_multiplier(&b, &u0), 0.2, &opts).unwrap();
        assert!(lhs.max_abs_diff(rhs.final_state()) < 1e-10);
    }
}

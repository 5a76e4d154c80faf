//! Kind-specific runners. Each writes its tables into the output directory
//! and returns a JSON summary plus a few human-readable lines.
//!
//! Independent rows (per-`N` runs, per-sample inversions) go through rayon;
//! results are collected in input order, so artifacts do not depend on
//! scheduling.

use kdv_core::experiments::{
    approx_bkdv_row, perturb_high_row, run_counterexample, ApproxParams, CounterexampleParams, DecayTable,
    PerturbParams, Truncation,
};
use kdv_core::fit::PowerFit;
use kdv_core::fourier::{apply_multiplier, bump_b, product, sobolev_norm};
use kdv_core::imethod::{bound_sampler, differentiation_law_check, flow_multiplier, EnergyParams, IMultiplier, Lemma};
use kdv_core::miura::{miura_derivative, miura_derivative_inverse, miura_forward, miura_inverse, MiuraOptions};
use kdv_core::symplectic::{
    conserved_hamiltonian, nonsqueeze_probe, omega_gradient_check, symplecticity_test, CylinderSpec,
};
use kdv_core::{evolve, EvolveOptions, FlowSpec, FourierField, C64};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::{complex, fmt_f64, ledger_json, num, OutputDir};
use crate::config::*;
use crate::error::{LabError, Result};

pub struct Outcome {
    pub summary: Value,
    pub lines: Vec<String>,
}

pub fn run_experiment(sc: &Scenario, out: &mut OutputDir) -> Result<Outcome> {
    let kind = sc.experiment.kind();
    let core = |e: kdv_core::Error| LabError::from_core(kind, e);
    match &sc.experiment {
        Experiment::Evolve(c) => run_evolve(c, sc.seed, out, &core),
        Experiment::Counterexample(c) => run_counter(c, out, &core),
        Experiment::ApproxBkdv(c) => run_approx(c, sc.seed, out, &core),
        Experiment::PerturbHigh(c) => run_perturb(c, sc.seed, out, &core),
        Experiment::MiuraRoundtrip(c) => run_miura(c, sc.seed, out, &core),
        Experiment::Intertwining(c) => run_intertwining(c, sc.seed, out, &core),
        Experiment::Symplecticity(c) => run_symplectic(c, sc.seed, out, &core),
        Experiment::Nonsqueeze(c) => run_nonsqueeze(c, sc.seed, out, &core),
        Experiment::ImethodLedger(c) => run_imethod(c, sc.seed, out, &core),
    }
}

type CoreErr<'a> = &'a dyn Fn(kdv_core::Error) -> LabError;

fn run_evolve(c: &EvolveConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let flow = c.flow.to_flow("experiment.flow")?;
    let u0 = c.initial.build(c.k, seed, 0, "experiment.initial")?;
    let dt = c.dt.unwrap_or_else(|| EvolveOptions::default_dt(c.k));
    let mut opts = EvolveOptions::new(dt).with_uniform_samples(c.t, c.samples);
    opts.blowup_bound = c.blowup_bound;
    opts.monitor_s = c.monitor_s;
    if let Some(e) = &c.energies {
        let m = IMultiplier::new(e.a, e.s).map_err(core)?;
        let b = flow_multiplier(&flow, c.k).map_err(core)?;
        opts = opts.with_energies(EnergyParams { m, b, derivatives: e.derivatives });
    }
    let tr = evolve(&flow, &u0, c.t, &opts).map_err(core)?;
    out.write_trajectory("trajectory.csv", &tr)?;
    out.write_json("ledger.json", &ledger_json(&tr))?;
    out.write_field("final.json", tr.final_state())?;
    let h_drift = tr.hamiltonian_drift();
    let summary = json!({
        "flow": flow.name(),
        "dt": num(dt),
        "steps": tr.steps,
        "l2_drift": num(tr.l2_drift()),
        "hamiltonian_drift": h_drift.map(num).unwrap_or(Value::Null),
        "final_l2": num(sobolev_norm(tr.final_state(), 0.0)),
    });
    let mut lines = vec![format!("{} run: {} steps of dt = {dt}", flow.name(), tr.steps)];
    lines.push(format!("L2 drift {:.3e}", tr.l2_drift()));
    if let Some(h) = h_drift {
        lines.push(format!("Hamiltonian drift {h:.3e}"));
    }
    Ok(Outcome { summary, lines })
}

fn run_counter(c: &CounterexampleConfig, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let p = CounterexampleParams { sigma: c.sigma, k0: c.k0, n: c.n, t: c.t, k: c.k, dt: c.dt };
    p.validate().map_err(core)?;
    let r = run_counterexample(&p).map_err(core)?;
    out.write_csv(
        "counterexample.csv",
        &["sigma", "k0", "N", "T", "measured_re", "measured_im", "predicted_re", "predicted_im", "ratio_error"],
        [vec![
            fmt_f64(c.sigma),
            c.k0.to_string(),
            c.n.to_string(),
            fmt_f64(c.t),
            fmt_f64(r.measured.re),
            fmt_f64(r.measured.im),
            fmt_f64(r.predicted.re),
            fmt_f64(r.predicted.im),
            fmt_f64(r.ratio_error),
        ]],
    )?;
    let summary = json!({
        "measured_discrepancy": complex(r.measured),
        "predicted": complex(r.predicted),
        "ratio": num(r.ratio_error),
        "modulus_ratio": num(r.modulus_ratio),
        "phase_offset": num(r.phase_offset),
    });
    let lines = vec![
        format!("measured  {:+.6e} {:+.6e}i", r.measured.re, r.measured.im),
        format!("predicted {:+.6e} {:+.6e}i", r.predicted.re, r.predicted.im),
        format!("|measured|/|predicted| = {:.4}, phase offset {:.4} rad", r.modulus_ratio, r.phase_offset),
    ];
    Ok(Outcome { summary, lines })
}

fn fit_json(f: &Option<PowerFit>) -> Value {
    match f {
        Some(f) => json!({ "exponent": num(f.exponent()), "intercept": num(f.intercept), "r2": num(f.r2) }),
        None => Value::Null,
    }
}

fn decay_outcome(table: &DecayTable, out: &mut OutputDir) -> Result<Outcome> {
    let rows = table
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt_f64(r.error), r.mode_error.map(fmt_f64).unwrap_or_default()]);
    out.write_csv("table.csv", &["N", "error", "mode_error"], rows)?;
    let summary = json!({
        "rows": table.rows.iter().map(|r| json!({
            "N": r.n,
            "error": num(r.error),
            "mode_error": r.mode_error.map(num).unwrap_or(Value::Null),
        })).collect::<Vec<_>>(),
        "fit": fit_json(&table.fit),
        "mode_fit": fit_json(&table.mode_fit),
        "strictly_decreasing": table.strictly_decreasing(),
    });
    let mut lines: Vec<String> = table
        .rows
        .iter()
        .map(|r| match r.mode_error {
            Some(m) => format!("N = {:4}: error {:.4e}, mode error {:.4e}", r.n, r.error, m),
            None => format!("N = {:4}: error {:.4e}", r.n, r.error),
        })
        .collect();
    if let Some(f) = &table.fit {
        lines.push(format!("fitted exponent {:.3} (R² = {:.3})", f.exponent(), f.r2));
    }
    Ok(Outcome { summary, lines })
}

fn run_approx(c: &ApproxConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let u0 = c.initial.build(c.initial.band().max(1), seed, 0, "experiment.initial")?;
    let p = ApproxParams {
        n_list: c.n_list.clone(),
        t: c.t,
        s: c.s,
        k: c.k,
        dt: c.dt,
        samples: c.samples,
        truncation: match c.truncation {
            TruncationConfig::Smooth => Truncation::Smooth,
            TruncationConfig::Sharp => Truncation::Sharp,
        },
    };
    p.validate(&u0).map_err(core)?;
    let rows = p
        .n_list
        .par_iter()
        .map(|&n| approx_bkdv_row(&u0, n, &p, c.k0))
        .collect::<kdv_core::Result<Vec<_>>>()
        .map_err(core)?;
    decay_outcome(&DecayTable::from_rows(rows), out)
}

fn run_perturb(c: &PerturbConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let u0 = c.initial.build(c.initial.band().max(1), seed, 0, "experiment.initial")?;
    let p = PerturbParams {
        n_list: c.n_list.clone(),
        t: c.t,
        s: c.s,
        dt: c.dt,
        samples: c.samples,
        frequency_factor: c.frequency_factor,
        amplitude: c.amplitude,
        margin: c.margin,
    };
    p.validate(&u0).map_err(core)?;
    let rows = p
        .n_list
        .par_iter()
        .map(|&n| perturb_high_row(&u0, n, &p, c.k0))
        .collect::<kdv_core::Result<Vec<_>>>()
        .map_err(core)?;
    decay_outcome(&DecayTable::from_rows(rows), out)
}

/// One sample of the Miura suite.
struct MiuraRow {
    norm: f64,
    roundtrip: f64,
    lambda_residual: f64,
    min_phi: f64,
    inverse_residual: f64,
    composition: f64,
}

fn miura_row(v: &FourierField, f: &FourierField, tol: f64) -> kdv_core::Result<MiuraRow> {
    let inv = miura_inverse(&miura_forward(v), &MiuraOptions { tol, ..Default::default() })?;
    let roundtrip = sobolev_norm(&(&inv.v - &v.with_band(inv.v.k_max())), 0.5);
    let p0 = product(v, v, 0).mean;
    // M′(v)(M′(v)⁻¹f) = f, with the derivative inverse at 4× oversampling.
    let g = miura_derivative_inverse(v, f, 8 * v.k_max())?;
    let back = miura_derivative(v, &g);
    let composition = sobolev_norm(&(&back - &f.with_band(back.k_max())), -0.5);
    Ok(MiuraRow {
        norm: sobolev_norm(v, 0.5),
        roundtrip,
        lambda_residual: (inv.ground.lambda1 + p0).abs(),
        min_phi: inv.ground.min_phi(),
        inverse_residual: inv.residual,
        composition,
    })
}

fn run_miura(c: &MiuraConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let mut rng = rng_for(seed, 0);
    let draws: Vec<(FourierField, FourierField)> = (0..c.count)
        .map(|_| {
            let norm = c.max_norm * (1.0 - rng.random::<f64>());
            let v = random_field(c.k, 0.5, norm, c.decay, &mut rng);
            let f = random_field(c.k, -0.5, 1.0, c.decay, &mut rng);
            (v, f)
        })
        .collect();
    let rows =
        draws.par_iter().map(|(v, f)| miura_row(v, f, c.tol)).collect::<kdv_core::Result<Vec<_>>>().map_err(core)?;
    out.write_csv(
        "miura.csv",
        &["index", "h_half_norm", "roundtrip", "lambda_residual", "min_phi", "inverse_residual", "composition"],
        rows.iter().enumerate().map(|(i, r)| {
            vec![
                i.to_string(),
                fmt_f64(r.norm),
                fmt_f64(r.roundtrip),
                fmt_f64(r.lambda_residual),
                fmt_f64(r.min_phi),
                fmt_f64(r.inverse_residual),
                fmt_f64(r.composition),
            ]
        }),
    )?;
    let worst = |g: fn(&MiuraRow) -> f64| rows.iter().map(g).fold(0.0, f64::max);
    let min_phi = rows.iter().map(|r| r.min_phi).fold(f64::INFINITY, f64::min);
    let summary = json!({
        "count": rows.len(),
        "max_roundtrip": num(worst(|r| r.roundtrip)),
        "max_lambda_residual": num(worst(|r| r.lambda_residual)),
        "min_phi": num(min_phi),
        "max_composition": num(worst(|r| r.composition)),
    });
    let lines = vec![
        format!("{} samples: worst roundtrip {:.3e}", rows.len(), worst(|r| r.roundtrip)),
        format!("worst |λ₁ + P₀(v²)| {:.3e}, min φ₁ {min_phi:.4}", worst(|r| r.lambda_residual)),
        format!("worst composition residual {:.3e}", worst(|r| r.composition)),
    ];
    Ok(Outcome { summary, lines })
}

/// Runs both sides of an intertwining identity and returns `(lhs, rhs)` at `T`.
pub fn intertwining_pair(
    variant: IntertwiningVariant,
    u0: &FourierField,
    t: f64,
    k: usize,
    n: usize,
    dt: f64,
) -> kdv_core::Result<(FourierField, FourierField)> {
    let opts = EvolveOptions::new(dt);
    match variant {
        IntertwiningVariant::Miura => {
            let sv = evolve(&FlowSpec::MKdV, &u0.with_band(k), t, &opts)?;
            let lhs = miura_forward(sv.final_state()).with_band(2 * k);
            let rhs = evolve(&FlowSpec::KdV, &miura_forward(u0).with_band(2 * k), t, &opts)?;
            Ok((lhs, rhs.final_state().clone()))
        }
        IntertwiningVariant::Bump => {
            let b = bump_b(n)?;
            let u = u0.with_band(k);
            let s = evolve(&FlowSpec::HamTrunc { n, b: b.clone() }, &u, t, &opts)?;
            let lhs = apply_multiplier(&b, s.final_state());
            let rhs = evolve(&FlowSpec::B2KdV { b: b.clone() }, &apply_multiplier(&b, &u), t, &opts)?;
            Ok((lhs, rhs.final_state().clone()))
        }
    }
}

fn run_intertwining(c: &IntertwiningConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let u0 = c.initial.build(c.k, seed, 0, "experiment.initial")?;
    let (lhs, rhs) = intertwining_pair(c.variant, &u0, c.t, c.k, c.n, c.dt).map_err(core)?;
    let diff = &lhs - &rhs;
    out.write_field("lhs.json", &lhs)?;
    out.write_field("rhs.json", &rhs)?;
    let summary = json!({
        "max_abs_difference": num(diff.max_abs()),
        "h_minus_half_difference": num(sobolev_norm(&diff, -0.5)),
        "scale": num(rhs.max_abs()),
    });
    let lines = vec![format!("max |lhs − rhs| = {:.3e} (H^-1/2: {:.3e})", diff.max_abs(), sobolev_norm(&diff, -0.5))];
    Ok(Outcome { summary, lines })
}

fn run_symplectic(c: &SymplecticConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let flow = c.flow.to_flow("experiment.flow")?;
    let u0 = c.initial.build(c.n, seed, 0, "experiment.initial")?;
    let residual = symplecticity_test(&flow, &u0, c.t, c.n, c.dt).map_err(core)?;
    let gradient = if c.gradient_trials > 0 && conserved_hamiltonian(&flow, &u0).is_some() {
        Some(omega_gradient_check(&flow, &u0, c.gradient_trials, seed).map_err(core)?)
    } else {
        None
    };
    out.write_csv(
        "symplectic.csv",
        &["flow", "N", "T", "symplecticity_residual", "omega_gradient_residual"],
        [vec![
            flow.name().to_string(),
            c.n.to_string(),
            fmt_f64(c.t),
            fmt_f64(residual),
            gradient.map(fmt_f64).unwrap_or_default(),
        ]],
    )?;
    let summary = json!({
        "flow": flow.name(),
        "symplecticity_residual": num(residual),
        "omega_gradient_residual": gradient.map(num).unwrap_or(Value::Null),
    });
    let mut lines = vec![format!("{}: ‖DᵀJD − J‖ = {residual:.3e}", flow.name())];
    if let Some(g) = gradient {
        lines.push(format!("ω-gradient residual {g:.3e}"));
    }
    Ok(Outcome { summary, lines })
}

fn run_nonsqueeze(c: &NonsqueezeConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let flow = c.flow.to_flow("experiment.flow")?;
    let u_star = match &c.center {
        Some(d) => d.build(c.n, seed, 0, "experiment.center")?,
        None => FourierField::zeros(c.n),
    };
    let cyl = CylinderSpec { k0: c.k0, z: C64::new(c.z[0], c.z[1]), r: c.r };
    let r = nonsqueeze_probe(&flow, &u_star, c.radius, &cyl, c.t, c.samples, c.dt, seed).map_err(core)?;
    out.write_csv(
        "disk_points.csv",
        &["index", "x", "y"],
        r.disk_points.iter().enumerate().map(|(i, p)| vec![i.to_string(), fmt_f64(p.0), fmt_f64(p.1)]),
    )?;
    let report = json!({
        "r_hat": num(r.r_hat),
        "R": num(r.radius),
        "ratio": num(r.ratio),
        "circle_center": [num(r.circle.center.0), num(r.circle.center.1)],
        "witness_index": r.witness,
        "witness_direction": r.directions[r.witness].iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "witness_distance": num(r.witness_distance),
        "escapes_cylinder": r.escapes,
        "wider_than_cylinder": r.wider_than_cylinder,
        "per_sample_disk_points": r.disk_points.iter().map(|p| json!([num(p.0), num(p.1)])).collect::<Vec<_>>(),
    });
    out.write_json("report.json", &report)?;
    let summary = json!({
        "r_hat": num(r.r_hat),
        "R": num(r.radius),
        "ratio": num(r.ratio),
        "witness_index": r.witness,
        "escapes_cylinder": r.escapes,
    });
    let lines = vec![
        format!("r_hat = {:.6}, R = {}, ratio {:.4}", r.r_hat, r.radius, r.ratio),
        format!(
            "witness sample {} at distance {:.4} from the cylinder axis ({})",
            r.witness,
            r.witness_distance,
            if r.escapes { "outside" } else { "inside" }
        ),
    ];
    Ok(Outcome { summary, lines })
}

fn lemma_name(l: Lemma) -> &'static str {
    match l {
        Lemma::M3Bound => "M3",
        Lemma::M4Bound => "M4",
        Lemma::M5Bound => "M5",
        Lemma::TestLemma => "test",
    }
}

fn run_imethod(c: &ImethodConfig, seed: u64, out: &mut OutputDir, core: CoreErr) -> Result<Outcome> {
    let flow = FlowSpec::BKdV { b: bump_b(c.n).map_err(core)? };
    let u0 = c.initial.build(c.k, seed, 0, "experiment.initial")?;
    let m = IMultiplier::new(c.a, c.s).map_err(core)?;
    let b = flow_multiplier(&flow, c.k).map_err(core)?;
    let opts = EvolveOptions::new(c.dt).with_uniform_samples(c.t, c.samples).with_energies(EnergyParams {
        m,
        b,
        derivatives: true,
    });
    let tr = evolve(&flow, &u0, c.t, &opts).map_err(core)?;
    out.write_trajectory("trajectory.csv", &tr)?;
    out.write_json("ledger.json", &ledger_json(&tr))?;
    let law = differentiation_law_check(&tr, &flow, m).map_err(core)?;
    out.write_csv(
        "law.csv",
        &["time", "step", "rel_E2", "rel_E3", "rel_E4"],
        law.iter().map(|r| {
            vec![
                fmt_f64(r.time),
                fmt_f64(r.step),
                fmt_f64(r.relative[0]),
                fmt_f64(r.relative[1]),
                fmt_f64(r.relative[2]),
            ]
        }),
    )?;
    let worst: [f64; 3] = std::array::from_fn(|j| law.iter().map(|r| r.relative[j]).fold(0.0, f64::max));
    let mut summary = json!({
        "law_max_relative": [num(worst[0]), num(worst[1]), num(worst[2])],
        "law_rows": law.len(),
    });
    let mut lines = vec![format!(
        "differentiation law, worst relative residuals: E2 {:.2e}, E3 {:.2e}, E4 {:.2e}",
        worst[0], worst[1], worst[2]
    )];
    if let Some(bc) = &c.bounds {
        let lemmas = [Lemma::M3Bound, Lemma::M4Bound, Lemma::M5Bound, Lemma::TestLemma];
        let reports = lemmas
            .par_iter()
            .enumerate()
            .map(|(i, &l)| bound_sampler(l, bc.trials, c.a, bc.n, c.s, seed.wrapping_add(i as u64)))
            .collect::<kdv_core::Result<Vec<_>>>()
            .map_err(core)?;
        out.write_csv(
            "bounds.csv",
            &["lemma", "trials", "sampled_max", "max_ratio", "min_ratio", "vanishing_checked", "vanishing_violations"],
            reports.iter().map(|r| {
                vec![
                    lemma_name(r.lemma).to_string(),
                    r.trials.to_string(),
                    fmt_f64(r.sampled_max),
                    fmt_f64(r.max_ratio),
                    fmt_f64(r.min_ratio),
                    r.vanishing_checked.to_string(),
                    r.vanishing_violations.to_string(),
                ]
            }),
        )?;
        summary["bounds"] = reports
            .iter()
            .map(|r| {
                json!({
                    "lemma": lemma_name(r.lemma),
                    "max_ratio": num(r.max_ratio),
                    "min_ratio": num(r.min_ratio),
                    "witness": r.witness.iter().map(|&x| num(x)).collect::<Vec<_>>(),
                    "vanishing_violations": r.vanishing_violations,
                })
            })
            .collect();
        for r in &reports {
            lines.push(format!(
                "{:>4}: max ratio {:.4}, min ratio {:.4}, vanishing violations {}/{}",
                lemma_name(r.lemma),
                r.max_ratio,
                r.min_ratio,
                r.vanishing_violations,
                r.vanishing_checked
            ));
        }
    }
    Ok(Outcome { summary, lines })
}

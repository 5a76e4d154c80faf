//! Scenario files: one JSON document per run, versioned by `schema_version`.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "counterexample",
//!   "seed": 1,
//!   "experiment": { "kind": "counterexample", "sigma": 0.05, "n": 32 }
//! }
//! ```
//!
//! Omitted experiment parameters take the defaults of the corresponding
//! `*Config` type. Every validation error carries the dotted path of the
//! offending entry.

use std::fs;
use std::path::{Path, PathBuf};

use kdv_core::fourier::{bump_b, sobolev_norm};
use kdv_core::{FlowSpec, FourierField, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{read_field, FieldJson};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest band accepted for any run.
pub const MAX_BAND: usize = 256;
/// Largest band when the quartic energy ledger is enabled.
pub const MAX_ENERGY_BAND: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Evolve(EvolveConfig),
    Counterexample(CounterexampleConfig),
    ApproxBkdv(ApproxConfig),
    PerturbHigh(PerturbConfig),
    MiuraRoundtrip(MiuraConfig),
    Intertwining(IntertwiningConfig),
    Symplecticity(SymplecticConfig),
    Nonsqueeze(NonsqueezeConfig),
    ImethodLedger(ImethodConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Evolve(_) => "evolve",
            Experiment::Counterexample(_) => "counterexample",
            Experiment::ApproxBkdv(_) => "approx_bkdv",
            Experiment::PerturbHigh(_) => "perturb_high",
            Experiment::MiuraRoundtrip(_) => "miura_roundtrip",
            Experiment::Intertwining(_) => "intertwining",
            Experiment::Symplecticity(_) => "symplecticity",
            Experiment::Nonsqueeze(_) => "nonsqueeze",
            Experiment::ImethodLedger(_) => "imethod_ledger",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowConfig {
    Airy,
    Kdv,
    Pkdv { n: usize },
    Bkdv { n: usize },
    B2kdv { n: usize },
    Hamtrunc { n: usize },
    Mkdv,
}

impl FlowConfig {
    pub fn to_flow(&self, field: &str) -> Result<FlowSpec> {
        let bump = |n: usize| bump_b(n).map_err(|e| LabError::config(format!("{field}.n"), e.to_string()));
        Ok(match *self {
            FlowConfig::Airy => FlowSpec::Airy,
            FlowConfig::Kdv => FlowSpec::KdV,
            FlowConfig::Pkdv { n } => {
                if n == 0 {
                    return Err(LabError::config(format!("{field}.n"), "must be positive"));
                }
                FlowSpec::PKdV { n }
            }
            FlowConfig::Bkdv { n } => FlowSpec::BKdV { b: bump(n)? },
            FlowConfig::B2kdv { n } => FlowSpec::B2KdV { b: bump(n)? },
            FlowConfig::Hamtrunc { n } => FlowSpec::HamTrunc { n, b: bump(n)? },
            FlowConfig::Mkdv => FlowSpec::MKdV,
        })
    }

    /// Truncation parameter, if the flow has one.
    pub fn n(&self) -> Option<usize> {
        match *self {
            FlowConfig::Pkdv { n } | FlowConfig::Bkdv { n } | FlowConfig::B2kdv { n } | FlowConfig::Hamtrunc { n } => {
                Some(n)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: usize,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Initial data. Fields are extended (or truncated) to the band of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Explicit coefficients `û(k)`, `k ≥ 1`.
    Modes { modes: Vec<Mode> },
    /// `û(j) = amp·j^{−power}·e^{i·phase·j}/2` for `j = 1..=k`.
    Power {
        k: usize,
        amp: f64,
        power: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Random coefficients `j^{−decay}·(uniform square)` rescaled to `‖u‖_{H^s} = norm`,
    /// drawn from the scenario seed.
    Random {
        k: usize,
        s: f64,
        norm: f64,
        #[serde(default)]
        decay: f64,
    },
    /// A field JSON file; resolved relative to the scenario file and inlined on load.
    File { path: PathBuf },
    /// Inline field JSON.
    Field {
        #[serde(rename = "K")]
        k: usize,
        coeffs: Vec<[f64; 2]>,
    },
}

impl InitialData {
    pub fn cosines(terms: &[(usize, f64)]) -> Self {
        InitialData::Modes { modes: terms.iter().map(|&(k, a)| Mode { k, re: a / 2.0, im: 0.0 }).collect() }
    }

    /// Largest frequency carried by the data.
    pub fn band(&self) -> usize {
        match self {
            InitialData::Modes { modes } => modes.iter().map(|m| m.k).max().unwrap_or(0),
            InitialData::Power { k, .. } | InitialData::Random { k, .. } | InitialData::Field { k, .. } => *k,
            InitialData::File { .. } => 0,
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match self {
            InitialData::Modes { modes } => {
                for (i, m) in modes.iter().enumerate() {
                    if m.k == 0 {
                        return Err(LabError::config(format!("{field}.modes[{i}].k"), "frequencies start at 1"));
                    }
                    if !m.re.is_finite() || !m.im.is_finite() {
                        return Err(LabError::config(format!("{field}.modes[{i}]"), "coefficients must be finite"));
                    }
                }
            }
            InitialData::Power { k, amp, power, phase } => {
                check_band(&format!("{field}.k"), *k)?;
                finite(&format!("{field}.amp"), *amp)?;
                finite(&format!("{field}.power"), *power)?;
                finite(&format!("{field}.phase"), *phase)?;
            }
            InitialData::Random { k, s, norm, decay } => {
                check_band(&format!("{field}.k"), *k)?;
                finite(&format!("{field}.s"), *s)?;
                finite(&format!("{field}.decay"), *decay)?;
                if !norm.is_finite() || *norm < 0.0 {
                    return Err(LabError::config(format!("{field}.norm"), "must be finite and nonnegative"));
                }
            }
            InitialData::File { .. } => {}
            InitialData::Field { k, coeffs } => {
                FieldJson { k: *k, coeffs: coeffs.clone() }.to_field(field)?;
            }
        }
        Ok(())
    }

    /// Materializes the data in band `k_max`. `stream` separates the random
    /// streams of different data slots of one scenario.
    pub fn build(&self, k_max: usize, seed: u64, stream: u64, field: &str) -> Result<FourierField> {
        let u = match self {
            InitialData::Modes { modes } => {
                let top = modes.iter().map(|m| m.k).max().unwrap_or(0);
                let mut u = FourierField::zeros(top);
                for m in modes {
                    u.set(m.k, u.get(m.k as i64) + C64::new(m.re, m.im));
                }
                u
            }
            InitialData::Power { k, amp, power, phase } => {
                let coeffs = (1..=*k)
                    .map(|j| {
                        let j = j as f64;
                        C64::from_polar(amp * j.powf(-power) / 2.0, phase * j)
                    })
                    .collect();
                FourierField::from_coeffs(coeffs).map_err(|e| LabError::config(field, e.to_string()))?
            }
            InitialData::Random { k, s, norm, decay } => {
                random_field(*k, *s, *norm, *decay, &mut rng_for(seed, stream))
            }
            InitialData::File { path } => read_field(path)?,
            InitialData::Field { k, coeffs } => FieldJson { k: *k, coeffs: coeffs.clone() }.to_field(field)?,
        };
        if u.support_max() > k_max {
            return Err(LabError::config(
                field,
                format!("data reaches frequency {} above the run band {k_max}", u.support_max()),
            ));
        }
        Ok(u.with_band(k_max))
    }

    /// Replaces `File` by the inline field it names, resolving relative paths against `base`.
    fn inline(&mut self, base: &Path) -> Result<()> {
        if let InitialData::File { path } = self {
            let full = if path.is_relative() { base.join(&*path) } else { path.clone() };
            let fj = FieldJson::from(&read_field(&full)?);
            *self = InitialData::Field { k: fj.k, coeffs: fj.coeffs };
        }
        Ok(())
    }
}

/// Seeded generator for data slot `stream`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random field in band `k` with `‖u‖_{H^s} = norm` (zero if `norm = 0`).
pub fn random_field(k: usize, s: f64, norm: f64, decay: f64, rng: &mut ChaCha8Rng) -> FourierField {
    let coeffs: Vec<C64> = (1..=k)
        .map(|j| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (j as f64).powf(-decay))
        .collect();
    let u = FourierField::from_coeffs(coeffs).expect("finite draws");
    let size = sobolev_norm(&u, s);
    if size == 0.0 {
        u
    } else {
        u.scale(norm / size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// Threshold `A` of the smoothing multiplier.
    pub a: f64,
    pub s: f64,
    /// Also record `Λ₃(M₃), Λ₄(M₄), Λ₅(M₅)`.
    #[serde(default)]
    pub derivatives: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub flow: FlowConfig,
    pub initial: InitialData,
    pub k: usize,
    pub t: f64,
    /// Defaults to `min(1e−3, 50/K³)`.
    pub dt: Option<f64>,
    /// Number of sampling intervals on `[0, T]`.
    pub samples: usize,
    pub monitor_s: f64,
    pub blowup_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergyConfig>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            flow: FlowConfig::Kdv,
            initial: InitialData::Modes {
                modes: vec![Mode { k: 1, re: 0.25, im: 0.0 }, Mode { k: 2, re: 0.0, im: -0.125 }],
            },
            k: 32,
            t: 1.0,
            dt: None,
            samples: 10,
            monitor_s: 0.0,
            blowup_bound: 1e6,
            energies: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub sigma: f64,
    pub k0: usize,
    pub n: usize,
    pub t: f64,
    pub k: usize,
    pub dt: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        let p = kdv_core::experiments::CounterexampleParams::default();
        CounterexampleConfig { sigma: p.sigma, k0: p.k0, n: p.n, t: p.t, k: p.k, dt: p.dt }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationConfig {
    Smooth,
    Sharp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxConfig {
    pub initial: InitialData,
    pub n_list: Vec<usize>,
    pub t: f64,
    pub s: f64,
    pub k: usize,
    pub dt: f64,
    pub samples: usize,
    pub truncation: TruncationConfig,
    /// Mode whose individual difference is also tracked.
    pub k0: Option<usize>,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            initial: InitialData::Power { k: 16, amp: 1.0, power: 1.0, phase: 1.3 },
            n_list: vec![16, 32, 64],
            t: 0.5,
            s: -0.5,
            k: 160,
            dt: 1e-4,
            samples: 32,
            truncation: TruncationConfig::Smooth,
            k0: Some(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub initial: InitialData,
    pub n_list: Vec<usize>,
    pub t: f64,
    pub s: f64,
    pub dt: f64,
    pub samples: usize,
    pub frequency_factor: usize,
    /// `Ḣ^{−1/2}` norm of the perturbation.
    pub amplitude: f64,
    pub margin: usize,
    pub k0: Option<usize>,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            initial: InitialData::Modes {
                modes: vec![Mode { k: 1, re: 0.25, im: 0.0 }, Mode { k: 3, re: 0.0, im: -0.125 }],
            },
            n_list: vec![8, 16, 32],
            t: 0.25,
            s: -0.5,
            dt: 1e-3,
            samples: 16,
            frequency_factor: 4,
            amplitude: 0.25,
            margin: 8,
            k0: Some(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiuraConfig {
    /// Number of random `v`.
    pub count: usize,
    /// Band of each `v`.
    pub k: usize,
    /// `‖v‖_{H^{1/2}}` is drawn uniformly from `(0, max_norm]`.
    pub max_norm: f64,
    pub decay: f64,
    pub tol: f64,
}

impl Default for MiuraConfig {
    fn default() -> Self {
        MiuraConfig { count: 100, k: 8, max_norm: 1.0, decay: 1.0, tol: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntertwiningVariant {
    /// `M∘S_mKdV` against `S_KdV∘M`.
    Miura,
    /// `B∘S_HamTrunc` against `S_{B²KdV}∘B`.
    Bump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntertwiningConfig {
    pub variant: IntertwiningVariant,
    pub initial: InitialData,
    pub t: f64,
    /// Band of the first flow; the Miura image runs in band `2K`.
    pub k: usize,
    pub dt: f64,
    /// Truncation for the `bump` variant.
    pub n: usize,
}

impl Default for IntertwiningConfig {
    fn default() -> Self {
        IntertwiningConfig {
            variant: IntertwiningVariant::Miura,
            initial: InitialData::Random { k: 4, s: 0.5, norm: 0.5, decay: 1.0 },
            t: 0.5,
            k: 48,
            dt: 5e-4,
            n: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymplecticConfig {
    pub flow: FlowConfig,
    pub initial: InitialData,
    /// Chart dimension is `2N`; the data band is `N` as well.
    pub n: usize,
    pub t: f64,
    pub dt: f64,
    /// Random directions for the ω-gradient check (0 disables it).
    pub gradient_trials: usize,
}

impl Default for SymplecticConfig {
    fn default() -> Self {
        SymplecticConfig {
            flow: FlowConfig::Hamtrunc { n: 8 },
            initial: InitialData::Random { k: 4, s: 0.0, norm: 0.1, decay: 0.0 },
            n: 8,
            t: 0.5,
            dt: 1e-3,
            gradient_trials: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonsqueezeConfig {
    pub flow: FlowConfig,
    /// Ball centre `u*`; zero when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<InitialData>,
    pub n: usize,
    pub radius: f64,
    pub k0: i64,
    /// Cylinder centre `z` as `[re, im]` of `û(k₀)`.
    pub z: [f64; 2],
    pub r: f64,
    pub t: f64,
    pub samples: usize,
    pub dt: f64,
}

impl Default for NonsqueezeConfig {
    fn default() -> Self {
        NonsqueezeConfig {
            flow: FlowConfig::Hamtrunc { n: 16 },
            center: None,
            n: 16,
            radius: 0.5,
            k0: 1,
            z: [0.0, 0.0],
            r: 0.4,
            t: 1.0,
            samples: 256,
            dt: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub trials: usize,
    /// Bound-lemma sampling happens at this `N`.
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImethodConfig {
    /// Smooth truncation parameter of the `BKdV` flow.
    pub n: usize,
    pub initial: InitialData,
    pub a: f64,
    pub s: f64,
    pub k: usize,
    pub t: f64,
    pub dt: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { trials: 10_000, n: 64 }
    }
}

impl Default for ImethodConfig {
    fn default() -> Self {
        ImethodConfig {
            n: 64,
            initial: InitialData::Random { k: 8, s: 0.0, norm: 0.3, decay: 1.0 },
            a: 4.0,
            s: -0.5,
            k: 16,
            t: 4e-5,
            dt: 1e-5,
            samples: 4,
            bounds: None,
        }
    }
}

fn finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(LabError::config(field, "must be finite"))
    }
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::config(field, format!("must be positive (got {x})")))
    }
}

fn nonzero(field: &str, n: usize) -> Result<()> {
    if n > 0 {
        Ok(())
    } else {
        Err(LabError::config(field, "must be positive"))
    }
}

fn check_band(field: &str, k: usize) -> Result<()> {
    if k == 0 || k > MAX_BAND {
        return Err(LabError::config(field, format!("band must lie in 1..={MAX_BAND} (got {k})")));
    }
    Ok(())
}

fn check_list(field: &str, list: &[usize]) -> Result<()> {
    if list.is_empty() {
        return Err(LabError::config(field, "must not be empty"));
    }
    if let Some(i) = list.iter().position(|&n| n < 2 || n % 2 != 0) {
        return Err(LabError::config(format!("{field}[{i}]"), "entries must be even and at least 2"));
    }
    Ok(())
}

fn data_fits(field: &str, data: &InitialData, k: usize) -> Result<()> {
    data.validate(field)?;
    if data.band() > k {
        return Err(LabError::config(field, format!("data band {} exceeds run band {k}", data.band())));
    }
    Ok(())
}

/// Scenario with the experiment left untyped. The experiment is dispatched
/// on `kind` by hand because serde's tagged enums lose the error path.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    experiment: serde_json::Value,
}

fn tracked<'de, T: Deserialize<'de>>(de: impl serde::Deserializer<'de>, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = match (prefix, path.as_str()) {
            ("", ".") => "scenario".to_string(),
            (p, ".") => p.to_string(),
            ("", q) => q.to_string(),
            (p, q) => format!("{p}.{q}"),
        };
        LabError::config(field, e.into_inner().to_string())
    })
}

fn parse_experiment(v: serde_json::Value) -> Result<Experiment> {
    let serde_json::Value::Object(mut map) = v else {
        return Err(LabError::config("experiment", "must be an object"));
    };
    let kind = match map.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return Err(LabError::config("experiment.kind", "must be a string")),
        None => return Err(LabError::config("experiment.kind", "missing")),
    };
    let rest = serde_json::Value::Object(map);
    let p = "experiment";
    Ok(match kind.as_str() {
        "evolve" => Experiment::Evolve(tracked(rest, p)?),
        "counterexample" => Experiment::Counterexample(tracked(rest, p)?),
        "approx_bkdv" => Experiment::ApproxBkdv(tracked(rest, p)?),
        "perturb_high" => Experiment::PerturbHigh(tracked(rest, p)?),
        "miura_roundtrip" => Experiment::MiuraRoundtrip(tracked(rest, p)?),
        "intertwining" => Experiment::Intertwining(tracked(rest, p)?),
        "symplecticity" => Experiment::Symplecticity(tracked(rest, p)?),
        "nonsqueeze" => Experiment::Nonsqueeze(tracked(rest, p)?),
        "imethod_ledger" => Experiment::ImethodLedger(tracked(rest, p)?),
        other => return Err(LabError::config("experiment.kind", format!("unknown experiment kind `{other}`"))),
    })
}

impl Scenario {
    /// Reads, parses and validates a scenario. Data files are inlined.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let mut sc = Scenario::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        sc.inline_files(base)?;
        sc.validate()?;
        Ok(sc)
    }

    /// Parses JSON, reporting the path of the first offending entry.
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawScenario = tracked(&mut de, "")?;
        Ok(Scenario {
            schema_version: raw.schema_version,
            name: raw.name,
            seed: raw.seed,
            output: raw.output,
            experiment: parse_experiment(raw.experiment)?,
        })
    }

    /// Replaces every `file` data entry by its inline field.
    pub fn inline_files(&mut self, base: &Path) -> Result<()> {
        let slots: Vec<&mut InitialData> = match &mut self.experiment {
            Experiment::Evolve(c) => vec![&mut c.initial],
            Experiment::ApproxBkdv(c) => vec![&mut c.initial],
            Experiment::PerturbHigh(c) => vec![&mut c.initial],
            Experiment::Intertwining(c) => vec![&mut c.initial],
            Experiment::Symplecticity(c) => vec![&mut c.initial],
            Experiment::Nonsqueeze(c) => c.center.iter_mut().collect(),
            Experiment::ImethodLedger(c) => vec![&mut c.initial],
            Experiment::Counterexample(_) | Experiment::MiuraRoundtrip(_) => vec![],
        };
        for slot in slots {
            slot.inline(base)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(LabError::config("name", "must not be empty"));
        }
        match &self.experiment {
            Experiment::Evolve(c) => {
                check_band("experiment.k", c.k)?;
                positive("experiment.t", c.t.abs())?;
                if let Some(dt) = c.dt {
                    positive("experiment.dt", dt)?;
                }
                nonzero("experiment.samples", c.samples)?;
                positive("experiment.blowup_bound", c.blowup_bound)?;
                finite("experiment.monitor_s", c.monitor_s)?;
                let flow = c.flow.to_flow("experiment.flow")?;
                if let Some(n) = c.flow.n() {
                    if n > c.k {
                        return Err(LabError::config("experiment.flow.n", format!("N = {n} exceeds band K = {}", c.k)));
                    }
                }
                data_fits("experiment.initial", &c.initial, c.k)?;
                if let Some(e) = &c.energies {
                    if c.k > MAX_ENERGY_BAND {
                        return Err(LabError::config(
                            "experiment.k",
                            format!("energy ledger needs K ≤ {MAX_ENERGY_BAND} (got {})", c.k),
                        ));
                    }
                    kdv_core::imethod::IMultiplier::new(e.a, e.s)
                        .map_err(|err| LabError::config("experiment.energies", err.to_string()))?;
                    kdv_core::imethod::flow_multiplier(&flow, c.k)
                        .map_err(|err| LabError::config("experiment.flow", err.to_string()))?;
                }
            }
            Experiment::Counterexample(c) => {
                positive("experiment.sigma", c.sigma)?;
                check_band("experiment.k", c.k)?;
                nonzero("experiment.k0", c.k0)?;
                positive("experiment.t", c.t)?;
                positive("experiment.dt", c.dt)?;
            }
            Experiment::ApproxBkdv(c) => {
                check_band("experiment.k", c.k)?;
                check_list("experiment.n_list", &c.n_list)?;
                positive("experiment.t", c.t)?;
                positive("experiment.dt", c.dt)?;
                nonzero("experiment.samples", c.samples)?;
                if c.s < -0.5 || !c.s.is_finite() {
                    return Err(LabError::config("experiment.s", "need s ≥ -1/2"));
                }
                if let Some(i) = c.n_list.iter().position(|&n| n > c.k) {
                    return Err(LabError::config(format!("experiment.n_list[{i}]"), "N must not exceed the band K"));
                }
                data_fits("experiment.initial", &c.initial, *c.n_list.iter().min().expect("nonempty"))?;
                if let Some(k0) = c.k0 {
                    nonzero("experiment.k0", k0)?;
                }
            }
            Experiment::PerturbHigh(c) => {
                check_list("experiment.n_list", &c.n_list)?;
                positive("experiment.t", c.t)?;
                positive("experiment.dt", c.dt)?;
                nonzero("experiment.samples", c.samples)?;
                finite("experiment.s", c.s)?;
                if c.frequency_factor <= 2 {
                    return Err(LabError::config("experiment.frequency_factor", "must exceed 2"));
                }
                if !c.amplitude.is_finite() || c.amplitude < 0.0 {
                    return Err(LabError::config("experiment.amplitude", "must be finite and nonnegative"));
                }
                let top = c.n_list.iter().max().expect("nonempty") * c.frequency_factor + c.margin;
                if top > MAX_BAND {
                    return Err(LabError::config(
                        "experiment.n_list",
                        format!("largest run band {top} exceeds {MAX_BAND}"),
                    ));
                }
                data_fits("experiment.initial", &c.initial, 2 * c.n_list.iter().min().expect("nonempty"))?;
            }
            Experiment::MiuraRoundtrip(c) => {
                nonzero("experiment.count", c.count)?;
                check_band("experiment.k", c.k)?;
                if 4 * c.k > MAX_BAND {
                    return Err(LabError::config("experiment.k", format!("eigenproblem band 4K exceeds {MAX_BAND}")));
                }
                positive("experiment.max_norm", c.max_norm)?;
                finite("experiment.decay", c.decay)?;
                positive("experiment.tol", c.tol)?;
            }
            Experiment::Intertwining(c) => {
                check_band("experiment.k", c.k)?;
                positive("experiment.t", c.t.abs())?;
                positive("experiment.dt", c.dt)?;
                match c.variant {
                    IntertwiningVariant::Miura => {
                        if 2 * c.k > MAX_BAND {
                            return Err(LabError::config(
                                "experiment.k",
                                format!("Miura image band 2K exceeds {MAX_BAND}"),
                            ));
                        }
                    }
                    IntertwiningVariant::Bump => {
                        bump_b(c.n).map_err(|e| LabError::config("experiment.n", e.to_string()))?;
                        if c.n > c.k {
                            return Err(LabError::config("experiment.n", "N must not exceed the band K"));
                        }
                    }
                }
                data_fits("experiment.initial", &c.initial, c.k)?;
            }
            Experiment::Symplecticity(c) => {
                check_band("experiment.n", c.n)?;
                positive("experiment.t", c.t.abs())?;
                positive("experiment.dt", c.dt)?;
                c.flow.to_flow("experiment.flow")?;
                if let Some(n) = c.flow.n() {
                    if n > c.n {
                        return Err(LabError::config("experiment.flow.n", "flow truncation exceeds the chart band"));
                    }
                }
                data_fits("experiment.initial", &c.initial, c.n)?;
            }
            Experiment::Nonsqueeze(c) => {
                check_band("experiment.n", c.n)?;
                positive("experiment.radius", c.radius)?;
                positive("experiment.r", c.r)?;
                positive("experiment.t", c.t.abs())?;
                positive("experiment.dt", c.dt)?;
                finite("experiment.z", c.z[0] + c.z[1])?;
                if c.samples < 16 {
                    return Err(LabError::config("experiment.samples", "need at least 16 samples"));
                }
                if c.k0 == 0 || c.k0.unsigned_abs() as usize > c.n {
                    return Err(LabError::config("experiment.k0", "need 1 ≤ |k0| ≤ N"));
                }
                c.flow.to_flow("experiment.flow")?;
                if let Some(n) = c.flow.n() {
                    if n > c.n {
                        return Err(LabError::config("experiment.flow.n", "flow truncation exceeds the chart band"));
                    }
                }
                if let Some(u) = &c.center {
                    data_fits("experiment.center", u, c.n)?;
                }
            }
            Experiment::ImethodLedger(c) => {
                check_band("experiment.k", c.k)?;
                if c.k > MAX_ENERGY_BAND {
                    return Err(LabError::config(
                        "experiment.k",
                        format!("energy ledger needs K ≤ {MAX_ENERGY_BAND} (got {})", c.k),
                    ));
                }
                bump_b(c.n).map_err(|e| LabError::config("experiment.n", e.to_string()))?;
                kdv_core::imethod::IMultiplier::new(c.a, c.s).map_err(|e| match e {
                    kdv_core::Error::InvalidArgument { name: "A", reason } => LabError::config("experiment.a", reason),
                    kdv_core::Error::InvalidArgument { reason, .. } => LabError::config("experiment.s", reason),
                    other => LabError::config("experiment", other.to_string()),
                })?;
                positive("experiment.t", c.t)?;
                positive("experiment.dt", c.dt)?;
                if c.samples < 2 {
                    return Err(LabError::config("experiment.samples", "need at least 2 sampling intervals"));
                }
                data_fits("experiment.initial", &c.initial, c.k)?;
                if let Some(b) = &c.bounds {
                    nonzero("experiment.bounds.trials", b.trials)?;
                    nonzero("experiment.bounds.n", b.n)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: LabError) -> String {
        match e {
            LabError::Config { field, .. } => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_scenario_takes_defaults() {
        let sc =
            Scenario::parse(r#"{"schema_version": 1, "name": "c", "experiment": {"kind": "counterexample"}}"#).unwrap();
        sc.validate().unwrap();
        assert_eq!(sc.experiment, Experiment::Counterexample(CounterexampleConfig::default()));
    }

    #[test]
    fn negative_sigma_names_the_field() {
        let sc = Scenario::parse(
            r#"{"schema_version": 1, "name": "c", "experiment": {"kind": "counterexample", "sigma": -0.1}}"#,
        )
        .unwrap();
        assert_eq!(field_of(sc.validate().unwrap_err()), "experiment.sigma");
    }

    #[test]
    fn parse_errors_carry_paths() {
        let e = Scenario::parse(
            r#"{"schema_version": 1, "name": "c", "experiment": {"kind": "counterexample", "sigma": "x"}}"#,
        )
        .unwrap_err();
        assert_eq!(field_of(e), "experiment.sigma");
        let e = Scenario::parse(r#"{"schema_version": 1, "name": "c", "experiment": {"kind": "evolve", "bogus": 1}}"#)
            .unwrap_err();
        assert!(field_of(e).starts_with("experiment"));
        let e = Scenario::parse(r#"{"schema_version": 1, "experiment": {"kind": "evolve"}}"#).unwrap_err();
        assert_eq!(field_of(e), "scenario");
        let e = Scenario::parse(
            r#"{"schema_version": 1, "name": "e", "experiment": {"kind": "evolve", "flow": {"type": "pkdv", "m": 3}}}"#,
        )
        .unwrap_err();
        assert_eq!(field_of(e), "experiment.flow");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let sc =
            Scenario::parse(r#"{"schema_version": 7, "name": "c", "experiment": {"kind": "counterexample"}}"#).unwrap();
        assert_eq!(field_of(sc.validate().unwrap_err()), "schema_version");
    }

    #[test]
    fn envelopes_are_enforced() {
        let mut c = EvolveConfig { k: 300, ..Default::default() };
        let sc = |c: EvolveConfig| Scenario {
            schema_version: 1,
            name: "e".into(),
            seed: 0,
            output: None,
            experiment: Experiment::Evolve(c),
        };
        assert_eq!(field_of(sc(c.clone()).validate().unwrap_err()), "experiment.k");
        c.k = 64;
        c.energies = Some(EnergyConfig { a: 4.0, s: -0.5, derivatives: false });
        assert_eq!(field_of(sc(c.clone()).validate().unwrap_err()), "experiment.k");
        c.k = 16;
        c.flow = FlowConfig::Bkdv { n: 16 };
        sc(c.clone()).validate().unwrap();
        c.flow = FlowConfig::Bkdv { n: 7 };
        assert_eq!(field_of(sc(c).validate().unwrap_err()), "experiment.flow.n");
    }

    #[test]
    fn every_default_experiment_validates_and_roundtrips() {
        let all = [
            Experiment::Evolve(Default::default()),
            Experiment::Counterexample(Default::default()),
            Experiment::ApproxBkdv(Default::default()),
            Experiment::PerturbHigh(Default::default()),
            Experiment::MiuraRoundtrip(Default::default()),
            Experiment::Intertwining(Default::default()),
            Experiment::Symplecticity(Default::default()),
            Experiment::Nonsqueeze(Default::default()),
            Experiment::ImethodLedger(ImethodConfig { bounds: Some(Default::default()), ..Default::default() }),
        ];
        for experiment in all {
            let sc = Scenario { schema_version: 1, name: "d".into(), seed: 3, output: None, experiment };
            sc.validate().unwrap_or_else(|e| panic!("{}: {e}", sc.experiment.kind()));
            let text = serde_json::to_string(&sc).unwrap();
            assert_eq!(Scenario::parse(&text).unwrap(), sc);
        }
    }

    #[test]
    fn initial_data_builds() {
        let u = InitialData::cosines(&[(1, 0.5), (3, 0.2)]).build(8, 0, 0, "u").unwrap();
        assert_eq!(u.k_max(), 8);
        assert_eq!(u.get(3), C64::new(0.1, 0.0));
        let r = InitialData::Random { k: 6, s: 0.5, norm: 0.7, decay: 1.0 };
        let a = r.build(6, 9, 0, "u").unwrap();
        assert!((sobolev_norm(&a, 0.5) - 0.7).abs() < 1e-14);
        assert_eq!(a, r.build(6, 9, 0, "u").unwrap());
        assert_ne!(a, r.build(6, 9, 1, "u").unwrap());
        assert_eq!(field_of(r.build(4, 9, 0, "experiment.initial").unwrap_err()), "experiment.initial");
        let p = InitialData::Power { k: 3, amp: 1.0, power: 1.0, phase: 0.0 }.build(3, 0, 0, "u").unwrap();
        assert!((p.get(2).re - 0.25).abs() < 1e-16);
    }
}

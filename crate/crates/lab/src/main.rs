use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdv_lab::config::*;
use kdv_lab::{run_scenario, LabError, Result, Scenario};

/// Periodic KdV experiments: truncated flows, Miura inversion, symplectic
/// probes and modified-energy checks.
#[derive(Parser)]
#[command(name = "lab", version)]
struct Cli {
    /// Seed for all random data (overrides the scenario's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the scenario's `output`, else `lab-out/<name>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
    /// Evolve initial data under one flow and record the invariant ledger.
    Evolve(EvolveArgs),
    /// Sharp-truncation counterexample at one frequency.
    Counterexample(CounterArgs),
    /// Smooth (or sharp) truncation against KdV over a list of N.
    Approx(ApproxArgs),
    /// Low-frequency response to a perturbation at high frequency.
    Perturb(PerturbArgs),
    /// Miura inversion suite, or an intertwining check with `--intertwine`.
    Miura(MiuraArgs),
    /// Jacobian symplecticity and ω-gradient residuals.
    Symplectic(SymplecticArgs),
    /// Image of a ball in one symplectic disk.
    Nonsqueeze(NonsqueezeArgs),
    /// Modified-energy ledger and bound-lemma sampling.
    Imethod(ImethodArgs),
}

#[derive(Args)]
struct FlowArgs {
    /// airy, kdv, pkdv, bkdv, b2kdv, hamtrunc or mkdv.
    #[arg(long)]
    flow: Option<String>,
    /// Truncation parameter of the flow.
    #[arg(long = "flow-n")]
    flow_n: Option<usize>,
}

impl FlowArgs {
    fn resolve(&self, default: FlowConfig) -> Result<FlowConfig> {
        let Some(name) = &self.flow else {
            return match (default.n(), self.flow_n) {
                (Some(_), Some(n)) => with_n(&default, n),
                _ => Ok(default),
            };
        };
        let need_n = || self.flow_n.ok_or_else(|| LabError::config("flow-n", format!("{name} needs --flow-n")));
        Ok(match name.as_str() {
            "airy" => FlowConfig::Airy,
            "kdv" => FlowConfig::Kdv,
            "mkdv" => FlowConfig::Mkdv,
            "pkdv" => FlowConfig::Pkdv { n: need_n()? },
            "bkdv" => FlowConfig::Bkdv { n: need_n()? },
            "b2kdv" => FlowConfig::B2kdv { n: need_n()? },
            "hamtrunc" => FlowConfig::Hamtrunc { n: need_n()? },
            other => return Err(LabError::config("flow", format!("unknown flow `{other}`"))),
        })
    }
}

fn with_n(f: &FlowConfig, n: usize) -> Result<FlowConfig> {
    Ok(match f {
        FlowConfig::Pkdv { .. } => FlowConfig::Pkdv { n },
        FlowConfig::Bkdv { .. } => FlowConfig::Bkdv { n },
        FlowConfig::B2kdv { .. } => FlowConfig::B2kdv { n },
        FlowConfig::Hamtrunc { .. } => FlowConfig::Hamtrunc { n },
        other => other.clone(),
    })
}

fn data(path: &Option<PathBuf>) -> Option<InitialData> {
    path.as_ref().map(|p| InitialData::File { path: p.clone() })
}

macro_rules! set {
    ($target:expr, $($field:ident),+ from $args:expr) => {
        $( if let Some(v) = $args.$field.clone() { $target.$field = v; } )+
    };
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EvolveArgs {
    #[command(flatten)]
    flow: FlowArgs,
    /// Initial data as a field JSON file.
    #[arg(long)]
    u0: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Record E2..E4 with threshold A (requires --s).
    #[arg(long, requires = "s")]
    a: Option<f64>,
    #[arg(long, requires = "a")]
    s: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CounterArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ApproxArgs {
    #[arg(long)]
    u0: Option<PathBuf>,
    /// Comma-separated list of N.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Use the sharp cutoff instead of the smooth bump.
    #[arg(long)]
    sharp: bool,
    #[arg(long)]
    k0: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PerturbArgs {
    #[arg(long)]
    u0: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    frequency_factor: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct MiuraArgs {
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_norm: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    /// Check an intertwining identity instead: `miura` or `bump`.
    #[arg(long)]
    intertwine: Option<String>,
    #[arg(long)]
    u0: Option<PathBuf>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Truncation for `--intertwine bump`.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SymplecticArgs {
    #[command(flatten)]
    flow: FlowArgs,
    #[arg(long)]
    u0: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    gradient_trials: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct NonsqueezeArgs {
    #[command(flatten)]
    flow: FlowArgs,
    /// Ball centre as a field JSON file.
    #[arg(long)]
    center: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    k0: Option<i64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ImethodArgs {
    #[arg(long)]
    u0: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Also sample the bound lemmas with this many trials.
    #[arg(long)]
    bounds: Option<usize>,
}

fn experiment(cmd: Command) -> Result<(String, Experiment)> {
    let named = |e: Experiment| Ok((e.kind().to_string(), e));
    match cmd {
        Command::Run { .. } => unreachable!("handled by the caller"),
        Command::Evolve(a) => {
            let mut c = EvolveConfig { flow: a.flow.resolve(FlowConfig::Kdv)?, ..Default::default() };
            set!(c, k, t, samples from a);
            c.dt = a.dt.or(c.dt);
            if let Some(d) = data(&a.u0) {
                c.initial = d;
            }
            if let (Some(th), Some(s)) = (a.a, a.s) {
                c.energies = Some(EnergyConfig { a: th, s, derivatives: true });
            }
            named(Experiment::Evolve(c))
        }
        Command::Counterexample(a) => {
            let mut c = CounterexampleConfig::default();
            set!(c, sigma, k0, n, t, k, dt from a);
            named(Experiment::Counterexample(c))
        }
        Command::Approx(a) => {
            let mut c = ApproxConfig::default();
            set!(c, n_list, t, s, k, dt, samples from a);
            if a.k0.is_some() {
                c.k0 = a.k0;
            }
            if a.sharp {
                c.truncation = TruncationConfig::Sharp;
            }
            if let Some(d) = data(&a.u0) {
                c.initial = d;
            }
            named(Experiment::ApproxBkdv(c))
        }
        Command::Perturb(a) => {
            let mut c = PerturbConfig::default();
            set!(c, n_list, t, s, dt, samples, frequency_factor, amplitude, margin from a);
            if a.k0.is_some() {
                c.k0 = a.k0;
            }
            if let Some(d) = data(&a.u0) {
                c.initial = d;
            }
            named(Experiment::PerturbHigh(c))
        }
        Command::Miura(a) => match a.intertwine.as_deref() {
            None => {
                let mut c = MiuraConfig::default();
                set!(c, count, k, max_norm, decay from a);
                named(Experiment::MiuraRoundtrip(c))
            }
            Some(v) => {
                let variant = match v {
                    "miura" => IntertwiningVariant::Miura,
                    "bump" => IntertwiningVariant::Bump,
                    other => return Err(LabError::config("intertwine", format!("unknown variant `{other}`"))),
                };
                let mut c = IntertwiningConfig { variant, ..Default::default() };
                set!(c, k, t, dt, n from a);
                if let Some(d) = data(&a.u0) {
                    c.initial = d;
                }
                named(Experiment::Intertwining(c))
            }
        },
        Command::Symplectic(a) => {
            let mut c = SymplecticConfig::default();
            c.flow = a.flow.resolve(c.flow.clone())?;
            set!(c, n, t, dt, gradient_trials from a);
            if let Some(d) = data(&a.u0) {
                c.initial = d;
            }
            named(Experiment::Symplecticity(c))
        }
        Command::Nonsqueeze(a) => {
            let mut c = NonsqueezeConfig::default();
            c.flow = a.flow.resolve(c.flow.clone())?;
            set!(c, n, radius, k0, r, t, samples, dt from a);
            c.center = data(&a.center);
            named(Experiment::Nonsqueeze(c))
        }
        Command::Imethod(a) => {
            let mut c = ImethodConfig::default();
            set!(c, n, a, s, k, t, dt, samples from a);
            if let Some(d) = data(&a.u0) {
                c.initial = d;
            }
            if let Some(trials) = a.bounds {
                c.bounds = Some(BoundsConfig { trials, ..Default::default() });
            }
            named(Experiment::ImethodLedger(c))
        }
    }
}

fn scenario(cli: Cli) -> Result<(Scenario, Option<PathBuf>, bool)> {
    let (quiet, out, seed) = (cli.quiet, cli.out, cli.seed);
    let mut sc = match cli.command {
        Command::Run { config } => Scenario::load(&config)?,
        cmd => {
            let (name, experiment) = experiment(cmd)?;
            let mut sc = Scenario { schema_version: SCHEMA_VERSION, name, seed: 0, output: None, experiment };
            // Data files given as flags are relative to the working directory.
            sc.inline_files(std::path::Path::new("."))?;
            sc
        }
    };
    if let Some(s) = seed {
        sc.seed = s;
    }
    let out = out.or_else(|| sc.output.clone());
    Ok((sc, out, quiet))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = scenario(cli).and_then(|(sc, out, quiet)| {
        let dir = out.unwrap_or_else(|| PathBuf::from("lab-out").join(&sc.name));
        let report = run_scenario(&sc, &dir)?;
        if !quiet {
            println!("{} ({})", sc.name, sc.experiment.kind());
            for line in &report.lines {
                println!("  {line}");
            }
            println!("  artifacts in {}", dir.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

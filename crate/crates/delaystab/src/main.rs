#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use delaystab::commands::{
    self, Example1Args, GridArgs, GrowthArgs, MgSimulation, SweepArgs,
};
use delaystab::output::{create, ensure_dir};
use delaystab::problem::{load_problem, Problem};
use delaystab::CliError;
use delaystab_core::mackeyglass::MgParams;
use delaystab_core::model::InitialCondition;
use delaystab_core::solver::Example1Variant;

#[derive(Parser)]
#[command(name = "delaystab", version, about = "Stability certificates and simulations for scalar delay equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Destabilization by a non-delay term: x' + a(t) x + b x([t]) = 0
    Example1 {
        #[arg(long, default_value_t = 1.8)]
        b: f64,
        #[arg(long, value_enum, default_value_t = Variant::VanishingA)]
        variant: Variant,
        /// Whole number of periods.
        #[arg(long, default_value_t = 20.0)]
        horizon: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        sample_step: f64,
    },
    /// Mackey-Glass model with alpha = 1, beta = 0.5, n = 4, r = 2.7 + 0.3 sin t
    Example2 {
        #[arg(long, default_value_t = 1.0)]
        lag: f64,
        /// Use this equilibrium instead of the solved one (1.5 without a value).
        #[arg(long, num_args = 0..=1, default_missing_value = "1.5")]
        override_k: Option<f64>,
        #[command(flatten)]
        sim: MgSimFlags,
    },
    /// Evaluate a stability criterion on a problem file
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        criterion: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Integrate a problem file and write its trajectory as CSV
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        sample_step: f64,
    },
    /// Largest delay measure certified for a problem file
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Evaluate a criterion, and optionally simulate, over a parameter range
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        parameter: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 25)]
        steps: usize,
        #[arg(long)]
        criterion: Option<String>,
        /// Also report per-period growth factors.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        grid: GridFlags,
        /// Directory for sweep.csv; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mackey-Glass constants, delay bounds and verdicts from a problem file
    Mg {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        lag: Option<f64>,
        #[arg(long)]
        override_k: Option<f64>,
        #[command(flatten)]
        sim: MgSimFlags,
    },
}

#[derive(Args)]
struct GridFlags {
    /// Start of the window for limsup estimates (10% of the horizon by default).
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
}

impl GridFlags {
    fn args(&self) -> GridArgs {
        GridArgs {
            burn_in: self.burn_in,
            grid_step: self.grid_step,
        }
    }
}

#[derive(Args)]
struct MgSimFlags {
    /// Integrate the model and write mackey_glass.csv.
    #[arg(long)]
    simulate: bool,
    /// Constant initial function (1.1 K by default).
    #[arg(long)]
    initial: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    sample_step: f64,
}

impl MgSimFlags {
    fn settings(&self, initial: Option<InitialCondition>, horizon: f64, step: Option<f64>) -> Option<MgSimulation> {
        self.simulate.then(|| MgSimulation {
            initial: self.initial.map(InitialCondition::constant).or(initial),
            horizon: self.horizon.unwrap_or(horizon),
            step: self.step.or(step),
            out: self.out.clone(),
            sample_step: self.sample_step,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    #[value(name = "baseline")]
    Baseline,
    #[value(name = "vanishing_a")]
    VanishingA,
    #[value(name = "positive_a")]
    PositiveA,
}

impl From<Variant> for Example1Variant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Baseline => Example1Variant::Baseline,
            Variant::VanishingA => Example1Variant::VanishingA,
            Variant::PositiveA => Example1Variant::PositiveA,
        }
    }
}

fn load(config: &Path, horizon: Option<f64>, step: Option<f64>) -> Result<Problem, CliError> {
    let mut problem = load_problem(config)?;
    if let Some(h) = horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Input(format!("--horizon must be positive, got {h}")));
        }
        problem.set_horizon(h);
    }
    if let Some(s) = step {
        problem.set_step(s);
    }
    Ok(problem)
}

fn criterion(name: &Option<String>) -> Result<Option<delaystab_core::criteria::CriterionId>, CliError> {
    name.as_deref().map(commands::parse_criterion).transpose()
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("DELAYSTAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Input(format!("DELAYSTAB_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn warn(messages: &[String]) {
    for m in messages {
        eprintln!("warning: {m}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Example1 { b, variant, horizon, out, sample_step } => {
            let report = commands::example1(&Example1Args {
                b,
                variant: variant.into(),
                horizon,
                out: out.clone(),
                sample_step,
            })?;
            warn(&report.warnings);
            ensure_dir(&out)?;
            delaystab::output::write_json(create(&out.join("report.json"))?, &report)?;
            commands::print_json(&report)
        }
        Command::Example2 { lag, override_k, sim } => {
            let params = MgParams::example2(lag)?;
            let report = commands::mackey_glass(&params, override_k, sim.settings(None, 100.0, None).as_ref())?;
            warn(&report.warnings);
            commands::print_json(&report)
        }
        Command::Check { config, criterion: name, horizon, grid } => {
            let problem = load(&config, horizon, None)?;
            let verdict = commands::check(&problem, criterion(&name)?, &grid.args())?;
            commands::print_json(&verdict)
        }
        Command::Simulate { config, horizon, step, out, sample_step } => {
            let problem = load(&config, horizon, step)?;
            let (path, warnings) = commands::simulate_to(&problem, &out, sample_step)?;
            warn(&warnings);
            println!("{}", path.display());
            Ok(())
        }
        Command::Bound { config, horizon, grid } => {
            let problem = load(&config, horizon, None)?;
            commands::print_json(&commands::bound(&problem, &grid.args())?)
        }
        Command::Sweep {
            config,
            parameter,
            from,
            to,
            steps,
            criterion: name,
            simulate,
            period,
            horizon,
            step,
            grid,
            out,
        } => {
            let problem = load(&config, horizon, step)?;
            let args = SweepArgs {
                parameter,
                from,
                to,
                steps,
                criterion: criterion(&name)?,
                grid: grid.args(),
                simulate: simulate.then_some(GrowthArgs { period, burn_in: grid.burn_in }),
                threads: threads()?,
            };
            let rows = commands::sweep(&problem, &args)?;
            for r in &rows {
                for n in &r.notes {
                    eprintln!("warning: {} = {}: {n}", args.parameter, r.value);
                }
            }
            match out {
                Some(dir) => {
                    ensure_dir(&dir)?;
                    let path = dir.join("sweep.csv");
                    commands::write_sweep_csv(std::io::BufWriter::new(create(&path)?), &rows, simulate)?;
                    println!("{}", path.display());
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    commands::write_sweep_csv(&mut lock, &rows, simulate)?;
                    lock.flush()?;
                }
            }
            Ok(())
        }
        Command::Mg { config, lag, override_k, sim } => {
            let problem = load(&config, None, None)?;
            let Problem::MackeyGlass { mut params, k_override, initial, horizon, step } = problem else {
                return Err(CliError::Input(format!(
                    "{}: the mg command needs equation_class \"mackey_glass\"",
                    config.display()
                )));
            };
            if let Some(l) = lag {
                params.delay = delaystab_core::model::DelaySpec::constant_lag(l)?;
            }
            let k = override_k.or(k_override);
            let report = commands::mackey_glass(&params, k, sim.settings(initial, horizon, step).as_ref())?;
            warn(&report.warnings);
            commands::print_json(&report)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

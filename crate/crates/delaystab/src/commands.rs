//! Command implementations. Each returns a serializable report; the binary
//! decides where it goes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use delaystab_core::analysis::{count_sign_changes, example1_ratio, growth_factor};
use delaystab_core::criteria::{
    check_bbi_comparison_at, check_linear, check_nonoscillation_1e, check_thm1_for, check_thm5,
    check_thm6, estimate_thm2_params, invert_delay_bound, linear_criterion_for, CriterionId,
    LimsupGrid, Verdict,
};
use delaystab_core::mackeyglass::{
    check_thm7, derive_mg, equilibrium_residual, integrate_mackey_glass, mg_attractor_bound,
    solve_equilibrium, MgDerived, MgParams,
};
use delaystab_core::model::{DelaySpec, InitialCondition, NonlinearTerm, ScalarFunction};
use delaystab_core::solver::{
    example1_coefficient, example1_epsilon, integrate_example1, integrate_linear,
    integrate_nonlinear, min_positive_lag, min_positive_lag_nonlinear, Example1Variant,
    IntegratorConfig, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{describe_warning, save_trajectory, write_json};
use crate::problem::Problem;

/// Periods skipped before per-period growth factors are measured.
const EXAMPLE1_BURN_IN: f64 = 2.0;

/// Accepts the serialized criterion names, ignoring case.
pub fn parse_criterion(name: &str) -> Result<CriterionId, CliError> {
    use CriterionId::*;
    let all = [Thm1, Thm2, Thm3, Thm4, Cor1, Thm5, Thm6, Thm7, Nonosc1e, BbiComparison];
    all.into_iter()
        .find(|c| criterion_name(*c).eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let names: Vec<&str> = all.iter().map(|c| criterion_name(*c)).collect();
            CliError::Input(format!("unknown criterion {name:?}; expected one of {}", names.join(", ")))
        })
}

pub fn criterion_name(c: CriterionId) -> &'static str {
    match c {
        CriterionId::Thm1 => "Thm1",
        CriterionId::Thm2 => "Thm2",
        CriterionId::Thm3 => "Thm3",
        CriterionId::Thm4 => "Thm4",
        CriterionId::Cor1 => "Cor1",
        CriterionId::Thm5 => "Thm5",
        CriterionId::Thm6 => "Thm6",
        CriterionId::Thm7 => "Thm7",
        CriterionId::Nonosc1e => "Nonosc1e",
        CriterionId::BbiComparison => "BBIComparison",
    }
}

fn not_applicable(c: CriterionId, what: &str) -> CliError {
    CliError::Input(format!("criterion {} does not apply to {what}", criterion_name(c)))
}

// ---------------------------------------------------------------- example 1

#[derive(Clone, Debug)]
pub struct Example1Args {
    pub b: f64,
    pub variant: Example1Variant,
    pub horizon: f64,
    pub out: PathBuf,
    pub sample_step: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationReport {
    pub variant: Example1Variant,
    pub ratio: f64,
    pub ratio_exact: f64,
    pub sign_changes: usize,
    pub classification: &'static str,
    pub min_a: f64,
    pub trajectory: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Example1Report {
    pub b: f64,
    pub eps: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub ratio_intro5: f64,
    pub ratio_intro6: f64,
    pub intro5: EquationReport,
    pub intro6: EquationReport,
    pub warnings: Vec<String>,
}

fn classify(ratio: f64) -> &'static str {
    if ratio < 1.0 {
        "decaying"
    } else {
        "growing"
    }
}

fn whole_periods(horizon: f64) -> Result<u32, CliError> {
    let n = horizon.round();
    if !(n >= 1.0 && n <= u32::MAX as f64 && (horizon - n).abs() <= 1e-9) {
        return Err(CliError::Input(format!(
            "horizon must be a positive whole number of periods, got {horizon}"
        )));
    }
    Ok(n as u32)
}

/// Integrates the baseline and the perturbed equation, writes both
/// trajectories into `args.out` and returns the report.
pub fn example1(args: &Example1Args) -> Result<Example1Report, CliError> {
    let periods = whole_periods(args.horizon)?;
    let horizon = periods as f64;
    let burn_in = if horizon >= EXAMPLE1_BURN_IN + 3.0 { EXAMPLE1_BURN_IN } else { 0.0 };
    let mut warnings = Vec::new();
    let mut run = |variant: Example1Variant, stem: &str| -> Result<EquationReport, CliError> {
        let traj = integrate_example1(args.b, variant, periods)?;
        for w in traj.warnings() {
            let msg = describe_warning(w);
            if !warnings.contains(&msg) {
                warnings.push(msg);
            }
        }
        let ratio = growth_factor(&traj, 1.0, burn_in)?;
        let (min_a, _) = example1_coefficient(args.b, variant).sampled_range(0.0, horizon, traj.step_size())?;
        let path = save_trajectory(&args.out, stem, &traj, args.sample_step)?;
        Ok(EquationReport {
            variant,
            ratio,
            ratio_exact: example1_ratio(args.b, variant).abs(),
            sign_changes: count_sign_changes(&traj, 0.0, horizon),
            classification: classify(ratio),
            min_a,
            trajectory: path.display().to_string(),
        })
    };
    let intro5 = run(Example1Variant::Baseline, "intro5")?;
    let intro6 = run(args.variant, "intro6")?;
    Ok(Example1Report {
        b: args.b,
        eps: example1_epsilon(args.b),
        horizon,
        burn_in,
        ratio_intro5: intro5.ratio,
        ratio_intro6: intro6.ratio,
        intro5,
        intro6,
        warnings,
    })
}

// ------------------------------------------------------------- Mackey-Glass

/// Optional simulation of the original model.
#[derive(Clone, Debug)]
pub struct MgSimulation {
    /// `None` starts from 1.1 times the solved equilibrium.
    pub initial: Option<InitialCondition>,
    pub horizon: f64,
    pub step: Option<f64>,
    pub out: PathBuf,
    pub sample_step: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistentReport {
    pub derived: MgDerived,
    #[serde(with = "delaystab_core::serde_float")]
    pub thm7_bound: f64,
    pub thm7: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub trajectory: String,
    pub horizon: f64,
    pub step: f64,
    pub equilibrium: f64,
    pub final_value: f64,
    pub final_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MgReport {
    pub lag: f64,
    #[serde(rename = "K_override")]
    pub k_override: Option<f64>,
    pub derived: MgDerived,
    /// `beta K^{n+1} - alpha (1 + K^n)` at the `K` in use.
    pub equilibrium_residual: f64,
    #[serde(with = "delaystab_core::serde_float")]
    pub thm7_bound: f64,
    pub bbi_bound: f64,
    pub thm7: Verdict,
    pub bbi: Verdict,
    /// The same quantities with `K` solved from the parameters, reported
    /// when an override is in effect.
    pub consistent: Option<ConsistentReport>,
    pub simulation: Option<SimulationReport>,
    pub warnings: Vec<String>,
}

pub fn mackey_glass(
    params: &MgParams,
    k_override: Option<f64>,
    simulation: Option<&MgSimulation>,
) -> Result<MgReport, CliError> {
    let lag = params.delay.lag_bound();
    let bound = mg_attractor_bound(params, k_override)?;
    let thm7 = check_thm7(params, k_override)?;
    let bbi = check_bbi_comparison_at(params.beta, params.n, params.r_max, lag)?;
    let k = bound.derived.k;
    let consistent = match k_override {
        Some(_) => {
            let b = mg_attractor_bound(params, None)?;
            Some(ConsistentReport {
                derived: b.derived,
                thm7_bound: b.attractor_bound,
                thm7: check_thm7(params, None)?,
            })
        }
        None => None,
    };
    let mut warnings = Vec::new();
    let simulation = match simulation {
        Some(sim) => {
            let equilibrium = solve_equilibrium(params.alpha, params.beta, params.n)?;
            let initial = sim
                .initial
                .clone()
                .unwrap_or_else(|| InitialCondition::constant(1.1 * equilibrium));
            let cfg = config(sim.horizon, sim.step, (lag > 0.0).then_some(lag));
            let traj = integrate_mackey_glass(params, &initial, &cfg)?;
            warnings.extend(traj.warnings().iter().map(describe_warning));
            let path = save_trajectory(&sim.out, "mackey_glass", &traj, sim.sample_step)?;
            let final_value = traj.evaluate(traj.horizon())?;
            Some(SimulationReport {
                trajectory: path.display().to_string(),
                horizon: traj.horizon(),
                step: traj.step_size(),
                equilibrium,
                final_value,
                final_distance: (final_value - equilibrium).abs(),
            })
        }
        None => None,
    };
    Ok(MgReport {
        lag,
        k_override,
        derived: bound.derived,
        equilibrium_residual: equilibrium_residual(params.alpha, params.beta, params.n, k),
        thm7_bound: bound.attractor_bound,
        bbi_bound: bound.comparison_bound,
        thm7,
        bbi,
        consistent,
        simulation,
        warnings,
    })
}

// -------------------------------------------------------- generic problems

/// Sampling grid for `limsup` estimates.
#[derive(Clone, Copy, Debug)]
pub struct GridArgs {
    /// Defaults to 10% of the horizon.
    pub burn_in: Option<f64>,
    pub grid_step: f64,
}

impl GridArgs {
    fn grid(&self, horizon: f64) -> LimsupGrid {
        let mut grid = LimsupGrid::new(horizon, self.grid_step);
        if let Some(b) = self.burn_in {
            grid.burn_in = b;
        }
        grid
    }
}

fn config(horizon: f64, step: Option<f64>, lag: Option<f64>) -> IntegratorConfig {
    match step {
        Some(h) => IntegratorConfig::new(horizon, h),
        None => IntegratorConfig::with_default_step(horizon, lag),
    }
}

/// The default criterion for the problem class.
pub fn default_criterion(problem: &Problem) -> CriterionId {
    match problem {
        Problem::Linear { problem, .. } => linear_criterion_for(problem),
        Problem::Nonlinear { problem, .. } => {
            if problem.has_distributed() {
                CriterionId::Thm6
            } else {
                CriterionId::Thm5
            }
        }
        Problem::MackeyGlass { .. } => CriterionId::Thm7,
    }
}

/// Evaluates a criterion on a problem. `None` picks the criterion matching
/// the structure of the problem.
pub fn check(problem: &Problem, criterion: Option<CriterionId>, grid: &GridArgs) -> Result<Verdict, CliError> {
    let natural = default_criterion(problem);
    let wanted = criterion.unwrap_or(natural);
    match problem {
        Problem::Linear { problem: p, horizon, .. } => match wanted {
            CriterionId::Thm1 => Ok(check_thm1_for(p, *horizon)?),
            CriterionId::Nonosc1e => {
                if p.concentrated.len() != 1 || !p.distributed.is_empty() {
                    return Err(not_applicable(wanted, "equations without exactly one concentrated delay"));
                }
                let term = &p.concentrated[0];
                Ok(check_nonoscillation_1e(&term.coefficient, &term.delay, &p.a, &grid.grid(*horizon))?)
            }
            CriterionId::Thm2 | CriterionId::Thm3 | CriterionId::Thm4 | CriterionId::Cor1 => {
                // a more general criterion may always be asked for
                let covers = wanted == natural
                    || wanted == CriterionId::Thm4
                    || (wanted == CriterionId::Thm3 && natural == CriterionId::Thm2);
                if !covers {
                    return Err(not_applicable(wanted, &format!("this delay structure (use {})", criterion_name(natural))));
                }
                Ok(check_linear(p, &grid.grid(*horizon))?.relabel(wanted))
            }
            _ => Err(not_applicable(wanted, "linear equations")),
        },
        Problem::Nonlinear { problem: p, horizon, .. } => {
            let test = match wanted {
                CriterionId::Thm5 if !p.has_distributed() => check_thm5,
                CriterionId::Thm6 => check_thm6,
                _ => return Err(not_applicable(wanted, "this nonlinear equation")),
            };
            p.verify_sector_bounds(*horizon, 200, 200)?;
            let s = &p.sector;
            Ok(test(s.a0, s.upper, s.b0(), p.max_lag_bound())?)
        }
        Problem::MackeyGlass { params, k_override, .. } => match wanted {
            CriterionId::Thm7 => Ok(check_thm7(params, *k_override)?),
            CriterionId::BbiComparison => Ok(check_bbi_comparison_at(
                params.beta,
                params.n,
                params.r_max,
                params.delay.lag_bound(),
            )?),
            _ => Err(not_applicable(wanted, "the Mackey-Glass model")),
        },
    }
}

/// Integrates a problem with its own horizon and step.
pub fn simulate(problem: &Problem) -> Result<Trajectory, CliError> {
    match problem {
        Problem::Linear { problem, horizon, step } => {
            let cfg = config(*horizon, *step, min_positive_lag(problem));
            Ok(integrate_linear(problem, &cfg)?)
        }
        Problem::Nonlinear { problem, horizon, step } => {
            let cfg = config(*horizon, *step, min_positive_lag_nonlinear(problem));
            Ok(integrate_nonlinear(problem, &cfg)?)
        }
        Problem::MackeyGlass {
            params,
            k_override,
            initial,
            horizon,
            step,
        } => {
            let initial = match initial {
                Some(i) => i.clone(),
                None => InitialCondition::constant(1.1 * derive_mg(params, *k_override)?.k),
            };
            let lag = params.delay.lag_bound();
            let cfg = config(*horizon, *step, (lag > 0.0).then_some(lag));
            Ok(integrate_mackey_glass(params, &initial, &cfg)?)
        }
    }
}

/// Integrates and saves the trajectory; returns the CSV path and warnings.
pub fn simulate_to(problem: &Problem, out: &Path, sample_step: f64) -> Result<(PathBuf, Vec<String>), CliError> {
    let traj = simulate(problem)?;
    let path = save_trajectory(out, "trajectory", &traj, sample_step)?;
    Ok((path, traj.warnings().iter().map(describe_warning).collect()))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub criterion: CriterionId,
    /// Largest admissible value of `h0`.
    #[serde(with = "delaystab_core::serde_float")]
    pub max_h0: f64,
    /// `h0` of the problem as given.
    pub h0: f64,
    /// What `h0` measures: `lag` or `integral_of_a` over the lag window.
    pub measure: &'static str,
    pub certified: bool,
    #[serde(with = "delaystab_core::serde_float::map")]
    pub inputs: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<MgDerived>,
}

/// The largest `h0` the applicable criterion certifies.
pub fn bound(problem: &Problem, grid: &GridArgs) -> Result<BoundReport, CliError> {
    let report = |criterion, max_h0: f64, h0: f64, measure, inputs: BTreeMap<String, f64>| BoundReport {
        criterion,
        max_h0,
        h0,
        measure,
        certified: h0 < max_h0,
        inputs,
        comparison_bound: None,
        derived: None,
    };
    match problem {
        Problem::Linear { problem: p, horizon, .. } => {
            if let Some(a) = p.a.as_constant() {
                let v = check_thm1_for(p, *horizon)?;
                let b = v.inputs["b"];
                let max = if b > 0.0 { invert_delay_bound(a, a, b) } else { f64::INFINITY };
                Ok(report(CriterionId::Thm1, max, v.inputs["h"], "lag", v.inputs))
            } else {
                let (h0, beta) = estimate_thm2_params(p, &grid.grid(*horizon))?;
                let max = if beta.value > 0.0 {
                    invert_delay_bound(1.0, 1.0, beta.value)
                } else {
                    f64::INFINITY
                };
                let inputs = BTreeMap::from([
                    ("beta".to_string(), beta.value),
                    ("burn_in".to_string(), beta.burn_in),
                    ("grid_step".to_string(), beta.grid_step),
                    ("horizon".to_string(), beta.horizon),
                ]);
                Ok(report(linear_criterion_for(p), max, h0.value, "integral_of_a", inputs))
            }
        }
        Problem::Nonlinear { problem: p, horizon, .. } => {
            p.verify_sector_bounds(*horizon, 200, 200)?;
            let s = &p.sector;
            let inputs = BTreeMap::from([
                ("a0".to_string(), s.a0),
                ("A".to_string(), s.upper),
                ("b0".to_string(), s.b0()),
            ]);
            let max = invert_delay_bound(s.a0, s.upper, s.b0());
            Ok(report(default_criterion(problem), max, p.max_lag_bound(), "lag", inputs))
        }
        Problem::MackeyGlass { params, k_override, .. } => {
            let b = mg_attractor_bound(params, *k_override)?;
            let d = b.derived;
            let inputs = BTreeMap::from([
                ("a0".to_string(), d.a0),
                ("A".to_string(), d.upper),
                ("b0".to_string(), d.b0),
                ("K".to_string(), d.k),
            ]);
            let mut r = report(CriterionId::Thm7, b.attractor_bound, params.delay.lag_bound(), "lag", inputs);
            r.comparison_bound = Some(b.comparison_bound);
            r.derived = Some(d);
            Ok(r)
        }
    }
}

// -------------------------------------------------------------------- sweep

#[derive(Clone, Debug)]
pub struct SweepArgs {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub criterion: Option<CriterionId>,
    pub grid: GridArgs,
    /// Per-period growth factors are computed when set.
    pub simulate: Option<GrowthArgs>,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct GrowthArgs {
    pub period: f64,
    /// Defaults to 10% of the horizon.
    pub burn_in: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// `None` when the criterion does not apply at this value.
    pub certified: Option<bool>,
    pub growth_factor: Option<f64>,
    /// Messages of the failures that produced `None` entries.
    pub notes: Vec<String>,
}

/// Names accepted by [`with_parameter`] for each problem class.
pub fn sweep_parameters(problem: &Problem) -> &'static [&'static str] {
    match problem {
        Problem::Linear { .. } => &["a", "b", "lag"],
        Problem::Nonlinear { .. } => &["lag"],
        Problem::MackeyGlass { .. } => &["lag", "alpha", "beta", "n", "K_override"],
    }
}

/// Replaces one scalar of the problem. For linear and nonlinear problems
/// `b` and `lag` refer to the first delayed term.
pub fn with_parameter(problem: &Problem, name: &str, value: f64) -> Result<Problem, CliError> {
    let mut p = problem.clone();
    let unknown = || {
        CliError::Input(format!(
            "unknown sweep parameter {name:?}; expected one of {}",
            sweep_parameters(problem).join(", ")
        ))
    };
    let no_term = || CliError::Input("the problem has no delayed term to modify".into());
    match &mut p {
        Problem::Linear { problem, .. } => match name {
            "a" => problem.a = ScalarFunction::constant(value),
            "b" => match (problem.concentrated.first_mut(), problem.distributed.first_mut()) {
                (Some(t), _) => t.coefficient = ScalarFunction::constant(value),
                (None, Some(t)) => t.coefficient = ScalarFunction::constant(value),
                (None, None) => return Err(no_term()),
            },
            "lag" => {
                let lag = DelaySpec::constant_lag(value)?;
                match (problem.concentrated.first_mut(), problem.distributed.first_mut()) {
                    (Some(t), _) => t.delay = lag,
                    (None, Some(t)) => t.lower_limit = lag,
                    (None, None) => return Err(no_term()),
                }
            }
            _ => return Err(unknown()),
        },
        Problem::Nonlinear { problem, .. } => match name {
            "lag" => {
                let lag = DelaySpec::constant_lag(value)?;
                match problem.terms.first_mut().ok_or_else(no_term)? {
                    NonlinearTerm::Concentrated { delay, .. } => *delay = lag,
                    NonlinearTerm::Distributed { lower_limit, .. } => *lower_limit = lag,
                }
            }
            _ => return Err(unknown()),
        },
        Problem::MackeyGlass { params, k_override, .. } => match name {
            "lag" => params.delay = DelaySpec::constant_lag(value)?,
            "alpha" => params.alpha = value,
            "beta" => params.beta = value,
            "n" => params.n = value,
            "K_override" => *k_override = Some(value),
            _ => return Err(unknown()),
        },
    }
    Ok(p)
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n)
            .map(|i| if i == n - 1 { to } else { from + (to - from) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn sweep_point(problem: &Problem, args: &SweepArgs, value: f64) -> Result<SweepRow, CliError> {
    let p = with_parameter(problem, &args.parameter, value)?;
    let mut notes = Vec::new();
    let certified = match check(&p, args.criterion, &args.grid) {
        Ok(v) => Some(v.certified),
        Err(e) => {
            notes.push(format!("check: {e}"));
            None
        }
    };
    let growth = match &args.simulate {
        Some(g) => {
            let burn_in = g.burn_in.unwrap_or(0.1 * p.horizon());
            match simulate(&p).and_then(|t| Ok(growth_factor(&t, g.period, burn_in)?)) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!("simulate: {e}"));
                    None
                }
            }
        }
        None => None,
    };
    Ok(SweepRow {
        value,
        certified,
        growth_factor: growth,
        notes,
    })
}

/// Evaluates every grid point, in parallel, and returns rows in parameter
/// order. Unknown parameter names fail before any work is done.
pub fn sweep(problem: &Problem, args: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    if !sweep_parameters(problem).contains(&args.parameter.as_str()) {
        with_parameter(problem, &args.parameter, args.from)?;
    }
    if args.steps == 0 || !args.from.is_finite() || !args.to.is_finite() {
        return Err(CliError::Input("a sweep needs finite bounds and at least one step".into()));
    }
    let values = sweep_values(args.from, args.to, args.steps);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker threads: {e}")))?;
    pool.install(|| {
        values
            .par_iter()
            .map(|v| sweep_point(problem, args, *v))
            .collect()
    })
}

/// `value,certified[,growth_factor,decaying]`; `na` marks entries that could
/// not be computed.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow], with_growth: bool) -> std::io::Result<()> {
    let flag = |b: Option<bool>| match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "na",
    };
    if with_growth {
        writeln!(w, "value,certified,growth_factor,decaying")?;
    } else {
        writeln!(w, "value,certified")?;
    }
    for r in rows {
        write!(w, "{},{}", r.value, flag(r.certified))?;
        if with_growth {
            match r.growth_factor {
                Some(g) => write!(w, ",{g},{}", flag(Some(g < 1.0)))?,
                None => write!(w, ",na,na")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes a report to stdout.
pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    write_json(stdout.lock(), value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_names_round_trip() {
        for name in ["Thm1", "thm4", "COR1", "nonosc1e", "BBIComparison"] {
            let c = parse_criterion(name).unwrap();
            assert!(criterion_name(c).eq_ignore_ascii_case(name));
        }
        assert!(parse_criterion("Thm8").is_err());
    }

    #[test]
    fn sweep_values_hit_both_ends() {
        let v = sweep_values(0.1, 2.5, 25);
        assert_eq!(v.len(), 25);
        assert_eq!((v[0], v[24]), (0.1, 2.5));
        assert!((v[19] - 2.0).abs() < 1e-12);
        assert_eq!(sweep_values(3.0, 4.0, 1), vec![3.0]);
    }

    #[test]
    fn sweep_csv_marks_missing_entries() {
        let rows = [
            SweepRow { value: 0.5, certified: Some(true), growth_factor: Some(0.5), notes: vec![] },
            SweepRow { value: 1.5, certified: None, growth_factor: None, notes: vec!["x".into()] },
        ];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows, true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "value,certified,growth_factor,decaying\n0.5,true,0.5,true\n1.5,na,na,na\n"
        );
    }

    #[test]
    fn whole_periods_rejects_fractions() {
        assert_eq!(whole_periods(20.0).unwrap(), 20);
        assert!(whole_periods(2.5).is_err());
        assert!(whole_periods(0.0).is_err());
    }
}

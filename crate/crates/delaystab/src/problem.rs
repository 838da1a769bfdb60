//! JSON problem files.
//!
//! The file format is documented field by field in `docs/schema.md`. Parsing
//! happens in two stages: serde maps the text onto the plain structs below,
//! then [`ProblemFile::into_problem`] validates and builds the core types.

use std::path::Path;

use delaystab_core::mackeyglass::MgParams;
use delaystab_core::model::{
    ConcentratedTerm, DelaySpec, DistributedTerm, InitialCondition, Kernel, LinearDDE,
    NonlinearDDE, NonlinearTerm, Nonlinearity, ScalarFunction, SectorBounds,
};
use serde::Deserialize;

use crate::error::CliError;

/// The three file layouts, selected by the `equation_class` key.
#[derive(Clone, Debug)]
pub enum ProblemFile {
    Linear(LinearFile),
    Nonlinear(NonlinearFile),
    MackeyGlass(MackeyGlassFile),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearFile {
    pub equation_class: String,
    pub a: ScalarFunction,
    pub terms: Vec<LinearTermFile>,
    pub initial: InitialCondition,
    pub horizon: f64,
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinearTermFile {
    Concentrated {
        b: ScalarFunction,
        delay: DelaySpec,
    },
    Distributed {
        b: ScalarFunction,
        lower_limit: DelaySpec,
        kernel: Kernel,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearFile {
    pub equation_class: String,
    pub f: Nonlinearity,
    pub terms: Vec<NonlinearTermFile>,
    pub sector_bounds: SectorBounds,
    pub state_box: [f64; 2],
    #[serde(default)]
    pub admissible_initial_box: Option<[f64; 2]>,
    pub initial: InitialCondition,
    pub horizon: f64,
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearTermFile {
    Concentrated {
        g: Nonlinearity,
        delay: DelaySpec,
    },
    Distributed {
        g: Nonlinearity,
        lower_limit: DelaySpec,
        kernel: Kernel,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MackeyGlassFile {
    pub equation_class: String,
    pub alpha: f64,
    pub beta: f64,
    pub n: f64,
    pub r_spec: ScalarFunction,
    pub r0: f64,
    #[serde(rename = "R")]
    pub r_max: f64,
    pub lag: f64,
    #[serde(default, rename = "K_override")]
    pub k_override: Option<f64>,
    #[serde(default)]
    pub initial: Option<InitialCondition>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

/// Horizon used for Mackey-Glass files that do not set one.
pub const MG_DEFAULT_HORIZON: f64 = 100.0;

/// A validated problem ready for the core crate.
#[derive(Clone, Debug)]
pub enum Problem {
    Linear {
        problem: LinearDDE,
        horizon: f64,
        step: Option<f64>,
    },
    Nonlinear {
        problem: NonlinearDDE,
        horizon: f64,
        step: Option<f64>,
    },
    MackeyGlass {
        params: MgParams,
        k_override: Option<f64>,
        /// `None` starts from the equilibrium perturbed by 10%.
        initial: Option<InitialCondition>,
        horizon: f64,
        step: Option<f64>,
    },
}

impl Problem {
    pub fn horizon(&self) -> f64 {
        match self {
            Problem::Linear { horizon, .. }
            | Problem::Nonlinear { horizon, .. }
            | Problem::MackeyGlass { horizon, .. } => *horizon,
        }
    }

    pub fn set_horizon(&mut self, value: f64) {
        match self {
            Problem::Linear { horizon, .. }
            | Problem::Nonlinear { horizon, .. }
            | Problem::MackeyGlass { horizon, .. } => *horizon = value,
        }
    }

    pub fn step(&self) -> Option<f64> {
        match self {
            Problem::Linear { step, .. }
            | Problem::Nonlinear { step, .. }
            | Problem::MackeyGlass { step, .. } => *step,
        }
    }

    pub fn set_step(&mut self, value: f64) {
        match self {
            Problem::Linear { step, .. }
            | Problem::Nonlinear { step, .. }
            | Problem::MackeyGlass { step, .. } => *step = Some(value),
        }
    }
}

/// Parses and validates problem text. `origin` names the source in messages.
pub fn parse_problem(text: &str, origin: &str) -> Result<Problem, CliError> {
    parse_file(text, origin)?
        .into_problem()
        .map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

/// Reads the class first, then deserializes the matching layout straight
/// from the text so that errors keep their line and column.
pub fn parse_file(text: &str, origin: &str) -> Result<ProblemFile, CliError> {
    let located = |e: serde_json::Error, path: &str| {
        let at = if path.is_empty() || path == "." { String::new() } else { format!(" (at {path})") };
        CliError::Input(format!(
            "{origin}:{}:{}: {}{at}",
            e.line(),
            e.column(),
            strip_location(&e.to_string())
        ))
    };
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| located(e, ""))?;
    let class = value
        .get("equation_class")
        .and_then(|c| c.as_str())
        .ok_or_else(|| {
            CliError::Input(format!(
                "{origin}: missing string field `equation_class` (linear, nonlinear or mackey_glass)"
            ))
        })?;
    fn typed<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, (serde_json::Error, String)> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            (e.into_inner(), path)
        })
    }
    let file = match class {
        "linear" => typed(text).map(ProblemFile::Linear),
        "nonlinear" => typed(text).map(ProblemFile::Nonlinear),
        "mackey_glass" => typed(text).map(ProblemFile::MackeyGlass),
        other => {
            return Err(CliError::Input(format!(
                "{origin}: unknown equation_class {other:?}; expected linear, nonlinear or mackey_glass"
            )))
        }
    };
    file.map_err(|(e, path)| located(e, &path))
}

pub fn load_problem(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text, &path.display().to_string())
}

/// serde_json appends " at line L column C"; the location is already in front.
fn strip_location(msg: &str) -> &str {
    match msg.rfind(" at line ") {
        Some(i) => &msg[..i],
        None => msg,
    }
}

fn finite_positive(name: &str, value: f64) -> delaystab_core::Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(delaystab_core::Error::InvalidSpec(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

impl ProblemFile {
    pub fn into_problem(self) -> delaystab_core::Result<Problem> {
        match self {
            ProblemFile::Linear(f) => {
                finite_positive("horizon", f.horizon)?;
                let mut problem = LinearDDE::new(f.a, f.initial);
                for term in f.terms {
                    match term {
                        LinearTermFile::Concentrated { b, delay } => {
                            problem.concentrated.push(ConcentratedTerm {
                                coefficient: b,
                                delay,
                            })
                        }
                        LinearTermFile::Distributed {
                            b,
                            lower_limit,
                            kernel,
                        } => problem.distributed.push(DistributedTerm {
                            coefficient: b,
                            lower_limit,
                            kernel,
                        }),
                    }
                }
                problem.validate(f.horizon)?;
                Ok(Problem::Linear {
                    problem,
                    horizon: f.horizon,
                    step: f.step,
                })
            }
            ProblemFile::Nonlinear(f) => {
                finite_positive("horizon", f.horizon)?;
                let terms = f
                    .terms
                    .into_iter()
                    .map(|t| match t {
                        NonlinearTermFile::Concentrated { g, delay } => {
                            NonlinearTerm::Concentrated { g, delay }
                        }
                        NonlinearTermFile::Distributed {
                            g,
                            lower_limit,
                            kernel,
                        } => NonlinearTerm::Distributed {
                            g,
                            lower_limit,
                            kernel,
                        },
                    })
                    .collect();
                let [x1, x2] = f.state_box;
                let [lo, hi] = f.admissible_initial_box.unwrap_or(f.state_box);
                let problem = NonlinearDDE {
                    f: f.f,
                    terms,
                    sector: f.sector_bounds,
                    state_box: (x1, x2),
                    admissible_initial: (lo, hi),
                    initial: f.initial,
                };
                problem.validate()?;
                Ok(Problem::Nonlinear {
                    problem,
                    horizon: f.horizon,
                    step: f.step,
                })
            }
            ProblemFile::MackeyGlass(f) => {
                let params = MgParams {
                    alpha: f.alpha,
                    beta: f.beta,
                    n: f.n,
                    r: f.r_spec,
                    r0: f.r0,
                    r_max: f.r_max,
                    delay: DelaySpec::constant_lag(f.lag)?,
                };
                params.validate()?;
                if let Some(k) = f.k_override {
                    finite_positive("K_override", k)?;
                }
                let horizon = f.horizon.unwrap_or(MG_DEFAULT_HORIZON);
                finite_positive("horizon", horizon)?;
                if let Some(init) = &f.initial {
                    init.validate()?;
                }
                Ok(Problem::MackeyGlass {
                    params,
                    k_override: f.k_override,
                    initial: f.initial,
                    horizon,
                    step: f.step,
                })
            }
        }
    }
}

//! Run configuration: TOML sections, defaults and validation.
//!
//! Parsing happens in two stages. Serde rejects malformed TOML, unknown
//! keys and bad enum names, and reports the offending line. Semantic checks
//! then build the core objects and anchor their messages at the key's line,
//! or at its section header when the key is missing.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use optexec::grid::{Grid2D, UpperClosure};
use optexec::impact::ImpactModel;
use optexec::impulse::{ImpulseProblem, ImpulseSettings, InnerSolver, Ordering};
use optexec::market::MarketModel;
use optexec::montecarlo::SimConfig;
use optexec::singular::{SingularProblem, SingularSettings};
use optexec::State;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbm,
    Abm,
    Ou,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactKind {
    Exp,
    Linear,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Impulse,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    #[default]
    Solve,
    Simulate,
    Sweep,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Follow the solved policy.
    #[default]
    Policy,
    /// Sell at `sim.rate` regardless of state.
    ConstantRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    /// OU mean-reversion rate.
    pub rate: Option<f64>,
    /// OU mean-reversion level.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactSection {
    pub kind: ImpactKind,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_max: Option<f64>,
    pub p_max: Option<f64>,
    pub nx: Option<usize>,
    pub np: Option<usize>,
    pub closure: Option<UpperClosure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKind,
    pub k: Option<f64>,
    pub tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub max_iter: Option<usize>,
    pub omega: Option<f64>,
    pub inner: Option<InnerSolver>,
    pub ordering: Option<Ordering>,
    pub tol_region: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
    pub u_cap: Option<f64>,
    pub strategy: Option<Strategy>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub kind: RunKind,
    pub probe: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub model: Option<ModelSection>,
    pub impact: Option<ImpactSection>,
    pub grid: Option<GridSection>,
    pub solver: Option<SolverSection>,
    pub sim: Option<SimSection>,
    pub sweep: Option<SweepSection>,
    pub output: Option<OutputSection>,
}

/// Parameters a sweep may vary.
pub const SWEEPABLE: [&str; 7] = [
    "model.mu",
    "model.sigma",
    "model.beta",
    "model.rate",
    "model.mean",
    "impact.lambda",
    "solver.k",
];

/// Config text with the name used in messages.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub text: String,
}

impl Source {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
        }
    }

    /// Line of `key` inside `[section]`, else of the section header, else 1.
    pub fn line_of(&self, section: &str, key: &str) -> usize {
        let header = format!("[{section}]");
        let mut in_section = false;
        let mut header_line = None;
        for (n, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') {
                in_section = line.split('#').next().map(str::trim) == Some(header.as_str());
                if in_section {
                    header_line = Some(n + 1);
                }
                continue;
            }
            if in_section {
                let name = line.split('=').next().unwrap_or("").trim();
                if name == key {
                    return n + 1;
                }
            }
        }
        header_line.unwrap_or(1)
    }

    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            source_name: self.name.clone(),
            line: self.line_of(section, key),
            message: format!("{section}.{key}: {}", message.into()),
        }
    }
}

pub fn parse(source: &Source) -> Result<RunConfig, CliError> {
    toml::from_str(&source.text).map_err(|e| {
        let line = e
            .span()
            .map(|s| source.text[..s.start.min(source.text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        CliError::Config {
            source_name: source.name.clone(),
            line,
            message: e.message().to_string(),
        }
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Solver {
    Impulse(ImpulseProblem<f64>, ImpulseSettings<f64>),
    Singular(SingularProblem<f64>, SingularSettings<f64>),
}

impl Solver {
    pub fn grid(&self) -> &Grid2D<f64> {
        match self {
            Solver::Impulse(p, _) => &p.grid,
            Solver::Singular(p, _) => &p.grid,
        }
    }

    pub fn model(&self) -> &MarketModel<f64> {
        match self {
            Solver::Impulse(p, _) => &p.model,
            Solver::Singular(p, _) => &p.model,
        }
    }

    pub fn impact(&self) -> &ImpactModel<f64> {
        match self {
            Solver::Impulse(p, _) => &p.impact,
            Solver::Singular(p, _) => &p.impact,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimSpec {
    pub config: SimConfig<f64>,
    pub u_cap: f64,
    pub strategy: Strategy,
    pub rate: Option<f64>,
}

/// A validated configuration with its core objects built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kind: RunKind,
    pub probe: State<f64>,
    pub solver: Option<Solver>,
    pub grid: Grid2D<f64>,
    pub sim: SimSpec,
    pub sweep: Option<SweepSection>,
    pub out_dir: PathBuf,
}

fn positive(source: &Source, section: &str, key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(source.error(section, key, format!("must be positive, got {v}")))
    }
}

fn required(source: &Source, section: &str, key: &str, v: Option<f64>, why: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| source.error(section, key, format!("missing key (required {why})")))
}

fn build_model(source: &Source, m: &ModelSection) -> Result<MarketModel<f64>, CliError> {
    let why = match m.kind {
        ModelKind::Gbm => "for model.kind = \"gbm\"",
        ModelKind::Abm => "for model.kind = \"abm\"",
        ModelKind::Ou => "for model.kind = \"ou\"",
    };
    let sigma = required(source, "model", "sigma", m.sigma, why)?;
    let beta = required(source, "model", "beta", m.beta, why)?;
    let built = match m.kind {
        ModelKind::Gbm => MarketModel::gbm(required(source, "model", "mu", m.mu, why)?, sigma, beta),
        ModelKind::Abm => MarketModel::abm(required(source, "model", "mu", m.mu, why)?, sigma, beta),
        ModelKind::Ou => MarketModel::ou(
            required(source, "model", "rate", m.rate, why)?,
            required(source, "model", "mean", m.mean, why)?,
            sigma,
            beta,
        ),
    };
    built.map_err(|e| {
        use optexec::market::ModelError::*;
        let key = match e {
            NonPositiveDiscount(_) | InfiniteValue { .. } | NoIncreasingRoot { .. } => "beta",
            NonPositiveVolatility(_) => "sigma",
            NonPositiveReversionRate(_) => "rate",
            NegativeReversionLevel(_) => "mean",
            _ => "kind",
        };
        source.error("model", key, e.to_string())
    })
}

fn build_impact(source: &Source, i: &ImpactSection) -> Result<ImpactModel<f64>, CliError> {
    let built = match i.kind {
        ImpactKind::None => return Ok(ImpactModel::None),
        ImpactKind::Exp => ImpactModel::exponential(required(source, "impact", "lambda", i.lambda, "for impact.kind = \"exp\"")?),
        ImpactKind::Linear => ImpactModel::linear(required(source, "impact", "lambda", i.lambda, "for impact.kind = \"linear\"")?),
    };
    built.map_err(|e| source.error("impact", "lambda", e.to_string()))
}

fn build_grid(source: &Source, g: &GridSection, probe: State<f64>) -> Result<(Grid2D<f64>, UpperClosure), CliError> {
    let x_max = positive(source, "grid", "x_max", g.x_max.unwrap_or(2.0 * probe.x))?;
    let p_max = positive(source, "grid", "p_max", g.p_max.unwrap_or(5.0 * probe.p))?;
    let nx = g.nx.unwrap_or(200);
    let np = g.np.unwrap_or(200);
    let grid = Grid2D::new(x_max, p_max, nx, np).map_err(|e| {
        let key = if nx < optexec::grid::MIN_NODES { "nx" } else { "np" };
        source.error("grid", key, e.to_string())
    })?;
    if probe.x > x_max || probe.p > p_max {
        return Err(source.error("run", "probe", "probe point lies outside the grid"));
    }
    Ok((grid, g.closure.unwrap_or(UpperClosure::Trade)))
}

fn build_solver(
    source: &Source,
    s: &SolverSection,
    model: MarketModel<f64>,
    impact: ImpactModel<f64>,
    grid: Grid2D<f64>,
    closure: UpperClosure,
) -> Result<Solver, CliError> {
    let tol = positive(source, "solver", "tol", s.tol.unwrap_or(1e-7))?;
    let omega = s.omega.unwrap_or(1.5);
    if !(omega > 0.0 && omega < 2.0) {
        return Err(source.error("solver", "omega", format!("relaxation must lie in (0, 2), got {omega}")));
    }
    let tol_region = positive(source, "solver", "tol_region", s.tol_region.unwrap_or(1e-4))?;
    let inner = s.inner.unwrap_or_default();
    if inner == InnerSolver::Psor && closure == UpperClosure::LinearExtrapolation {
        return Err(source.error("solver", "inner", "psor cannot be combined with grid.closure = \"extrapolate\""));
    }
    for (key, v) in [("max_outer", s.max_outer), ("max_inner", s.max_inner), ("max_iter", s.max_iter)] {
        if v == Some(0) {
            return Err(source.error("solver", key, "budget must be positive"));
        }
    }
    match s.kind {
        SolverKind::Impulse => {
            let k = required(source, "solver", "k", s.k, "for solver.kind = \"impulse\"")?;
            if !(k >= 0.0) || !k.is_finite() {
                return Err(source.error("solver", "k", format!("fixed cost must be non-negative, got {k}")));
            }
            if s.max_iter.is_some() {
                return Err(source.error("solver", "max_iter", "applies to the singular solver; use max_inner"));
            }
            let settings = ImpulseSettings {
                tol,
                max_outer: s.max_outer.unwrap_or(50),
                max_inner: s.max_inner.unwrap_or(20_000),
                omega,
                inner,
                ordering: s.ordering.unwrap_or_default(),
                tol_region,
            };
            Ok(Solver::Impulse(
                ImpulseProblem::new(model, impact, k, grid).with_closure(closure),
                settings,
            ))
        }
        SolverKind::Singular => {
            if s.k.is_some_and(|k| k != 0.0) {
                return Err(source.error("solver", "k", "the singular problem has no fixed cost"));
            }
            if s.ordering.is_some() || s.max_inner.is_some() {
                let key = if s.ordering.is_some() { "ordering" } else { "max_inner" };
                return Err(source.error("solver", key, "applies to the impulse solver only"));
            }
            let settings = SingularSettings {
                tol,
                max_outer: s.max_outer.unwrap_or(50),
                max_iter: s.max_iter.unwrap_or(200_000),
                omega,
                inner,
                tol_region,
            };
            Ok(Solver::Singular(
                SingularProblem::new(model, impact, grid).with_closure(closure),
                settings,
            ))
        }
    }
}

fn build_sim(source: &Source, s: &SimSection, beta: f64) -> Result<SimSpec, CliError> {
    let paths = s.paths.unwrap_or(10_000);
    if paths < 100 {
        return Err(source.error("sim", "paths", format!("need at least 100 paths, got {paths}")));
    }
    let dt = positive(source, "sim", "dt", s.dt.unwrap_or(1e-3 / beta))?;
    let horizon = positive(source, "sim", "horizon", s.horizon.unwrap_or(25.0 / beta))?;
    if beta * horizon < 20.0 {
        return Err(source.error("sim", "horizon", format!("beta * horizon must be at least 20, got {}", beta * horizon)));
    }
    let u_cap = positive(source, "sim", "u_cap", s.u_cap.unwrap_or(1e4))?;
    let strategy = s.strategy.unwrap_or_default();
    let rate = match (strategy, s.rate) {
        (Strategy::ConstantRate, None) => {
            return Err(source.error("sim", "rate", "missing key (required for sim.strategy = \"constant_rate\")"))
        }
        (_, Some(r)) => Some(positive(source, "sim", "rate", r)?),
        (_, None) => None,
    };
    Ok(SimSpec {
        config: SimConfig {
            n_paths: paths,
            dt,
            horizon,
            seed: s.seed.unwrap_or(0),
            antithetic: s.antithetic.unwrap_or(false),
            growth_constant: None,
        },
        u_cap,
        strategy,
        rate,
    })
}

fn check_sweep(source: &Source, sweep: &SweepSection, cfg: &RunConfig) -> Result<(), CliError> {
    if !SWEEPABLE.contains(&sweep.parameter.as_str()) {
        return Err(source.error(
            "sweep",
            "parameter",
            format!("unknown parameter {:?}; expected one of {}", sweep.parameter, SWEEPABLE.join(", ")),
        ));
    }
    if sweep.values.is_empty() {
        return Err(source.error("sweep", "values", "must not be empty"));
    }
    if sweep.values.windows(2).any(|w| !(w[1] > w[0])) || sweep.values.iter().any(|v| !v.is_finite()) {
        return Err(source.error("sweep", "values", "must be finite and strictly increasing"));
    }
    if sweep.parameter == "solver.k" && cfg.solver.as_ref().map(|s| s.kind) != Some(SolverKind::Impulse) {
        return Err(source.error("sweep", "parameter", "solver.k can only be swept for the impulse solver"));
    }
    Ok(())
}

/// Returns a copy of `cfg` with the sweep parameter set to `value`.
pub fn with_parameter(cfg: &RunConfig, parameter: &str, value: f64) -> RunConfig {
    let mut out = cfg.clone();
    match parameter {
        "model.mu" => out.model.as_mut().map(|m| m.mu = Some(value)),
        "model.sigma" => out.model.as_mut().map(|m| m.sigma = Some(value)),
        "model.beta" => out.model.as_mut().map(|m| m.beta = Some(value)),
        "model.rate" => out.model.as_mut().map(|m| m.rate = Some(value)),
        "model.mean" => out.model.as_mut().map(|m| m.mean = Some(value)),
        "impact.lambda" => out.impact.as_mut().map(|i| i.lambda = Some(value)),
        "solver.k" => out.solver.as_mut().map(|s| s.k = Some(value)),
        _ => None,
    };
    out
}

/// Validates `cfg` and builds the core objects it describes.
pub fn resolve(cfg: &RunConfig, source: &Source) -> Result<Resolved, CliError> {
    let probe = match cfg.run.probe {
        Some([x, p]) if x > 0.0 && p > 0.0 && x.is_finite() && p.is_finite() => State::new(x, p),
        Some(_) => return Err(source.error("run", "probe", "both coordinates must be positive")),
        None => State::new(5.0, 2.0),
    };
    let (grid, closure) = build_grid(source, &cfg.grid.clone().unwrap_or_default(), probe)?;
    let out_dir = PathBuf::from(cfg.output.as_ref().and_then(|o| o.dir.clone()).unwrap_or_else(|| "out".into()));

    let needs_problem = cfg.run.kind != RunKind::Validate;
    let solver = if needs_problem {
        let model_sec = cfg.model.as_ref().ok_or_else(|| source.error("model", "kind", "missing section [model]"))?;
        let impact_sec = cfg.impact.as_ref().ok_or_else(|| source.error("impact", "kind", "missing section [impact]"))?;
        let model = build_model(source, model_sec)?;
        let impact = build_impact(source, impact_sec)?;
        let strategy = cfg.sim.as_ref().and_then(|s| s.strategy).unwrap_or_default();
        match (&cfg.solver, cfg.run.kind, strategy) {
            (Some(s), _, _) => Some(build_solver(source, s, model, impact, grid, closure)?),
            (None, RunKind::Simulate, Strategy::ConstantRate) => {
                // no solve needed; keep the model for the simulation
                Some(Solver::Singular(SingularProblem::new(model, impact, grid).with_closure(closure), SingularSettings::default()))
            }
            (None, _, _) => return Err(source.error("solver", "kind", "missing section [solver]")),
        }
    } else {
        None
    };

    let beta = solver.map(|s| s.model().beta()).unwrap_or(4.0);
    let sim = build_sim(source, &cfg.sim.clone().unwrap_or_default(), beta)?;

    let sweep = match cfg.run.kind {
        RunKind::Sweep => {
            let sweep = cfg.sweep.as_ref().ok_or_else(|| source.error("sweep", "parameter", "missing section [sweep]"))?;
            check_sweep(source, sweep, cfg)?;
            for &v in &sweep.values {
                let point = with_parameter(cfg, &sweep.parameter, v);
                let mut inner = point.clone();
                inner.run.kind = RunKind::Solve;
                // every point must be a valid problem on its own
                let section = sweep.parameter.split('.').next().unwrap_or("sweep");
                let key = sweep.parameter.split('.').nth(1).unwrap_or("values");
                resolve(&inner, source).map_err(|e| match e {
                    CliError::Config { message, .. } => source.error(section, key, format!("at sweep value {v}: {message}")),
                    other => other,
                })?;
            }
            Some(sweep.clone())
        }
        _ => None,
    };

    Ok(Resolved {
        kind: cfg.run.kind,
        probe,
        solver,
        grid,
        sim,
        sweep,
        out_dir,
    })
}

//! Dispatch of solve, simulate, sweep and validate runs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use optexec::analytic::constant_rate_revenue;
use optexec::grid::{Grid2D, ValueField};
use optexec::impact::ImpactModel;
use optexec::impulse::{solve_impulse, ImpulseProblem, ImpulseSettings, ImpulseSolution, SolveError, SolveReport};
use optexec::market::MarketModel;
use optexec::montecarlo::{simulate_constant_rate, simulate_impulse, simulate_singular_boundary, SimConfig, SimResult};
use optexec::singular::{solve_singular, SingularProblem, SingularSettings, SingularSolution};
use optexec::State;

use crate::config::{self, Resolved, RunConfig, RunKind, SimSpec, Solver, Source, Strategy};
use crate::error::CliError;
use crate::output::{self, PolicyView};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// How a run ended. Maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NotConverged,
    ValidationFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::ValidationFailed => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

pub fn execute(inv: &Invocation) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(&inv.config)
        .map_err(|e| CliError::io(format!("reading {}", inv.config.display()), e))?;
    let source = Source::new(inv.config.display().to_string(), text);
    let mut cfg = config::parse(&source)?;
    if let Some(seed) = inv.seed {
        cfg.sim.get_or_insert_with(Default::default).seed = Some(seed);
    }
    if let Some(out) = &inv.out {
        cfg.output.get_or_insert_with(Default::default).dir = Some(out.display().to_string());
    }
    let jobs = inv.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Run(format!("thread pool: {e}")))?;
    pool.install(|| execute_config(&cfg, &source))
}

/// Runs an already parsed config. `source` anchors validation messages.
pub fn execute_config(cfg: &RunConfig, source: &Source) -> Result<Outcome, CliError> {
    let resolved = config::resolve(cfg, source)?;
    let echo = toml::to_string(cfg).map_err(|e| CliError::Run(format!("config echo: {e}")))?;
    match resolved.kind {
        RunKind::Solve => run_solve(&resolved, &echo),
        RunKind::Simulate => run_simulate(&resolved, &echo),
        RunKind::Sweep => run_sweep(cfg, &resolved, source),
        RunKind::Validate => run_validate(&resolved),
    }
}

// ---------------------------------------------------------------------------
// Solving

#[derive(Debug, Clone)]
pub enum Solved {
    Impulse(ImpulseSolution<f64>),
    Singular(SingularSolution<f64>),
}

impl Solved {
    pub fn value(&self) -> &ValueField<f64> {
        match self {
            Solved::Impulse(s) => &s.value,
            Solved::Singular(s) => &s.value,
        }
    }

    pub fn report(&self) -> &SolveReport {
        match self {
            Solved::Impulse(s) => &s.report,
            Solved::Singular(s) => &s.report,
        }
    }

    pub fn policy(&self) -> PolicyView<'_> {
        match self {
            Solved::Impulse(s) => PolicyView::Impulse(&s.policy),
            Solved::Singular(s) => PolicyView::Singular(&s.policy),
        }
    }
}

fn unwrap_partial<S: std::fmt::Debug>(r: Result<S, SolveError<S>>) -> Result<S, CliError> {
    match r {
        Ok(s) => Ok(s),
        Err(SolveError::NotConverged { partial, .. }) => Ok(*partial),
        Err(e) => Err(CliError::Run(e.to_string())),
    }
}

/// Solves and keeps the partial iterate when the budget runs out; check
/// `report().converged`.
pub fn solve(solver: &Solver) -> Result<Solved, CliError> {
    match solver {
        Solver::Impulse(p, s) => unwrap_partial(solve_impulse(p, s)).map(Solved::Impulse),
        Solver::Singular(p, s) => unwrap_partial(solve_singular(p, s)).map(Solved::Singular),
    }
}

#[derive(Serialize)]
struct Probe {
    x: f64,
    p: f64,
    value: f64,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    version: &'a str,
    solver: &'a str,
    status: Status,
    probe: Probe,
    report: &'a SolveReport,
    config: &'a str,
}

fn status_of(solved: &Solved) -> Status {
    if solved.report().converged {
        Status::Ok
    } else {
        Status::NotConverged
    }
}

/// Writes value.csv, regions.csv, free_boundary.csv (singular) and report.json.
fn write_solution(dir: &Path, solver: &Solver, solved: &Solved, probe: State<f64>, echo: &str) -> Result<Vec<PathBuf>, CliError> {
    let grid = solver.grid();
    let policy = solved.policy();
    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<(), CliError> {
        let path = dir.join(name);
        output::write_atomic(&path, body.as_bytes())?;
        files.push(path);
        Ok(())
    };
    put("value.csv", output::value_csv(grid, solved.value(), &policy))?;
    put("regions.csv", output::regions_csv(grid, &policy))?;
    if let Solved::Singular(s) = solved {
        put("free_boundary.csv", output::free_boundary_csv(&s.policy.free_boundary))?;
    }
    let report = ReportFile {
        version: VERSION,
        solver: match solved {
            Solved::Impulse(_) => "impulse",
            Solved::Singular(_) => "singular",
        },
        status: status_of(solved),
        probe: Probe {
            x: probe.x,
            p: probe.p,
            value: solved.value().interp(grid, probe),
        },
        report: solved.report(),
        config: echo,
    };
    let path = dir.join("report.json");
    output::write_json(&path, &report)?;
    files.push(path);
    Ok(files)
}

fn solver_of(r: &Resolved) -> Result<&Solver, CliError> {
    r.solver.as_ref().ok_or_else(|| CliError::Run("no solver configured".into()))
}

pub fn run_solve(r: &Resolved, echo: &str) -> Result<Outcome, CliError> {
    let solver = solver_of(r)?;
    let solved = solve(solver)?;
    let files = write_solution(&r.out_dir, solver, &solved, r.probe, echo)?;
    let status = status_of(&solved);
    let report = solved.report();
    Ok(Outcome {
        status,
        files,
        summary: format!(
            "V({}, {}) = {:.6}; outer passes {}, residual {:.2e}{}",
            r.probe.x,
            r.probe.p,
            solved.value().interp(solver.grid(), r.probe),
            report.outer_stops,
            report.residual,
            if report.converged { "" } else { "; warning: not converged" }
        ),
    })
}

// ---------------------------------------------------------------------------
// Simulation

#[derive(Serialize)]
struct SimulationFile {
    #[serde(flatten)]
    result: SimResult<f64>,
    strategy: Strategy,
    solver_value: Option<f64>,
}

/// Simulates the configured strategy from the probe. Returns the result and
/// the solver value it should be compared with, when there is one.
pub fn simulate(solver: &Solver, solved: Option<&Solved>, sim: &SimSpec, y0: State<f64>) -> Result<SimResult<f64>, CliError> {
    let run = match (sim.strategy, solved) {
        (Strategy::ConstantRate, _) => {
            let rate = sim.rate.ok_or_else(|| CliError::Run("constant-rate strategy needs sim.rate".into()))?;
            simulate_constant_rate(solver.model(), solver.impact(), y0, rate, &sim.config)
        }
        (Strategy::Policy, Some(Solved::Impulse(s))) => {
            let Solver::Impulse(p, _) = solver else { unreachable!() };
            simulate_impulse(p, &s.policy, y0, &sim.config)
        }
        (Strategy::Policy, Some(Solved::Singular(s))) => {
            let Solver::Singular(p, _) = solver else { unreachable!() };
            simulate_singular_boundary(p, &s.policy, y0, &sim.config, sim.u_cap)
        }
        (Strategy::Policy, None) => return Err(CliError::Run("policy simulation needs a solved policy".into())),
    };
    run.map_err(|e| CliError::Run(e.to_string()))
}

pub fn run_simulate(r: &Resolved, echo: &str) -> Result<Outcome, CliError> {
    let solver = solver_of(r)?;
    let mut files = Vec::new();
    let (solved, status) = match r.sim.strategy {
        Strategy::Policy => {
            let solved = solve(solver)?;
            files.extend(write_solution(&r.out_dir, solver, &solved, r.probe, echo)?);
            let status = status_of(&solved);
            (Some(solved), status)
        }
        Strategy::ConstantRate => (None, Status::Ok),
    };
    let result = simulate(solver, solved.as_ref(), &r.sim, r.probe)?;
    let solver_value = solved.as_ref().map(|s| s.value().interp(solver.grid(), r.probe));
    let path = r.out_dir.join("simulation.json");
    output::write_json(
        &path,
        &SimulationFile {
            result,
            strategy: r.sim.strategy,
            solver_value,
        },
    )?;
    files.push(path);
    Ok(Outcome {
        status,
        files,
        summary: format!(
            "mean {:.6} ± {:.6} over {} paths{}",
            result.mean,
            result.half_width_95,
            result.n_paths,
            solver_value.map(|v| format!("; solver value {v:.6}")).unwrap_or_default()
        ),
    })
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub parameter_value: f64,
    pub value_at_probe: Option<f64>,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    NotConverged,
    Failed,
}

impl PointStatus {
    fn as_str(self) -> &'static str {
        match self {
            PointStatus::Converged => "converged",
            PointStatus::NotConverged => "not_converged",
            PointStatus::Failed => "failed",
        }
    }
}

/// Shape of `V_at_probe` over the converged points.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub parameter: String,
    pub trend: Trend,
    /// Parameter value with the largest probe value.
    pub argmax: Option<f64>,
    /// The maximum is attained strictly inside the sampled ladder.
    pub interior_maximum: bool,
    pub excluded: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    StrictlyIncreasing,
    NonDecreasing,
    StrictlyDecreasing,
    NonIncreasing,
    Constant,
    Mixed,
}

pub fn trend(values: &[f64]) -> Trend {
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let (up, down, flat) = steps.iter().fold((0, 0, 0), |(u, d, f), &s| match s {
        s if s > 0.0 => (u + 1, d, f),
        s if s < 0.0 => (u, d + 1, f),
        _ => (u, d, f + 1),
    });
    match (up, down, flat) {
        (_, 0, 0) if up > 0 => Trend::StrictlyIncreasing,
        (0, _, 0) if down > 0 => Trend::StrictlyDecreasing,
        (0, 0, _) => Trend::Constant,
        (_, 0, _) => Trend::NonDecreasing,
        (0, _, _) => Trend::NonIncreasing,
        _ => Trend::Mixed,
    }
}

pub fn summarize(parameter: &str, points: &[SweepPoint]) -> SweepSummary {
    let good: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.status == PointStatus::Converged)
        .filter_map(|p| p.value_at_probe.map(|v| (p.parameter_value, v)))
        .collect();
    let values: Vec<f64> = good.iter().map(|g| g.1).collect();
    let best = (0..good.len()).max_by(|&a, &b| good[a].1.total_cmp(&good[b].1));
    SweepSummary {
        parameter: parameter.to_string(),
        trend: trend(&values),
        argmax: best.map(|b| good[b].0),
        interior_maximum: best.is_some_and(|b| b > 0 && b + 1 < good.len() && values[b] > values[0] && values[b] > values[good.len() - 1]),
        excluded: points
            .iter()
            .filter(|p| p.status != PointStatus::Converged)
            .map(|p| p.parameter_value)
            .collect(),
    }
}

fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(output::SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let cell = |v: Option<f64>| v.map(output::num).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            output::num(p.parameter_value),
            cell(p.value_at_probe),
            p.iterations,
            cell(p.residual),
            p.status.as_str()
        ));
    }
    out
}

fn sweep_point(cfg: &RunConfig, source: &Source, parameter: &str, value: f64, dir: &Path) -> Result<SweepPoint, CliError> {
    let mut point_cfg = config::with_parameter(cfg, parameter, value);
    point_cfg.run.kind = RunKind::Solve;
    point_cfg.sweep = None;
    let resolved = config::resolve(&point_cfg, source)?;
    let solver = solver_of(&resolved)?;
    let echo = toml::to_string(&point_cfg).map_err(|e| CliError::Run(e.to_string()))?;
    let solved = solve(solver)?;
    write_solution(dir, solver, &solved, resolved.probe, &echo)?;
    let report = solved.report();
    Ok(SweepPoint {
        parameter_value: value,
        value_at_probe: Some(solved.value().interp(solver.grid(), resolved.probe)),
        iterations: report.iterations,
        residual: Some(report.residual),
        status: if report.converged {
            PointStatus::Converged
        } else {
            PointStatus::NotConverged
        },
    })
}

/// One solve per sweep value, in parallel on the current rayon pool. Each
/// point's files go to `points/NNN/`.
pub fn run_sweep(cfg: &RunConfig, r: &Resolved, source: &Source) -> Result<Outcome, CliError> {
    let sweep = r.sweep.as_ref().ok_or_else(|| CliError::Run("no sweep configured".into()))?;
    let points: Vec<SweepPoint> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(n, &value)| {
            let dir = r.out_dir.join("points").join(format!("{n:03}"));
            sweep_point(cfg, source, &sweep.parameter, value, &dir).unwrap_or(SweepPoint {
                parameter_value: value,
                value_at_probe: None,
                iterations: 0,
                residual: None,
                status: PointStatus::Failed,
            })
        })
        .collect();
    let summary = summarize(&sweep.parameter, &points);
    let csv = r.out_dir.join("sweep.csv");
    output::write_atomic(&csv, sweep_csv(&points).as_bytes())?;
    let json = r.out_dir.join("sweep_summary.json");
    output::write_json(&json, &summary)?;
    let status = if summary.excluded.is_empty() {
        Status::Ok
    } else {
        Status::NotConverged
    };
    Ok(Outcome {
        status,
        files: vec![csv, json],
        summary: format!(
            "{} points over {}: trend {:?}, argmax {:?}",
            points.len(),
            sweep.parameter,
            summary.trend,
            summary.argmax
        ),
    })
}

// ---------------------------------------------------------------------------
// Validation battery

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold: Some(threshold),
            detail,
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: measured >= threshold,
            measured,
            threshold: Some(threshold),
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ValidateFile {
    version: &'static str,
    nx: usize,
    np: usize,
    seed: u64,
    all_passed: bool,
    checks: Vec<Check>,
}

/// `max |V − W| / max |W|` over nodes with `x > 0` and `p` below the top row.
pub fn sup_relative_error(value: &ValueField<f64>, grid: &Grid2D<f64>, impact: &ImpactModel<f64>) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for i in 1..=grid.nx() {
        for j in 1..grid.np() {
            let w = impact.liquidation_value(State::new(grid.x(i), grid.p(j)));
            diff = diff.max((value.get(i, j) - w).abs());
            scale = scale.max(w.abs());
        }
    }
    diff / scale
}

fn validation_model() -> (MarketModel<f64>, ImpactModel<f64>) {
    (
        MarketModel::gbm(2.0, 1.0, 4.0).expect("valid gbm"),
        ImpactModel::exponential(0.5).expect("valid impact"),
    )
}

fn impulse_value(grid: Grid2D<f64>, impact: ImpactModel<f64>, k: f64) -> Result<ImpulseSolution<f64>, CliError> {
    let (model, _) = validation_model();
    unwrap_partial(solve_impulse(&ImpulseProblem::new(model, impact, k, grid), &ImpulseSettings::default()))
}

fn singular_value(grid: Grid2D<f64>) -> Result<SingularSolution<f64>, CliError> {
    let (model, impact) = validation_model();
    unwrap_partial(solve_singular(&SingularProblem::new(model, impact, grid), &SingularSettings::default()))
}

fn doubled(grid: &Grid2D<f64>) -> Result<Grid2D<f64>, CliError> {
    Grid2D::new(grid.x_max(), grid.p_max(), 2 * grid.nx(), 2 * grid.np()).map_err(|e| CliError::Run(e.to_string()))
}

/// The bundled battery on the fixed GBM case (λ = 0.5, μ = 2, σ = 1, β = 4)
/// using the configured grid and simulation settings.
pub fn validation_checks(grid: &Grid2D<f64>, sim: &SimConfig<f64>, probe: State<f64>) -> Result<Vec<Check>, CliError> {
    let (model, impact) = validation_model();
    let fine = doubled(grid)?;
    let mut checks = Vec::new();

    let imp = impulse_value(*grid, impact, 0.0)?;
    let imp_fine = impulse_value(fine, impact, 0.0)?;
    let sing = singular_value(*grid)?;
    let sing_fine = singular_value(fine)?;
    let e = [
        sup_relative_error(&imp.value, grid, &impact),
        sup_relative_error(&imp_fine.value, &fine, &impact),
        sup_relative_error(&sing.value, grid, &impact),
        sup_relative_error(&sing_fine.value, &fine, &impact),
    ];
    checks.push(Check::at_most("impulse_vs_w", e[0], 0.02, "sup-relative error of the k = 0 impulse value against W".into()));
    checks.push(Check::at_most("singular_vs_w", e[2], 0.02, "sup-relative error of the singular value against W".into()));
    checks.push(Check::at_least(
        "impulse_refinement",
        e[0] / e[1],
        1.5,
        format!("error ratio under grid doubling ({:.3e} -> {:.3e})", e[0], e[1]),
    ));
    checks.push(Check::at_least(
        "singular_refinement",
        e[2] / e[3],
        1.5,
        format!("error ratio under grid doubling ({:.3e} -> {:.3e})", e[2], e[3]),
    ));

    let gap = |a: &ValueField<f64>, b: &ValueField<f64>, g: &Grid2D<f64>| {
        let (mut d, mut s) = (0.0f64, 0.0f64);
        for i in 1..=g.nx() {
            for j in 1..g.np() {
                d = d.max((a.get(i, j) - b.get(i, j)).abs());
                s = s.max(b.get(i, j).abs());
            }
        }
        d / s
    };
    let agree = gap(&imp.value, &sing.value, grid);
    let agree_fine = gap(&imp_fine.value, &sing_fine.value, &fine);
    checks.push(Check::at_most(
        "impulse_singular_agreement",
        agree,
        0.02,
        format!("sup-relative gap between k = 0 impulse and singular values; {agree_fine:.3e} on the doubled grid"),
    ));

    let v0 = sing.value.interp(grid, probe);
    let ladder = [0.4, 0.2, 0.1, 0.05, 0.025];
    let vk = ladder
        .iter()
        .map(|&k| impulse_value(*grid, impact, k).map(|s| s.value.interp(grid, probe)))
        .collect::<Result<Vec<_>, _>>()?;
    let increasing = vk.windows(2).all(|w| w[1] > w[0]);
    let gaps: Vec<f64> = vk.iter().map(|v| (v0 - v).abs()).collect();
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check {
        name: "k_ladder".into(),
        passed: increasing && shrinking,
        measured: gaps[gaps.len() - 1] / v0,
        threshold: None,
        detail: format!(
            "V^k at the probe for k = {ladder:?}: {vk:.5?}; gaps to the singular value {gaps:.4?} \
             must shrink; measured is the final relative gap"
        ),
    });

    let no_impact = impulse_value(*grid, ImpactModel::None, 0.0)?.value.interp(grid, probe);
    let exact = probe.x * probe.p;
    checks.push(Check::at_most(
        "no_impact_identity",
        (no_impact - exact).abs() / exact,
        0.02,
        format!("V = {no_impact:.6} against xp = {exact}"),
    ));

    // Monte Carlo checks. Bands are two 95% half-widths (about four standard
    // errors) so that a change of seed does not flip them.
    let analytic = constant_rate_revenue(&model, &impact, probe, 1.0).map_err(|e| CliError::Run(e.to_string()))?;
    let mc = simulate_constant_rate(&model, &impact, probe, 1.0, sim).map_err(|e| CliError::Run(e.to_string()))?;
    checks.push(Check::at_most(
        "mc_constant_rate",
        (mc.mean - analytic).abs(),
        2.0 * mc.half_width_95,
        format!("simulated {:.6} ± {:.6} against the closed form {analytic:.7} at rate 1", mc.mean, mc.half_width_95),
    ));

    let fig1 = ImpulseProblem::new(model, impact, 0.2, *grid);
    let fig1_sol = unwrap_partial(solve_impulse(&fig1, &ImpulseSettings::default()))?;
    let v = fig1_sol.value.interp(grid, probe);
    let mc = simulate_impulse(&fig1, &fig1_sol.policy, probe, sim).map_err(|e| CliError::Run(e.to_string()))?;
    checks.push(Check::at_most(
        "mc_impulse_policy",
        (mc.mean - v).abs(),
        (2.0 * mc.half_width_95).max(0.02 * v),
        format!("simulated k = 0.2 policy {:.6} ± {:.6} against V = {v:.6}", mc.mean, mc.half_width_95),
    ));

    let sp = SingularProblem::new(model, impact, *grid);
    let v = sing.value.interp(grid, probe);
    let mc = simulate_singular_boundary(&sp, &sing.policy, probe, sim, 1e4).map_err(|e| CliError::Run(e.to_string()))?;
    checks.push(Check::at_most(
        "mc_singular_boundary",
        (mc.mean - v).abs(),
        (2.0 * mc.half_width_95).max(0.02 * v),
        format!("simulated boundary tracking {:.6} ± {:.6} against V = {v:.6}", mc.mean, mc.half_width_95),
    ));

    let unconverged: Vec<&str> = [
        ("impulse", imp.report.converged),
        ("singular", sing.report.converged),
        ("fig1", fig1_sol.report.converged),
    ]
    .iter()
    .filter(|c| !c.1)
    .map(|c| c.0)
    .collect();
    checks.push(Check {
        name: "solver_convergence".into(),
        passed: unconverged.is_empty(),
        measured: unconverged.len() as f64,
        threshold: Some(0.0),
        detail: format!("solves that hit their budget: {unconverged:?}"),
    });
    Ok(checks)
}

pub fn run_validate(r: &Resolved) -> Result<Outcome, CliError> {
    let checks = validation_checks(&r.grid, &r.sim.config, r.probe)?;
    let all_passed = checks.iter().all(|c| c.passed);
    let failing: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let path = r.out_dir.join("validate.json");
    output::write_json(
        &path,
        &ValidateFile {
            version: VERSION,
            nx: r.grid.nx(),
            np: r.grid.np(),
            seed: r.sim.config.seed,
            all_passed,
            checks: checks.clone(),
        },
    )?;
    Ok(Outcome {
        status: if all_passed {
            Status::Ok
        } else {
            Status::ValidationFailed
        },
        files: vec![path],
        summary: if all_passed {
            format!("all {} checks passed", checks.len())
        } else {
            format!("failing checks: {}", failing.join(", "))
        },
    })
}

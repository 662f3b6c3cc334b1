//! Impulse control with a fixed cost per trade: the quasi-variational
//! inequality `min{βV − AV, V − MV} = 0`.
//!
//! The generator acts only along `p`, and every trade strictly lowers `x`.
//! So the obstacle `MV` at column `i` depends only on columns `i' < i`.
//! A Gauss-Seidel pass in increasing `x` therefore reaches the discrete
//! solution in one pass when each column is solved exactly. A second pass
//! confirms it. The Jacobi ordering is the textbook iterated optimal
//! stopping `V_{n+1} = OS(MV_n)` and is kept as an independent route.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{continuation_rows, resolvent, store_column, TopRow};
use crate::grid::{build_generator, Grid2D, Region, UpperClosure, ValueField};
use crate::impact::ImpactModel;
use crate::lcp::{ColumnLcp, Row};
use crate::market::MarketModel;
use crate::{Real, State};

pub const UNIQUENESS_WARNING: &str = "uniqueness not guaranteed: k = 0";

/// Failure modes shared by both solvers. `S` is the partial solution handed
/// back when the budget runs out.
#[derive(Debug, Error)]
pub enum SolveError<S: fmt::Debug> {
    #[error("relaxation factor must lie in (0, 2), got {0}")]
    InvalidRelaxation(f64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("not converged: residual {residual:e}")]
    NotConverged { residual: f64, partial: Box<S> },
    #[error("degenerate stencil at node ({i}, {j})")]
    DegenerateStencil { i: usize, j: usize },
}

/// Column complementarity solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Policy iteration with a direct tridiagonal solve per policy.
    #[default]
    Howard,
    /// Projected successive over-relaxation.
    Psor,
}

/// Order in which the obstacle is refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Column by column, each obstacle built from already updated columns.
    #[default]
    GaussSeidel,
    /// Whole obstacle frozen from the previous outer iterate.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseProblem<T> {
    pub model: MarketModel<T>,
    pub impact: ImpactModel<T>,
    pub k: T,
    pub grid: Grid2D<T>,
    pub closure: UpperClosure,
}

impl<T: Real> ImpulseProblem<T> {
    pub fn new(model: MarketModel<T>, impact: ImpactModel<T>, k: T, grid: Grid2D<T>) -> Self {
        Self {
            model,
            impact,
            k,
            grid,
            closure: UpperClosure::Trade,
        }
    }

    pub fn with_closure(mut self, closure: UpperClosure) -> Self {
        self.closure = closure;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseSettings<T> {
    /// Sup-norm change between outer passes that counts as converged.
    pub tol: T,
    pub max_outer: usize,
    /// Howard iterations or PSOR sweeps per column.
    pub max_inner: usize,
    pub omega: T,
    pub inner: InnerSolver,
    pub ordering: Ordering,
    /// Slack in `MV ≥ V − tol_region` when flagging trade nodes.
    pub tol_region: T,
}

impl<T: Real> Default for ImpulseSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-7),
            max_outer: 50,
            max_inner: 20_000,
            omega: T::of(1.5),
            inner: InnerSolver::Howard,
            ordering: Ordering::GaussSeidel,
            tol_region: T::of(1e-4),
        }
    }
}

/// Optimal trade size and region flag per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsePolicy<T> {
    pub nx: usize,
    pub np: usize,
    pub zeta_star: Vec<T>,
    pub region: Vec<Region>,
}

impl<T: Real> ImpulsePolicy<T> {
    pub fn zeta(&self, i: usize, j: usize) -> T {
        self.zeta_star[i * (self.np + 1) + j]
    }

    pub fn region(&self, i: usize, j: usize) -> Region {
        self.region[i * (self.np + 1) + j]
    }

    pub fn matches(&self, grid: &Grid2D<T>) -> bool {
        self.nx == grid.nx() && self.np == grid.np()
    }

    /// Policy that never trades.
    pub fn never(grid: &Grid2D<T>) -> Self {
        Self {
            nx: grid.nx(),
            np: grid.np(),
            zeta_star: vec![T::zero(); grid.len()],
            region: vec![Region::Continue; grid.len()],
        }
    }

    /// Policy that sells the whole position at every node with `x > 0`.
    pub fn sell_all(grid: &Grid2D<T>) -> Self {
        let mut policy = Self::never(grid);
        for i in 1..=grid.nx() {
            for j in 0..=grid.np() {
                let idx = grid.index(i, j);
                policy.zeta_star[idx] = grid.x(i);
                policy.region[idx] = Region::Trade;
            }
        }
        policy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Inner iterations summed over all columns and passes.
    pub iterations: usize,
    /// Outer passes performed.
    pub outer_stops: usize,
    /// Worst normalised complementarity residual on interior nodes.
    pub residual: f64,
    /// Sup-norm change of the last outer pass.
    pub last_change: f64,
    pub wall_time: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ImpulseSolution<T> {
    pub value: ValueField<T>,
    pub policy: ImpulsePolicy<T>,
    pub report: SolveReport,
}

/// Best strictly positive trade at `(i, j)`: `max_{m ≥ 1} φ(x_i − m hx, α) + m hx α − k`.
/// Returns `None` when `x_i = 0`.
fn best_trade<T: Real>(phi: &ValueField<T>, problem: &ImpulseProblem<T>, i: usize, j: usize) -> Option<(T, usize)> {
    let grid = &problem.grid;
    let p = grid.p(j);
    let mut best: Option<(T, usize)> = None;
    for m in 1..=i {
        let zeta = grid.x(m);
        let after = problem.impact.alpha(zeta, p);
        let value = phi.interp_p(grid, i - m, after) + zeta * after - problem.k;
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, m));
        }
    }
    best
}

/// `Mφ(y)` over the ladder `ζ ∈ {0, hx, …, x_i}`, with the smallest maximising
/// `ζ` on ties.
pub fn intervention_operator<T: Real>(
    phi: &ValueField<T>,
    problem: &ImpulseProblem<T>,
    node: (usize, usize),
) -> (T, T) {
    let (i, j) = node;
    let stay = phi.get(i, j) - problem.k;
    match best_trade(phi, problem, i, j) {
        Some((value, m)) if value > stay => (value, problem.grid.x(m)),
        _ => (stay, T::zero()),
    }
}

/// Flags each node Trade when a positive trade attains the value within
/// `tol_region`, recording the smallest maximising trade size.
///
/// `ζ = 0` is excluded here: it would make every node a trade node at `k = 0`
/// while prescribing no action.
pub fn extract_regions<T: Real>(value: &ValueField<T>, problem: &ImpulseProblem<T>, tol_region: T) -> ImpulsePolicy<T> {
    let grid = &problem.grid;
    let mut policy = ImpulsePolicy::never(grid);
    for i in 1..=grid.nx() {
        for j in 1..=grid.np() {
            if let Some((mv, m)) = best_trade(value, problem, i, j) {
                if mv >= value.get(i, j) - tol_region {
                    let idx = grid.index(i, j);
                    policy.region[idx] = Region::Trade;
                    policy.zeta_star[idx] = grid.x(m);
                }
            }
        }
    }
    policy
}

/// Worst `|min{(βI − A)V, V − MV}| / (1 + |V|)` over interior nodes. When both
/// factors are non-negative this is the complementarity gap, otherwise it
/// bounds the violation.
pub fn qvi_residual<T: Real>(value: &ValueField<T>, problem: &ImpulseProblem<T>) -> T {
    let grid = &problem.grid;
    let generator = build_generator(&problem.model, grid);
    let beta = problem.model.beta();
    let mut worst = T::zero();
    for i in 1..=grid.nx() {
        for j in 1..grid.np() {
            let v = value.get(i, j);
            let a = resolvent(value, &generator, beta, i, j);
            let (mv, _) = intervention_operator(value, problem, (i, j));
            let b = v - mv;
            worst = worst.max(a.min(b).abs() / (T::one() + v.abs()));
        }
    }
    worst
}

fn validate<T: Real>(problem: &ImpulseProblem<T>, settings: &ImpulseSettings<T>) -> Result<(), String> {
    if !(problem.k >= T::zero()) || !problem.k.is_finite() {
        return Err(format!("fixed cost must be non-negative, got {}", problem.k));
    }
    if !(settings.tol > T::zero()) {
        return Err("tolerance must be positive".into());
    }
    if settings.max_outer == 0 || settings.max_inner == 0 {
        return Err("iteration budgets must be positive".into());
    }
    if settings.inner == InnerSolver::Psor && problem.closure == UpperClosure::LinearExtrapolation {
        return Err("linear extrapolation at p_max breaks the M-matrix structure PSOR needs; use howard".into());
    }
    Ok(())
}

fn top_row<T: Real>(problem: &ImpulseProblem<T>, source: &ValueField<T>, i: usize) -> TopRow<T> {
    let grid = &problem.grid;
    match problem.closure {
        UpperClosure::DirichletW => {
            TopRow::fixed(problem.impact.liquidation_value(State::new(grid.x(i), grid.p_max())))
        }
        UpperClosure::LinearExtrapolation => TopRow::Extrapolate,
        UpperClosure::Trade => {
            // the obstacle at the top only reads earlier columns
            let (mv, _) = best_trade(source, problem, i, grid.np()).expect("x > 0");
            TopRow::fixed(mv.max(T::zero()))
        }
    }
}

pub(crate) fn check_omega<T: Real>(omega: T) -> Result<(), f64> {
    if omega > T::zero() && omega < T::of(2.0) {
        Ok(())
    } else {
        Err(omega.as_f64())
    }
}

/// Solves the impulse-control QVI. The initial iterate is the liquidation
/// value field.
pub fn solve_impulse<T: Real>(
    problem: &ImpulseProblem<T>,
    settings: &ImpulseSettings<T>,
) -> Result<ImpulseSolution<T>, SolveError<ImpulseSolution<T>>> {
    check_omega(settings.omega).map_err(SolveError::InvalidRelaxation)?;
    validate(problem, settings).map_err(SolveError::InvalidProblem)?;
    let start = Instant::now();
    let grid = &problem.grid;
    let (nx, np) = (grid.nx(), grid.np());
    let generator = build_generator(&problem.model, grid);
    let beta = problem.model.beta();

    let mut value = ValueField::liquidation(grid, &problem.impact);
    value.zero_boundary();
    let mut active = vec![vec![false; np - 1]; nx + 1];
    let mut lcp = ColumnLcp::with_len(np - 1);
    let mut interior = vec![T::zero(); np - 1];

    let mut iterations = 0;
    let mut outer = 0;
    let mut last_change = T::infinity();
    let mut converged = false;
    while outer < settings.max_outer {
        outer += 1;
        let frozen = match settings.ordering {
            Ordering::Jacobi => Some(value.clone()),
            Ordering::GaussSeidel => None,
        };
        let mut change = T::zero();
        let mut inner_ok = true;
        for i in 1..=nx {
            let source = frozen.as_ref().unwrap_or(&value);
            for j in 1..np {
                // i ≥ 1, so at least one positive trade exists
                let (obstacle, _) = best_trade(source, problem, i, j).expect("x > 0");
                lcp.intervention[j - 1] = Row::pin(obstacle);
            }
            let top = top_row(problem, source, i);
            continuation_rows(&mut lcp, &generator, beta, np, top);
            interior.copy_from_slice(&value.column(i)[1..np]);
            let outcome = match settings.inner {
                InnerSolver::Howard => lcp.solve_howard(&mut interior, &mut active[i], settings.max_inner),
                InnerSolver::Psor => lcp.solve_psor(&mut interior, settings.omega, settings.tol * T::of(0.01), settings.max_inner),
            };
            iterations += outcome.iterations;
            inner_ok &= outcome.converged;
            change = change.max(store_column(&mut value, i, &interior, top));
        }
        last_change = change;
        if change <= settings.tol && inner_ok {
            converged = true;
            break;
        }
    }

    let policy = extract_regions(&value, problem, settings.tol_region);
    let residual = qvi_residual(&value, problem);
    let mut warnings = Vec::new();
    if problem.k == T::zero() {
        warnings.push(UNIQUENESS_WARNING.to_string());
    }
    let solution = ImpulseSolution {
        value,
        policy,
        report: SolveReport {
            iterations,
            outer_stops: outer,
            residual: residual.as_f64(),
            last_change: last_change.as_f64(),
            wall_time: start.elapsed().as_secs_f64(),
            converged,
            warnings,
        },
    };
    if converged {
        Ok(solution)
    } else {
        Err(SolveError::NotConverged {
            residual: solution.report.residual,
            partial: Box::new(solution),
        })
    }
}

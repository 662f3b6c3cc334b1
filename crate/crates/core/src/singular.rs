//! Singular control without fixed cost: the variational inequality
//! `min{βV − AV, γ(p)V_p + V_x − p} = 0`.
//!
//! The gradient constraint is discretised with backward differences in both
//! `x` and `p`, since selling moves the state down in both. The trade row at
//! `(i, j)` then reads only `(i−1, j)` and `(i, j−1)`, so columns decouple in
//! the same way as in the impulse solver.

use std::time::Instant;

use crate::assembly::{continuation_rows, resolvent, store_column, TopRow};
use crate::grid::{build_generator, Grid2D, Region, UpperClosure, ValueField};
use crate::impact::ImpactModel;
use crate::impulse::{check_omega, InnerSolver, SolveError, SolveReport};
use crate::lcp::{ColumnLcp, Row};
use crate::market::MarketModel;
use crate::{Real, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularProblem<T> {
    pub model: MarketModel<T>,
    pub impact: ImpactModel<T>,
    pub grid: Grid2D<T>,
    pub closure: UpperClosure,
}

impl<T: Real> SingularProblem<T> {
    pub fn new(model: MarketModel<T>, impact: ImpactModel<T>, grid: Grid2D<T>) -> Self {
        Self {
            model,
            impact,
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
pub struct SingularSettings<T> {
    pub tol: T,
    pub max_outer: usize,
    /// Inner budget per column.
    pub max_iter: usize,
    pub omega: T,
    pub inner: InnerSolver,
    /// A node is Trade when its directional residual is at most this.
    pub tol_region: T,
}

impl<T: Real> Default for SingularSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-7),
            max_outer: 50,
            max_iter: 200_000,
            omega: T::of(1.5),
            inner: InnerSolver::Howard,
            tol_region: T::of(1e-4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPolicy<T> {
    pub nx: usize,
    pub np: usize,
    pub region: Vec<Region>,
    /// `(x, p*)` per column where a Continue-to-Trade transition exists.
    pub free_boundary: Vec<(T, T)>,
}

impl<T: Real> SingularPolicy<T> {
    pub fn region(&self, i: usize, j: usize) -> Region {
        self.region[i * (self.np + 1) + j]
    }

    pub fn matches(&self, grid: &Grid2D<T>) -> bool {
        self.nx == grid.nx() && self.np == grid.np()
    }
}

#[derive(Debug, Clone)]
pub struct SingularSolution<T> {
    pub value: ValueField<T>,
    pub policy: SingularPolicy<T>,
    pub report: SolveReport,
}

/// `γ(p) D_p⁻V + D_x⁻V − p` at `(i, j)`, with `i, j ≥ 1`.
pub fn directional_residual<T: Real>(value: &ValueField<T>, problem: &SingularProblem<T>, node: (usize, usize)) -> T {
    let (i, j) = node;
    let grid = &problem.grid;
    let p = grid.p(j);
    let v = value.get(i, j);
    let dp = (v - value.get(i, j - 1)) / grid.hp();
    let dx = (v - value.get(i - 1, j)) / grid.hx();
    problem.impact.marginal_impact(p) * dp + dx - p
}

/// Worst `|min{(βI − A)V, D V}| / (1 + |V|)` over interior nodes.
pub fn vi_residual<T: Real>(value: &ValueField<T>, problem: &SingularProblem<T>) -> T {
    let grid = &problem.grid;
    let generator = build_generator(&problem.model, grid);
    let beta = problem.model.beta();
    let mut worst = T::zero();
    for i in 1..=grid.nx() {
        for j in 1..grid.np() {
            let a = resolvent(value, &generator, beta, i, j);
            let b = directional_residual(value, problem, (i, j));
            worst = worst.max(a.min(b).abs() / (T::one() + value.get(i, j).abs()));
        }
    }
    worst
}

/// Per column, the midpoint of the lowest Continue-to-Trade step in `p`.
/// Empty when either region is empty.
pub fn extract_free_boundary<T: Real>(policy: &SingularPolicy<T>, grid: &Grid2D<T>) -> Vec<(T, T)> {
    let interior = |r: Region| {
        (1..=grid.nx()).any(|i| (1..=grid.np()).any(|j| policy.region(i, j) == r))
    };
    if !interior(Region::Trade) || !interior(Region::Continue) {
        return Vec::new();
    }
    let mut curve = Vec::new();
    for i in 1..=grid.nx() {
        let step = (1..grid.np())
            .find(|&j| policy.region(i, j) == Region::Continue && policy.region(i, j + 1) == Region::Trade);
        if let Some(j) = step {
            curve.push((grid.x(i), (grid.p(j) + grid.p(j + 1)) * T::of(0.5)));
        }
    }
    curve
}

pub fn extract_regions<T: Real>(value: &ValueField<T>, problem: &SingularProblem<T>, tol_region: T) -> SingularPolicy<T> {
    let grid = &problem.grid;
    let mut region = vec![Region::Continue; grid.len()];
    for i in 1..=grid.nx() {
        for j in 1..=grid.np() {
            if directional_residual(value, problem, (i, j)) <= tol_region {
                region[grid.index(i, j)] = Region::Trade;
            }
        }
    }
    let mut policy = SingularPolicy {
        nx: grid.nx(),
        np: grid.np(),
        region,
        free_boundary: Vec::new(),
    };
    policy.free_boundary = extract_free_boundary(&policy, grid);
    policy
}

/// Trade row `(g + 1/hx) v_j − g v_{j−1} = V(i−1, j)/hx + p_j`, `g = γ(p_j)/hp`.
fn trade_row<T: Real>(problem: &SingularProblem<T>, left: &[T], j: usize) -> Row<T> {
    let grid = &problem.grid;
    let g = problem.impact.marginal_impact(grid.p(j)) / grid.hp();
    let inv_hx = T::one() / grid.hx();
    Row {
        lower: -g,
        diag: g + inv_hx,
        upper: T::zero(),
        rhs: left[j] * inv_hx + grid.p(j),
    }
}

fn top_row<T: Real>(problem: &SingularProblem<T>, left: &[T], i: usize) -> TopRow<T> {
    let grid = &problem.grid;
    match problem.closure {
        UpperClosure::DirichletW => {
            TopRow::fixed(problem.impact.liquidation_value(State::new(grid.x(i), grid.p_max())))
        }
        UpperClosure::LinearExtrapolation => TopRow::Extrapolate,
        UpperClosure::Trade => {
            let row = trade_row(problem, left, grid.np());
            TopRow::Affine {
                coef: -row.lower / row.diag,
                offset: row.rhs / row.diag,
            }
        }
    }
}

pub fn solve_singular<T: Real>(
    problem: &SingularProblem<T>,
    settings: &SingularSettings<T>,
) -> Result<SingularSolution<T>, SolveError<SingularSolution<T>>> {
    check_omega(settings.omega).map_err(SolveError::InvalidRelaxation)?;
    if !(settings.tol > T::zero()) || settings.max_outer == 0 || settings.max_iter == 0 {
        return Err(SolveError::InvalidProblem("tolerance and budgets must be positive".into()));
    }
    if settings.inner == InnerSolver::Psor && problem.closure == UpperClosure::LinearExtrapolation {
        return Err(SolveError::InvalidProblem(
            "linear extrapolation at p_max breaks the M-matrix structure PSOR needs; use howard".into(),
        ));
    }
    let start = Instant::now();
    let grid = &problem.grid;
    let (nx, np) = (grid.nx(), grid.np());
    let generator = build_generator(&problem.model, grid);
    let beta = problem.model.beta();

    let mut value = ValueField::liquidation(grid, &problem.impact);
    value.zero_boundary();
    let mut active = vec![vec![true; np - 1]; nx + 1];
    let mut lcp = ColumnLcp::with_len(np - 1);
    let mut interior = vec![T::zero(); np - 1];

    let mut iterations = 0;
    let mut outer = 0;
    let mut last_change = T::infinity();
    let mut converged = false;
    while outer < settings.max_outer {
        outer += 1;
        let mut change = T::zero();
        let mut inner_ok = true;
        for i in 1..=nx {
            let left = value.column(i - 1).to_vec();
            for j in 1..np {
                lcp.intervention[j - 1] = trade_row(problem, &left, j);
            }
            let top = top_row(problem, &left, i);
            continuation_rows(&mut lcp, &generator, beta, np, top);
            interior.copy_from_slice(&value.column(i)[1..np]);
            let outcome = match settings.inner {
                InnerSolver::Howard => lcp.solve_howard(&mut interior, &mut active[i], settings.max_iter),
                InnerSolver::Psor => lcp.solve_psor(&mut interior, settings.omega, settings.tol * T::of(0.01), settings.max_iter),
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
    let residual = vi_residual(&value, problem);
    let solution = SingularSolution {
        value,
        policy,
        report: SolveReport {
            iterations,
            outer_stops: outer,
            residual: residual.as_f64(),
            last_change: last_change.as_f64(),
            wall_time: start.elapsed().as_secs_f64(),
            converged,
            warnings: Vec::new(),
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

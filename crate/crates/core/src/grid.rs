//! Truncated uniform discretisation of the quadrant `x ≥ 0, p ≥ 0` and the
//! monotone upwind generator shared by both solvers.
//!
//! Nodes are `(x_i, p_j) = (i·hx, j·hp)` for `0 ≤ i ≤ nx`, `0 ≤ j ≤ np`.
//! Values vanish on the row `x = 0` and on the column `p = 0`; the column
//! `p = p_max` is closed by a [`BoundaryRule`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::impact::ImpactModel;
use crate::market::MarketModel;
use crate::{Real, State};

/// Smallest accepted node count per axis.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("truncation bounds must be positive and finite (x_max = {x_max}, p_max = {p_max})")]
    InvalidBounds { x_max: f64, p_max: f64 },
    #[error("need at least {MIN_NODES} intervals per axis (nx = {nx}, np = {np})")]
    TooCoarse { nx: usize, np: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D<T> {
    x_max: T,
    p_max: T,
    nx: usize,
    np: usize,
}

impl<T: Real> Grid2D<T> {
    pub fn new(x_max: T, p_max: T, nx: usize, np: usize) -> Result<Self, GridError> {
        if !(x_max > T::zero() && p_max > T::zero() && x_max.is_finite() && p_max.is_finite()) {
            return Err(GridError::InvalidBounds {
                x_max: x_max.as_f64(),
                p_max: p_max.as_f64(),
            });
        }
        if nx < MIN_NODES || np < MIN_NODES {
            return Err(GridError::TooCoarse { nx, np });
        }
        Ok(Self { x_max, p_max, nx, np })
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }
    pub fn p_max(&self) -> T {
        self.p_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn np(&self) -> usize {
        self.np
    }
    pub fn hx(&self) -> T {
        self.x_max / T::idx(self.nx)
    }
    pub fn hp(&self) -> T {
        self.p_max / T::idx(self.np)
    }
    pub fn x(&self, i: usize) -> T {
        T::idx(i) * self.hx()
    }
    pub fn p(&self, j: usize) -> T {
        T::idx(j) * self.hp()
    }
    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.np + 1)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Row-major in `x`, then `p`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.np + 1) + j
    }
    pub fn p_nodes(&self) -> Vec<T> {
        (0..=self.np).map(|j| self.p(j)).collect()
    }

    /// Nearest node to a state, clamped to the grid.
    pub fn nearest(&self, y: State<T>) -> (usize, usize) {
        let snap = |v: T, h: T, n: usize| -> usize {
            let r = (v / h).round();
            if !(r > T::zero()) {
                0
            } else {
                r.to_usize().unwrap_or(n).min(n)
            }
        };
        (snap(y.x, self.hx(), self.nx), snap(y.p, self.hp(), self.np))
    }

    /// Index of `x` when it lies on the x-grid (within rounding).
    pub fn x_index(&self, x: T) -> Option<usize> {
        let r = x / self.hx();
        let i = r.round();
        if (r - i).abs() < T::of(1e-6) && i >= T::zero() {
            i.to_usize().filter(|&i| i <= self.nx)
        } else {
            None
        }
    }
}

/// Continuation / trade flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Continue,
    Trade,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Continue => "continue",
            Region::Trade => "trade",
        }
    }
}

/// Node values over a [`Grid2D`], stored row-major in `x` then `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField<T> {
    nx: usize,
    np: usize,
    values: Vec<T>,
}

impl<T: Real> ValueField<T> {
    pub fn zeros(grid: &Grid2D<T>) -> Self {
        Self {
            nx: grid.nx(),
            np: grid.np(),
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid2D<T>, mut f: impl FnMut(T, T) -> T) -> Self {
        let mut field = Self::zeros(grid);
        for i in 0..=grid.nx() {
            for j in 0..=grid.np() {
                field.values[grid.index(i, j)] = f(grid.x(i), grid.p(j));
            }
        }
        field
    }

    /// Immediate-liquidation field W on every node.
    pub fn liquidation(grid: &Grid2D<T>, impact: &ImpactModel<T>) -> Self {
        Self::from_fn(grid, |x, p| impact.liquidation_value(State::new(x, p)))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn np(&self) -> usize {
        self.np
    }
    pub fn matches(&self, grid: &Grid2D<T>) -> bool {
        self.nx == grid.nx() && self.np == grid.np()
    }
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * (self.np + 1) + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[i * (self.np + 1) + j] = v;
    }
    pub fn column(&self, i: usize) -> &[T] {
        let w = self.np + 1;
        &self.values[i * w..(i + 1) * w]
    }
    pub fn column_mut(&mut self, i: usize) -> &mut [T] {
        let w = self.np + 1;
        &mut self.values[i * w..(i + 1) * w]
    }
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    /// Linear interpolation in `p` along column `i`; clamped to `[0, p_max]`.
    pub fn interp_p(&self, grid: &Grid2D<T>, i: usize, p: T) -> T {
        let col = self.column(i);
        let s = p / grid.hp();
        if !(s > T::zero()) {
            return col[0];
        }
        let n = self.np;
        let lo = s.floor().to_usize().unwrap_or(n);
        if lo >= n {
            return col[n];
        }
        let w = s - T::idx(lo);
        col[lo] + (col[lo + 1] - col[lo]) * w
    }

    /// Sup-norm of the difference with another field.
    pub fn sup_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Forces the `x = 0` row and `p = 0` column to zero.
    pub fn zero_boundary(&mut self) {
        for j in 0..=self.np {
            self.values[j] = T::zero();
        }
        for i in 0..=self.nx {
            self.values[i * (self.np + 1)] = T::zero();
        }
    }

    /// Bilinear interpolation at an arbitrary state, clamped to the grid.
    pub fn interp(&self, grid: &Grid2D<T>, y: State<T>) -> T {
        let s = (y.x / grid.hx()).max(T::zero());
        let n = self.nx;
        let lo = s.floor().to_usize().unwrap_or(n).min(n);
        if lo >= n {
            return self.interp_p(grid, n, y.p);
        }
        let w = s - T::idx(lo);
        let a = self.interp_p(grid, lo, y.p);
        let b = self.interp_p(grid, lo + 1, y.p);
        a + (b - a) * w
    }
}

/// Coefficients `(down, center, up)` of the upwind discretisation of
/// `A = μ(p)∂_p + ½σ(p)²∂_p²` at `p` with left/right spacings `hm`, `hp`.
/// Off-diagonals are non-negative and the three coefficients sum to zero.
pub fn upwind_stencil<T: Real>(model: &MarketModel<T>, p: T, hm: T, hp: T) -> (T, T, T) {
    let s = model.volatility(p);
    let mu = model.drift(p);
    let diff = s * s / (hm + hp);
    let mut down = diff / hm;
    let mut up = diff / hp;
    if mu > T::zero() {
        up = up + mu / hp;
    } else {
        down = down - mu / hm;
    }
    (down, -(down + up), up)
}

/// Tridiagonal stencil of the discrete generator, one row per `p` node.
/// Rows `0` and `np` are zero (boundary nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator<T> {
    pub down: Vec<T>,
    pub center: Vec<T>,
    pub up: Vec<T>,
}

pub fn build_generator<T: Real>(model: &MarketModel<T>, grid: &Grid2D<T>) -> DiscreteGenerator<T> {
    let n = grid.np();
    let h = grid.hp();
    let mut down = vec![T::zero(); n + 1];
    let mut center = vec![T::zero(); n + 1];
    let mut up = vec![T::zero(); n + 1];
    for j in 1..n {
        let (d, c, u) = upwind_stencil(model, grid.p(j), h, h);
        down[j] = d;
        center[j] = c;
        up[j] = u;
    }
    DiscreteGenerator { down, center, up }
}

impl<T: Real> DiscreteGenerator<T> {
    /// `(Aφ)_j` on interior nodes of one column; zero on the boundary nodes.
    pub fn apply(&self, column: &[T]) -> Vec<T> {
        let n = self.center.len() - 1;
        let mut out = vec![T::zero(); n + 1];
        for j in 1..n {
            out[j] = self.down[j] * column[j - 1] + self.center[j] * column[j] + self.up[j] * column[j + 1];
        }
        out
    }

    /// Off-diagonals non-negative and rows summing to zero.
    pub fn is_monotone(&self) -> bool {
        let n = self.center.len() - 1;
        (1..n).all(|j| {
            let sum = self.down[j] + self.center[j] + self.up[j];
            let scale = self.center[j].abs() + T::one();
            self.down[j] >= T::zero() && self.up[j] >= T::zero() && sum.abs() <= T::of(1e-12) * scale
        })
    }

    /// Positive diagonal of `βI − A` at node `j`.
    pub fn resolvent_diag(&self, beta: T, j: usize) -> T {
        beta - self.center[j]
    }
}

/// Treatment of the truncation edge `p = p_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperClosure {
    /// `V(x, p_max) = W(x, p_max)`.
    DirichletW,
    /// Zero second difference at `p_max`.
    #[serde(rename = "extrapolate")]
    LinearExtrapolation,
    /// The top node obeys the intervention relation of the solver, i.e.
    /// `p_max` is assumed to lie in the trade region.
    Trade,
}

/// Closure at `p = p_max` for a given grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRule<T> {
    pub closure: UpperClosure,
    p_max: T,
}

pub fn upper_boundary_closure<T: Real>(grid: &Grid2D<T>, policy: UpperClosure) -> BoundaryRule<T> {
    BoundaryRule {
        closure: policy,
        p_max: grid.p_max(),
    }
}

impl<T: Real> BoundaryRule<T> {
    /// Value at `(x, p_max)` given the current column values.
    pub fn top_value(&self, x: T, impact: &ImpactModel<T>, column: &[T]) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let n = column.len() - 1;
        match self.closure {
            UpperClosure::DirichletW => impact.liquidation_value(State::new(x, self.p_max)),
            UpperClosure::LinearExtrapolation => T::of(2.0) * column[n - 1] - column[n - 2],
            // depends on the solver; left to it
            UpperClosure::Trade => column[n],
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        self.closure == UpperClosure::DirichletW
    }
}

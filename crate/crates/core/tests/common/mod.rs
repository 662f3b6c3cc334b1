//! Shared builders and pointwise checks for the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use optexec::grid::{build_generator, Grid2D, ValueField};
use optexec::impact::ImpactModel;
use optexec::impulse::{intervention_operator, ImpulseProblem};
use optexec::market::MarketModel;
use optexec::singular::{directional_residual, SingularProblem};
use proptest::prelude::*;

pub fn fig1_model() -> MarketModel<f64> {
    MarketModel::gbm(2.0, 1.0, 4.0).unwrap()
}

pub fn fig1_impact() -> ImpactModel<f64> {
    ImpactModel::exponential(0.5).unwrap()
}

pub fn square(n: usize) -> Grid2D<f64> {
    Grid2D::new(10.0, 10.0, n, n).unwrap()
}

/// `(βI − A)V` at interior node `(i, j)`.
pub fn resolvent(value: &ValueField<f64>, model: &MarketModel<f64>, grid: &Grid2D<f64>, i: usize, j: usize) -> f64 {
    let a = build_generator(model, grid).apply(value.column(i));
    model.beta() * value.get(i, j) - a[j]
}

/// Both QVI factors at every interior node, normalised by `1 + |V|`.
pub fn qvi_factors(value: &ValueField<f64>, problem: &ImpulseProblem<f64>) -> Vec<(f64, f64)> {
    let grid = &problem.grid;
    let gen = build_generator(&problem.model, grid);
    let mut out = Vec::new();
    for i in 1..=grid.nx() {
        let a = gen.apply(value.column(i));
        for j in 1..grid.np() {
            let v = value.get(i, j);
            let first = problem.model.beta() * v - a[j];
            let (mv, _) = intervention_operator(value, problem, (i, j));
            let scale = 1.0 + v.abs();
            out.push((first / scale, (v - mv) / scale));
        }
    }
    out
}

/// Both VI factors at every interior node, normalised by `1 + |V|`.
pub fn vi_factors(value: &ValueField<f64>, problem: &SingularProblem<f64>) -> Vec<(f64, f64)> {
    let grid = &problem.grid;
    let gen = build_generator(&problem.model, grid);
    let mut out = Vec::new();
    for i in 1..=grid.nx() {
        let a = gen.apply(value.column(i));
        for j in 1..grid.np() {
            let v = value.get(i, j);
            let scale = 1.0 + v.abs();
            out.push((
                (problem.model.beta() * v - a[j]) / scale,
                directional_residual(value, problem, (i, j)) / scale,
            ));
        }
    }
    out
}

/// Asserts both factors are at least `-tol` and their minimum within `±tol`.
pub fn assert_complementary(factors: &[(f64, f64)], tol: f64) {
    for (n, &(a, b)) in factors.iter().enumerate() {
        assert!(a >= -tol && b >= -tol, "factor below -{tol} at interior node {n}: ({a}, {b})");
        assert!(a.min(b).abs() <= tol, "complementarity gap at interior node {n}: ({a}, {b})");
    }
}

/// Largest decrease along grid lines in `x` and in `p`, over all nodes.
pub fn worst_decrease(value: &ValueField<f64>, grid: &Grid2D<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..=grid.nx() {
        for j in 0..=grid.np() {
            if i > 0 {
                worst = worst.max(value.get(i - 1, j) - value.get(i, j));
            }
            if j > 0 {
                worst = worst.max(value.get(i, j - 1) - value.get(i, j));
            }
        }
    }
    worst
}

/// Largest `a − b` over all nodes.
pub fn worst_excess(a: &ValueField<f64>, b: &ValueField<f64>) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn max_abs(field: &ValueField<f64>) -> f64 {
    field.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// GBM, ABM and OU models with parameters in well-posed ranges.
pub fn any_model() -> impl Strategy<Value = MarketModel<f64>> {
    prop_oneof![
        (-1.0..2.0f64, 0.3..1.5f64, 0.5..3.0f64).prop_map(|(mu, s, gap)| MarketModel::gbm(mu, s, mu.max(0.0) + gap).unwrap()),
        (-1.0..4.0f64, 0.2..1.5f64, 0.5..4.0f64).prop_map(|(mu, s, b)| MarketModel::abm(mu, s, b).unwrap()),
        (0.5..4.0f64, 1.0..6.0f64, 0.2..1.0f64, 0.5..4.0f64).prop_map(|(r, m, s, b)| MarketModel::ou(r, m, s, b).unwrap()),
    ]
}

pub fn any_impact() -> impl Strategy<Value = ImpactModel<f64>> {
    prop_oneof![
        (0.1..1.0f64).prop_map(|l| ImpactModel::exponential(l).unwrap()),
        (0.01..0.08f64).prop_map(|l| ImpactModel::linear(l).unwrap()),
    ]
}

pub fn any_grid() -> impl Strategy<Value = Grid2D<f64>> {
    (4.0..10.0f64, 4.0..10.0f64, 16usize..24, 16usize..24).prop_map(|(xm, pm, nx, np)| Grid2D::new(xm, pm, nx, np).unwrap())
}

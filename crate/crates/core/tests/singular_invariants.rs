mod common;

use common::*;
use optexec::grid::{Grid2D, Region};
use optexec::impact::ImpactModel;
use optexec::impulse::{solve_impulse, ImpulseProblem, ImpulseSettings};
use optexec::market::MarketModel;
use optexec::singular::{solve_singular, SingularProblem, SingularSettings};
use optexec::State;
use proptest::prelude::*;

const TOL: f64 = 1e-5;

fn solve(problem: &SingularProblem<f64>) -> optexec::SingularSolutionF64 {
    solve_singular(problem, &SingularSettings::default()).expect("converges")
}

fn value_at(problem: &SingularProblem<f64>, y: State<f64>) -> f64 {
    solve(problem).value.interp(&problem.grid, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_solution_satisfies_the_vi(model in any_model(), impact in any_impact(), grid in any_grid()) {
        let problem = SingularProblem::new(model, impact, grid);
        assert_complementary(&vi_factors(&solve(&problem).value, &problem), TOL);
    }

    #[test]
    fn value_lies_between_w_and_the_unimpacted_value(model in any_model(), impact in any_impact(), grid in any_grid()) {
        let v = solve(&SingularProblem::new(model, impact, grid)).value;
        let u = solve(&SingularProblem::new(model, ImpactModel::None, grid)).value;
        let w = optexec::grid::ValueField::liquidation(&grid, &impact);
        let scale = 1.0 + max_abs(&u);
        prop_assert!(v.as_slice().iter().all(|&x| x >= -TOL));
        prop_assert!(worst_excess(&v, &u) <= TOL * scale);
        prop_assert!(worst_decrease(&v, &grid) <= TOL * scale);
        // the discrete sell-down lags W by O(hx) per unit of position
        let slack = grid.hx() * grid.p_max() * grid.x_max();
        prop_assert!(worst_excess(&w, &v) <= slack, "W exceeds V by {}", worst_excess(&w, &v));
    }
}

#[test]
fn impulse_and_singular_agree_better_on_finer_grids() {
    let gap = |n: usize| {
        let grid = square(n);
        let imp = solve_impulse(&ImpulseProblem::new(fig1_model(), fig1_impact(), 0.0, grid), &ImpulseSettings::default())
            .unwrap()
            .value;
        let sing = solve(&SingularProblem::new(fig1_model(), fig1_impact(), grid)).value;
        worst_excess(&imp, &sing).max(worst_excess(&sing, &imp))
    };
    let (coarse, fine) = (gap(50), gap(100));
    assert!(fine < coarse, "gap {coarse} -> {fine}");
}

fn abm(lambda: f64, mu: f64, sigma: f64, beta: f64) -> SingularProblem<f64> {
    SingularProblem::new(
        MarketModel::abm(mu, sigma, beta).unwrap(),
        ImpactModel::exponential(lambda).unwrap(),
        square(100),
    )
}

fn ou(lambda: f64, rate: f64, mean: f64, sigma: f64, beta: f64) -> SingularProblem<f64> {
    SingularProblem::new(
        MarketModel::ou(rate, mean, sigma, beta).unwrap(),
        ImpactModel::exponential(lambda).unwrap(),
        square(100),
    )
}

const PROBE: State<f64> = State { x: 5.0, p: 2.0 };

#[test]
fn abm_sensitivities_at_the_probe() {
    let lambdas: Vec<f64> = [0.1, 0.25, 0.5, 1.0, 2.0].iter().map(|&l| value_at(&abm(l, 4.0, 0.5, 1.0), PROBE)).collect();
    assert!(lambdas.windows(2).all(|w| w[1] < w[0]), "lambda {lambdas:?}");
    let betas: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&b| value_at(&abm(0.5, 4.0, 0.5, b), PROBE)).collect();
    assert!(betas.windows(2).all(|w| w[1] < w[0]), "beta {betas:?}");
    let mus: Vec<f64> = [-1.0, 0.0, 1.0, 2.0, 4.0].iter().map(|&m| value_at(&abm(0.5, m, 0.5, 1.0), PROBE)).collect();
    assert!(mus.windows(2).all(|w| w[1] >= w[0] - 1e-9), "mu {mus:?}");
    let sigmas: Vec<f64> = [0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0].iter().map(|&s| value_at(&abm(0.5, 4.0, s, 1.0), PROBE)).collect();
    let top = (0..sigmas.len()).max_by(|&a, &b| sigmas[a].total_cmp(&sigmas[b])).unwrap();
    assert!(top > 0 && top + 1 < sigmas.len(), "sigma {sigmas:?}");
}

/// Continue nodes of `small` are Continue in `large` up to one cell in `p`.
fn continue_included(small: &optexec::SingularSolutionF64, large: &optexec::SingularSolutionF64, grid: &Grid2D<f64>) -> bool {
    let cont = |s: &optexec::SingularSolutionF64, i: usize, j: usize| s.policy.region(i, j) == Region::Continue;
    (1..=grid.nx()).all(|i| {
        (1..=grid.np()).all(|j| {
            !cont(small, i, j) || cont(large, i, j) || cont(large, i, j - 1) || (j < grid.np() && cont(large, i, j + 1))
        })
    })
}

#[test]
fn ou_continuation_grows_with_reversion_rate() {
    let sols: Vec<_> = [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&a| solve(&ou(0.5, a, 5.0, 0.5, 1.0))).collect();
    let grid = square(100);
    for pair in sols.windows(2) {
        assert!(pair[1].value.interp(&grid, PROBE) >= pair[0].value.interp(&grid, PROBE));
        assert!(continue_included(&pair[0], &pair[1], &grid));
    }
}

#[test]
fn continuation_shrinks_with_discount() {
    let grid = square(100);
    for make in [
        &(|b: f64| abm(0.5, 4.0, 0.5, b)) as &dyn Fn(f64) -> SingularProblem<f64>,
        &|b: f64| ou(0.5, 4.0, 5.0, 0.5, b),
    ] {
        let sols: Vec<_> = [0.5, 1.0, 2.0, 4.0].iter().map(|&b| solve(&make(b))).collect();
        for pair in sols.windows(2) {
            assert!(continue_included(&pair[1], &pair[0], &grid));
        }
    }
}

#[test]
fn abm_free_boundary_separates_the_regions() {
    let problem = abm(0.5, 4.0, 0.5, 1.0);
    let sol = solve(&problem);
    assert!(!sol.policy.free_boundary.is_empty());
    for &(x, p_star) in &sol.policy.free_boundary {
        let i = problem.grid.x_index(x).unwrap();
        let below = ((p_star / problem.grid.hp()) - 0.5).round() as usize;
        assert_eq!(sol.policy.region(i, below), Region::Continue);
        assert_eq!(sol.policy.region(i, below + 1), Region::Trade);
    }
}

mod common;

use common::*;
use optexec::analytic::constant_rate_revenue;
use optexec::impulse::{solve_impulse, ImpulseProblem, ImpulseSettings};
use optexec::market::MarketModel;
use optexec::montecarlo::{simulate_constant_rate, simulate_impulse, simulate_singular_boundary, SimConfig};
use optexec::singular::{solve_singular, SingularProblem, SingularSettings};
use optexec::State;

const Y0: State<f64> = State { x: 5.0, p: 2.0 };

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn policies_never_beat_the_value_function() {
    let grid = square(100);
    let problem = ImpulseProblem::new(fig1_model(), fig1_impact(), 0.2, grid);
    let sol = solve_impulse(&problem, &ImpulseSettings::default()).unwrap();
    let v = sol.value.interp(&grid, Y0);
    let cfg = SimConfig { dt: 0.01 / 4.0, ..SimConfig::for_discount(4.0, 5_000, 7) };
    let mc = simulate_impulse(&problem, &sol.policy, Y0, &cfg).unwrap();
    assert!(mc.mean - mc.half_width_95 <= v + mc.tail_bound + 0.02 * v, "{mc:?} vs {v}");

    let problem = SingularProblem::new(MarketModel::abm(4.0, 0.5, 1.0).unwrap(), fig1_impact(), grid);
    let sol = solve_singular(&problem, &SingularSettings::default()).unwrap();
    let v = sol.value.interp(&grid, Y0);
    let cfg = SimConfig { dt: 0.01, ..SimConfig::for_discount(1.0, 2_000, 7) };
    let mc = simulate_singular_boundary(&problem, &sol.policy, Y0, &cfg, 1e4).unwrap();
    assert!(mc.mean - mc.half_width_95 <= v + mc.tail_bound + 0.02 * v, "{mc:?} vs {v}");
    assert!((mc.mean - v).abs() <= (mc.half_width_95).max(0.02 * v));
}

#[test]
fn means_do_not_depend_on_thread_count() {
    let grid = square(60);
    let problem = ImpulseProblem::new(fig1_model(), fig1_impact(), 0.2, grid);
    let sol = solve_impulse(&problem, &ImpulseSettings::default()).unwrap();
    let cfg = SimConfig { dt: 0.01 / 4.0, antithetic: true, ..SimConfig::for_discount(4.0, 1_000, 11) };
    let one = in_pool(1, || simulate_impulse(&problem, &sol.policy, Y0, &cfg).unwrap());
    let four = in_pool(4, || simulate_impulse(&problem, &sol.policy, Y0, &cfg).unwrap());
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
    assert_eq!(one.half_width_95.to_bits(), four.half_width_95.to_bits());

    let ou = MarketModel::ou(4.0, 5.0, 0.5, 1.0).unwrap();
    let cfg = SimConfig { dt: 0.01, ..SimConfig::for_discount(1.0, 500, 3) };
    let one = in_pool(1, || simulate_constant_rate(&ou, &fig1_impact(), Y0, 2.0, &cfg).unwrap());
    let three = in_pool(3, || simulate_constant_rate(&ou, &fig1_impact(), Y0, 2.0, &cfg).unwrap());
    assert_eq!(one, three);
}

#[test]
fn halving_the_step_stays_within_the_interval() {
    let (model, impact) = (fig1_model(), fig1_impact());
    let run = |dt: f64| {
        let cfg = SimConfig { dt, ..SimConfig::for_discount(4.0, 100_000, 5) };
        simulate_constant_rate(&model, &impact, Y0, 1.0, &cfg).unwrap()
    };
    let (coarse, fine) = (run(0.02 / 4.0), run(0.01 / 4.0));
    assert!((coarse.mean - fine.mean).abs() < fine.half_width_95, "{coarse:?} vs {fine:?}");
    let exact = constant_rate_revenue(&model, &impact, Y0, 1.0).unwrap();
    assert!((fine.mean - exact).abs() <= fine.half_width_95, "{} vs {exact}", fine.mean);
}

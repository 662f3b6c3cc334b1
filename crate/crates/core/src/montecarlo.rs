//! Monte Carlo evaluation of trading strategies.
//!
//! Prices move by exact transitions of the unperturbed process between
//! trades: log-normal steps for GBM, Gaussian steps for ABM and OU with a
//! Brownian-bridge test for absorption at zero. Trading is applied by
//! operator splitting: sales happen at the step times and move the price
//! through α instantly.
//!
//! Every path owns a ChaCha stream keyed by `(seed, path index)`, and the
//! per-path revenues are reduced in index order. Results are therefore
//! bit-identical for any number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{Grid2D, Region};
use crate::impact::ImpactModel;
use crate::impulse::{ImpulsePolicy, ImpulseProblem};
use crate::market::{MarketModel, PriceProcess, PsiFunction};
use crate::singular::{SingularPolicy, SingularProblem};
use crate::{Real, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("policy grid does not match the problem grid")]
    InvalidPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub n_paths: usize,
    pub dt: T,
    pub horizon: T,
    pub seed: u64,
    pub antithetic: bool,
    /// `C` in the tail certificate `C x ψ(p) e^{−βT}`; estimated from ψ when
    /// absent.
    pub growth_constant: Option<T>,
}

impl<T: Real> SimConfig<T> {
    /// Defaults `dt = 10⁻³/β` and `T = 25/β`.
    pub fn for_discount(beta: T, n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            dt: T::of(1e-3) / beta,
            horizon: T::of(25.0) / beta,
            seed,
            antithetic: false,
            growth_constant: None,
        }
    }

    fn validate(&self, beta: T) -> Result<(), SimError> {
        if self.n_paths < 100 {
            return Err(SimError::InvalidConfig(format!("need at least 100 paths, got {}", self.n_paths)));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(SimError::InvalidConfig("time step must be positive".into()));
        }
        if !(beta * self.horizon >= T::of(20.0)) {
            return Err(SimError::InvalidConfig(format!(
                "beta * horizon must be at least 20, got {}",
                beta * self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult<T> {
    pub mean: T,
    pub half_width_95: T,
    pub n_paths: usize,
    pub tail_bound: T,
    pub seed: u64,
}

/// Random draws for one path. The antithetic twin negates the normals and
/// reflects the uniforms.
struct Noise {
    rng: ChaCha8Rng,
    flip: bool,
}

impl Noise {
    fn new(seed: u64, stream: u64, flip: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, flip }
    }

    fn normal<T: Real>(&mut self) -> T {
        let z: f64 = self.rng.sample(StandardNormal);
        T::of(if self.flip { -z } else { z })
    }

    fn uniform<T: Real>(&mut self) -> T {
        let u: f64 = self.rng.random();
        T::of(if self.flip { 1.0 - u } else { u })
    }
}

/// Exact one-step transition of the unperturbed price.
struct Stepper<T> {
    process: PriceProcess<T>,
    dt: T,
    drift: T,
    scale: T,
    decay: T,
}

impl<T: Real> Stepper<T> {
    fn new(model: &MarketModel<T>, dt: T) -> Self {
        let half = T::of(0.5);
        let (drift, scale, decay) = match model.process() {
            PriceProcess::Gbm { mu, sigma } => ((mu - half * sigma * sigma) * dt, sigma * dt.sqrt(), T::one()),
            PriceProcess::Abm { mu, sigma } => (mu * dt, sigma * dt.sqrt(), T::one()),
            PriceProcess::Ou { rate, sigma, .. } => {
                let decay = (-rate * dt).exp();
                let var = sigma * sigma * -(-T::of(2.0) * rate * dt).exp_m1() / (T::of(2.0) * rate);
                (T::zero(), var.sqrt(), decay)
            }
        };
        Self {
            process: model.process(),
            dt,
            drift,
            scale,
            decay,
        }
    }

    /// Next price, or `None` when the path is absorbed at zero.
    fn step(&self, p: T, noise: &mut Noise) -> Option<T> {
        let z = noise.normal::<T>();
        let (next, sigma) = match self.process {
            PriceProcess::Gbm { .. } => return Some(p * (self.drift + self.scale * z).exp()),
            PriceProcess::Abm { sigma, .. } => (p + self.drift + self.scale * z, sigma),
            PriceProcess::Ou { mean, sigma, .. } => (mean + (p - mean) * self.decay + self.scale * z, sigma),
        };
        if next <= T::zero() {
            return None;
        }
        // probability that the bridge between p and next dipped below zero
        let cross = (-T::of(2.0) * p * next / (sigma * sigma * self.dt)).exp();
        if noise.uniform::<T>() < cross {
            None
        } else {
            Some(next)
        }
    }
}

fn run_paths<T: Real>(cfg: &SimConfig<T>, path: impl Fn(&mut Noise) -> T + Sync) -> (T, T, usize) {
    let samples: Vec<T> = if cfg.antithetic {
        let pairs = cfg.n_paths.div_ceil(2);
        (0..pairs)
            .into_par_iter()
            .map(|k| {
                let a = path(&mut Noise::new(cfg.seed, k as u64, false));
                let b = path(&mut Noise::new(cfg.seed, k as u64, true));
                (a + b) * T::of(0.5)
            })
            .collect()
    } else {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|k| path(&mut Noise::new(cfg.seed, k as u64, false)))
            .collect()
    };
    let n = T::idx(samples.len());
    let mean = samples.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let var = samples.iter().fold(T::zero(), |a, &s| a + (s - mean) * (s - mean)) / (n - T::one());
    let half_width = T::of(1.96) * (var / n).sqrt();
    let paths = if cfg.antithetic { 2 * samples.len() } else { samples.len() };
    (mean, half_width, paths)
}

fn tail_bound<T: Real>(model: &MarketModel<T>, nodes: &[T], y0: State<T>, cfg: &SimConfig<T>) -> T {
    let Ok(psi) = model.psi(nodes) else {
        return T::infinity();
    };
    let c = cfg.growth_constant.unwrap_or_else(|| growth_constant_estimate(&psi, nodes));
    c * y0.x * psi.eval(y0.p) * (-model.beta() * cfg.horizon).exp()
}

/// `max p / ψ(p)` over the nodes, so that `x p ≤ C x ψ(p)` there.
fn growth_constant_estimate<T: Real>(psi: &PsiFunction<T>, nodes: &[T]) -> T {
    nodes
        .iter()
        .map(|&p| {
            let v = psi.eval(p);
            if v > T::zero() {
                p / v
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max)
}

fn finish<T: Real>(stats: (T, T, usize), tail: T, seed: u64) -> SimResult<T> {
    SimResult {
        mean: stats.0,
        half_width_95: stats.1,
        n_paths: stats.2,
        tail_bound: tail,
        seed,
    }
}

fn interior_nodes<T: Real>(grid: &Grid2D<T>) -> Vec<T> {
    (1..=grid.np()).map(|j| grid.p(j)).collect()
}

/// Follows an impulse policy: whenever the nearest node is flagged Trade,
/// sell `ζ*` there, possibly several times at the same instant.
pub fn simulate_impulse<T: Real>(
    problem: &ImpulseProblem<T>,
    policy: &ImpulsePolicy<T>,
    y0: State<T>,
    cfg: &SimConfig<T>,
) -> Result<SimResult<T>, SimError> {
    if !policy.matches(&problem.grid) {
        return Err(SimError::InvalidPolicy);
    }
    cfg.validate(problem.model.beta())?;
    let grid = &problem.grid;
    let stepper = Stepper::new(&problem.model, cfg.dt);
    let step_discount = (-problem.model.beta() * cfg.dt).exp();
    let max_trades = grid.nx() + 1;
    let path = |noise: &mut Noise| {
        let (mut x, mut p) = (y0.x, y0.p);
        let mut t = T::zero();
        let mut disc = T::one();
        let mut revenue = T::zero();
        loop {
            let mut trades = 0;
            while x > T::zero() && trades < max_trades {
                let (i, j) = grid.nearest(State::new(x, p));
                let zeta = policy.zeta(i, j).min(x);
                if policy.region(i, j) != Region::Trade || !(zeta > T::zero()) {
                    break;
                }
                p = problem.impact.alpha(zeta, p);
                x = x - zeta;
                revenue = revenue + disc * (zeta * p - problem.k);
                trades += 1;
            }
            if !(x > T::zero()) || t >= cfg.horizon {
                return revenue;
            }
            match stepper.step(p, noise) {
                Some(next) => p = next,
                None => return revenue,
            }
            t = t + cfg.dt;
            disc = disc * step_discount;
        }
    };
    let stats = run_paths(cfg, path);
    Ok(finish(stats, tail_bound(&problem.model, &interior_nodes(grid), y0, cfg), cfg.seed))
}

/// Sells at the constant rate `u` until the position is exhausted. Each step
/// sells half its quantity before and half after the price move, which
/// reproduces the impacted log-price exactly under GBM with exponential
/// impact and integrates the revenue by the trapezoidal rule.
pub fn simulate_constant_rate<T: Real>(
    model: &MarketModel<T>,
    impact: &ImpactModel<T>,
    y0: State<T>,
    u: T,
    cfg: &SimConfig<T>,
) -> Result<SimResult<T>, SimError> {
    cfg.validate(model.beta())?;
    if !(u > T::zero()) || !u.is_finite() {
        return Err(SimError::InvalidConfig("selling rate must be positive".into()));
    }
    let stepper = Stepper::new(model, cfg.dt);
    let step_discount = (-model.beta() * cfg.dt).exp();
    let path = |noise: &mut Noise| {
        let (mut x, mut p) = (y0.x, y0.p);
        let mut t = T::zero();
        let mut disc = T::one();
        let mut revenue = T::zero();
        while x > T::zero() && t < cfg.horizon {
            let half = (u * cfg.dt).min(x) * T::of(0.5);
            revenue = revenue + disc * impact.liquidation_value(State::new(half, p));
            p = impact.alpha(half, p);
            match stepper.step(p, noise) {
                Some(next) => p = next,
                None => return revenue,
            }
            t = t + cfg.dt;
            disc = disc * step_discount;
            revenue = revenue + disc * impact.liquidation_value(State::new(half, p));
            p = impact.alpha(half, p);
            x = x - half - half;
        }
        revenue
    };
    let stats = run_paths(cfg, path);
    let top = y0.p.max(T::one()) * T::of(5.0);
    let nodes: Vec<T> = (1..=200).map(|j| top * T::idx(j) / T::of(200.0)).collect();
    Ok(finish(stats, tail_bound(model, &nodes, y0, cfg), cfg.seed))
}

/// Tracks the free boundary: while the nearest node is flagged Trade, sell
/// in steps of `hx`, at most `u_cap · dt` per time step.
pub fn simulate_singular_boundary<T: Real>(
    problem: &SingularProblem<T>,
    policy: &SingularPolicy<T>,
    y0: State<T>,
    cfg: &SimConfig<T>,
    u_cap: T,
) -> Result<SimResult<T>, SimError> {
    if !policy.matches(&problem.grid) {
        return Err(SimError::InvalidPolicy);
    }
    cfg.validate(problem.model.beta())?;
    if !(u_cap > T::zero()) {
        return Err(SimError::InvalidConfig("trading-rate cap must be positive".into()));
    }
    let grid = &problem.grid;
    let stepper = Stepper::new(&problem.model, cfg.dt);
    let step_discount = (-problem.model.beta() * cfg.dt).exp();
    let budget = u_cap * cfg.dt;
    let path = |noise: &mut Noise| {
        let (mut x, mut p) = (y0.x, y0.p);
        let mut t = T::zero();
        let mut disc = T::one();
        let mut revenue = T::zero();
        loop {
            let mut left = budget;
            while x > T::zero() && left > T::zero() {
                let (i, j) = grid.nearest(State::new(x, p));
                if policy.region(i, j) != Region::Trade {
                    break;
                }
                let delta = grid.hx().min(left).min(x);
                revenue = revenue + disc * problem.impact.liquidation_value(State::new(delta, p));
                p = problem.impact.alpha(delta, p);
                x = x - delta;
                left = left - delta;
            }
            if !(x > T::zero()) || t >= cfg.horizon {
                return revenue;
            }
            match stepper.step(p, noise) {
                Some(next) => p = next,
                None => return revenue,
            }
            t = t + cfg.dt;
            disc = disc * step_discount;
        }
    };
    let stats = run_paths(cfg, path);
    Ok(finish(stats, tail_bound(&problem.model, &interior_nodes(grid), y0, cfg), cfg.seed))
}

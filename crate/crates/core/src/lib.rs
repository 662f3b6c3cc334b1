//! Numerical solvers for liquidating a block of shares over an infinite
//! horizon under permanent price impact.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// stencil loops read several arrays at the same index
#![allow(clippy::needless_range_loop)]

pub mod analytic;
mod assembly;
pub mod grid;
pub mod impact;
pub mod impulse;
pub mod lcp;
pub mod market;
pub mod montecarlo;
pub mod singular;
mod scalar;
mod state;

pub use scalar::Real;
pub use state::State;

pub type Grid2DF64 = grid::Grid2D<f64>;
pub type ValueFieldF64 = grid::ValueField<f64>;
pub type MarketModelF64 = market::MarketModel<f64>;
pub type ImpactModelF64 = impact::ImpactModel<f64>;
pub type ImpulseProblemF64 = impulse::ImpulseProblem<f64>;
pub type ImpulseSolutionF64 = impulse::ImpulseSolution<f64>;
pub type SingularProblemF64 = singular::SingularProblem<f64>;
pub type SingularSolutionF64 = singular::SingularSolution<f64>;
pub type SimConfigF64 = montecarlo::SimConfig<f64>;
pub type SimResultF64 = montecarlo::SimResult<f64>;
pub type StateF64 = State<f64>;

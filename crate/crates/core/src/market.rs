//! Unperturbed price processes and the increasing solution ψ of `Au = βu`.
//!
//! Three families are supported: geometric Brownian motion (natural
//! boundary at zero), arithmetic Brownian motion and Ornstein-Uhlenbeck
//! (both absorbed at zero).

use thiserror::Error;

use crate::grid::upwind_stencil;
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("discount factor must be positive, got {0}")]
    NonPositiveDiscount(f64),
    #[error("volatility must be positive, got {0}")]
    NonPositiveVolatility(f64),
    #[error("geometric Brownian motion needs beta > mu for a finite value (beta = {beta}, mu = {mu})")]
    InfiniteValue { beta: f64, mu: f64 },
    #[error("mean-reversion rate must be positive, got {0}")]
    NonPositiveReversionRate(f64),
    #[error("mean-reversion level must be non-negative, got {0}")]
    NegativeReversionLevel(f64),
    #[error("characteristic equation has no root above one (beta = {beta}, mu = {mu})")]
    NoIncreasingRoot { beta: f64, mu: f64 },
    #[error("price grid must be strictly increasing and positive with at least three points")]
    InvalidGrid,
    #[error("non-finite model parameter")]
    NonFinite,
}

/// Process family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Gbm,
    Abm,
    Ou,
}

/// Behaviour of the price process at `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    /// Zero is reached in finite time with positive probability.
    Absorbing,
    /// Zero is never reached from a positive start.
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceProcess<T> {
    /// `dP = μ P dt + σ P dB`
    Gbm { mu: T, sigma: T },
    /// `dP = μ dt + σ dB`
    Abm { mu: T, sigma: T },
    /// `dP = a (m − P) dt + σ dB`
    Ou { rate: T, mean: T, sigma: T },
}

/// Price dynamics together with the discount rate β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel<T> {
    process: PriceProcess<T>,
    beta: T,
}

fn check_finite<T: Real>(values: &[T]) -> Result<(), ModelError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite)
    }
}

fn check_common<T: Real>(sigma: T, beta: T) -> Result<(), ModelError> {
    if beta <= T::zero() {
        return Err(ModelError::NonPositiveDiscount(beta.as_f64()));
    }
    if sigma <= T::zero() {
        return Err(ModelError::NonPositiveVolatility(sigma.as_f64()));
    }
    Ok(())
}

impl<T: Real> MarketModel<T> {
    pub fn gbm(mu: T, sigma: T, beta: T) -> Result<Self, ModelError> {
        check_finite(&[mu, sigma, beta])?;
        check_common(sigma, beta)?;
        if beta <= mu {
            return Err(ModelError::InfiniteValue {
                beta: beta.as_f64(),
                mu: mu.as_f64(),
            });
        }
        Ok(Self {
            process: PriceProcess::Gbm { mu, sigma },
            beta,
        })
    }

    pub fn abm(mu: T, sigma: T, beta: T) -> Result<Self, ModelError> {
        check_finite(&[mu, sigma, beta])?;
        check_common(sigma, beta)?;
        Ok(Self {
            process: PriceProcess::Abm { mu, sigma },
            beta,
        })
    }

    pub fn ou(rate: T, mean: T, sigma: T, beta: T) -> Result<Self, ModelError> {
        check_finite(&[rate, mean, sigma, beta])?;
        check_common(sigma, beta)?;
        if rate <= T::zero() {
            return Err(ModelError::NonPositiveReversionRate(rate.as_f64()));
        }
        if mean < T::zero() {
            return Err(ModelError::NegativeReversionLevel(mean.as_f64()));
        }
        Ok(Self {
            process: PriceProcess::Ou { rate, mean, sigma },
            beta,
        })
    }

    pub fn process(&self) -> PriceProcess<T> {
        self.process
    }

    pub fn kind(&self) -> ProcessKind {
        match self.process {
            PriceProcess::Gbm { .. } => ProcessKind::Gbm,
            PriceProcess::Abm { .. } => ProcessKind::Abm,
            PriceProcess::Ou { .. } => ProcessKind::Ou,
        }
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Drift μ(p).
    pub fn drift(&self, p: T) -> T {
        match self.process {
            PriceProcess::Gbm { mu, .. } => mu * p,
            PriceProcess::Abm { mu, .. } => mu,
            PriceProcess::Ou { rate, mean, .. } => rate * (mean - p),
        }
    }

    /// Volatility σ(p). Zero at the origin for GBM.
    pub fn volatility(&self, p: T) -> T {
        match self.process {
            PriceProcess::Gbm { sigma, .. } => sigma * p,
            PriceProcess::Abm { sigma, .. } | PriceProcess::Ou { sigma, .. } => sigma,
        }
    }

    pub fn boundary_class(&self) -> BoundaryClass {
        match self.process {
            PriceProcess::Gbm { .. } => BoundaryClass::Natural,
            PriceProcess::Abm { .. } | PriceProcess::Ou { .. } => BoundaryClass::Absorbing,
        }
    }

    /// Generator `Aφ = μ φ' + ½σ² φ''` applied to explicit derivatives.
    pub fn generator(&self, p: T, d1: T, d2: T) -> T {
        let s = self.volatility(p);
        self.drift(p) * d1 + T::of(0.5) * s * s * d2
    }

    /// Increasing solution of `Au = βu` tabulated on (or, for GBM, valid at
    /// every point of) `p_grid`.
    pub fn psi(&self, p_grid: &[T]) -> Result<PsiFunction<T>, ModelError> {
        if p_grid.len() < 3
            || p_grid[0] <= T::zero()
            || p_grid.windows(2).any(|w| w[1] <= w[0])
            || p_grid.iter().any(|p| !p.is_finite())
        {
            return Err(ModelError::InvalidGrid);
        }
        match self.process {
            PriceProcess::Gbm { mu, sigma } => {
                let exponent = gbm_exponent(mu, sigma, self.beta)?;
                Ok(PsiFunction::PowerLaw { exponent })
            }
            _ => self.numeric_psi(p_grid),
        }
    }

    fn numeric_psi(&self, p_grid: &[T]) -> Result<PsiFunction<T>, ModelError> {
        let n = p_grid.len();
        let last = n - 1;
        // Killed at p = 0, so march upward from u(0) = 0. The increasing
        // solution dominates in this direction, which keeps the recursion
        // stable even when ψ spans hundreds of orders of magnitude.
        let ceiling = T::max_value().sqrt();
        let mut values = Vec::with_capacity(n);
        let mut prev = T::zero();
        let mut cur = T::one();
        values.push(cur);
        for j in 0..last {
            let hm = if j == 0 { p_grid[0] } else { p_grid[j] - p_grid[j - 1] };
            let (dn, center, up) = upwind_stencil(self, p_grid[j], hm, p_grid[j + 1] - p_grid[j]);
            let next = ((self.beta - center) * cur - dn * prev) / up;
            if !next.is_finite() {
                return Err(ModelError::NonFinite);
            }
            prev = cur;
            cur = next;
            values.push(cur);
            if cur > ceiling {
                for v in &mut values {
                    *v = *v / ceiling;
                }
                prev = prev / ceiling;
                cur = cur / ceiling;
            }
        }

        let p_ref = (p_grid[0] + p_grid[last]) * T::of(0.5);
        let scale = interpolate(p_grid, &values, p_ref);
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(ModelError::NonFinite);
        }
        for v in &mut values {
            *v = *v / scale;
        }
        Ok(PsiFunction::Numeric {
            grid: p_grid.to_vec(),
            values,
        })
    }
}

/// Positive root ν > 1 of `½σ²ν(ν−1) + μν − β = 0`.
pub fn gbm_exponent<T: Real>(mu: T, sigma: T, beta: T) -> Result<T, ModelError> {
    let half = T::of(0.5);
    let s2 = sigma * sigma;
    let b = mu - half * s2;
    let disc = b * b + T::of(2.0) * s2 * beta;
    let nu = (-b + disc.sqrt()) / s2;
    if !(nu > T::one()) {
        return Err(ModelError::NoIncreasingRoot {
            beta: beta.as_f64(),
            mu: mu.as_f64(),
        });
    }
    Ok(nu)
}

/// The increasing eigenfunction ψ, either in closed form or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiFunction<T> {
    /// `ψ(p) = p^ν`.
    PowerLaw { exponent: T },
    /// Samples normalised so that ψ equals one at the grid midpoint.
    Numeric { grid: Vec<T>, values: Vec<T> },
}

impl<T: Real> PsiFunction<T> {
    pub fn eval(&self, p: T) -> T {
        match self {
            PsiFunction::PowerLaw { exponent } => {
                if p <= T::zero() {
                    T::zero()
                } else {
                    p.powf(*exponent)
                }
            }
            PsiFunction::Numeric { grid, values } => {
                let n = grid.len();
                if p >= grid[n - 1] {
                    // exponential continuation of the last segment
                    let rate = (values[n - 1] / values[n - 2]).ln() / (grid[n - 1] - grid[n - 2]);
                    values[n - 1] * (rate * (p - grid[n - 1])).exp()
                } else if p <= grid[0] {
                    values[0]
                } else {
                    interpolate(grid, values, p)
                }
            }
        }
    }

    pub fn exponent(&self) -> Option<T> {
        match self {
            PsiFunction::PowerLaw { exponent } => Some(*exponent),
            PsiFunction::Numeric { .. } => None,
        }
    }

    /// `(xp − k)⁺ / ψ(p)`; tends to ℓ_x as `p → ∞`.
    pub fn tail_ratio(&self, x: T, k: T, p: T) -> T {
        let payoff = (x * p - k).max(T::zero());
        payoff / self.eval(p)
    }
}

/// Piecewise-linear interpolation on an increasing grid (clamped at the ends).
pub(crate) fn interpolate<T: Real>(grid: &[T], values: &[T], p: T) -> T {
    let n = grid.len();
    if p <= grid[0] {
        return values[0];
    }
    if p >= grid[n - 1] {
        return values[n - 1];
    }
    let idx = grid.partition_point(|g| *g <= p).min(n - 1);
    let (lo, hi) = (idx - 1, idx);
    let w = (p - grid[lo]) / (grid[hi] - grid[lo]);
    values[lo] * (T::one() - w) + values[hi] * w
}

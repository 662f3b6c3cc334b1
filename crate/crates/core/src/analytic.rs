//! Closed-form values used to validate the solvers.

use thiserror::Error;

use crate::grid::{Grid2D, ValueField};
use crate::impact::ImpactModel;
use crate::market::{MarketModel, PriceProcess, PsiFunction};
use crate::{Real, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid model for closed form: {0}")]
    InvalidModel(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Exact,
    ConditionsNotMet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub validity: Validity,
    pub condition_note: String,
}

/// Value without price impact, `U(x, p) = sup_τ E[e^{−βτ}(xP_τ − k)⁺]`.
///
/// Known in closed form only for GBM with `k = 0`, where discounted prices
/// form a supermartingale and selling at once is optimal: `U = xp`.
pub fn no_impact_value<T: Real>(model: &MarketModel<T>, y: State<T>, k: T) -> OracleResult<T> {
    match model.process() {
        PriceProcess::Gbm { mu, .. } if k == T::zero() && model.beta() > mu => OracleResult {
            value: y.x * y.p,
            validity: Validity::Exact,
            condition_note: "gbm with beta > mu and k = 0: U = xp".to_string(),
        },
        PriceProcess::Gbm { .. } => OracleResult {
            value: T::zero(),
            validity: Validity::ConditionsNotMet,
            condition_note: "positive fixed cost; solve numerically with no impact".to_string(),
        },
        _ => OracleResult {
            value: T::zero(),
            validity: Validity::ConditionsNotMet,
            condition_note: "no closed form outside gbm; solve numerically with no impact".to_string(),
        },
    }
}

/// Expected discounted revenue of selling at the constant rate `u` under GBM
/// prices with exponential impact:
/// `pu/(μ−λu−β) · (e^{(μ−λu−β)x/u} − 1)`.
pub fn constant_rate_revenue<T: Real>(
    model: &MarketModel<T>,
    impact: &ImpactModel<T>,
    y: State<T>,
    u: T,
) -> Result<T, AnalyticError> {
    let PriceProcess::Gbm { mu, .. } = model.process() else {
        return Err(AnalyticError::InvalidModel("constant-rate formula needs gbm prices"));
    };
    let ImpactModel::Exponential { lambda } = *impact else {
        return Err(AnalyticError::InvalidModel("constant-rate formula needs exponential impact"));
    };
    if !(u > T::zero()) || !u.is_finite() {
        return Err(AnalyticError::InvalidModel("selling rate must be positive"));
    }
    if !y.is_admissible() {
        return Err(AnalyticError::InvalidModel("state outside the closed quadrant"));
    }
    if y.x == T::zero() {
        return Ok(T::zero());
    }
    let rate = mu - lambda * u - model.beta();
    // p u / r (e^{r x/u} − 1) = p x (e^z − 1)/z with z = r x/u
    Ok(y.p * y.x * exp_m1_ratio(rate * y.x / u))
}

/// `(e^z − 1)/z`, with the removable singularity at zero filled by its series.
fn exp_m1_ratio<T: Real>(z: T) -> T {
    if z.abs() < T::of(1e-6) {
        T::one() + z * T::of(0.5) + z * z / T::of(6.0)
    } else {
        z.exp_m1() / z
    }
}

/// Growth certificate `C x ψ(p)`.
pub fn growth_bound<T: Real>(psi: &PsiFunction<T>, c: T, y: State<T>) -> T {
    c * y.x * psi.eval(y.p)
}

/// Smallest `C` with `V ≤ C x ψ(p)` on the interior nodes of a solved field.
pub fn growth_constant<T: Real>(field: &ValueField<T>, grid: &Grid2D<T>, psi: &PsiFunction<T>) -> T {
    let mut c = T::zero();
    for i in 1..=grid.nx() {
        for j in 1..=grid.np() {
            let bound = grid.x(i) * psi.eval(grid.p(j));
            if bound > T::zero() {
                c = c.max(field.get(i, j) / bound);
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig1() -> (MarketModel<f64>, ImpactModel<f64>) {
        (
            MarketModel::gbm(2.0, 1.0, 4.0).unwrap(),
            ImpactModel::exponential(0.5).unwrap(),
        )
    }

    #[test]
    fn no_impact_examples() {
        let (m, _) = fig1();
        let r = no_impact_value(&m, State::new(5.0, 2.0), 0.0);
        assert_eq!(r.validity, Validity::Exact);
        assert_eq!(r.value, 10.0);
        let r = no_impact_value(&m, State::new(0.0, 3.0), 0.0);
        assert_eq!(r.value, 0.0);
        let abm = MarketModel::abm(4.0, 0.5, 1.0).unwrap();
        assert_eq!(
            no_impact_value(&abm, State::new(5.0, 2.0), 0.0).validity,
            Validity::ConditionsNotMet
        );
        assert_eq!(
            no_impact_value(&m, State::new(5.0, 2.0), 0.2).validity,
            Validity::ConditionsNotMet
        );
    }

    #[test]
    fn constant_rate_examples() {
        let (m, im) = fig1();
        let y = State::new(5.0, 2.0);
        let v = constant_rate_revenue(&m, &im, y, 1.0).unwrap();
        assert_relative_eq!(v, 0.8 * (1.0 - (-12.5f64).exp()), max_relative = 1e-14);
        assert!((v - 0.7999970).abs() < 1e-6);

        let w = im.liquidation_value(y);
        let far = constant_rate_revenue(&m, &im, y, 1e6).unwrap();
        assert!((far - w).abs() < 1e-3);

        let tiny = constant_rate_revenue(&m, &im, State::new(1e-12, 2.0), 1.0).unwrap();
        assert!(tiny.abs() < 1e-11);
    }

    #[test]
    fn constant_rate_preconditions() {
        let (m, im) = fig1();
        let y = State::new(5.0, 2.0);
        let abm = MarketModel::abm(4.0, 0.5, 1.0).unwrap();
        assert!(constant_rate_revenue(&abm, &im, y, 1.0).is_err());
        assert!(constant_rate_revenue(&m, &ImpactModel::None, y, 1.0).is_err());
        assert!(constant_rate_revenue(&m, &im, y, 0.0).is_err());
        assert!(constant_rate_revenue(&m, &im, State::new(-1.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn rate_ladder_is_monotone_and_converges() {
        let (m, im) = fig1();
        let y = State::new(5.0, 2.0);
        let w = im.liquidation_value(y);
        let values: Vec<f64> = (0..=20)
            .map(|e| constant_rate_revenue(&m, &im, y, 2f64.powi(e)).unwrap())
            .collect();
        assert!(values.windows(2).all(|v| v[1] >= v[0]));
        assert!(values.iter().all(|&v| v <= w));
        // W − R(u) ≈ (β − μ) W / (λu) at the top rung
        let gap = w - values[20];
        let leading = (4.0 - 2.0) / (0.5 * 2f64.powi(20)) * w;
        assert!(gap > 0.0 && gap < 1.5 * leading, "gap {gap}");
    }

    #[test]
    fn continuous_across_removable_singularity() {
        // rate μ − λu − β = ±1e-8 at x = 5, u = 1
        let a = 10.0 * exp_m1_ratio(1e-8 * 5.0);
        let b = 10.0 * exp_m1_ratio(-1e-8 * 5.0);
        assert_relative_eq!(a, b, max_relative = 1e-6);
        assert_relative_eq!(a, 10.0, max_relative = 1e-6);
        // both branches agree where they meet
        for z in [0.999e-6, -0.999e-6] {
            assert_relative_eq!(exp_m1_ratio(z), f64::exp_m1(z) / z, max_relative = 1e-12);
        }
    }

    #[test]
    fn growth_bound_examples() {
        let grid: Vec<f64> = (1..=20).map(|j| j as f64 * 0.5).collect();
        let psi = MarketModel::gbm(2.0, 1.0, 4.0).unwrap().psi(&grid).unwrap();
        assert_eq!(growth_bound(&psi, 1.0, State::new(0.0, 2.0)), 0.0);
        let b = growth_bound(&psi, 1.0, State::new(5.0, 2.0));
        // 5 · 2^ν with ν = (−3 + √41)/2
        let nu = (-3.0 + 41f64.sqrt()) / 2.0;
        assert_relative_eq!(b, 5.0 * 2f64.powf(nu), max_relative = 1e-14);
        assert!((b - 16.2626).abs() < 1e-4, "{b}");
        let mut last = 0.0;
        for &p in &grid {
            let b = growth_bound(&psi, 1.0, State::new(5.0, p));
            assert!(b >= last);
            last = b;
        }
    }
}

//! Permanent price impact: post-trade price map α, marginal impact γ, the
//! impulse transition Γ and the immediate-liquidation value W.

use thiserror::Error;

use crate::{Real, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpactError {
    #[error("trade size {zeta} outside [0, {x}]")]
    InvalidTradeSize { zeta: f64, x: f64 },
    #[error("impact intensity must be non-negative and finite, got {0}")]
    InvalidIntensity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImpactKind {
    Exponential,
    Linear,
    None,
}

/// Impact family with intensity λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpactModel<T> {
    /// `α(ζ, p) = p e^{−λζ}`
    Exponential { lambda: T },
    /// `α(ζ, p) = max(p − λζ, 0)`
    Linear { lambda: T },
    /// `α(ζ, p) = p`
    None,
}

/// Result of applying α. `clamped` is set when linear impact would have
/// produced a negative price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostTrade<T> {
    pub price: T,
    pub clamped: bool,
}

impl<T: Real> ImpactModel<T> {
    pub fn exponential(lambda: T) -> Result<Self, ImpactError> {
        Self::check(lambda)?;
        Ok(Self::Exponential { lambda })
    }

    pub fn linear(lambda: T) -> Result<Self, ImpactError> {
        Self::check(lambda)?;
        Ok(Self::Linear { lambda })
    }

    fn check(lambda: T) -> Result<(), ImpactError> {
        if lambda.is_finite() && lambda >= T::zero() {
            Ok(())
        } else {
            Err(ImpactError::InvalidIntensity(lambda.as_f64()))
        }
    }

    pub fn kind(&self) -> ImpactKind {
        match self {
            ImpactModel::Exponential { .. } => ImpactKind::Exponential,
            ImpactModel::Linear { .. } => ImpactKind::Linear,
            ImpactModel::None => ImpactKind::None,
        }
    }

    pub fn lambda(&self) -> T {
        match *self {
            ImpactModel::Exponential { lambda } | ImpactModel::Linear { lambda } => lambda,
            ImpactModel::None => T::zero(),
        }
    }

    /// α(ζ, p).
    pub fn post_trade_price(&self, zeta: T, p: T) -> PostTrade<T> {
        match *self {
            ImpactModel::Exponential { lambda } => PostTrade {
                price: p * (-lambda * zeta).exp(),
                clamped: false,
            },
            ImpactModel::Linear { lambda } => {
                let raw = p - lambda * zeta;
                if raw < T::zero() {
                    PostTrade {
                        price: T::zero(),
                        clamped: true,
                    }
                } else {
                    PostTrade {
                        price: raw,
                        clamped: false,
                    }
                }
            }
            ImpactModel::None => PostTrade {
                price: p,
                clamped: false,
            },
        }
    }

    /// Shorthand for the price component of [`post_trade_price`](Self::post_trade_price).
    pub fn alpha(&self, zeta: T, p: T) -> T {
        self.post_trade_price(zeta, p).price
    }

    /// Γ(y, ζ) = (x − ζ, α(ζ, p)).
    pub fn impulse_transition(&self, y: State<T>, zeta: T) -> Result<State<T>, ImpactError> {
        if !(zeta >= T::zero() && zeta <= y.x) {
            return Err(ImpactError::InvalidTradeSize {
                zeta: zeta.as_f64(),
                x: y.x.as_f64(),
            });
        }
        Ok(State::new(y.x - zeta, self.alpha(zeta, y.p)))
    }

    /// γ(p) = −∂α/∂ζ(0, p).
    pub fn marginal_impact(&self, p: T) -> T {
        match *self {
            ImpactModel::Exponential { lambda } => lambda * p,
            ImpactModel::Linear { lambda } => lambda,
            ImpactModel::None => T::zero(),
        }
    }

    /// W(x, p) = ∫₀ˣ α(s, p) ds.
    pub fn liquidation_value(&self, y: State<T>) -> T {
        let State { x, p } = y;
        if x <= T::zero() {
            return T::zero();
        }
        match *self {
            ImpactModel::Exponential { lambda } if lambda > T::zero() => {
                // p (1 − e^{−λx}) / λ, written with expm1 for small λx
                -p * (-lambda * x).exp_m1() / lambda
            }
            ImpactModel::Linear { lambda } if lambda > T::zero() => {
                let exhaust = p / lambda;
                if x <= exhaust {
                    x * p - lambda * x * x * T::of(0.5)
                } else {
                    p * p / (T::of(2.0) * lambda)
                }
            }
            _ => x * p,
        }
    }

    /// ∂α/∂p(ζ, p), used by the chain-rule identity checks.
    pub fn alpha_dp(&self, zeta: T, _p: T) -> T {
        match *self {
            ImpactModel::Exponential { lambda } => (-lambda * zeta).exp(),
            ImpactModel::Linear { .. } | ImpactModel::None => T::one(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn exp(l: f64) -> ImpactModel<f64> {
        ImpactModel::exponential(l).unwrap()
    }

    #[test]
    fn post_trade_examples() {
        assert_relative_eq!(exp(0.5).alpha(1.0, 2.0), 2.0 * (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(exp(0.5).alpha(1.0, 2.0), 1.2130613, epsilon = 1e-7);
        for im in [exp(0.5), ImpactModel::linear(1.0).unwrap(), ImpactModel::None] {
            assert_eq!(im.alpha(0.0, 7.0), 7.0);
        }
        let out = ImpactModel::linear(1.0).unwrap().post_trade_price(5.0, 2.0);
        assert_eq!(out, PostTrade { price: 0.0, clamped: true });
    }

    #[test]
    fn transition_examples() {
        let y = State::new(5.0, 2.0);
        let s = exp(0.5).impulse_transition(y, 1.0).unwrap();
        assert_eq!(s.x, 4.0);
        assert_relative_eq!(s.p, 1.2130613, epsilon = 1e-7);
        assert_eq!(exp(0.5).impulse_transition(y, 0.0).unwrap(), y);
        let all = exp(0.5).impulse_transition(y, 5.0).unwrap();
        assert_eq!(all.x, 0.0);
        assert_relative_eq!(all.p, 2.0 * (-2.5f64).exp());
        assert!(matches!(
            exp(0.5).impulse_transition(y, 6.0),
            Err(ImpactError::InvalidTradeSize { .. })
        ));
        assert!(exp(0.5).impulse_transition(y, -0.1).is_err());
    }

    #[test]
    fn marginal_impact_examples() {
        assert_eq!(exp(0.5).marginal_impact(2.0), 1.0);
        assert_eq!(ImpactModel::linear(0.5).unwrap().marginal_impact(9.0), 0.5);
        assert_eq!(ImpactModel::<f64>::None.marginal_impact(3.0), 0.0);
    }

    #[test]
    fn liquidation_examples() {
        let w = exp(0.5).liquidation_value(State::new(5.0, 2.0));
        assert_relative_eq!(w, 4.0 * (1.0 - (-2.5f64).exp()), max_relative = 1e-14);
        assert_relative_eq!(w, 3.6716601, epsilon = 1e-7);
        assert_eq!(exp(0.5).liquidation_value(State::new(0.0, 3.0)), 0.0);
        assert_eq!(ImpactModel::None.liquidation_value(State::new(5.0, 2.0)), 10.0);
        assert_eq!(exp(0.0).liquidation_value(State::new(5.0, 2.0)), 10.0);
    }

    #[test]
    fn linear_liquidation_integrates_the_clamped_map() {
        let im = ImpactModel::linear(1.0).unwrap();
        // exhausted at s = 2: ∫₀² (2 − s) ds = 2
        assert_relative_eq!(im.liquidation_value(State::new(5.0, 2.0)), 2.0);
        assert_relative_eq!(im.liquidation_value(State::new(1.0, 2.0)), 1.5);
        // midpoint quadrature of the clamped integrand
        let n = 200_000;
        let h = 5.0 / n as f64;
        let quad: f64 = (0..n).map(|i| im.alpha((i as f64 + 0.5) * h, 2.0) * h).sum();
        assert_relative_eq!(im.liquidation_value(State::new(5.0, 2.0)), quad, epsilon = 1e-8);
    }

    #[test]
    fn rejects_bad_intensity() {
        assert!(ImpactModel::exponential(-1.0).is_err());
        assert!(ImpactModel::linear(f64::INFINITY).is_err());
    }

    #[test]
    fn gamma_is_limit_of_difference_quotient() {
        for im in [exp(0.5), ImpactModel::linear(0.7).unwrap()] {
            let p = 3.0;
            let dq = |h: f64| (p - im.alpha(h, p)) / h;
            let h = 1e-3;
            let richardson = 2.0 * dq(h / 2.0) - dq(h);
            assert_relative_eq!(richardson, im.marginal_impact(p), max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn composition_law(z1 in 0.0..5.0f64, z2 in 0.0..5.0f64, p in 0.01..20.0f64, l in 0.0..2.0f64) {
            let im = exp(l);
            let lhs = im.alpha(z1, im.alpha(z2, p));
            prop_assert!((lhs - im.alpha(z1 + z2, p)).abs() <= 1e-12 * p);
            let lin = ImpactModel::linear(l).unwrap();
            if p - l * (z1 + z2) >= 0.0 {
                let lhs = lin.alpha(z1, lin.alpha(z2, p));
                prop_assert!((lhs - lin.alpha(z1 + z2, p)).abs() <= 1e-12 * p.max(1.0));
            }
        }

        #[test]
        fn splitting_improves_revenue(z in 0.0..5.0f64, frac in 0.0..1.0f64, p in 0.01..20.0f64, l in 0.0..2.0f64) {
            let zp = z * frac;
            for im in [exp(l), ImpactModel::linear(l).unwrap()] {
                let split = zp * im.alpha(zp, p) + (z - zp) * im.alpha(z, p);
                prop_assert!(split >= z * im.alpha(z, p) - 1e-12);
            }
        }

        #[test]
        fn block_sale_below_liquidation_value(x in 0.0..10.0f64, p in 0.0..20.0f64, l in 0.0..2.0f64) {
            for im in [exp(l), ImpactModel::linear(l).unwrap(), ImpactModel::None] {
                let w = im.liquidation_value(State::new(x, p));
                prop_assert!(x * im.alpha(x, p) <= w + 1e-12 * (1.0 + w));
            }
        }

        #[test]
        fn monotone_in_trade_and_price(z in 0.0..5.0f64, dz in 0.0..1.0f64, p in 0.0..20.0f64, dp in 0.0..1.0f64) {
            for im in [exp(0.5), ImpactModel::linear(0.5).unwrap(), ImpactModel::None] {
                prop_assert!(im.alpha(z + dz, p) <= im.alpha(z, p));
                prop_assert!(im.alpha(z, p + dp) >= im.alpha(z, p));
            }
        }

        #[test]
        fn chain_rule_identity(z in 0.01..5.0f64, p in 0.5..20.0f64, l in 0.05..2.0f64) {
            // ∂α/∂ζ = −γ(p) ∂α/∂p, skipping clamped linear points
            for im in [exp(l), ImpactModel::linear(l).unwrap()] {
                let h = 1e-5;
                if im.post_trade_price(z + h, p).clamped {
                    continue;
                }
                let dz = (im.alpha(z + h, p) - im.alpha(z - h, p)) / (2.0 * h);
                let dpv = (im.alpha(z, p + h) - im.alpha(z, p - h)) / (2.0 * h);
                let rhs = -im.marginal_impact(p) * dpv;
                prop_assert!((dz - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()));
                prop_assert!((dpv - im.alpha_dp(z, p)).abs() <= 1e-6);
            }
        }
    }
}

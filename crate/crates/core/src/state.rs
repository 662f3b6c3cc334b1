use serde::{Deserialize, Serialize};

use crate::Real;

/// Point `(x, p)` of the state space: shares held and current price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State<T> {
    pub x: T,
    pub p: T,
}

impl<T: Real> State<T> {
    pub fn new(x: T, p: T) -> Self {
        Self { x, p }
    }

    /// True when the state lies in the closed quadrant `x ≥ 0, p ≥ 0`.
    pub fn is_admissible(&self) -> bool {
        self.x >= T::zero() && self.p >= T::zero() && self.x.is_finite() && self.p.is_finite()
    }
}

//! One-dimensional complementarity problems along a price column.
//!
//! Each unknown `v_j` carries two affine rows, a continuation row and an
//! intervention row, both tridiagonal. The discrete problem is
//! `min{cont_j(v), interv_j(v)} = 0` for every `j`. When every row has a
//! positive diagonal and non-positive off-diagonals with diagonal dominance,
//! both solvers below are monotone and converge to the same solution.

use crate::Real;

/// Affine row `lower·v_{j−1} + diag·v_j + upper·v_{j+1} − rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row<T> {
    pub lower: T,
    pub diag: T,
    pub upper: T,
    pub rhs: T,
}

impl<T: Real> Row<T> {
    /// Row fixing `v_j = value`.
    pub fn pin(value: T) -> Self {
        Self {
            lower: T::zero(),
            diag: T::one(),
            upper: T::zero(),
            rhs: value,
        }
    }

    pub fn residual(&self, prev: T, cur: T, next: T) -> T {
        self.lower * prev + self.diag * cur + self.upper * next - self.rhs
    }

    /// Value of `v_j` that zeroes the row given its neighbours.
    fn solve_for_center(&self, prev: T, next: T) -> T {
        (self.rhs - self.lower * prev - self.upper * next) / self.diag
    }

    fn scale(&self, prev: T, cur: T, next: T) -> T {
        (self.lower * prev).abs() + (self.diag * cur).abs() + (self.upper * next).abs() + self.rhs.abs()
    }
}

/// Thomas algorithm. `lower[0]` and `upper[n−1]` are ignored. Returns `None`
/// on a vanishing pivot or non-finite output.
pub fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Option<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut pivot = diag[0];
    if pivot == T::zero() {
        return None;
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for j in 1..n {
        pivot = diag[j] - lower[j] * c[j - 1];
        if pivot == T::zero() || !pivot.is_finite() {
            return None;
        }
        c[j] = if j + 1 < n { upper[j] / pivot } else { T::zero() };
        d[j] = (rhs[j] - lower[j] * d[j - 1]) / pivot;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = d[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Outcome of a column solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnOutcome<T> {
    pub iterations: usize,
    pub converged: bool,
    /// Last sup-norm update (PSOR) or zero (policy iteration).
    pub change: T,
}

/// Pair of row families over one column of unknowns.
#[derive(Debug, Clone)]
pub struct ColumnLcp<T> {
    pub continuation: Vec<Row<T>>,
    pub intervention: Vec<Row<T>>,
}

impl<T: Real> ColumnLcp<T> {
    pub fn with_len(n: usize) -> Self {
        let zero = Row {
            lower: T::zero(),
            diag: T::one(),
            upper: T::zero(),
            rhs: T::zero(),
        };
        Self {
            continuation: vec![zero; n],
            intervention: vec![zero; n],
        }
    }

    pub fn len(&self) -> usize {
        self.continuation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.continuation.is_empty()
    }

    fn neighbours(v: &[T], j: usize) -> (T, T) {
        let prev = if j > 0 { v[j - 1] } else { T::zero() };
        let next = if j + 1 < v.len() { v[j + 1] } else { T::zero() };
        (prev, next)
    }

    /// Residuals `(continuation, intervention)` at node `j`.
    pub fn residuals(&self, v: &[T], j: usize) -> (T, T) {
        let (prev, next) = Self::neighbours(v, j);
        (
            self.continuation[j].residual(prev, v[j], next),
            self.intervention[j].residual(prev, v[j], next),
        )
    }

    /// Policy iteration. `active[j]` selects the intervention row and is used
    /// as the starting policy; `v` receives the solution.
    pub fn solve_howard(&self, v: &mut [T], active: &mut [bool], max_iter: usize) -> ColumnOutcome<T> {
        let n = self.len();
        let mut lower = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut upper = vec![T::zero(); n];
        let mut rhs = vec![T::zero(); n];
        let eps = T::epsilon() * T::of(64.0);
        for it in 1..=max_iter.max(1) {
            for j in 0..n {
                let row = if active[j] { self.intervention[j] } else { self.continuation[j] };
                lower[j] = row.lower;
                diag[j] = row.diag;
                upper[j] = row.upper;
                rhs[j] = row.rhs;
            }
            let Some(sol) = solve_tridiagonal(&lower, &diag, &upper, &rhs) else {
                return ColumnOutcome {
                    iterations: it,
                    converged: false,
                    change: T::infinity(),
                };
            };
            v.copy_from_slice(&sol);
            let mut changed = false;
            for j in 0..n {
                let (prev, next) = Self::neighbours(v, j);
                let rc = self.continuation[j].residual(prev, v[j], next);
                let ri = self.intervention[j].residual(prev, v[j], next);
                let tol = eps
                    * (T::one()
                        + self.continuation[j].scale(prev, v[j], next)
                        + self.intervention[j].scale(prev, v[j], next));
                let want = if active[j] { !(rc < ri - tol) } else { ri < rc - tol };
                if want != active[j] {
                    active[j] = want;
                    changed = true;
                }
            }
            if !changed {
                return ColumnOutcome {
                    iterations: it,
                    converged: true,
                    change: T::zero(),
                };
            }
        }
        ColumnOutcome {
            iterations: max_iter,
            converged: false,
            change: T::infinity(),
        }
    }

    /// Projected SOR: relax the continuation row, then clamp from below by
    /// the value that zeroes the intervention row.
    pub fn solve_psor(&self, v: &mut [T], omega: T, tol: T, max_sweeps: usize) -> ColumnOutcome<T> {
        let n = self.len();
        let mut change = T::infinity();
        for sweep in 1..=max_sweeps {
            change = T::zero();
            for j in 0..n {
                let (prev, next) = Self::neighbours(v, j);
                let gs = self.continuation[j].solve_for_center(prev, next);
                let relaxed = v[j] + omega * (gs - v[j]);
                let floor = self.intervention[j].solve_for_center(prev, next);
                let new = relaxed.max(floor);
                change = change.max((new - v[j]).abs());
                v[j] = new;
            }
            if change <= tol {
                return ColumnOutcome {
                    iterations: sweep,
                    converged: true,
                    change,
                };
            }
        }
        ColumnOutcome {
            iterations: max_sweeps,
            converged: false,
            change,
        }
    }

    /// Nodes where the intervention row attains the minimum.
    pub fn active_set(&self, v: &[T]) -> Vec<bool> {
        (0..self.len())
            .map(|j| {
                let (rc, ri) = self.residuals(v, j);
                ri <= rc
            })
            .collect()
    }

    /// `max_j |min{cont_j, interv_j}|`.
    pub fn complementarity_residual(&self, v: &[T]) -> T {
        (0..self.len()).fold(T::zero(), |m, j| {
            let (rc, ri) = self.residuals(v, j);
            m.max(rc.min(ri).abs())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Obstacle problem for −v'' + v = 0 with v ≥ ψ, Dirichlet zero ends.
    fn obstacle_problem(n: usize, obstacle: impl Fn(f64) -> f64) -> ColumnLcp<f64> {
        let h = 1.0 / (n + 1) as f64;
        let mut lcp = ColumnLcp::with_len(n);
        for j in 0..n {
            let x = (j + 1) as f64 * h;
            lcp.continuation[j] = Row {
                lower: -1.0 / (h * h),
                diag: 2.0 / (h * h) + 1.0,
                upper: -1.0 / (h * h),
                rhs: 0.0,
            };
            lcp.intervention[j] = Row::pin(obstacle(x));
        }
        lcp
    }

    /// Exhaustive reference: enumerate all active sets on a tiny problem.
    fn brute_force(lcp: &ColumnLcp<f64>) -> Vec<f64> {
        let n = lcp.len();
        for mask in 0u32..(1 << n) {
            let rows: Vec<Row<f64>> = (0..n)
                .map(|j| if mask & (1 << j) != 0 { lcp.intervention[j] } else { lcp.continuation[j] })
                .collect();
            let lo: Vec<f64> = rows.iter().map(|r| r.lower).collect();
            let d: Vec<f64> = rows.iter().map(|r| r.diag).collect();
            let up: Vec<f64> = rows.iter().map(|r| r.upper).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
            let Some(v) = solve_tridiagonal(&lo, &d, &up, &b) else { continue };
            let ok = (0..n).all(|j| {
                let (rc, ri) = lcp.residuals(&v, j);
                rc >= -1e-9 && ri >= -1e-9
            });
            if ok {
                return v;
            }
        }
        panic!("no complementary solution");
    }

    #[test]
    fn thomas_matches_dense_solution() {
        let lower = [0.0, -1.0, -2.0, -1.0];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for j in 0..4 {
            let prev = if j > 0 { x[j - 1] } else { 0.0 };
            let next = if j < 3 { x[j + 1] } else { 0.0 };
            assert_relative_eq!(lower[j] * prev + diag[j] * x[j] + upper[j] * next, rhs[j], epsilon = 1e-12);
        }
        assert!(solve_tridiagonal(&[0.0], &[0.0], &[0.0], &[1.0]).is_none());
    }

    #[test]
    fn howard_and_psor_agree_with_enumeration() {
        let lcp = obstacle_problem(8, |x| 0.3 - (x - 0.5).powi(2) * 2.0);
        let exact = brute_force(&lcp);
        let mut v = vec![0.0; 8];
        let mut active = vec![false; 8];
        let out = lcp.solve_howard(&mut v, &mut active, 50);
        assert!(out.converged);
        for j in 0..8 {
            assert_relative_eq!(v[j], exact[j], epsilon = 1e-10);
        }
        let mut w = vec![0.0; 8];
        let out = lcp.solve_psor(&mut w, 1.5, 1e-13, 100_000);
        assert!(out.converged);
        for j in 0..8 {
            assert_relative_eq!(w[j], exact[j], epsilon = 1e-9);
        }
        assert!(lcp.complementarity_residual(&v) < 1e-9);
    }

    #[test]
    fn psor_reports_exhausted_budget() {
        // obstacle never binds, so PSOR must relax all the way down from 1
        let lcp = obstacle_problem(64, |_| -1.0);
        let mut w = vec![1.0; 64];
        let out = lcp.solve_psor(&mut w, 1.2, 1e-14, 3);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    proptest! {
        #[test]
        fn solvers_agree_on_random_obstacles(
            obs in proptest::collection::vec(-1.0..1.0f64, 6),
            omega in 0.5..1.9f64,
        ) {
            let lcp = obstacle_problem(6, |x| obs[((x * 7.0).round() as usize - 1).min(5)]);
            let exact = brute_force(&lcp);
            let mut v = vec![0.0; 6];
            let mut active = vec![false; 6];
            prop_assert!(lcp.solve_howard(&mut v, &mut active, 20).converged);
            let mut w = vec![0.0; 6];
            prop_assert!(lcp.solve_psor(&mut w, omega, 1e-13, 200_000).converged);
            for j in 0..6 {
                prop_assert!((v[j] - exact[j]).abs() < 1e-9);
                prop_assert!((w[j] - exact[j]).abs() < 1e-8);
            }
        }
    }
}

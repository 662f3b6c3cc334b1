//! Column assembly shared by both solvers.
//!
//! The unknowns of column `i` are the nodes `j = 1..np−1`; `j = 0` is pinned
//! at zero and `j = np` is eliminated through the upper closure.

use crate::grid::{DiscreteGenerator, ValueField};
use crate::lcp::{ColumnLcp, Row};
use crate::Real;

/// How the top node of a column depends on the interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum TopRow<T> {
    /// `v_np = coef · v_{np−1} + offset`, with `0 ≤ coef < 1`.
    Affine { coef: T, offset: T },
    /// `v_np = 2 v_{np−1} − v_{np−2}`.
    Extrapolate,
}

impl<T: Real> TopRow<T> {
    pub(crate) fn fixed(value: T) -> Self {
        TopRow::Affine {
            coef: T::zero(),
            offset: value,
        }
    }

    fn value(&self, col: &[T]) -> T {
        let n = col.len() - 1;
        match *self {
            TopRow::Affine { coef, offset } => coef * col[n - 1] + offset,
            TopRow::Extrapolate => T::of(2.0) * col[n - 1] - col[n - 2],
        }
    }
}

/// Fills the continuation rows `(βI − A)v = 0` of a column, folding the top
/// node into the last row.
pub(crate) fn continuation_rows<T: Real>(
    lcp: &mut ColumnLcp<T>,
    generator: &DiscreteGenerator<T>,
    beta: T,
    np: usize,
    top: TopRow<T>,
) {
    for j in 1..np {
        lcp.continuation[j - 1] = Row {
            lower: -generator.down[j],
            diag: generator.resolvent_diag(beta, j),
            upper: -generator.up[j],
            rhs: T::zero(),
        };
    }
    let last = &mut lcp.continuation[np - 2];
    let (dn, up) = (generator.down[np - 1], generator.up[np - 1]);
    last.upper = T::zero();
    match top {
        TopRow::Affine { coef, offset } => {
            last.diag = last.diag - up * coef;
            last.rhs = up * offset;
        }
        TopRow::Extrapolate => {
            last.lower = up - dn;
            last.diag = beta + dn - up;
        }
    }
}

/// Writes the interior solution back into column `i` and completes the top
/// node. Returns the sup-norm change of the column.
pub(crate) fn store_column<T: Real>(field: &mut ValueField<T>, i: usize, interior: &[T], top: TopRow<T>) -> T {
    let col = field.column_mut(i);
    let np = col.len() - 1;
    let mut change = T::zero();
    for j in 1..np {
        let v = interior[j - 1];
        change = change.max((v - col[j]).abs());
        col[j] = v;
    }
    let t = top.value(col);
    change = change.max((t - col[np]).abs());
    col[np] = t;
    change
}

/// `((βI − A)V)(i, j)` at an interior node.
pub(crate) fn resolvent<T: Real>(field: &ValueField<T>, generator: &DiscreteGenerator<T>, beta: T, i: usize, j: usize) -> T {
    let col = field.column(i);
    generator.resolvent_diag(beta, j) * col[j] - generator.down[j] * col[j - 1] - generator.up[j] * col[j + 1]
}

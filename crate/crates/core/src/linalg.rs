//! Dense LU solve with partial pivoting.

use ndarray::{s, Array2, Zip};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `a · x = b` in place of copies of the inputs.
pub fn solve_dense<T: Scalar>(mut a: Array2<T>, mut b: Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::Dimension(format!(
            "system matrix {:?} with right-hand side {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::lit(n.max(1) as f64);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().partial_cmp(&a[[j, col]].abs()).unwrap())
            .unwrap();
        if !(a[[pivot, col]].abs() > tiny) {
            return Err(Error::Singular(col));
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            for k in 0..b.ncols() {
                b.swap([pivot, k], [col, k]);
            }
        }
        let diag = a[[col, col]];
        for row in col + 1..n {
            let factor = a[[row, col]] / diag;
            if factor == T::zero() {
                continue;
            }
            let (upper, mut lower) = a.multi_slice_mut((s![col, col..], s![row, col..]));
            Zip::from(&mut lower).and(&upper).for_each(|l, &u| *l -= factor * u);
            let (bu, mut bl) = b.multi_slice_mut((s![col, ..], s![row, ..]));
            Zip::from(&mut bl).and(&bu).for_each(|l, &u| *l -= factor * u);
        }
    }

    for col in (0..n).rev() {
        let diag = a[[col, col]];
        for k in 0..b.ncols() {
            let mut acc = b[[col, k]];
            for j in col + 1..n {
                acc -= a[[col, j]] * b[[j, k]];
            }
            b[[col, k]] = acc / diag;
        }
    }
    Ok(b)
}

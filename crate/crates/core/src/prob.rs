use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-stochastic matrix: entries in `[0, 1]`, each row summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix<T>(Array2<T>);

/// Row-sum tolerance: `1e-9` in double precision, looser for `f32`.
pub fn row_tolerance<T: Scalar>() -> f64 {
    (256.0 * T::epsilon().as_f64()).max(1e-9)
}

impl<T: Scalar> ProbMatrix<T> {
    pub fn new(m: Array2<T>) -> Result<Self> {
        let tol = row_tolerance::<T>();
        for (i, row) in m.outer_iter().enumerate() {
            let mut sum = 0.0;
            for &v in row {
                let v = v.as_f64();
                if !v.is_finite() || !(-tol..=1.0 + tol).contains(&v) {
                    return Err(Error::NotProbability(format!("entry {v} in row {i}")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotProbability(format!("row {i} sums to {sum}")));
            }
        }
        Ok(ProbMatrix(m))
    }

    /// Rows with an all-equal distribution over `num_classes`.
    pub fn uniform(num_rows: usize, num_classes: usize) -> Self {
        ProbMatrix(Array2::from_elem((num_rows, num_classes), T::one() / T::lit(num_classes as f64)))
    }

    /// Wraps a matrix whose rows are known to be normalized.
    pub(crate) fn from_normalized(m: Array2<T>) -> Self {
        debug_assert!(ProbMatrix::new(m.clone()).is_ok());
        ProbMatrix(m)
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<T> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    /// Row-wise argmax, ties resolved to the lowest class index.
    pub fn argmax(&self) -> Vec<usize> {
        argmax_rows(self.0.view())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        ProbMatrix(self.0.select(Axis(0), rows))
    }
}

pub fn argmax_rows<T: Scalar>(m: ArrayView2<'_, T>) -> Vec<usize> {
    m.outer_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

use ndarray::{Array2, ArrayView2};

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix. Products reduce each output row in stored
/// column order, so results are bit-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || *indptr.last().unwrap() != indices.len() {
            return Err(Error::Dimension("malformed CSR row pointer".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::Dimension("CSR indices and values differ in length".into()));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Dimension("CSR row pointer is not monotone".into()));
        }
        if let Some(&c) = indices.iter().find(|&&c| c >= ncols) {
            return Err(Error::Dimension(format!("column {c} outside {ncols} columns")));
        }
        Ok(Csr { nrows, ncols, indptr, indices, values })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).fold(T::zero(), |acc, (_, v)| acc + v)
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[[i, j]] += v;
            }
        }
        out
    }

    /// `self · dense`.
    pub fn spmm(&self, dense: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if dense.nrows() != self.ncols {
            return Err(Error::Dimension(format!(
                "sparse matrix has {} columns, dense operand has {} rows",
                self.ncols,
                dense.nrows()
            )));
        }
        let mut out = Array2::zeros((self.nrows, dense.ncols()));
        for (i, mut out_row) in out.outer_iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &dense.row(j));
            }
        }
        Ok(out)
    }

    /// `selfᵀ · dense`, accumulated row by row in storage order.
    pub fn spmm_transpose(&self, dense: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if dense.nrows() != self.nrows {
            return Err(Error::Dimension(format!(
                "sparse matrix has {} rows, dense operand has {} rows",
                self.nrows,
                dense.nrows()
            )));
        }
        let mut out = Array2::zeros((self.ncols, dense.ncols()));
        for i in 0..self.nrows {
            let src = dense.row(i);
            for (j, v) in self.row(i) {
                out.row_mut(j).scaled_add(v, &src);
            }
        }
        Ok(out)
    }
}

/// Whether normalization inserts a unit self-loop on every node first
/// (GCN-style `Â = A + I`). Propagation operators use [`SelfLoops::Exclude`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfLoops {
    #[default]
    Exclude,
    Include,
}

/// Symmetrically normalized adjacency `D^{-1/2} A D^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdj<T> {
    matrix: Csr<T>,
    degrees: Vec<usize>,
    self_loops: SelfLoops,
}

impl<T: Scalar> NormAdj<T> {
    pub fn num_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Csr<T> {
        &self.matrix
    }

    /// Degrees used for normalization (including the self-loop when present).
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn self_loops(&self) -> SelfLoops {
        self.self_loops
    }

    pub fn spmm(&self, dense: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.matrix.spmm(dense)
    }

    pub fn to_dense(&self) -> Array2<T> {
        self.matrix.to_dense()
    }

    /// True when every row of `Ã` sums to one (regular graphs without isolated nodes).
    pub fn is_stochastic(&self, tol: f64) -> bool {
        (0..self.num_nodes()).all(|i| (self.matrix.row_sum(i).as_f64() - 1.0).abs() <= tol)
    }
}

pub fn normalize_adjacency<T: Scalar>(graph: &Graph<T>) -> NormAdj<T> {
    normalize_adjacency_with(graph, SelfLoops::Exclude)
}

pub fn normalize_adjacency_with<T: Scalar>(graph: &Graph<T>, self_loops: SelfLoops) -> NormAdj<T> {
    let n = graph.num_nodes();
    let extra = usize::from(self_loops == SelfLoops::Include);
    let degrees: Vec<usize> = (0..n).map(|i| graph.degree(i) + extra).collect();

    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    for i in 0..n {
        let mut row: Vec<usize> = graph.neighbors(i).to_vec();
        if extra == 1 {
            let pos = row.binary_search(&i).unwrap_err();
            row.insert(pos, i);
        }
        for j in row {
            indices.push(j);
            values.push(T::one() / T::lit((degrees[i] * degrees[j]) as f64).sqrt());
        }
        indptr.push(indices.len());
    }
    let matrix = Csr::from_parts(n, n, indptr, indices, values).expect("valid CSR from graph");
    NormAdj { matrix, degrees, self_loops }
}

pub fn spmm<T: Scalar>(adj: &NormAdj<T>, dense: ArrayView2<'_, T>) -> Result<Array2<T>> {
    adj.spmm(dense)
}

/// `tr(Fᵀ (I − Ã) F)`.
pub fn laplacian_quadratic<T: Scalar>(adj: &NormAdj<T>, f: ArrayView2<'_, T>) -> Result<T> {
    if f.nrows() != adj.num_nodes() {
        return Err(Error::Dimension(format!(
            "signal has {} rows for {} nodes",
            f.nrows(),
            adj.num_nodes()
        )));
    }
    let mut total = T::zero();
    for i in 0..f.nrows() {
        let fi = f.row(i);
        total += fi.dot(&fi);
        for (j, v) in adj.matrix.row(i) {
            total -= v * fi.dot(&f.row(j));
        }
    }
    Ok(total)
}

//! Propagation operators on class-probability matrices.
//!
//! * lazy recursion `P ← γÃP + (1−γ)P`, optionally re-pinning a node subset
//!   to its initial rows after every step;
//! * exact personalized PageRank `(1−γ)(I − γÃ)⁻¹H` by dense solve;
//! * the student-side operators `(2I − γÃ)P` and `ÃP`;
//! * clamping and row renormalization back onto the simplex.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormAdj;
use crate::linalg::solve_dense;
use crate::prob::ProbMatrix;
use crate::scalar::Scalar;

/// Largest graph for which [`ppr_exact`] builds a dense system.
pub const DENSE_SOLVE_THRESHOLD: usize = 5000;

/// Default lower clamp used before renormalizing operator outputs.
pub const DEFAULT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropVariant {
    PprExact,
    Recursive,
    RecursiveFix,
    Inverse,
    Conv,
}

/// Operator choice with its strength `gamma` and step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationSpec {
    pub variant: PropVariant,
    pub gamma: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_indices: Option<Vec<usize>>,
}

impl PropagationSpec {
    pub fn new(variant: PropVariant, gamma: f64, steps: usize) -> Self {
        PropagationSpec { variant, gamma, steps, fixed_indices: None }
    }

    pub fn with_fixed(mut self, fixed: Vec<usize>) -> Self {
        self.fixed_indices = Some(fixed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        match (self.variant, &self.fixed_indices) {
            (PropVariant::RecursiveFix, None) => Err(Error::InvalidParameter(
                "recursive_fix requires fixed indices".into(),
            )),
            (PropVariant::RecursiveFix, Some(_)) | (_, None) => Ok(()),
            (v, Some(_)) => Err(Error::InvalidParameter(format!("fixed indices given for {v:?}"))),
        }
    }

    /// Applies the operator. Recursive variants return row-stochastic output;
    /// `Inverse` and `Conv` return the raw product.
    pub fn apply<T: Scalar>(&self, p: &ProbMatrix<T>, adj: &NormAdj<T>) -> Result<Array2<T>> {
        self.validate()?;
        match self.variant {
            PropVariant::PprExact => ppr_exact(p.view(), adj, self.gamma),
            PropVariant::Recursive => Ok(propagate_recursive(p, adj, self.gamma, self.steps)?.into_inner()),
            PropVariant::RecursiveFix => Ok(propagate_recursive_fix(
                p,
                adj,
                self.gamma,
                self.steps,
                self.fixed_indices.as_deref().unwrap_or_default(),
            )?
            .into_inner()),
            PropVariant::Inverse => inverse_operator(p, adj, self.gamma),
            PropVariant::Conv => conv_operator(p, adj),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 1]")))
    }
}

fn check_shape<T: Scalar>(p: ArrayView2<'_, T>, adj: &NormAdj<T>) -> Result<()> {
    if p.nrows() == adj.num_nodes() {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{} rows for {} nodes", p.nrows(), adj.num_nodes())))
    }
}

/// `T` applications of `γÃ + (1−γ)I`, then row renormalization.
pub fn propagate_recursive<T: Scalar>(
    p: &ProbMatrix<T>,
    adj: &NormAdj<T>,
    gamma: f64,
    steps: usize,
) -> Result<ProbMatrix<T>> {
    lazy_walk(p, adj, gamma, steps, &[], |_, _| {})
}

/// As [`propagate_recursive`], but rows in `fixed` are reset to their input
/// values after every step.
pub fn propagate_recursive_fix<T: Scalar>(
    p: &ProbMatrix<T>,
    adj: &NormAdj<T>,
    gamma: f64,
    steps: usize,
    fixed: &[usize],
) -> Result<ProbMatrix<T>> {
    lazy_walk(p, adj, gamma, steps, fixed, |_, _| {})
}

/// Lazy-walk recursion with an observer called after each completed step
/// (`step` counts from 1, the matrix is not yet renormalized).
pub fn lazy_walk<T: Scalar>(
    p: &ProbMatrix<T>,
    adj: &NormAdj<T>,
    gamma: f64,
    steps: usize,
    fixed: &[usize],
    mut observe: impl FnMut(usize, &Array2<T>),
) -> Result<ProbMatrix<T>> {
    check_gamma(gamma)?;
    check_shape(p.view(), adj)?;
    if let Some(&index) = fixed.iter().find(|&&i| i >= adj.num_nodes()) {
        return Err(Error::NodeOutOfRange { index, num_nodes: adj.num_nodes() });
    }
    let g = T::lit(gamma);
    let stay = T::one() - g;
    let mut current = p.as_array().clone();
    for step in 1..=steps {
        let mut next = adj.spmm(current.view())?;
        Zip::from(&mut next).and(&current).for_each(|n, &c| *n = g * *n + stay * c);
        for &j in fixed {
            next.row_mut(j).assign(&p.as_array().row(j));
        }
        current = next;
        observe(step, &current);
    }
    let mut out = renormalize_rows(current, p.view()).into_inner();
    for &j in fixed {
        out.row_mut(j).assign(&p.as_array().row(j));
    }
    Ok(ProbMatrix::from_normalized(out))
}

/// Divides each row by its sum. Rows whose mass vanished entirely (isolated
/// nodes at `γ = 1`, or underflow) fall back to the corresponding `fallback` row.
fn renormalize_rows<T: Scalar>(mut m: Array2<T>, fallback: ArrayView2<'_, T>) -> ProbMatrix<T> {
    for (mut row, orig) in m.outer_iter_mut().zip(fallback.outer_iter()) {
        let sum: T = row.iter().copied().sum();
        if sum > T::zero() && sum.is_finite() {
            row.mapv_inplace(|v| v / sum);
        } else {
            row.assign(&orig);
        }
    }
    ProbMatrix::from_normalized(m)
}

/// Solves `(shift·I − γÃ) X = rhs` densely.
pub fn solve_shifted<T: Scalar>(
    adj: &NormAdj<T>,
    shift: f64,
    gamma: f64,
    rhs: ArrayView2<'_, T>,
    threshold: usize,
) -> Result<Array2<T>> {
    check_shape(rhs, adj)?;
    let n = adj.num_nodes();
    if n > threshold {
        return Err(Error::TooLargeForDense { nodes: n, threshold });
    }
    let mut system = adj.to_dense() * T::lit(-gamma);
    for i in 0..n {
        system[[i, i]] += T::lit(shift);
    }
    solve_dense(system, rhs.to_owned())
}

/// `(1−γ)(I − γÃ)⁻¹ H` with the default node-count threshold.
pub fn ppr_exact<T: Scalar>(h: ArrayView2<'_, T>, adj: &NormAdj<T>, gamma: f64) -> Result<Array2<T>> {
    ppr_exact_with_threshold(h, adj, gamma, DENSE_SOLVE_THRESHOLD)
}

pub fn ppr_exact_with_threshold<T: Scalar>(
    h: ArrayView2<'_, T>,
    adj: &NormAdj<T>,
    gamma: f64,
    threshold: usize,
) -> Result<Array2<T>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1)")));
    }
    Ok(solve_shifted(adj, 1.0, gamma, h, threshold)? * T::lit(1.0 - gamma))
}

/// `(2I − γÃ)P`, unnormalized.
pub fn inverse_operator<T: Scalar>(p: &ProbMatrix<T>, adj: &NormAdj<T>, gamma: f64) -> Result<Array2<T>> {
    apply_inverse(p.view(), adj, gamma)
}

pub(crate) fn apply_inverse<T: Scalar>(p: ArrayView2<'_, T>, adj: &NormAdj<T>, gamma: f64) -> Result<Array2<T>> {
    check_shape(p, adj)?;
    let mut out = adj.spmm(p)?;
    let g = T::lit(gamma);
    let two = T::lit(2.0);
    Zip::from(&mut out).and(&p).for_each(|o, &v| *o = two * v - g * *o);
    Ok(out)
}

/// `ÃP`, unnormalized.
pub fn conv_operator<T: Scalar>(p: &ProbMatrix<T>, adj: &NormAdj<T>) -> Result<Array2<T>> {
    check_shape(p.view(), adj)?;
    adj.spmm(p.view())
}

/// Clamps entries below at `floor` and divides each row by its sum.
pub fn clamp_renormalize<T: Scalar>(m: ArrayView2<'_, T>, floor: f64) -> ProbMatrix<T> {
    let f = T::lit(floor);
    let mut out = m.mapv(|v| if v > f { v } else { f });
    for mut row in out.outer_iter_mut() {
        let sum: T = row.iter().copied().sum();
        row.mapv_inplace(|v| v / sum);
    }
    ProbMatrix::from_normalized(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalize_adjacency, Graph};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn adj(n: usize, edges: &[(usize, usize)]) -> NormAdj<f64> {
        normalize_adjacency(&Graph::build(n, edges, Array2::zeros((n, 1)), vec![0; n], 1).unwrap().0)
    }

    fn eye(n: usize) -> ProbMatrix<f64> {
        ProbMatrix::new(Array2::eye(n)).unwrap()
    }

    fn assert_close(a: &Array2<f64>, b: &Array2<f64>, tol: f64) {
        assert_eq!(a.dim(), b.dim());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, *y, epsilon = tol);
        }
    }

    #[test]
    fn single_node_is_unchanged() {
        let a = adj(1, &[]);
        let p = ProbMatrix::new(array![[0.3, 0.7]]).unwrap();
        for gamma in [0.1, 0.5, 1.0] {
            assert_eq!(propagate_recursive(&p, &a, gamma, 7).unwrap(), p);
        }
    }

    #[test]
    fn one_step_on_single_edge() {
        let out = propagate_recursive(&eye(2), &adj(2, &[(0, 1)]), 0.5, 1).unwrap();
        assert_close(out.as_array(), &array![[0.5, 0.5], [0.5, 0.5]], 1e-15);
    }

    #[test]
    fn gamma_is_validated() {
        let a = adj(2, &[(0, 1)]);
        assert!(propagate_recursive(&eye(2), &a, 0.0, 1).is_err());
        assert!(propagate_recursive(&eye(2), &a, 1.2, 1).is_err());
    }

    #[test]
    fn fix_all_nodes_returns_input() {
        let a = adj(3, &[(0, 1), (1, 2)]);
        let p = ProbMatrix::new(array![[0.2, 0.8], [0.6, 0.4], [1.0, 0.0]]).unwrap();
        assert_eq!(propagate_recursive_fix(&p, &a, 0.9, 5, &[0, 1, 2]).unwrap(), p);
        assert_eq!(
            propagate_recursive_fix(&p, &a, 0.9, 5, &[]).unwrap(),
            propagate_recursive(&p, &a, 0.9, 5).unwrap()
        );
        assert!(propagate_recursive_fix(&p, &a, 0.9, 5, &[3]).is_err());
    }

    #[test]
    fn fix_path_matches_stepwise_oracle() {
        let a = adj(3, &[(0, 1), (1, 2)]);
        let p = ProbMatrix::new(array![[1.0, 0.0], [0.3, 0.7], [0.1, 0.9]]).unwrap();
        let dense = a.to_dense();
        let mut m = p.as_array().clone();
        for _ in 0..3 {
            let mut next = Array2::zeros((3, 2));
            for i in 0..3 {
                for c in 0..2 {
                    let mut acc = 0.1 * m[[i, c]];
                    for j in 0..3 {
                        acc += 0.9 * dense[[i, j]] * m[[j, c]];
                    }
                    next[[i, c]] = acc;
                }
            }
            next.row_mut(0).assign(&p.as_array().row(0));
            m = next;
        }
        for mut row in m.outer_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let out = propagate_recursive_fix(&p, &a, 0.9, 3, &[0]).unwrap();
        assert_close(out.as_array(), &m, 1e-12);
    }

    #[test]
    fn regular_graph_conserves_mass() {
        // 4-cycle: Ã rows sum to one, so no renormalization is needed
        let a = adj(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(a.is_stochastic(1e-15));
        let p = ProbMatrix::new(array![[1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.25, 0.75]]).unwrap();
        let mut sums = Vec::new();
        lazy_walk(&p, &a, 0.7, 6, &[], |_, m| sums.extend(m.rows().into_iter().map(|r| r.sum()))).unwrap();
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn ppr_single_edge() {
        let out = ppr_exact(Array2::<f64>::eye(2).view(), &adj(2, &[(0, 1)]), 0.5).unwrap();
        assert_close(&out, &array![[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]], 1e-14);
    }

    #[test]
    fn ppr_zero_gamma_is_identity_and_threshold_applies() {
        let a = adj(3, &[(0, 1), (1, 2)]);
        let h = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_close(&ppr_exact(h.view(), &a, 0.0).unwrap(), &h, 1e-15);
        assert!(matches!(
            ppr_exact_with_threshold(h.view(), &a, 0.5, 2),
            Err(Error::TooLargeForDense { nodes: 3, threshold: 2 })
        ));
        assert!(ppr_exact(h.view(), &a, 1.0).is_err());
    }

    #[test]
    fn inverse_and_conv_on_single_edge() {
        let a = adj(2, &[(0, 1)]);
        assert_eq!(inverse_operator(&eye(2), &a, 0.5).unwrap(), array![[2.0, -0.5], [-0.5, 2.0]]);
        assert_eq!(inverse_operator(&eye(2), &a, 0.0).unwrap(), array![[2.0, 0.0], [0.0, 2.0]]);
        assert_eq!(conv_operator(&eye(2), &a).unwrap(), array![[0.0, 1.0], [1.0, 0.0]]);
        let isolated = adj(3, &[(0, 1)]);
        let out = conv_operator(&eye(3), &isolated).unwrap();
        assert!(out.row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clamp_renormalize_examples() {
        let p = array![[0.25, 0.75]];
        assert_close(clamp_renormalize(p.view(), 1e-8).as_array(), &p, 1e-12);
        let out = clamp_renormalize(array![[2.0, -0.5]].view(), 1e-8);
        assert_abs_diff_eq!(out.as_array()[[0, 0]], 2.0 / (2.0 + 1e-8), epsilon = 1e-15);
        assert_abs_diff_eq!(out.as_array()[[0, 1]], 1e-8 / (2.0 + 1e-8), epsilon = 1e-20);
        let zero = clamp_renormalize(Array2::<f64>::zeros((1, 4)).view(), 1e-8);
        assert_eq!(zero.as_array(), &Array2::from_elem((1, 4), 0.25));
    }

    #[test]
    fn spec_validation() {
        assert!(PropagationSpec::new(PropVariant::Recursive, 0.9, 10).validate().is_ok());
        assert!(PropagationSpec::new(PropVariant::Recursive, 0.9, 0).validate().is_err());
        assert!(PropagationSpec::new(PropVariant::RecursiveFix, 0.9, 3).validate().is_err());
        assert!(PropagationSpec::new(PropVariant::RecursiveFix, 0.9, 3).with_fixed(vec![0]).validate().is_ok());
        assert!(PropagationSpec::new(PropVariant::Conv, 0.5, 1).with_fixed(vec![0]).validate().is_err());
    }
}

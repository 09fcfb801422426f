use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::fock::layout::{HilbertLayout, DENSE_LIMIT};
use crate::linalg::{self, C64};

/// Entrywise tolerance under which an operator is flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Anything that can act on joint-space vectors.
pub trait LinearOperator: Sync {
    fn layout(&self) -> &HilbertLayout;

    fn apply(&self, v: &[C64]) -> Vec<C64>;

    /// Upper bound on the induced 1-norm.
    fn one_norm_bound(&self) -> f64;

    fn is_hermitian(&self) -> bool;

    fn dim(&self) -> usize {
        self.layout().dim()
    }

    /// `A M` column by column.
    fn apply_matrix(&self, m: MatRef<'_, C64>) -> Mat<C64> {
        let n = m.nrows();
        let mut out = Mat::<C64>::zeros(n, m.ncols());
        let mut col = vec![linalg::ZERO; n];
        for j in 0..m.ncols() {
            for (i, z) in col.iter_mut().enumerate() {
                *z = m[(i, j)];
            }
            let y = self.apply(&col);
            for (i, z) in y.into_iter().enumerate() {
                out[(i, j)] = z;
            }
        }
        out
    }
}

/// Returns the dimension if a dense matrix of that size is allowed.
pub fn check_dense(layout: &HilbertLayout) -> Result<usize> {
    let dim = layout.dim();
    if dim > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            dim,
            limit: DENSE_LIMIT,
        });
    }
    Ok(dim)
}

/// Dense operator on the joint space of a [`HilbertLayout`].
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    layout: HilbertLayout,
    mat: Mat<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn from_matrix(layout: HilbertLayout, mat: Mat<C64>) -> Result<Self> {
        let dim = check_dense(&layout)?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: mat.nrows().max(mat.ncols()),
            });
        }
        let hermitian = linalg::hermiticity_deviation(mat.as_ref()) <= HERMITIAN_TOL;
        Ok(Self {
            layout,
            mat,
            hermitian,
        })
    }

    pub fn identity(layout: HilbertLayout) -> Result<Self> {
        let d = check_dense(&layout)?;
        Self::from_matrix(layout, Mat::identity(d, d))
    }

    pub fn zeros(layout: HilbertLayout) -> Result<Self> {
        let d = check_dense(&layout)?;
        Self::from_matrix(layout, Mat::zeros(d, d))
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        linalg::hermiticity_deviation(self.mat.as_ref())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            mat: self.mat.adjoint().to_owned(),
            hermitian: self.hermitian,
        }
    }

    pub fn scaled(&self, z: C64) -> Self {
        self.rebuild(Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * z))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// Re-derives the Hermiticity flag for a new matrix on the same layout.
    fn rebuild(&self, mat: Mat<C64>) -> Self {
        let hermitian = linalg::hermiticity_deviation(mat.as_ref()) <= HERMITIAN_TOL;
        Self {
            layout: self.layout.clone(),
            mat,
            hermitian,
        }
    }

    fn assert_same_layout(&self, other: &Self) {
        assert_eq!(
            self.layout, other.layout,
            "operator layouts differ; both operands must share one HilbertLayout"
        );
    }
}

impl LinearOperator for OperatorMatrix {
    fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        linalg::matvec(self.mat.as_ref(), v)
    }

    fn one_norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|j| (0..self.dim()).map(|i| self.mat[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    fn apply_matrix(&self, m: MatRef<'_, C64>) -> Mat<C64> {
        &self.mat * m
    }
}

// Arithmetic panics on mismatched layouts, like shape errors in array crates.
impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        self.assert_same_layout(rhs);
        self.rebuild(&self.mat + &rhs.mat)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        self.assert_same_layout(rhs);
        self.rebuild(&self.mat - &rhs.mat)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        self.assert_same_layout(rhs);
        self.rebuild(&self.mat * &rhs.mat)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scaled(linalg::real(-1.0))
    }
}

impl Mul<C64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: C64) -> OperatorMatrix {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scaled(linalg::real(rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_flag_tracks_content() {
        let layout = HilbertLayout::new(1, 1, 0).unwrap();
        let m = Mat::from_fn(2, 2, |i, j| if i < j { linalg::I } else { linalg::ZERO });
        let op = OperatorMatrix::from_matrix(layout, m).unwrap();
        assert!(!op.is_hermitian());
        assert!((&op + &op.adjoint()).is_hermitian());
    }

    #[test]
    fn rejects_wrong_dimension() {
        let layout = HilbertLayout::new(1, 2, 0).unwrap();
        assert!(OperatorMatrix::from_matrix(layout, Mat::zeros(2, 2)).is_err());
    }

    #[test]
    fn rejects_dense_beyond_limit() {
        let layout = HilbertLayout::new(3, 30, 0).unwrap();
        assert!(matches!(
            OperatorMatrix::zeros(layout),
            Err(Error::DenseTooLarge { .. })
        ));
    }
}

//! Thin helpers over `faer` for the dense complex algebra used everywhere else.

use faer::{ColRef, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type C64 = faer::c64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64 { re, im }
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64 { re, im: 0.0 }
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max(a[(i, j)].norm());
        }
    }
    worst
}

/// `max |A - A^dag|` entrywise.
pub fn hermiticity_deviation(a: MatRef<'_, C64>) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replaces `a` by `(a + a^dag) / 2`.
pub fn symmetrize(a: &mut Mat<C64>) {
    let n = a.nrows();
    for j in 0..n {
        a[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

pub fn trace(a: MatRef<'_, C64>) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn matvec(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), v.len());
    let x = ColRef::from_slice(v);
    let y = a * x;
    (0..y.nrows()).map(|i| y[i]).collect()
}

/// `<u|v>` (conjugate-linear in the first argument).
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition `A = V diag(values) V^dag` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl HermitianEigen {
    pub fn new(a: MatRef<'_, C64>) -> Result<Self> {
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let values = (0..s.nrows()).map(|i| s[i].re).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(diag) V^dag`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Mat<C64> {
        let v = &self.vectors;
        let n = self.dim();
        let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * f(self.values[j]));
        &scaled * v.adjoint()
    }

    /// `f(A) x` using two matrix-vector products.
    pub fn map_apply(&self, f: impl Fn(f64) -> C64, x: &[C64]) -> Vec<C64> {
        let y = self.vectors.adjoint() * ColRef::from_slice(x);
        let mut coeffs: Vec<C64> = (0..y.nrows()).map(|i| y[i]).collect();
        for (z, &lam) in coeffs.iter_mut().zip(&self.values) {
            *z *= f(lam);
        }
        matvec(self.vectors.as_ref(), &coeffs)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(a: MatRef<'_, C64>) -> Result<f64> {
    let values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(values.iter().map(|v| v.abs()).sum())
}

pub fn min_eigenvalue_hermitian(a: MatRef<'_, C64>) -> Result<f64> {
    let values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Solves the small dense real system `a x = b` by LU with partial pivoting.
pub fn solve_real(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let lu = a.partial_piv_lu();
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("singular linear system".into()));
    }
    Ok(out)
}

/// Inverse of a small symmetric positive semi-definite matrix through its
/// eigendecomposition; eigenvalues below `rcond * max` are dropped.
pub fn pseudo_inverse_symmetric(a: &Mat<f64>, rcond: f64) -> Result<Mat<f64>> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = a.nrows();
    let max = (0..n).map(|i| s[i].abs()).fold(0.0, f64::max);
    let inv: Vec<f64> = (0..n)
        .map(|i| if s[i] > rcond * max { 1.0 / s[i] } else { 0.0 })
        .collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| u[(i, k)] * inv[k] * u[(j, k)]).sum()
    }))
}

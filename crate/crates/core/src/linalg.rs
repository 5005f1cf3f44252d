//! Dense symmetric linear algebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A dense symmetric matrix. The constructor symmetrizes its input, so only
/// the lower triangle of the source matters after `from_lower`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        Self { m: DMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: DMatrix::identity(d, d) }
    }

    /// Wraps `m`, replacing it by `(m + mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let mt = m.transpose();
        Ok(Self { m: (m + mt) * 0.5 })
    }

    /// Builds a matrix whose upper triangle mirrors the lower one of `m`.
    pub fn from_lower(m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            for i in j..d {
                out[(i, j)] = m[(i, j)];
                out[(j, i)] = m[(i, j)];
            }
        }
        Self { m: out }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        Self { m: DMatrix::from_diagonal(&DVector::from_column_slice(d)) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Adds `v` to entries (i, j) and (j, i) (once on the diagonal).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] += v;
        if i != j {
            self.m[(j, i)] += v;
        }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { m: &self.m * a }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SymMatrix) -> Self {
        Self { m: &self.m + &other.m * a }
    }

    pub fn add_diag(&mut self, v: f64) {
        for i in 0..self.dim() {
            self.m[(i, i)] += v;
        }
    }

    /// Frobenius inner product ⟨self, other⟩ = tr(self · other).
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.m.component_mul(&other.m).sum()
    }

    /// Quadratic form xᵀ M x.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for j in 0..d {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let mut col = 0.0;
            for i in 0..d {
                col += self.m[(i, j)] * x[i];
            }
            acc += col * xj;
        }
        acc
    }

    /// M x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.m * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn eigen(m: &SymMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !m.is_finite() {
        return Err(Error::NonFinite("symmetric matrix".into()));
    }
    let d = m.dim();
    if d == 0 {
        return Ok((vec![], DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.m.clone(), f64::EPSILON, 100 * d.max(1))
        .ok_or(Error::NoConvergence)?;
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Err(Error::Dimension("empty matrix has no eigenvalues".into()));
    }
    Ok(eigen(m)?.0[0])
}

/// True iff `m + tol·I` admits a Cholesky factorization.
pub fn is_psd(m: &SymMatrix, tol: f64) -> bool {
    if !m.is_finite() {
        return false;
    }
    let mut shifted = m.m.clone();
    for i in 0..m.dim() {
        shifted[(i, i)] += tol;
    }
    shifted.cholesky().is_some()
}

/// Solves `M x = rhs` for symmetric positive definite `M`.
pub fn solve_sym(m: &SymMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.dim() {
        return Err(Error::Dimension(format!("rhs {} vs matrix {}", rhs.len(), m.dim())));
    }
    if !m.is_finite() || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear system".into()));
    }
    let ch = m.m.clone().cholesky().ok_or(Error::Singular)?;
    let b = DVector::from_column_slice(rhs);
    let x = ch.solve(&b);
    debug_assert!((&m.m * &x - &b).amax() <= 1e-8 * (1.0 + b.amax()), "solve_sym residual above bound");
    Ok(x.as_slice().to_vec())
}

/// Factor `F` with `FᵀF = M` for PSD `M`, dropping eigenvalues below `drop_tol`.
/// Rows of `F` correspond to the retained eigen-directions.
pub fn psd_factor(m: &SymMatrix, drop_tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = eigen(m)?;
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > drop_tol).collect();
    let d = m.dim();
    Ok(DMatrix::from_fn(keep.len(), d, |r, c| vals[keep[r]].sqrt() * vecs[(c, keep[r])]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_eig_of_diagonal() {
        let m = SymMatrix::from_diag(&[3.0, -2.0, 5.0]);
        assert!((min_eigenvalue(&m).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((min_eigenvalue(&m).unwrap() - 1.0).abs() < 1e-14);
        assert!(is_psd(&m, 0.0));
    }

    #[test]
    fn psd_tolerance_shift() {
        let m = SymMatrix::from_diag(&[1.0, -1e-9]);
        assert!(!is_psd(&m, 0.0));
        assert!(is_psd(&m, 1e-7));
    }

    #[test]
    fn non_finite_rejected() {
        let m = SymMatrix::from_diag(&[1.0, f64::NAN]);
        assert!(matches!(min_eigenvalue(&m), Err(Error::NonFinite(_))));
        assert!(!is_psd(&m, 1.0));
    }

    #[test]
    fn solve_spd() {
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0])).unwrap();
        let x = solve_sym(&m, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(matches!(solve_sym(&SymMatrix::zeros(2), &[1.0, 1.0]), Err(Error::Singular)));
    }

    #[test]
    fn factor_reconstructs() {
        let m = SymMatrix::new(DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        let f = psd_factor(&m, 1e-12).unwrap();
        assert_eq!(f.nrows(), 2);
        let back = f.transpose() * &f;
        assert!((back - m.as_matrix()).abs().max() < 1e-12);
    }
}

//! Dense helpers shared by the spectral and estimation code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigenDesc {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector belonging to `values[j]`.
    pub vectors: DMatrix<f64>,
}

/// Dense symmetric eigensolver; the input is symmetrised before solving.
/// Ties in the sort keep the solver's original order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> EigenDesc {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    EigenDesc { values, vectors }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Returns an error unless `m` is square and symmetric to `tol` relative to its size.
pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimError { expected: m.nrows(), got: m.ncols() });
    }
    let asym = asymmetry(m);
    if asym > tol * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Operator (spectral) norm of a symmetric matrix.
pub fn sym_op_norm(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(m));
    eig.eigenvalues.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
    let gram = u.transpose() * u;
    max_abs(&(gram - DMatrix::identity(u.ncols(), u.ncols())))
}

/// Symmetric square root of a positive semidefinite matrix; eigenvalues below
/// `-tol * max|eig|` are rejected, tiny negatives are clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen_desc(m);
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -tol * scale {
        return Err(Error::ModelError(format!("matrix is not positive semidefinite (min eigenvalue {min:.3e})")));
    }
    let roots = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|v| v.max(0.0).sqrt()));
    let scaled = &eig.vectors * DMatrix::from_diagonal(&roots);
    Ok(scaled * eig.vectors.transpose())
}

/// Orthonormal matrix from the QR factorisation of `m`, with column signs fixed so
/// that the diagonal of R is positive (Haar-distributed when `m` is Gaussian).
pub fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..q.ncols() {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Pairwise summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let eig = sym_eigen_desc(&m);
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
        assert!((eig.vectors[(2, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_sqrt(&a, 1e-12).unwrap();
        assert!(max_abs(&(&s * &s - &a)) < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(psd_sqrt(&bad, 1e-12).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }
}

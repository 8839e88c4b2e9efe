//! Empirical covariance operators and their spectral objects, indexed by the
//! population index sets.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::Dataset;
use crate::linalg;
use crate::perturbation::SIGN_TOL;
use crate::spectrum::SpectrumModel;

/// `(1/n) sum_i X_i X_i^T` of the rows of `samples`; with `centered` the sample
/// mean is removed first.
pub fn covariance_of(samples: &DMatrix<f64>, centered: bool) -> Result<DMatrix<f64>> {
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let c = if centered {
        let means = samples.row_mean();
        let mut x = samples.clone();
        for mut row in x.row_iter_mut() {
            row -= &means;
        }
        x.transpose() * x
    } else {
        samples.transpose() * samples
    };
    Ok(linalg::symmetrize(&(c / n as f64)))
}

/// Uncentered empirical covariance of a dataset.
pub fn empirical_covariance(dataset: &Dataset) -> Result<DMatrix<f64>> {
    covariance_of(&dataset.samples, false)
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalSpectrum {
    #[serde(skip)]
    pub sigma_hat: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Columns sign-aligned so that `<u_hat_j, u_j> >= 0`.
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
    /// One projector per population block, on the population index set.
    #[serde(skip)]
    pub projectors: Vec<DMatrix<f64>>,
    /// Indices whose overlap with the population eigenvector vanished, so no sign was chosen.
    pub unaligned: Vec<usize>,
}

pub fn empirical_spectrum(sigma_hat: &DMatrix<f64>, population: &SpectrumModel) -> Result<EmpiricalSpectrum> {
    let d = population.dim();
    if sigma_hat.nrows() != d || sigma_hat.ncols() != d {
        return Err(Error::DimError { expected: d, got: sigma_hat.nrows() });
    }
    linalg::check_symmetric(sigma_hat, 1e-10)?;
    let eig = linalg::sym_eigen_desc(sigma_hat);
    let mut vectors = eig.vectors;
    let mut unaligned = Vec::new();
    for j in 0..d {
        let c = vectors.column(j).dot(&population.eigenvectors().column(j));
        if c.abs() <= SIGN_TOL {
            unaligned.push(j);
        } else if c < 0.0 {
            vectors.column_mut(j).neg_mut();
        }
    }
    let projectors = population
        .blocks()
        .iter()
        .map(|b| {
            let cols = vectors.columns(b.indices.start, b.multiplicity());
            cols * cols.transpose()
        })
        .collect();
    Ok(EmpiricalSpectrum { sigma_hat: sigma_hat.clone(), eigenvalues: eig.values, eigenvectors: vectors, projectors, unaligned })
}

/// Hilbert-Schmidt distance between two projectors.
pub fn projector_distance(p_hat: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    linalg::hs_norm(&(p_hat - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn single_sample_is_outer_product() {
        let x = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        let c = covariance_of(&x, false).unwrap();
        let v = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        assert!(linalg::max_abs(&(c - &v * v.transpose())) < 1e-15);
    }

    #[test]
    fn canonical_basis_gives_scaled_identity() {
        let c = covariance_of(&DMatrix::identity(4, 4), false).unwrap();
        assert!(linalg::max_abs(&(c - DMatrix::identity(4, 4) * 0.25)) < 1e-15);
    }

    #[test]
    fn matches_double_loop() {
        let x = random(50, 4, 1);
        let c = covariance_of(&x, false).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for i in 0..50 {
                    s += x[(i, a)] * x[(i, b)];
                }
                assert!((c[(a, b)] - s / 50.0).abs() < 1e-12);
            }
        }
        let trace: f64 = x.row_iter().map(|r| r.norm_squared()).sum::<f64>() / 50.0;
        assert!((c.trace() - trace).abs() < 1e-10);
    }

    #[test]
    fn centering_removes_mean() {
        let mut x = random(30, 3, 2);
        for mut r in x.row_iter_mut() {
            r[0] += 5.0;
        }
        let c = covariance_of(&x, true).unwrap();
        assert!(c[(0, 0)] < 1.0);
        assert!(matches!(covariance_of(&DMatrix::zeros(0, 3), false), Err(Error::EmptyDataset)));
    }

    #[test]
    fn population_spectrum_is_recovered() {
        let m = SpectrumModel::diagonal(vec![3.0, 3.0, 1.0], 1e-12).unwrap();
        let s = empirical_spectrum(&m.covariance(), &m).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 3.0, 1.0]);
        for (r, p) in s.projectors.iter().enumerate() {
            assert!(linalg::max_abs(&(p - m.projector(r).unwrap())) < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_resorted_descending() {
        let m = SpectrumModel::diagonal(vec![3.0, 2.0, 1.0], 1e-12).unwrap();
        let sh = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 2.0, 3.0]));
        let s = empirical_spectrum(&sh, &m).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn rank_deficient_estimate() {
        let m = SpectrumModel::diagonal(vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.5], 1e-12).unwrap();
        let sh = covariance_of(&random(4, 6, 3), false).unwrap();
        let s = empirical_spectrum(&sh, &m).unwrap();
        assert_eq!(s.eigenvalues.iter().filter(|v| v.abs() < 1e-9).count(), 2);
        let sum: DMatrix<f64> = s.projectors.iter().fold(DMatrix::zeros(6, 6), |a, p| a + p);
        assert!(linalg::max_abs(&(sum - DMatrix::identity(6, 6))) < 1e-8);
    }

    #[test]
    fn projector_distances() {
        let e1 = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0]));
        let e2 = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.0, 1.0]));
        assert_eq!(projector_distance(&e1, &e1), 0.0);
        assert!((projector_distance(&e1, &e2) - 2f64.sqrt()).abs() < 1e-15);
    }
}

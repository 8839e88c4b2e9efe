//! Random population models and perturbation directions for the algebraic sweeps.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;
use crate::spectrum::SpectrumModel;

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    linalg::orthonormalize(DMatrix::from_fn(d, d, |_, _| rng.sample(StandardNormal)))
}

/// Symmetric matrix with i.i.d. uniform entries on the upper triangle, scaled so
/// that its largest entry has magnitude one.
pub fn random_direction(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.random_range(-1.0..1.0);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let m = linalg::max_abs(&g);
    g / m
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RandomModelOptions {
    pub min_dim: usize,
    pub max_dim: usize,
    /// Ratios between consecutive distinct eigenvalues are drawn from this range.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Probability that a distinct eigenvalue is repeated.
    pub repeat_prob: f64,
    pub max_multiplicity: usize,
}

impl Default for RandomModelOptions {
    fn default() -> Self {
        Self { min_dim: 2, max_dim: 8, min_ratio: 1.3, max_ratio: 3.0, repeat_prob: 0.0, max_multiplicity: 3 }
    }
}

/// Geometric-type spectrum with random ratios and optional repeated values,
/// rotated by a random orthogonal basis.
pub fn random_model(opts: &RandomModelOptions, rng: &mut impl Rng) -> Result<SpectrumModel> {
    let d = rng.random_range(opts.min_dim..=opts.max_dim);
    let mut values = Vec::with_capacity(d);
    let mut current = rng.random_range(0.5..5.0);
    while values.len() < d {
        let mult = if opts.repeat_prob > 0.0 && rng.random::<f64>() < opts.repeat_prob {
            rng.random_range(2..=opts.max_multiplicity.max(2))
        } else {
            1
        };
        for _ in 0..mult.min(d - values.len()) {
            values.push(current);
        }
        current /= rng.random_range(opts.min_ratio..opts.max_ratio);
    }
    let u = random_orthogonal(d, rng);
    SpectrumModel::new(values, u, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn direction_is_normalised_and_symmetric() {
        let g = random_direction(5, &mut rng::stream(1, 0, 0));
        assert!((linalg::max_abs(&g) - 1.0).abs() < 1e-15);
        assert_eq!(linalg::asymmetry(&g), 0.0);
    }

    #[test]
    fn models_respect_options() {
        let opts = RandomModelOptions { repeat_prob: 0.5, ..Default::default() };
        let mut r = rng::stream(2, 0, 0);
        for _ in 0..50 {
            let m = random_model(&opts, &mut r).unwrap();
            assert!((2..=8).contains(&m.dim()));
            assert!(linalg::orthonormality_defect(m.eigenvectors()) < 1e-12);
        }
    }
}

//! Fixtures shared by the benchmarks.

use relperturb::experiments::{random_direction, random_orthogonal};
use relperturb::rng::{self, role};
use relperturb::{Perturbation, SpectrumModel};

/// Power-law spectrum `j^{-2}` in a random basis of dimension `d`.
pub fn power_model(d: usize, seed: u64) -> SpectrumModel {
    let values = (1..=d).map(|j| (j as f64).powi(-2)).collect();
    let u = random_orthogonal(d, &mut rng::stream(seed, 0, role::MODEL));
    SpectrumModel::new(values, u, 1e-12).expect("valid power spectrum")
}

/// Relative perturbation of size `x` in a random direction.
pub fn relative_perturbation(model: &SpectrumModel, x: f64, seed: u64) -> Perturbation {
    let eta = random_direction(model.dim(), &mut rng::stream(seed, 0, role::DIRECTION)) * x;
    Perturbation::from_relative(model, &eta).expect("symmetric direction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_size() {
        let m = power_model(6, 1);
        let p = relative_perturbation(&m, 1e-3, 2);
        assert_eq!(m.dim(), 6);
        assert!((p.x_full() - 1e-3).abs() < 1e-15);
    }
}

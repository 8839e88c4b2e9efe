//! Property tests for the structural invariants of spectra, perturbations and estimates.

use nalgebra::DMatrix;
use proptest::prelude::*;

use relperturb::estimation::{covariance_of, empirical_spectrum, projector_distance};
use relperturb::experiments::{random_direction, random_orthogonal};
use relperturb::linalg;
use relperturb::perturbation::{coefficient_summary, separation_bound_holds, weyl_holds, check_condition_simple};
use relperturb::rng::{self, role};
use relperturb::stats::Proportion;
use relperturb::{Perturbation, SpectrumModel};

/// Distinct values with optional repeats, in random order.
fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0.05f64..10.0, 1usize..=3), 1..7).prop_map(|groups| {
        let mut v = Vec::new();
        for (value, mult) in groups {
            for _ in 0..mult {
                v.push(value);
            }
        }
        v
    })
}

fn model(values: Vec<f64>, seed: u64) -> SpectrumModel {
    let u = random_orthogonal(values.len(), &mut rng::stream(seed, 0, role::MODEL));
    SpectrumModel::from_unsorted(values, u, 1e-12).unwrap()
}

fn direction(d: usize, seed: u64) -> DMatrix<f64> {
    random_direction(d, &mut rng::stream(seed, 0, role::DIRECTION))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn multiplicities_and_masses_add_up(values in spectrum(), seed in any::<u64>()) {
        let m = model(values, seed);
        let mult: usize = m.blocks().iter().map(|b| b.multiplicity()).sum();
        prop_assert_eq!(mult, m.dim());
        let mass: f64 = m.blocks().iter().map(|b| b.mass()).sum();
        prop_assert!((mass - m.trace()).abs() <= 1e-10 * m.trace().max(1.0));
        prop_assert!((m.covariance().trace() - m.trace()).abs() <= 1e-10 * m.trace().max(1.0));
    }

    #[test]
    fn relative_rank_dominates_gap_ratio(values in spectrum(), seed in any::<u64>()) {
        let m = model(values, seed);
        prop_assume!(m.blocks().len() > 1);
        for j in 0..m.dim() {
            if !m.is_simple(j).unwrap() {
                continue;
            }
            let l = m.eigenvalues();
            let r = m.relative_rank(j).unwrap();
            prop_assert!(r >= l[j] / m.spectral_gap(j).unwrap() - 1e-12);
            if j == 0 {
                let tail: f64 = l[1..].iter().map(|lk| lk / (l[0] - lk)).sum();
                prop_assert!(r >= 1.0 + tail - 1e-9);
            }
            let s = m.separation_sum(j).unwrap();
            if r >= s {
                prop_assert!(m.eigvec_sensitivity(j).unwrap().powi(2) <= r * r + 1e-9);
            }
        }
    }

    #[test]
    fn resolvent_identity_and_completeness(values in spectrum(), seed in any::<u64>()) {
        let m = model(values, seed);
        let d = m.dim();
        let id = DMatrix::<f64>::identity(d, d);
        let mut total = DMatrix::zeros(d, d);
        for (r, b) in m.blocks().iter().enumerate() {
            let p = m.projector(r).unwrap();
            total += &p;
            let lhs = m.resolvent(r).unwrap() * (m.covariance() - &id * b.mu);
            prop_assert!((lhs - (&id - p)).abs().max() <= 1e-9);
        }
        prop_assert!((total - id).abs().max() <= 1e-10);
    }

    #[test]
    fn weyl_and_norm_identities(values in spectrum(), seed in any::<u64>(), scale in 1e-4f64..1.0) {
        let m = model(values, seed);
        let e = direction(m.dim(), seed) * scale * m.eigenvalues()[m.dim() - 1];
        let pert = Perturbation::new(&m, e).unwrap();
        prop_assert!(weyl_holds(&m, &pert, 1e-9));
        for j in 0..m.dim() {
            if let Ok(u_hat) = pert.aligned_eigenvector(&m, j) {
                let u = m.eigenvector(j);
                let lhs = (&u_hat - &u).norm_squared();
                prop_assert!((lhs - 2.0 * (1.0 - u_hat.dot(&u))).abs() <= 1e-10);
            }
        }
        let id = DMatrix::<f64>::identity(m.dim(), m.dim());
        for r in 0..m.blocks().len() {
            let p_hat = pert.perturbed_projector(&m, r).unwrap();
            let p = m.projector(r).unwrap();
            let lhs = projector_distance(&p_hat, &p).powi(2);
            let rhs = 2.0 * (&p_hat * (&id - &p)).trace();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }

    #[test]
    fn separation_bound_under_condition(values in spectrum(), seed in any::<u64>(), t in 0.01f64..1.0) {
        let m = model(values, seed);
        prop_assume!(m.blocks().len() > 1);
        for j in 0..m.dim() {
            if !m.is_simple(j).unwrap() {
                continue;
            }
            let x = t / (3.0 * m.relative_rank(j).unwrap());
            prop_assert!(check_condition_simple(&m, j, x).unwrap());
            let eta = direction(m.dim(), seed ^ j as u64) * x;
            let pert = Perturbation::from_relative(&m, &eta).unwrap();
            prop_assert!((pert.x_full() - x).abs() <= 1e-12 * x.max(1.0));
            prop_assert!(separation_bound_holds(&m, &pert, j, pert.x_full(), 1e-12));
        }
    }

    #[test]
    fn block_coefficients_never_exceed_full(values in spectrum(), seed in any::<u64>(), scale in 1e-3f64..2.0) {
        let m = model(values, seed);
        let pert = Perturbation::from_relative(&m, &(direction(m.dim(), seed) * scale)).unwrap();
        for r0 in 1..=m.blocks().len() {
            let s = coefficient_summary(&m, &pert, r0).unwrap();
            prop_assert!(s.x_block <= s.x_full * (1.0 + 1e-12));
            let parts = s.pair.iter().flatten().chain(&s.cross).chain(std::iter::once(&s.tail));
            prop_assert!(parts.fold(0.0f64, |a, &b| a.max(b)) == s.x_block);
        }
        prop_assert!(linalg::asymmetry(pert.eta_bar()) <= 1e-12);
    }

    #[test]
    fn estimator_identities(values in spectrum(), seed in any::<u64>(), n in 1usize..60) {
        let m = model(values, seed);
        let d = m.dim();
        let mut r = rng::stream(seed, 1, role::SAMPLES);
        let x = DMatrix::from_fn(n, d, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let s = covariance_of(&x, false).unwrap();
        let direct: f64 = x.row_iter().map(|row| row.norm_squared()).sum::<f64>() / n as f64;
        prop_assert!((s.trace() - direct).abs() <= 1e-10 * direct.max(1.0));
        let emp = empirical_spectrum(&s, &m).unwrap();
        let id = DMatrix::<f64>::identity(d, d);
        let total = emp.projectors.iter().fold(DMatrix::zeros(d, d), |acc, p| acc + p);
        prop_assert!((total - &id).abs().max() <= 1e-8);
        for (r, p_hat) in emp.projectors.iter().enumerate() {
            let p = m.projector(r).unwrap();
            let lhs = projector_distance(p_hat, &p).powi(2);
            prop_assert!((lhs - 2.0 * (p_hat * (&id - &p)).trace()).abs() <= 1e-9);
        }
    }

    #[test]
    fn wilson_interval_is_a_probability_interval(s in 0u64..500, extra in 0u64..500, z in 0.5f64..4.0) {
        let p = Proportion::wilson(s, s + extra, z);
        if s + extra > 0 {
            prop_assert!((0.0..=1.0).contains(&p.estimate));
            prop_assert!(p.lower <= p.estimate && p.estimate <= p.upper);
            prop_assert!(p.lower >= 0.0 && p.upper <= 1.0);
        }
    }
}

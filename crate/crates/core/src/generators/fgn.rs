//! Fractional Gaussian noise by circulant embedding.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Eigenvalues below this are treated as a failed embedding.
const EMBEDDING_TOL: f64 = -1e-10;

/// Stationary Gaussian vector of length `n` with the fractional Gaussian noise
/// autocovariance, exact in distribution. Consumes `4n` normal draws.
pub fn fgn(n: usize, hurst: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::PreconditionFailed(format!("fgn needs n >= 2, got {n}")));
    }
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::PreconditionFailed(format!("Hurst index {hurst} outside (0, 1)")));
    }
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|i| {
            let lag = if i <= n { i } else { m - i };
            Complex::new(fgn_autocovariance(lag, hurst), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let mut w = Vec::with_capacity(m);
    for c in &row {
        let ev = c.re;
        if ev < EMBEDDING_TOL {
            return Err(Error::EmbeddingError(ev));
        }
        let scale = (ev.max(0.0) / m as f64).sqrt();
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        w.push(Complex::new(scale * a, scale * b));
    }
    fft.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn autocovariance_closed_form() {
        assert_eq!(fgn_autocovariance(0, 0.8), 1.0);
        for k in 1..5 {
            assert!(fgn_autocovariance(k, 0.5).abs() < 1e-15);
        }
        // 0.5 (2^{1.6} - 2)
        assert!((fgn_autocovariance(1, 0.8) - 0.5 * (2f64.powf(1.6) - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let mut r = rng::stream(0, 0, 0);
        assert!(fgn(1, 0.7, &mut r).is_err());
        assert!(fgn(10, 1.0, &mut r).is_err());
    }

    #[test]
    fn deterministic_given_stream() {
        let a = fgn(64, 0.7, &mut rng::stream(3, 1, 2)).unwrap();
        let b = fgn(64, 0.7, &mut rng::stream(3, 1, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn marginal_variance_near_one() {
        let mut r = rng::stream(5, 0, 0);
        let mut acc = Vec::new();
        for _ in 0..200 {
            let g = fgn(16, 0.8, &mut r).unwrap();
            acc.push(g[7] * g[7]);
        }
        let m = crate::stats::MeanSe::of(&acc);
        assert!(m.covers(1.0, 4.0), "{m:?}");
    }
}

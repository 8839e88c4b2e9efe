//! Sample generators for the i.i.d., weakly dependent, long-memory, one-factor
//! and spiked factor settings. Every generator is a pure function of its
//! configuration and random stream.

mod fgn;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, role};
use crate::spectrum::{SpectrumModel, DEFAULT_GROUPING_TOL};

pub use fgn::{fgn, fgn_autocovariance};

/// Distribution of the standardised coefficients; every family has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CoeffFamily {
    #[default]
    Gaussian,
    /// Student t with `df` degrees of freedom scaled by `sqrt((df - 2) / df)`.
    StudentT { df: f64 },
    /// Symmetric signs `+-1`.
    ScaledRademacher,
}

impl CoeffFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoeffFamily::StudentT { df } if !(df > 4.0) => Err(Error::MomentError(df)),
            _ => Ok(()),
        }
    }

    /// `E eta^4` of the unit-variance family.
    pub fn fourth_moment(&self) -> f64 {
        match *self {
            CoeffFamily::Gaussian => 3.0,
            CoeffFamily::StudentT { df } => 3.0 * (df - 2.0) / (df - 4.0),
            CoeffFamily::ScaledRademacher => 1.0,
        }
    }

    pub fn sampler(&self) -> Result<CoeffSampler> {
        self.validate()?;
        Ok(match *self {
            CoeffFamily::Gaussian => CoeffSampler::Gaussian,
            CoeffFamily::StudentT { df } => CoeffSampler::StudentT {
                dist: StudentT::new(df).map_err(|e| Error::Config(e.to_string()))?,
                scale: ((df - 2.0) / df).sqrt(),
            },
            CoeffFamily::ScaledRademacher => CoeffSampler::Rademacher,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CoeffSampler {
    Gaussian,
    StudentT { dist: StudentT<f64>, scale: f64 },
    Rademacher,
}

impl CoeffSampler {
    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            CoeffSampler::Gaussian => rng.sample(StandardNormal),
            CoeffSampler::StudentT { dist, scale } => scale * dist.sample(rng),
            CoeffSampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// `rows x cols` matrix filled in row-major order.
    pub fn matrix(&self, rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        DMatrix::from_row_iterator(rows, cols, (0..rows * cols).map(|_| self.draw(rng)))
    }
}

/// Stochastic setting with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Setting {
    #[default]
    Iid,
    /// Linear filter `c_k = (k + 1)^{-decay}`, `k = 0..=filter_len`, normalised to unit variance.
    WeakDependence { decay: f64, filter_len: usize },
    /// Volatility `v_i^2 = exp(sigma G_i - sigma^2 / 2)` with fractional Gaussian noise `G`.
    LongMemory { hurst: f64, sigma: f64 },
    /// Single factor on the top `spikes` eigen-directions with Gaussian noise.
    OneFactor { spikes: usize },
    /// `X = sum_k w_k F_k f_k + A^{1/2} Y`; `directions[k] = f_k`, `base = A` by rows.
    SpikedFactor { weights: Vec<f64>, directions: Vec<Vec<f64>>, base: Vec<Vec<f64>> },
}

impl Setting {
    pub fn validate(&self) -> Result<()> {
        match self {
            Setting::Iid => Ok(()),
            Setting::WeakDependence { decay, .. } => {
                if *decay > 1.5 {
                    Ok(())
                } else {
                    Err(Error::DecayError(*decay))
                }
            }
            Setting::LongMemory { hurst, sigma } => {
                if !(*hurst > 0.5 && *hurst < 1.0) {
                    return Err(Error::Config(format!("Hurst index {hurst} outside (1/2, 1)")));
                }
                if !(*sigma >= 0.0) {
                    return Err(Error::Config(format!("volatility scale {sigma} must be non-negative")));
                }
                Ok(())
            }
            Setting::OneFactor { spikes } if *spikes == 0 => Err(Error::Config("one-factor model needs spikes >= 1".into())),
            Setting::OneFactor { .. } => Ok(()),
            Setting::SpikedFactor { weights, directions, .. } if weights.len() != directions.len() => {
                Err(Error::Config("one weight per factor direction required".into()))
            }
            Setting::SpikedFactor { .. } => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub setting: Setting,
    pub n: usize,
    /// Population covariance of the generated rows.
    pub model: Arc<SpectrumModel>,
    #[serde(default)]
    pub coefficients: CoeffFamily,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(setting: Setting, n: usize, model: SpectrumModel, coefficients: CoeffFamily, seed: u64) -> Self {
        Self { setting, n, model: Arc::new(model), coefficients, seed }
    }

    /// Spiked factor configuration whose population model is computed from the factor parameters.
    pub fn spiked(
        weights: Vec<f64>,
        directions: Vec<Vec<f64>>,
        base: Vec<Vec<f64>>,
        n: usize,
        coefficients: CoeffFamily,
        seed: u64,
    ) -> Result<Self> {
        let sigma = spiked_covariance(&weights, &directions, &rows_to_matrix(&base)?)?;
        let model = SpectrumModel::from_covariance(&sigma, DEFAULT_GROUPING_TOL)?;
        Ok(Self::new(Setting::SpikedFactor { weights, directions, base }, n, model, coefficients, seed))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample count n must be positive".into()));
        }
        self.coefficients.validate()?;
        self.setting.validate()?;
        if let Setting::OneFactor { spikes } = self.setting {
            if spikes > self.model.dim() {
                return Err(Error::OutOfRange { index: spikes, limit: self.model.dim() });
            }
        }
        Ok(())
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

/// `n x d` sample matrix with the configuration that produced it.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Row `i` is the sample `X_i`.
    pub samples: DMatrix<f64>,
    pub provenance: GeneratorConfig,
    pub trial: u64,
}

impl Dataset {
    pub fn truth(&self) -> &SpectrumModel {
        &self.provenance.model
    }

    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }
}

/// Draws the dataset for `trial` from the stream keyed by `(config.seed, trial)`.
pub fn generate(config: &GeneratorConfig, trial: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, trial, role::SAMPLES);
    let samples = match &config.setting {
        Setting::Iid => sample_iid(config, &mut rng)?,
        Setting::WeakDependence { .. } => sample_weak_dependence(config, &mut rng)?,
        Setting::LongMemory { .. } => sample_long_memory(config, &mut rng)?,
        Setting::OneFactor { spikes } => sample_one_factor(&config.model, *spikes, config.n, &mut rng)?,
        Setting::SpikedFactor { weights, directions, base } => {
            sample_spiked_factor(weights, directions, &rows_to_matrix(base)?, config.coefficients, config.n, &mut rng)?
        }
    };
    Ok(Dataset { samples, provenance: config.clone(), trial })
}

/// Rows `X_i = sum_j sqrt(l_j) eta_ij u_j` with i.i.d. coefficients.
pub fn sample_iid(config: &GeneratorConfig, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let sampler = config.coefficients.sampler()?;
    let eta = sampler.matrix(config.n, config.model.dim(), rng);
    Ok(eta * config.model.sqrt_factor().transpose())
}

/// Normalised filter coefficients `c_k / sqrt(sum c^2)`, `k = 0..=len`.
pub fn filter_coefficients(decay: f64, len: usize) -> Result<Vec<f64>> {
    if !(decay > 1.5) {
        return Err(Error::DecayError(decay));
    }
    let raw: Vec<f64> = (0..=len).map(|k| ((k + 1) as f64).powf(-decay)).collect();
    let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(raw.iter().map(|c| c / norm).collect())
}

/// Lag-`h` autocorrelation of the normalised filter output.
pub fn filter_autocorrelation(decay: f64, len: usize, lag: usize) -> Result<f64> {
    let c = filter_coefficients(decay, len)?;
    Ok(c.iter().zip(c.iter().skip(lag)).map(|(a, b)| a * b).sum())
}

/// Coefficients from the causal filter applied to innovations drawn for rows
/// `-len..n` in row-major order; `len = 0` reproduces [`sample_iid`] exactly.
pub fn sample_weak_dependence(config: &GeneratorConfig, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let Setting::WeakDependence { decay, filter_len } = config.setting else {
        return Err(Error::Config("weak-dependence sampler called with another setting".into()));
    };
    let c = filter_coefficients(decay, filter_len)?;
    let sampler = config.coefficients.sampler()?;
    let d = config.model.dim();
    let n = config.n;
    let innov = sampler.matrix(n + filter_len, d, rng);
    let eta = DMatrix::from_fn(n, d, |i, j| {
        let mut acc = 0.0;
        for (k, ck) in c.iter().enumerate() {
            acc += ck * innov[(i + filter_len - k, j)];
        }
        acc
    });
    Ok(eta * config.model.sqrt_factor().transpose())
}

/// Monte Carlo estimate of `E|eta_i - eta_i'|^4` where `eta'` is computed from the
/// same innovations with the one at time 0 replaced by an independent copy.
pub fn coupling_moment(decay: f64, filter_len: usize, family: CoeffFamily, lag: usize, reps: usize, rng: &mut impl Rng) -> Result<f64> {
    let c = filter_coefficients(decay, filter_len)?;
    let sampler = family.sampler()?;
    let mut acc = Vec::with_capacity(reps);
    for _ in 0..reps {
        // Innovations at times lag-len..=lag; index `lag - t` holds time t.
        let innov: Vec<f64> = (0..=filter_len).map(|_| sampler.draw(rng)).collect();
        let swap = sampler.draw(rng);
        let eta: f64 = c.iter().zip(&innov).map(|(a, b)| a * b).sum();
        let eta_swapped: f64 = c
            .iter()
            .zip(&innov)
            .enumerate()
            .map(|(k, (a, b))| if k == lag { a * swap } else { a * b })
            .sum();
        acc.push((eta - eta_swapped).powi(4));
    }
    Ok(crate::stats::mean(&acc))
}

/// `X_i = v_i eps_i` with `v_i^2 = exp(sigma G_i - sigma^2/2)`. The noise rows are
/// drawn first, so `sigma = 0` reproduces [`sample_iid`] exactly.
pub fn sample_long_memory(config: &GeneratorConfig, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let Setting::LongMemory { hurst, sigma } = config.setting else {
        return Err(Error::Config("long-memory sampler called with another setting".into()));
    };
    let mut x = sample_iid(config, rng)?;
    if sigma == 0.0 {
        return Ok(x);
    }
    let v2 = volatility_squared(config.n, hurst, sigma, rng)?;
    for (mut row, s) in x.row_iter_mut().zip(v2) {
        row *= s.sqrt();
    }
    Ok(x)
}

/// `v_i^2 = exp(sigma G_i - sigma^2 / 2)`, mean one.
pub fn volatility_squared(n: usize, hurst: f64, sigma: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let g = fgn(n.max(2), hurst, rng)?;
    Ok(g[..n].iter().map(|gi| (sigma * gi - 0.5 * sigma * sigma).exp()).collect())
}

/// Closed-form `Var(sum_{i<n} (v_i^2 - 1))` for the lognormal volatility.
pub fn volatility_partial_sum_variance(n: usize, hurst: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let mut total = n as f64 * (s2.exp() - 1.0);
    for k in 1..n {
        total += 2.0 * (n - k) as f64 * ((s2 * fgn_autocovariance(k, hurst)).exp() - 1.0);
    }
    total
}

/// Factor direction `F = sum_{j < r} sqrt(l_j) u_j`.
pub fn one_factor_direction(model: &SpectrumModel, spikes: usize) -> DVector<f64> {
    let mut f = DVector::zeros(model.dim());
    for j in 0..spikes {
        f += model.eigenvector(j) * model.eigenvalues()[j].sqrt();
    }
    f
}

/// Square root of the noise covariance `Sigma - F F^T / (2r)`.
pub fn one_factor_noise_root(model: &SpectrumModel, spikes: usize) -> Result<DMatrix<f64>> {
    let f = one_factor_direction(model, spikes);
    let cov = model.covariance() - &f * f.transpose() / (2.0 * spikes as f64);
    linalg::psd_sqrt(&cov, 1e-10)
}

/// Factor value: `0` with probability `1 - 1/(2r^2)`, `+-sqrt(r)` with probability `1/(4r^2)` each.
pub fn one_factor_value(spikes: usize, u: f64) -> f64 {
    let r = spikes as f64;
    let tail = 1.0 / (4.0 * r * r);
    if u < tail {
        r.sqrt()
    } else if u < 2.0 * tail {
        -r.sqrt()
    } else {
        0.0
    }
}

/// `X = f F + eps` with Gaussian noise of covariance `Sigma - F F^T/(2r)`; total covariance `Sigma`.
pub fn sample_one_factor(model: &SpectrumModel, spikes: usize, n: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    if spikes == 0 || spikes > model.dim() {
        return Err(Error::OutOfRange { index: spikes, limit: model.dim() + 1 });
    }
    let root = one_factor_noise_root(model, spikes)?;
    let f = one_factor_direction(model, spikes);
    let z = CoeffSampler::Gaussian.matrix(n, model.dim(), rng);
    let mut x = z * root;
    for mut row in x.row_iter_mut() {
        let v = one_factor_value(spikes, rng.random());
        if v != 0.0 {
            row += f.transpose() * v;
        }
    }
    Ok(x)
}

/// `sum_k w_k^2 f_k f_k^T + A`, after checking orthogonal directions and an SPD base.
pub fn spiked_covariance(weights: &[f64], directions: &[Vec<f64>], base: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = base.nrows();
    linalg::check_symmetric(base, 1e-10)?;
    let min = linalg::sym_eigen_desc(base).values.last().copied().unwrap_or(0.0);
    if !(min > 0.0) {
        return Err(Error::ModelError(format!("base matrix is not positive definite (min eigenvalue {min:.3e})")));
    }
    if weights.len() != directions.len() {
        return Err(Error::Config("one weight per factor direction required".into()));
    }
    let dirs: Vec<DVector<f64>> = directions
        .iter()
        .map(|v| if v.len() == d { Ok(DVector::from_column_slice(v)) } else { Err(Error::DimError { expected: d, got: v.len() }) })
        .collect::<Result<_>>()?;
    for a in 0..dirs.len() {
        for b in 0..a {
            if dirs[a].dot(&dirs[b]).abs() > 1e-8 * dirs[a].norm() * dirs[b].norm() {
                return Err(Error::ModelError(format!("factor directions {b} and {a} are not orthogonal")));
            }
        }
    }
    let mut sigma = base.clone();
    for (w, f) in weights.iter().zip(&dirs) {
        sigma += f * f.transpose() * (w * w);
    }
    Ok(sigma)
}

/// `X = sum_k w_k F_k f_k + A^{1/2} Y` with independent unit-variance loadings `F`
/// and noise `Y` from `family`.
pub fn sample_spiked_factor(
    weights: &[f64],
    directions: &[Vec<f64>],
    base: &DMatrix<f64>,
    family: CoeffFamily,
    n: usize,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    spiked_covariance(weights, directions, base)?;
    let sampler = family.sampler()?;
    let d = base.nrows();
    let k = weights.len();
    let loadings = sampler.matrix(n, k, rng);
    let y = sampler.matrix(n, d, rng);
    let mut x = y * linalg::psd_sqrt(base, 1e-12)?;
    // n x k times k x d
    let spikes = DMatrix::from_fn(k, d, |a, c| weights[a] * directions[a][c]);
    x += loadings * spikes;
    Ok(x)
}

/// Empirical covariance of `n` i.i.d. Gaussian rows drawn in distribution through
/// the Bartlett decomposition of the Wishart matrix: cost independent of `n`.
pub fn gaussian_covariance_fast(model: &SpectrumModel, n: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let d = model.dim();
    if n < d {
        return Err(Error::PreconditionFailed(format!("Bartlett sampling needs n >= d ({n} < {d})")));
    }
    let mut lower = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new((n - i) as f64).map_err(|e| Error::Config(e.to_string()))?;
        lower[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            lower[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let bl = model.sqrt_factor() * lower;
    Ok(linalg::symmetrize(&(&bl * bl.transpose() / n as f64)))
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if d == 0 {
        return Err(Error::Config("empty matrix".into()));
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::DimError { expected: d, got: r.len() });
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

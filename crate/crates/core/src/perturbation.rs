//! Relative perturbation coefficients and first-order expansions of eigenvalues,
//! eigenvectors and spectral projectors, each checked against an exact
//! eigendecomposition of the perturbed operator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, EigenDesc};
use crate::spectrum::SpectrumModel;

/// Below this `|<u_hat, u>|` the sign alignment of an empirical eigenvector is undefined.
pub const SIGN_TOL: f64 = 1e-14;

/// A symmetric perturbation `E = Sigma_hat - Sigma` expressed in the population
/// eigenbasis, together with the exact spectrum of `Sigma + E`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    e: DMatrix<f64>,
    /// `U^T E U`: coefficients of `E` in the population eigenbasis.
    e_basis: DMatrix<f64>,
    eta_bar: DMatrix<f64>,
    perturbed: EigenDesc,
    indefinite: bool,
}

impl Perturbation {
    /// Computes `eta_bar_jk = <u_j, E u_k> / sqrt(lambda_j lambda_k)`.
    pub fn new(model: &SpectrumModel, e: DMatrix<f64>) -> Result<Self> {
        let d = model.dim();
        if e.nrows() != d || e.ncols() != d {
            return Err(Error::DimError { expected: d, got: if e.nrows() != d { e.nrows() } else { e.ncols() } });
        }
        linalg::check_symmetric(&e, 1e-10)?;
        let e = linalg::symmetrize(&e);
        let u = model.eigenvectors();
        let e_basis = linalg::symmetrize(&(u.transpose() * &e * u));
        let lambda = model.eigenvalues();
        let eta_bar = DMatrix::from_fn(d, d, |j, k| e_basis[(j, k)] / (lambda[j] * lambda[k]).sqrt());
        let perturbed = linalg::sym_eigen_desc(&(model.covariance() + &e));
        let indefinite = perturbed.values.last().is_some_and(|&v| v < 0.0);
        Ok(Self { e, e_basis, eta_bar, perturbed, indefinite })
    }

    /// Perturbation `Sigma_hat - Sigma` for an empirical covariance matrix.
    pub fn from_estimate(model: &SpectrumModel, sigma_hat: &DMatrix<f64>) -> Result<Self> {
        if sigma_hat.nrows() != model.dim() {
            return Err(Error::DimError { expected: model.dim(), got: sigma_hat.nrows() });
        }
        Self::new(model, sigma_hat - model.covariance())
    }

    /// Perturbation with prescribed relative coefficients: `E = U D^{1/2} eta D^{1/2} U^T`.
    pub fn from_relative(model: &SpectrumModel, eta: &DMatrix<f64>) -> Result<Self> {
        let d = model.dim();
        if eta.nrows() != d || eta.ncols() != d {
            return Err(Error::DimError { expected: d, got: eta.nrows() });
        }
        let b = model.sqrt_factor();
        Self::new(model, linalg::symmetrize(&(&b * eta * b.transpose())))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn eta_bar(&self) -> &DMatrix<f64> {
        &self.eta_bar
    }

    /// `sup_{k,l} |eta_bar_kl|`.
    pub fn x_full(&self) -> f64 {
        linalg::max_abs(&self.eta_bar)
    }

    /// Whether `Sigma + E` has a negative eigenvalue.
    pub fn is_indefinite(&self) -> bool {
        self.indefinite
    }

    /// Eigenvalues of `Sigma + E`, descending.
    pub fn perturbed_eigenvalues(&self) -> &[f64] {
        &self.perturbed.values
    }

    /// Eigenvectors of `Sigma + E` as columns, in solver sign convention.
    pub fn perturbed_eigenvectors(&self) -> &DMatrix<f64> {
        &self.perturbed.vectors
    }

    /// Operator norm of `E`.
    pub fn op_norm(&self) -> f64 {
        linalg::sym_op_norm(&self.e)
    }

    /// Empirical eigenvector `j` with its sign chosen so that `<u_hat_j, u_j> > 0`.
    pub fn aligned_eigenvector(&self, model: &SpectrumModel, j: usize) -> Result<DVector<f64>> {
        let u = model.eigenvector(j);
        let mut uh = self.perturbed.vectors.column(j).into_owned();
        let c = uh.dot(&u);
        if c.abs() <= SIGN_TOL {
            return Err(Error::DegenerateSign(j));
        }
        if c < 0.0 {
            uh.neg_mut();
        }
        Ok(uh)
    }

    /// Empirical projector on the population index set of block `r`.
    pub fn perturbed_projector(&self, model: &SpectrumModel, r: usize) -> Result<DMatrix<f64>> {
        let b = model.block(r)?;
        let cols = self.perturbed.vectors.columns(b.indices.start, b.multiplicity());
        Ok(cols * cols.transpose())
    }
}

/// Normalised block norms of `E` relative to a cut-off block `r0`.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSummary {
    pub r0: usize,
    /// `||P_s E P_t||_2 / sqrt(m_s mu_s m_t mu_t)` for `s, t < r0`.
    pub pair: Vec<Vec<f64>>,
    /// `||P_s E P_{>=r0}||_2 / sqrt(m_s mu_s tr_{>=r0})` for `s < r0`.
    pub cross: Vec<f64>,
    /// `||P_{>=r0} E P_{>=r0}||_2 / tr_{>=r0}`.
    pub tail: f64,
    /// Maximum over the three families.
    pub x_block: f64,
    pub x_full: f64,
}

/// The block-wise summary of the relative coefficients with cut-off `r0`
/// (`r0 == number of blocks` means an empty tail).
pub fn coefficient_summary(model: &SpectrumModel, pert: &Perturbation, r0: usize) -> Result<CoefficientSummary> {
    let nb = model.blocks().len();
    if r0 == 0 || r0 > nb {
        return Err(Error::OutOfRange { index: r0, limit: nb + 1 });
    }
    let blocks = &model.blocks()[..r0];
    let b = &pert.e_basis;
    let d = model.dim();
    let tail_start = model.blocks().get(r0).map_or(d, |blk| blk.indices.start);
    let tail_tr = model.tail_trace(r0);
    let fro = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> f64 {
        let mut acc = 0.0;
        for i in rows {
            for k in cols.clone() {
                acc += b[(i, k)] * b[(i, k)];
            }
        }
        acc.sqrt()
    };
    let pair: Vec<Vec<f64>> = blocks
        .iter()
        .map(|bs| {
            blocks
                .iter()
                .map(|bt| fro(bs.indices.clone(), bt.indices.clone()) / (bs.mass() * bt.mass()).sqrt())
                .collect()
        })
        .collect();
    let (cross, tail) = if tail_start < d {
        let cross = blocks.iter().map(|bs| fro(bs.indices.clone(), tail_start..d) / (bs.mass() * tail_tr).sqrt()).collect();
        (cross, fro(tail_start..d, tail_start..d) / tail_tr)
    } else {
        (vec![0.0; r0], 0.0)
    };
    let x_block = pair
        .iter()
        .flatten()
        .chain(cross.iter())
        .chain(std::iter::once(&tail))
        .fold(0.0f64, |a, &v| a.max(v));
    Ok(CoefficientSummary { r0, pair, cross, tail, x_block, x_full: pert.x_full() })
}

/// Relative rank condition for a simple eigenvalue: `r_j <= 1 / (3x)`.
pub fn check_condition_simple(model: &SpectrumModel, j: usize, x: f64) -> Result<bool> {
    Ok(3.0 * x * model.relative_rank(j)? <= 1.0)
}

/// Relative rank condition for a block: `r_r <= 1 / (6x)`.
pub fn check_condition_multi(model: &SpectrumModel, r: usize, x: f64) -> Result<bool> {
    Ok(6.0 * x * model.relative_rank_block(r)? <= 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Target {
    Eigenvalue(usize),
    Eigenvector(usize),
    BlockEigenvalues(usize),
    Projector(usize),
}

/// Scalar, vector or matrix valued quantity in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl Quantity {
    fn vector(v: &DVector<f64>) -> Self {
        Quantity::Vector(v.iter().copied().collect())
    }

    fn matrix(m: &DMatrix<f64>) -> Self {
        Quantity::Matrix(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

/// Squared-norm identity check accompanying the eigenvector and projector expansions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormCheck {
    /// `||u_hat - u||^2` or `||P_hat - P||_2^2`.
    pub observed: f64,
    /// Quadratic prediction of the same quantity.
    pub predicted: f64,
    pub residual: f64,
    /// `x^3 r scale^2` with unit constant.
    pub budget: f64,
}

/// Linear prediction versus exact value for one target. `budget` is
/// `x^2 * r * scale` with unit constant, so `residual / budget` is the empirical
/// constant of the bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub target: Target,
    pub prediction: Quantity,
    pub oracle: Quantity,
    pub residual: f64,
    pub budget: f64,
    pub condition_satisfied: bool,
    pub x: f64,
    pub rel_rank: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_check: Option<NormCheck>,
    /// Residual of the leading eigenvalue of a block (block targets only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leading_residual: Option<f64>,
}

impl ExpansionReport {
    pub fn empirical_constant(&self) -> f64 {
        if self.budget > 0.0 {
            self.residual / self.budget
        } else {
            0.0
        }
    }
}

/// `lambda_hat_j` against `lambda_j (1 + eta_bar_jj)`.
pub fn eigenvalue_expansion(model: &SpectrumModel, pert: &Perturbation, j: usize) -> Result<ExpansionReport> {
    let rank = model.relative_rank(j)?;
    let lambda = model.eigenvalues()[j];
    let x = pert.x_full();
    let prediction = lambda * (1.0 + pert.eta_bar[(j, j)]);
    let oracle = pert.perturbed.values[j];
    Ok(ExpansionReport {
        target: Target::Eigenvalue(j),
        prediction: Quantity::Scalar(prediction),
        oracle: Quantity::Scalar(oracle),
        residual: (oracle - prediction).abs(),
        budget: x * x * rank * lambda,
        condition_satisfied: check_condition_simple(model, j, x)?,
        x,
        rel_rank: rank,
        norm_check: None,
        leading_residual: None,
    })
}

/// `u_hat_j` against `u_j + sum_{k != j} sqrt(l_j l_k)/(l_j - l_k) eta_bar_jk u_k`.
pub fn eigenvector_expansion(model: &SpectrumModel, pert: &Perturbation, j: usize) -> Result<ExpansionReport> {
    let rank = model.relative_rank(j)?;
    let sens = model.eigvec_sensitivity(j)?;
    let lambda = model.eigenvalues();
    let lj = lambda[j];
    let x = pert.x_full();
    let mut coeffs = DVector::zeros(model.dim());
    coeffs[j] = 1.0;
    let mut quad = 0.0;
    for (k, &lk) in lambda.iter().enumerate() {
        if k == j {
            continue;
        }
        let eta = pert.eta_bar[(j, k)];
        coeffs[k] = (lj * lk).sqrt() / (lj - lk) * eta;
        quad += lj * lk / ((lj - lk) * (lj - lk)) * eta * eta;
    }
    let prediction = model.eigenvectors() * coeffs;
    let oracle = pert.aligned_eigenvector(model, j)?;
    let diff = &oracle - model.eigenvector(j);
    let observed = diff.norm_squared();
    Ok(ExpansionReport {
        target: Target::Eigenvector(j),
        residual: (&oracle - &prediction).norm(),
        prediction: Quantity::vector(&prediction),
        oracle: Quantity::vector(&oracle),
        budget: x * x * rank * sens,
        condition_satisfied: check_condition_simple(model, j, x)?,
        x,
        rel_rank: rank,
        norm_check: Some(NormCheck {
            observed,
            predicted: quad,
            residual: (observed - quad).abs(),
            budget: x * x * x * rank * sens * sens,
        }),
        leading_residual: None,
    })
}

/// Eigenvalues of the block `r` compression of `Sigma_hat - mu_r` against the
/// eigenvalues of `P_r E P_r`, matched in sorted order; the residual is the
/// 1-norm of the sorted differences.
pub fn multi_eigenvalue_expansion(
    model: &SpectrumModel,
    pert: &Perturbation,
    r: usize,
    r0: usize,
) -> Result<ExpansionReport> {
    model.check_r0(r, r0)?;
    let block = model.block(r)?.clone();
    let rank = model.relative_rank_block(r)?;
    let x = coefficient_summary(model, pert, r0)?.x_block;
    let m = block.multiplicity();
    let idx = block.indices.clone();

    // The empirical eigenvectors on I_r diagonalise the compression exactly.
    let oracle: Vec<f64> = idx.clone().map(|j| pert.perturbed.values[j] - block.mu).collect();
    let sub = pert.e_basis.view((idx.start, idx.start), (m, m)).into_owned();
    let prediction = linalg::sym_eigen_desc(&sub).values;
    let residual: f64 = oracle.iter().zip(&prediction).map(|(a, b)| (a - b).abs()).sum();
    Ok(ExpansionReport {
        target: Target::BlockEigenvalues(r),
        leading_residual: Some((oracle[0] - prediction[0]).abs()),
        prediction: Quantity::Vector(prediction),
        oracle: Quantity::Vector(oracle),
        residual,
        budget: x * x * rank * block.mass(),
        condition_satisfied: check_condition_multi(model, r, x)?,
        x,
        rel_rank: rank,
        norm_check: None,
    })
}

/// `P_hat_r` against `P_r - R_r E P_r - P_r E R_r`, residual in Hilbert-Schmidt norm.
pub fn projector_expansion(
    model: &SpectrumModel,
    pert: &Perturbation,
    r: usize,
    r0: usize,
) -> Result<ExpansionReport> {
    model.check_r0(r, r0)?;
    let rank = model.relative_rank_block(r)?;
    let x = coefficient_summary(model, pert, r0)?.x_block;
    let sens = model.block_sensitivity_sum(r)?;
    let p = model.projector(r)?;
    let res = model.resolvent(r)?;
    let rep = &res * &pert.e * &p;
    let prediction = &p - &rep - rep.transpose();
    let oracle = pert.perturbed_projector(model, r)?;
    let observed = linalg::hs_norm(&(&oracle - &p)).powi(2);
    let predicted = 2.0 * linalg::hs_norm(&rep).powi(2);
    Ok(ExpansionReport {
        target: Target::Projector(r),
        residual: linalg::hs_norm(&(&oracle - &prediction)),
        prediction: Quantity::matrix(&prediction),
        oracle: Quantity::matrix(&oracle),
        budget: x * x * rank * sens.sqrt(),
        condition_satisfied: check_condition_multi(model, r, x)?,
        x,
        rel_rank: rank,
        norm_check: Some(NormCheck {
            observed,
            predicted,
            residual: (observed - predicted).abs(),
            budget: x * x * x * rank * sens,
        }),
        leading_residual: None,
    })
}

/// Both sides of the eigenvalue separation implications at offset `y`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeparationOutcome {
    /// `sum_{k,l >= j} a_k a_l eta_bar_kl^2`, `a_k = l_k / (l_j + y - l_k)`.
    pub premise_upper: f64,
    /// `sum_{k,l <= j} b_k b_l eta_bar_kl^2`, `b_k = l_k / (l_k + y - l_j)`.
    pub premise_lower: f64,
    /// Premise of the upper implication holds (`<= 1`).
    pub implied_upper: bool,
    pub implied_lower: bool,
    /// `lambda_hat_j - lambda_j` from the exact eigendecomposition.
    pub oracle_deviation: f64,
    pub y: f64,
}

impl SeparationOutcome {
    /// True when a premise holds but its conclusion fails beyond `tol`.
    pub fn is_counterexample(&self, tol: f64) -> bool {
        (self.implied_upper && self.oracle_deviation > self.y + tol)
            || (self.implied_lower && self.oracle_deviation < -self.y - tol)
    }
}

pub fn separation_test(model: &SpectrumModel, pert: &Perturbation, j: usize, y: f64) -> Result<SeparationOutcome> {
    if !(y > 0.0) {
        return Err(Error::PreconditionFailed(format!("offset y = {y} must be positive")));
    }
    let lambda = model.eigenvalues();
    let d = model.dim();
    if j >= d {
        return Err(Error::OutOfRange { index: j, limit: d });
    }
    let lj = lambda[j];
    let quad = |range: std::ops::Range<usize>, w: &dyn Fn(f64) -> f64| -> f64 {
        let weights: Vec<f64> = range.clone().map(|k| w(lambda[k])).collect();
        let mut acc = 0.0;
        for (a, k) in range.clone().enumerate() {
            for (b, l) in range.clone().enumerate() {
                let eta = pert.eta_bar[(k, l)];
                acc += weights[a] * weights[b] * eta * eta;
            }
        }
        acc
    };
    let premise_upper = quad(j..d, &|lk| lk / (lj + y - lk));
    let premise_lower = quad(0..j + 1, &|lk| lk / (lk + y - lj));
    Ok(SeparationOutcome {
        premise_upper,
        premise_lower,
        implied_upper: premise_upper <= 1.0,
        implied_lower: premise_lower <= 1.0,
        oracle_deviation: pert.perturbed.values[j] - lj,
        y,
    })
}

/// Worst ratio `|<u_hat_j, u_k>| |l_j - l_k| / (x sqrt(l_j l_k))` over `k != j`.
/// Requires `x >= sup |eta_bar|` and the simple relative rank condition.
pub fn contraction_bound_check(model: &SpectrumModel, pert: &Perturbation, j: usize, x: f64) -> Result<f64> {
    if x < pert.x_full() * (1.0 - 1e-12) {
        return Err(Error::PreconditionFailed(format!("x = {x} is below sup|eta_bar| = {}", pert.x_full())));
    }
    if !check_condition_simple(model, j, x)? {
        return Err(Error::PreconditionFailed(format!("relative rank condition fails at x = {x}")));
    }
    let lambda = model.eigenvalues();
    let uh = pert.perturbed.vectors.column(j);
    let mut worst = 0.0f64;
    for (k, &lk) in lambda.iter().enumerate() {
        if k == j {
            continue;
        }
        let overlap = uh.dot(&model.eigenvectors().column(k)).abs();
        worst = worst.max(overlap * (lambda[j] - lk).abs() / (x * (lambda[j] * lk).sqrt()));
    }
    Ok(worst)
}

/// `z = sqrt(n) / sum_{k >= j} l_k / (l_j + y - l_k)`, the solution of the
/// fixed-point equation `(z / sqrt(n)) sum_{k >= j} l_k / (l_j + y - l_k) = 1`.
pub fn fixpoint_solve(model: &SpectrumModel, j: usize, y: f64, n: usize) -> Result<f64> {
    if !(y > 0.0) || n == 0 {
        return Err(Error::PreconditionFailed("fixed point needs y > 0 and n >= 1".into()));
    }
    let lambda = model.eigenvalues();
    if j >= lambda.len() {
        return Err(Error::OutOfRange { index: j, limit: lambda.len() });
    }
    let lj = lambda[j];
    let sum: f64 = lambda[j..].iter().map(|&lk| lk / (lj + y - lk)).sum();
    Ok((n as f64).sqrt() / sum)
}

/// Inverse of [`fixpoint_solve`]: the offset `y` at which the fixed point equals `z`.
pub fn solve_offset_for_z(model: &SpectrumModel, j: usize, z: f64, n: usize) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::PreconditionFailed("z must be positive".into()));
    }
    // z(y) increases from 0 to infinity on (0, infinity).
    let lj = model.eigenvalues().get(j).copied().ok_or(Error::OutOfRange { index: j, limit: model.dim() })?;
    let (mut lo, mut hi) = (lj * 1e-15, lj);
    while fixpoint_solve(model, j, hi, n)? < z {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fixpoint_solve(model, j, mid, n)? < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classical Weyl inequality `|lambda_hat_j - lambda_j| <= ||E||_op` for all `j`.
pub fn weyl_holds(model: &SpectrumModel, pert: &Perturbation, tol: f64) -> bool {
    let bound = pert.op_norm() + tol;
    model.eigenvalues().iter().zip(pert.perturbed_eigenvalues()).all(|(l, lh)| (lh - l).abs() <= bound)
}

/// Eigenvalue separation under the simple condition: `|lambda_hat_j - lambda_j| <= 1.5 x lambda_j`.
pub fn separation_bound_holds(model: &SpectrumModel, pert: &Perturbation, j: usize, x: f64, tol: f64) -> bool {
    let lj = model.eigenvalues()[j];
    (pert.perturbed_eigenvalues()[j] - lj).abs() <= 1.5 * x * lj + tol
}

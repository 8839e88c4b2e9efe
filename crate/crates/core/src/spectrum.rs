//! Population covariance operators described by their spectral decomposition.
//!
//! A [`SpectrumModel`] stores the eigenvalues in non-increasing order together with
//! an orthonormal eigenbasis and the partition of indices into blocks of equal
//! eigenvalues. All indices in this module are 0-based: eigenvalue `j` is
//! `eigenvalues()[j]` and block `r` is `blocks()[r]`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Grouping tolerance used for analytically specified spectra.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-8;

/// Orthonormality tolerance accepted by [`SpectrumModel::new`].
pub const BASIS_TOL: f64 = 1e-8;

/// One distinct eigenvalue `mu` and the contiguous index range sharing it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinctBlock {
    pub mu: f64,
    pub indices: Range<usize>,
}

impl DistinctBlock {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }

    /// `m_r * mu_r`, the trace carried by the block.
    pub fn mass(&self) -> f64 {
        self.multiplicity() as f64 * self.mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    blocks: Vec<DistinctBlock>,
    block_of: Vec<usize>,
    grouping_tol: f64,
}

impl SpectrumModel {
    /// Builds a model from sorted eigenvalues and an orthonormal basis (columns).
    ///
    /// Consecutive eigenvalues within `grouping_tol * lambda` of the block's
    /// leading value form one block, and every eigenvalue of a block is replaced
    /// by the block mean so that multiplicities are exact.
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, grouping_tol: f64) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidSpectrum(format!("eigenvalue {bad} is not strictly positive")));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum("eigenvalues must be non-increasing".into()));
        }
        if !(grouping_tol >= 0.0) {
            return Err(Error::InvalidSpectrum("grouping tolerance must be non-negative".into()));
        }
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(Error::DimError { expected: d, got: eigenvectors.ncols() });
        }
        let defect = linalg::orthonormality_defect(&eigenvectors);
        if !(defect <= BASIS_TOL) {
            return Err(Error::InvalidBasis(defect));
        }

        let mut blocks = Vec::new();
        let mut start = 0;
        for j in 1..=d {
            let lead = eigenvalues[start];
            if j == d || (lead - eigenvalues[j]).abs() > grouping_tol * lead {
                let mu = eigenvalues[start..j].iter().sum::<f64>() / (j - start) as f64;
                blocks.push(DistinctBlock { mu, indices: start..j });
                start = j;
            }
        }
        let mut snapped = eigenvalues;
        let mut block_of = vec![0; d];
        for (r, b) in blocks.iter().enumerate() {
            for j in b.indices.clone() {
                snapped[j] = b.mu;
                block_of[j] = r;
            }
        }
        Ok(Self { eigenvalues: snapped, eigenvectors, blocks, block_of, grouping_tol })
    }

    /// Model with the canonical basis as eigenvectors.
    pub fn diagonal(eigenvalues: Vec<f64>, grouping_tol: f64) -> Result<Self> {
        let d = eigenvalues.len();
        Self::new(eigenvalues, DMatrix::identity(d, d), grouping_tol)
    }

    /// Sorts eigenpairs in descending order first; ties keep their original order.
    pub fn from_unsorted(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, grouping_tol: f64) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.ncols() != d {
            return Err(Error::DimError { expected: d, got: eigenvectors.ncols() });
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let values = order.iter().map(|&i| eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(eigenvectors.nrows(), d, |r, c| eigenvectors[(r, order[c])]);
        Self::new(values, vectors, grouping_tol)
    }

    /// Eigendecomposition of a symmetric positive definite covariance matrix.
    pub fn from_covariance(sigma: &DMatrix<f64>, grouping_tol: f64) -> Result<Self> {
        linalg::check_symmetric(sigma, 1e-10)?;
        let eig = linalg::sym_eigen_desc(sigma);
        Self::new(eig.values, eig.vectors, grouping_tol)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }

    pub fn blocks(&self) -> &[DistinctBlock] {
        &self.blocks
    }

    pub fn grouping_tol(&self) -> f64 {
        self.grouping_tol
    }

    pub fn block(&self, r: usize) -> Result<&DistinctBlock> {
        self.blocks.get(r).ok_or(Error::OutOfRange { index: r, limit: self.blocks.len() })
    }

    /// Block containing eigenvalue index `j`.
    pub fn block_of(&self, j: usize) -> Result<usize> {
        self.block_of.get(j).copied().ok_or(Error::OutOfRange { index: j, limit: self.dim() })
    }

    pub fn is_simple(&self, j: usize) -> Result<bool> {
        Ok(self.blocks[self.block_of(j)?].multiplicity() == 1)
    }

    fn require_simple(&self, j: usize) -> Result<()> {
        if self.is_simple(j)? {
            Ok(())
        } else {
            Err(Error::NotSimple(j))
        }
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `tr_{>=r}(Sigma)`: trace carried by blocks `r, r+1, ...`; zero past the end.
    pub fn tail_trace(&self, r: usize) -> f64 {
        self.blocks.iter().skip(r).map(DistinctBlock::mass).sum()
    }

    /// `U diag(lambda) U^T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = DVector::from_column_slice(&self.eigenvalues);
        &self.eigenvectors * DMatrix::from_diagonal(&d) * self.eigenvectors.transpose()
    }

    /// `U diag(sqrt(lambda))`, a factor `B` with `B B^T = Sigma`.
    pub fn sqrt_factor(&self) -> DMatrix<f64> {
        let d = DVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|v| v.sqrt()));
        &self.eigenvectors * DMatrix::from_diagonal(&d)
    }

    /// Spectral gap `g_j`; `g_0 = lambda_0 - lambda_1`, the last index uses its
    /// single left neighbour.
    pub fn spectral_gap(&self, j: usize) -> Result<f64> {
        self.require_simple(j)?;
        let l = &self.eigenvalues;
        let d = l.len();
        if d < 2 {
            return Err(Error::NoGap);
        }
        Ok(if j == 0 {
            l[0] - l[1]
        } else if j == d - 1 {
            l[d - 2] - l[d - 1]
        } else {
            (l[j - 1] - l[j]).min(l[j] - l[j + 1])
        })
    }

    /// Relative rank of a simple eigenvalue:
    /// `sum_{k != j} lambda_k / |lambda_j - lambda_k| + lambda_j / g_j`.
    pub fn relative_rank(&self, j: usize) -> Result<f64> {
        let gap = self.spectral_gap(j)?;
        Ok(self.separation_sum(j)? + self.eigenvalues[j] / gap)
    }

    /// `sum_{k != j} lambda_k / |lambda_j - lambda_k|` for a simple eigenvalue.
    pub fn separation_sum(&self, j: usize) -> Result<f64> {
        self.require_simple(j)?;
        let lj = self.eigenvalues[j];
        Ok(self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &lk)| lk / (lj - lk).abs())
            .sum())
    }

    /// Gap of block `r` to its neighbouring blocks (single neighbour at the ends).
    pub fn block_gap(&self, r: usize) -> Result<f64> {
        self.block(r)?;
        let b = &self.blocks;
        if b.len() < 2 {
            return Err(Error::NoGap);
        }
        Ok(if r == 0 {
            b[0].mu - b[1].mu
        } else if r == b.len() - 1 {
            b[r - 1].mu - b[r].mu
        } else {
            (b[r - 1].mu - b[r].mu).min(b[r].mu - b[r + 1].mu)
        })
    }

    /// Relative rank of block `r` with multiplicities:
    /// `sum_{s != r} m_s mu_s / |mu_r - mu_s| + m_r mu_r / gap_r`.
    pub fn relative_rank_block(&self, r: usize) -> Result<f64> {
        let gap = self.block_gap(r)?;
        let br = &self.blocks[r];
        let cross: f64 = self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != r)
            .map(|(_, bs)| bs.mass() / (br.mu - bs.mu).abs())
            .sum();
        Ok(cross + br.mass() / gap)
    }

    /// `sqrt(sum_{k != j} lambda_j lambda_k / (lambda_j - lambda_k)^2)`, the natural
    /// scale of eigenvector fluctuations.
    pub fn eigvec_sensitivity(&self, j: usize) -> Result<f64> {
        Ok(self.sensitivity_sum(j)?.sqrt())
    }

    /// `sum_{k != j} lambda_j lambda_k / (lambda_j - lambda_k)^2`.
    pub fn sensitivity_sum(&self, j: usize) -> Result<f64> {
        self.require_simple(j)?;
        let lj = self.eigenvalues[j];
        Ok(self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &lk)| lj * lk / ((lj - lk) * (lj - lk)))
            .sum())
    }

    /// `sum_{s != r} m_r mu_r m_s mu_s / (mu_r - mu_s)^2`.
    pub fn block_sensitivity_sum(&self, r: usize) -> Result<f64> {
        let br = self.block(r)?;
        Ok(self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != r)
            .map(|(_, bs)| br.mass() * bs.mass() / ((br.mu - bs.mu) * (br.mu - bs.mu)))
            .sum())
    }

    /// Orthogonal projector `P_r` onto the eigenspace of block `r`.
    pub fn projector(&self, r: usize) -> Result<DMatrix<f64>> {
        let b = self.block(r)?;
        let cols = self.eigenvectors.columns(b.indices.start, b.multiplicity());
        Ok(cols * cols.transpose())
    }

    /// Projector onto blocks `r0, r0+1, ...` (zero matrix when `r0` is past the end).
    pub fn tail_projector(&self, r0: usize) -> DMatrix<f64> {
        let d = self.dim();
        match self.blocks.get(r0) {
            None => DMatrix::zeros(d, d),
            Some(b) => {
                let cols = self.eigenvectors.columns(b.indices.start, d - b.indices.start);
                cols * cols.transpose()
            }
        }
    }

    /// Reduced resolvent `R_r = sum_{s != r} P_s / (mu_s - mu_r)`.
    pub fn resolvent(&self, r: usize) -> Result<DMatrix<f64>> {
        let mu = self.block(r)?.mu;
        let weights = DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|k| if self.block_of[k] == r { 0.0 } else { 1.0 / (self.eigenvalues[k] - mu) }),
        );
        Ok(&self.eigenvectors * DMatrix::from_diagonal(&weights) * self.eigenvectors.transpose())
    }

    /// Smallest block index `r0 > r` with `mu_{r0} <= mu_r / 2`, or the number of
    /// blocks when the truncation has no such block (empty tail).
    pub fn default_r0(&self, r: usize) -> Result<usize> {
        let mu = self.block(r)?.mu;
        Ok((r + 1..self.blocks.len()).find(|&s| self.blocks[s].mu <= mu / 2.0).unwrap_or(self.blocks.len()))
    }

    /// Checks that `r0` is admissible for block `r`: `r0 > r` and `mu_{r0} <= mu_r / 2`
    /// (an empty tail is always admissible).
    pub fn check_r0(&self, r: usize, r0: usize) -> Result<()> {
        let mu = self.block(r)?.mu;
        if r0 <= r || r0 > self.blocks.len() {
            return Err(Error::PreconditionFailed(format!("r0 = {r0} must lie in ({r}, {}]", self.blocks.len())));
        }
        if let Some(b) = self.blocks.get(r0) {
            if b.mu > mu / 2.0 {
                return Err(Error::PreconditionFailed(format!(
                    "mu_r0 = {} exceeds mu_r / 2 = {}",
                    b.mu,
                    mu / 2.0
                )));
            }
        }
        Ok(())
    }

    /// Table of the convex-decay sums for `j = 0..j_max`.
    pub fn convexity_report(&self, j_max: usize) -> Result<Vec<ConvexityRow>> {
        if j_max > self.dim() {
            return Err(Error::OutOfRange { index: j_max, limit: self.dim() });
        }
        (0..j_max)
            .map(|j| {
                let s1 = self.separation_sum(j)?;
                let s2 = self.sensitivity_sum(j)?;
                let rank = (j + 1) as f64;
                let jlogj = rank * rank.ln();
                Ok(ConvexityRow {
                    j,
                    s1,
                    s2,
                    s1_over_jlogj: (jlogj > 0.0).then(|| s1 / jlogj),
                    s2_over_j2: s2 / (rank * rank),
                })
            })
            .collect()
    }
}

/// One row of [`SpectrumModel::convexity_report`]. `j` is 0-based; the normalisers
/// use the 1-based rank `j + 1`, so the `j log j` ratio is undefined for the top index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityRow {
    pub j: usize,
    pub s1: f64,
    pub s2: f64,
    pub s1_over_jlogj: Option<f64>,
    pub s2_over_j2: f64,
}

/// JSON form of a spectrum. `eigenvectors[j]` is the eigenvector of `eigenvalues[j]`;
/// when absent the canonical basis is used.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrumFile {
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grouping_tol: Option<f64>,
}

impl TryFrom<SpectrumFile> for SpectrumModel {
    type Error = Error;

    fn try_from(file: SpectrumFile) -> Result<Self> {
        let d = file.eigenvalues.len();
        let tol = file.grouping_tol.unwrap_or(DEFAULT_GROUPING_TOL);
        let basis = match file.eigenvectors {
            None => DMatrix::identity(d, d),
            Some(vecs) => {
                if vecs.len() != d {
                    return Err(Error::DimError { expected: d, got: vecs.len() });
                }
                if let Some(bad) = vecs.iter().find(|v| v.len() != d) {
                    return Err(Error::DimError { expected: d, got: bad.len() });
                }
                DMatrix::from_fn(d, d, |r, c| vecs[c][r])
            }
        };
        SpectrumModel::from_unsorted(file.eigenvalues, basis, tol)
    }
}

impl From<&SpectrumModel> for SpectrumFile {
    fn from(model: &SpectrumModel) -> Self {
        let d = model.dim();
        let identity = model.eigenvectors == DMatrix::identity(d, d);
        SpectrumFile {
            eigenvalues: model.eigenvalues.clone(),
            eigenvectors: (!identity)
                .then(|| (0..d).map(|c| model.eigenvectors.column(c).iter().copied().collect()).collect()),
            grouping_tol: Some(model.grouping_tol),
        }
    }
}

impl Serialize for SpectrumModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectrumModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = SpectrumFile::deserialize(d)?;
        SpectrumModel::try_from(file).map_err(serde::de::Error::custom)
    }
}

/// Declarative spectra used by experiment configurations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectrumSpec {
    /// Explicit eigenvalues in the canonical basis.
    Explicit { eigenvalues: Vec<f64> },
    /// `lambda_j = scale * j^{-exponent}` for `j = 1..=dim`.
    Power { exponent: f64, dim: usize, #[serde(default = "one")] scale: f64 },
    /// `lambda_j = scale * exp(-rate * j)` for `j = 1..=dim`.
    Exponential { rate: f64, dim: usize, #[serde(default = "one")] scale: f64 },
    /// Distinct values with multiplicities, e.g. a spiked block above a tail.
    Blocks { values: Vec<f64>, multiplicities: Vec<usize> },
    /// Power decay truncated at the smallest dimension whose discarded tail trace is
    /// below `tail_fraction` of the total, capped at `max_dim`.
    TruncatedPower { exponent: f64, tail_fraction: f64, max_dim: usize },
}

fn one() -> f64 {
    1.0
}

impl SpectrumSpec {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let values = match self {
            SpectrumSpec::Explicit { eigenvalues } => eigenvalues.clone(),
            SpectrumSpec::Power { exponent, dim, scale } => {
                (1..=*dim).map(|j| scale * (j as f64).powf(-exponent)).collect()
            }
            SpectrumSpec::Exponential { rate, dim, scale } => {
                (1..=*dim).map(|j| scale * (-rate * j as f64).exp()).collect()
            }
            SpectrumSpec::Blocks { values, multiplicities } => {
                if values.len() != multiplicities.len() {
                    return Err(Error::DimError { expected: values.len(), got: multiplicities.len() });
                }
                values.iter().zip(multiplicities).flat_map(|(&v, &m)| std::iter::repeat_n(v, m)).collect()
            }
            SpectrumSpec::TruncatedPower { exponent, tail_fraction, max_dim } => {
                truncate_power(*exponent, *tail_fraction, *max_dim)?
            }
        };
        Ok(values)
    }

    pub fn build(&self) -> Result<SpectrumModel> {
        let mut values = self.eigenvalues()?;
        values.sort_by(|a, b| b.total_cmp(a));
        SpectrumModel::diagonal(values, DEFAULT_GROUPING_TOL)
    }
}

/// Truncation of `lambda_j = j^{-a}`: the smallest `d` such that the discarded tail
/// `sum_{j > d} lambda_j` is below `tail_fraction * sum_j lambda_j`.
pub fn truncate_power(exponent: f64, tail_fraction: f64, max_dim: usize) -> Result<Vec<f64>> {
    if exponent <= 1.0 {
        return Err(Error::InvalidSpectrum("power decay needs exponent > 1 to be trace class".into()));
    }
    // Tail beyond d is bracketed by the integral bound d^{1-a}/(a-1).
    let total: f64 = (1..=max_dim).map(|j| (j as f64).powf(-exponent)).sum::<f64>()
        + (max_dim as f64).powf(1.0 - exponent) / (exponent - 1.0);
    let mut acc = 0.0;
    for d in 1..=max_dim {
        acc += (d as f64).powf(-exponent);
        if total - acc <= tail_fraction * total {
            return Ok((1..=d).map(|j| (j as f64).powf(-exponent)).collect());
        }
    }
    Err(Error::InvalidSpectrum(format!(
        "tail fraction {tail_fraction} needs more than {max_dim} dimensions"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(values: &[f64]) -> SpectrumModel {
        SpectrumModel::diagonal(values.to_vec(), 1e-12).unwrap()
    }

    fn multiplicities(m: &SpectrumModel) -> Vec<usize> {
        m.blocks().iter().map(DistinctBlock::multiplicity).collect()
    }

    #[test]
    fn blocks_from_distinct_and_tied_values() {
        assert_eq!(multiplicities(&diag(&[4.0, 2.0, 1.0])), vec![1, 1, 1]);
        let tied = diag(&[3.0, 3.0, 1.0]);
        assert_eq!(multiplicities(&tied), vec![2, 1]);
        assert_eq!(tied.blocks()[0].mu, 3.0);
        let near = diag(&[2.0, 2.0 * (1.0 - 1e-14), 1.0]);
        assert_eq!(multiplicities(&near), vec![2, 1]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(SpectrumModel::diagonal(vec![1.0, 0.0], 1e-12), Err(Error::InvalidSpectrum(_))));
        assert!(matches!(SpectrumModel::diagonal(vec![1.0, -2.0], 1e-12), Err(Error::InvalidSpectrum(_))));
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(SpectrumModel::new(vec![2.0, 1.0], skew, 1e-12), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn unsorted_input_is_sorted_with_stable_ties() {
        let basis = DMatrix::identity(3, 3);
        let m = SpectrumModel::from_unsorted(vec![1.0, 3.0, 3.0], basis, 1e-12).unwrap();
        assert_eq!(m.eigenvalues(), &[3.0, 3.0, 1.0]);
        assert_eq!(m.eigenvectors()[(1, 0)], 1.0);
        assert_eq!(m.eigenvectors()[(2, 1)], 1.0);
    }

    #[test]
    fn spectral_gaps() {
        let m = diag(&[4.0, 2.0, 1.0]);
        assert_eq!(m.spectral_gap(0).unwrap(), 2.0);
        assert_eq!(m.spectral_gap(1).unwrap(), 1.0);
        assert_eq!(m.spectral_gap(2).unwrap(), 1.0);
        assert_eq!(diag(&[3.0, 3.0, 1.0]).spectral_gap(0), Err(Error::NotSimple(0)));
        assert_eq!(diag(&[3.0]).spectral_gap(0), Err(Error::NoGap));
    }

    #[test]
    fn relative_rank_examples() {
        assert_relative_eq!(diag(&[3.0, 1.0]).relative_rank(0).unwrap(), 2.0, epsilon = 1e-15);
        let m = diag(&[4.0, 2.0, 1.0]);
        assert_relative_eq!(m.relative_rank(0).unwrap(), 10.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(m.relative_rank(1).unwrap(), 5.0, epsilon = 1e-14);
        assert_eq!(diag(&[3.0, 3.0, 1.0]).relative_rank(1), Err(Error::NotSimple(1)));
    }

    #[test]
    fn block_relative_rank_examples() {
        assert_relative_eq!(diag(&[3.0, 3.0, 1.0]).relative_rank_block(0).unwrap(), 3.5, epsilon = 1e-14);
        assert_relative_eq!(diag(&[4.0, 2.0, 2.0, 1.0]).relative_rank_block(1).unwrap(), 7.0, epsilon = 1e-14);
        let m = diag(&[4.0, 2.0, 1.0]);
        for j in 0..3 {
            assert_relative_eq!(m.relative_rank_block(j).unwrap(), m.relative_rank(j).unwrap(), epsilon = 1e-14);
        }
        assert!(matches!(m.relative_rank_block(3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn projector_examples() {
        let p = diag(&[2.0, 1.0]).projector(0).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let p = diag(&[3.0, 3.0, 1.0]).projector(0).unwrap();
        assert_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0])));
    }

    #[test]
    fn resolvent_examples() {
        let r = diag(&[3.0, 1.0]).resolvent(0).unwrap();
        assert_eq!(r, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -0.5])));
        let r = diag(&[4.0, 2.0, 1.0]).resolvent(1).unwrap();
        assert_eq!(r, DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.0, -1.0])));
    }

    #[test]
    fn sensitivity_examples() {
        assert_relative_eq!(diag(&[3.0, 1.0]).eigvec_sensitivity(0).unwrap(), 0.75f64.sqrt(), epsilon = 1e-15);
        assert_eq!(diag(&[3.0]).eigvec_sensitivity(0).unwrap(), 0.0);
        assert_relative_eq!(diag(&[4.0, 2.0, 1.0]).eigvec_sensitivity(1).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn convexity_two_dim() {
        let rows = diag(&[3.0, 1.0]).convexity_report(1).unwrap();
        assert_relative_eq!(rows[0].s1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rows[0].s2, 0.75, epsilon = 1e-15);
        assert!(rows[0].s1_over_jlogj.is_none());
    }

    #[test]
    fn default_r0_and_check() {
        let m = diag(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(m.default_r0(0).unwrap(), 2);
        assert_eq!(m.default_r0(3).unwrap(), 4);
        assert!(m.check_r0(0, 1).is_err());
        assert!(m.check_r0(0, 2).is_ok());
        assert!(m.check_r0(0, 4).is_ok());
    }

    #[test]
    fn json_round_trip_and_identity_default() {
        let m: SpectrumModel = serde_json::from_str(r#"{"eigenvalues":[1,4,2]}"#).unwrap();
        assert_eq!(m.eigenvalues(), &[4.0, 2.0, 1.0]);
        let back: SpectrumModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncation_meets_tail_fraction() {
        let values = truncate_power(2.0, 1e-2, 10_000).unwrap();
        let d = values.len();
        // sum_{j>d} j^-2 ~ 1/d against pi^2/6
        assert!((d as f64) > 1.0 / (1e-2 * 1.7) && (d as f64) < 1.0 / (1e-2 * 1.5));
        assert!(truncate_power(2.0, 1e-6, 1000).is_err());
    }
}

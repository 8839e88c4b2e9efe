//! Monte Carlo experiments on sampled covariance matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{model_of, run_trials, sample_covariance, trial_id, zero_based, Check, ExperimentResult, Plot, SamplingConfig, Series, Table};
use crate::error::{Error, Result};
use crate::estimation::covariance_of;
use crate::generators::{self, fgn, fgn_autocovariance, CoeffFamily, GeneratorConfig, Setting};
use crate::linalg;
use crate::perturbation::{
    check_condition_simple, coefficient_summary, contraction_bound_check, fixpoint_solve, separation_bound_holds,
    solve_offset_for_z, weyl_holds, Perturbation,
};
use crate::rng::{self, role};
use crate::spectrum::{SpectrumModel, SpectrumSpec};
use crate::stats::{self, ks_normal, ks_two_sample, log_log_slope, mean, median, quantile, MeanSe, Proportion};

fn log_rate(n: usize) -> f64 {
    ((n as f64).ln() / n as f64).sqrt()
}

/// Threshold `x` for the good event at sample size `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum XRule {
    Fixed { values: Vec<f64> },
    /// `x = t / sqrt(n)`.
    RootN { t: Vec<f64> },
    /// `x = c sqrt(log n / n)`.
    LogRate { c: Vec<f64> },
}

impl XRule {
    fn values(&self, n: usize) -> Vec<f64> {
        let rn = (n as f64).sqrt();
        match self {
            XRule::Fixed { values } => values.clone(),
            XRule::RootN { t } => t.iter().map(|t| t / rn).collect(),
            XRule::LogRate { c } => c.iter().map(|c| c * log_rate(n)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventProbabilityConfig {
    pub sampling: SamplingConfig,
    pub ns: Vec<usize>,
    pub x: XRule,
    /// 1-based index of the first tail block for the block-wise event; defaults to the last block plus one.
    #[serde(default)]
    pub r0: Option<usize>,
    /// Expected ratio of frequencies when `x` doubles at fixed `n`.
    #[serde(default)]
    pub doubling_target: Option<f64>,
    /// Accepted multiplicative deviation from `doubling_target`.
    #[serde(default = "two")]
    pub doubling_factor: f64,
    /// Normal quantile of the interval used for the flatness check across `n`.
    #[serde(default = "flat_z")]
    pub flat_z: f64,
}

fn two() -> f64 {
    2.0
}

fn flat_z() -> f64 {
    2.576
}

/// Frequencies of the bad events `sup|eta_bar| > x` and its block-wise analogue.
pub fn event_probability(cfg: &EventProbabilityConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    if cfg.ns.is_empty() {
        return Err(Error::Config("empty sample-size grid".into()));
    }
    let model = model_of(&cfg.sampling.model)?;
    let nb = model.blocks().len();
    let r0 = match cfg.r0 {
        Some(r) => zero_based(r, nb + 1)?.max(1),
        None => nb,
    };
    let mut table = Table::new(&["n", "x", "t", "p_full", "lower", "upper", "p_block", "se"]);
    let mut inclusion_violations = 0usize;
    // (n, x, estimate) for the checks
    let mut grid: Vec<(usize, f64, Proportion)> = Vec::new();
    let mut series = Vec::new();
    for (g, &n) in cfg.ns.iter().enumerate() {
        let gen = cfg.sampling.generator(n, seed)?;
        let sup = run_trials(trials, |t| {
            let sigma_hat = sample_covariance(&gen, trial_id(g, t), cfg.sampling.fast_gaussian)?;
            let pert = Perturbation::from_estimate(&gen.model, &sigma_hat)?;
            let block = coefficient_summary(&gen.model, &pert, r0)?.x_block;
            Ok((pert.x_full(), block))
        })?;
        inclusion_violations += sup.iter().filter(|(f, b)| b > f).count();
        let xs = cfg.x.values(n);
        let mut ys = Vec::new();
        for &x in &xs {
            let full = sup.iter().filter(|(f, _)| *f > x).count() as u64;
            let block = sup.iter().filter(|(_, b)| *b > x).count() as u64;
            let p = Proportion::wilson(full, trials as u64, 1.96);
            let pb = block as f64 / trials as f64;
            table.push(vec![n as f64, x, x * (n as f64).sqrt(), p.estimate, p.lower, p.upper, pb, p.se]);
            grid.push((n, x, p));
            ys.push(p.estimate);
        }
        series.push(Series { label: format!("n = {n}"), x: xs, y: ys });
    }
    let mut checks = vec![Check::at_most("block_exceeds_full", inclusion_violations as f64, 0.0)];
    // Flatness in n at fixed x sqrt(n).
    if matches!(cfg.x, XRule::RootN { .. }) && cfg.ns.len() > 1 {
        let per_n = grid.len() / cfg.ns.len();
        let mut worst = 0.0f64;
        for k in 0..per_n {
            let pts: Vec<&Proportion> = (0..cfg.ns.len()).map(|g| &grid[g * per_n + k].2).collect();
            let pooled = pts.iter().map(|p| p.successes).sum::<u64>() as f64 / pts.iter().map(|p| p.trials).sum::<u64>() as f64;
            for p in pts {
                let se = (pooled * (1.0 - pooled) / p.trials as f64).sqrt();
                let z = if se > 0.0 { (p.estimate - pooled).abs() / se } else { 0.0 };
                worst = worst.max(z);
            }
        }
        checks.push(Check::at_most("flatness_in_n_z", worst, cfg.flat_z));
    }
    if let Some(target) = cfg.doubling_target {
        let mut worst: Option<f64> = None;
        for (n, x, p) in &grid {
            if let Some((_, _, q)) = grid.iter().find(|(m, y, _)| m == n && ((y / x) - 2.0).abs() < 1e-9) {
                let ratio = q.estimate / p.estimate;
                let dev = (ratio / target).ln().abs();
                if worst.is_none_or(|w| dev > (w / target).ln().abs() || ratio.is_nan()) {
                    worst = Some(ratio);
                }
            }
        }
        let ratio = worst.ok_or_else(|| Error::Config("no pair of thresholds with ratio 2".into()))?;
        checks.push(Check::within("doubling_ratio", ratio, target / cfg.doubling_factor, target * cfg.doubling_factor));
    }
    let plot = Plot { title: "Bad-event frequency".into(), x_label: "x".into(), y_label: "P(sup|eta| > x)".into(), series };
    Ok(table.finish("event_probability", (seed, trials), checks, json!({ "r0": r0 + 1 }), Some(plot)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub sampling: SamplingConfig,
    pub ns: Vec<usize>,
    /// Good-event threshold `x = x_constant * sqrt(log n / n)`.
    #[serde(default = "four")]
    pub x_constant: f64,
    /// Index `j` is covered when `sqrt(log n / n) r_j <= gate_constant`.
    #[serde(default = "half")]
    pub gate_constant: f64,
    #[serde(default = "twenty")]
    pub max_constant: f64,
    #[serde(default = "min_gated")]
    pub min_good_fraction: f64,
}

fn four() -> f64 {
    4.0
}

fn half() -> f64 {
    0.5
}

fn twenty() -> f64 {
    20.0
}

fn min_gated() -> f64 {
    0.95
}

struct ConcentrationTrial {
    good: bool,
    relerr: Vec<f64>,
    angle: Vec<f64>,
    violations: usize,
}

fn concentration_trial(model: &SpectrumModel, sigma_hat: &DMatrix<f64>, x: f64) -> Result<ConcentrationTrial> {
    let pert = Perturbation::from_estimate(model, sigma_hat)?;
    let x_real = pert.x_full();
    let d = model.dim();
    let mut relerr = vec![f64::NAN; d];
    let mut angle = vec![f64::NAN; d];
    let mut violations = 0;
    for j in 0..d {
        if !model.is_simple(j)? || d < 2 {
            continue;
        }
        let lambda = model.eigenvalues()[j];
        relerr[j] = (pert.perturbed_eigenvalues()[j] - lambda).abs() / lambda;
        let c = pert.perturbed_eigenvectors().column(j).dot(&model.eigenvectors().column(j));
        angle[j] = (1.0 - c * c).max(0.0).sqrt() / model.eigvec_sensitivity(j)?;
        // Deterministic consequences at the realised coefficient size.
        if check_condition_simple(model, j, x_real)? {
            if !separation_bound_holds(model, &pert, j, x_real, 1e-12) {
                violations += 1;
            }
            if contraction_bound_check(model, &pert, j, x_real)? > 6.0 {
                violations += 1;
            }
        }
    }
    if !weyl_holds(model, &pert, 1e-9) {
        violations += 1;
    }
    Ok(ConcentrationTrial { good: x_real <= x, relerr, angle, violations })
}

/// Relative eigenvalue errors and eigenvector angles against `C sqrt(log n / n)` on
/// trials in the good event, for every index passing the relative rank gate.
pub fn concentration(cfg: &ConcentrationConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    if cfg.ns.is_empty() {
        return Err(Error::Config("empty sample-size grid".into()));
    }
    let model = model_of(&cfg.sampling.model)?;
    let d = model.dim();
    let mut table = Table::new(&["n", "j", "rel_rank", "gated", "q95_eigenvalue", "max_eigenvalue", "q95_eigenvector", "max_eigenvector"]);
    let mut fitted = Vec::new();
    let mut min_good = 1.0f64;
    let mut violations = 0usize;
    let mut cutoffs = Vec::new();
    for (g, &n) in cfg.ns.iter().enumerate() {
        let gen = cfg.sampling.generator(n, seed)?;
        let rate = log_rate(n);
        let x = cfg.x_constant * rate;
        let res = run_trials(trials, |t| {
            let sigma_hat = sample_covariance(&gen, trial_id(g, t), cfg.sampling.fast_gaussian)?;
            concentration_trial(&model, &sigma_hat, x)
        })?;
        let good: Vec<&ConcentrationTrial> = res.iter().filter(|r| r.good).collect();
        violations += good.iter().map(|r| r.violations).sum::<usize>();
        min_good = min_good.min(good.len() as f64 / trials as f64);
        let mut c2 = 0.0f64;
        let mut cutoff = 0usize;
        for j in 0..d {
            let Ok(r) = model.relative_rank(j) else { continue };
            if !model.is_simple(j)? {
                continue;
            }
            let gated = rate * r <= cfg.gate_constant;
            if gated {
                cutoff = j + 1;
            }
            let e: Vec<f64> = good.iter().map(|t| t.relerr[j] / rate).collect();
            let a: Vec<f64> = good.iter().map(|t| t.angle[j] / rate).collect();
            let (me, ma) = (e.iter().fold(0.0f64, |m, v| m.max(*v)), a.iter().fold(0.0f64, |m, v| m.max(*v)));
            if gated {
                c2 = c2.max(me).max(ma);
            }
            table.push(vec![n as f64, (j + 1) as f64, r, gated as u8 as f64, quantile(&e, 0.95), me, quantile(&a, 0.95), ma]);
        }
        fitted.push(c2);
        cutoffs.push(cutoff);
    }
    let worst = fitted.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut checks = vec![
        Check::at_most("fitted_constant", worst, cfg.max_constant),
        Check::at_least("good_event_fraction", min_good, cfg.min_good_fraction),
        Check::at_most("deterministic_violations", violations as f64, 0.0),
    ];
    if fitted.len() > 1 {
        let lo = fitted.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        checks.push(Check::at_most("fitted_constant_spread", worst / lo, 1.5));
    }
    let summary = json!({ "fitted_constant": fitted, "gate_cutoff": cutoffs, "ns": cfg.ns });
    Ok(table.finish("concentration", (seed, trials), checks, summary, None))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnticoncentrationConfig {
    pub model: SpectrumSpec,
    /// Number of leading eigen-directions carrying the factor.
    pub spikes: usize,
    pub n: usize,
    /// Offset `y`; solved from `z` when absent.
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default = "one")]
    pub z: f64,
    #[serde(default = "max_p")]
    pub max_probability: f64,
}

fn one() -> f64 {
    1.0
}

fn max_p() -> f64 {
    0.97
}

/// Smallest `C >= 0` with `(1 + Phi(C z)) / 2 + C r / sqrt(n) >= p`.
pub fn fit_anticoncentration_constant(p: f64, z: f64, r: usize, n: usize) -> f64 {
    let bound = |c: f64| 0.5 * (1.0 + stats::std_normal_cdf(c * z)) + c * r as f64 / (n as f64).sqrt();
    if bound(0.0) >= p {
        return 0.0;
    }
    let mut hi = 1.0;
    while bound(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `P(lambda_hat_1 - lambda_1 <= y)` in the one-factor model.
pub fn anticoncentration(cfg: &AnticoncentrationConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let model = model_of(&cfg.model)?;
    let (y, z) = match cfg.y {
        Some(y) => (y, fixpoint_solve(&model, 0, y, cfg.n)?),
        None => (solve_offset_for_z(&model, 0, cfg.z, cfg.n)?, cfg.z),
    };
    let l = model.eigenvalues();
    let tail: f64 = l.iter().skip(cfg.spikes).map(|lk| lk / (l[0] - lk)).sum();
    let second = z / (cfg.n as f64).sqrt() * tail;
    if !(second < 0.5) {
        return Err(Error::PreconditionFailed(format!("tail condition {second:.4} is not below 1/2")));
    }
    let gen = GeneratorConfig::new(Setting::OneFactor { spikes: cfg.spikes }, cfg.n, model.clone(), CoeffFamily::Gaussian, seed);
    gen.validate()?;
    let dev = run_trials(trials, |t| {
        let x = generators::generate(&gen, t)?;
        let top = linalg::sym_eigen_desc(&covariance_of(&x.samples, false)?).values[0];
        Ok(top - l[0])
    })?;
    let below = dev.iter().filter(|&&v| v <= y).count() as u64;
    let p = Proportion::wilson(below, trials as u64, 1.96);
    let c = fit_anticoncentration_constant(p.estimate, z, cfg.spikes, cfg.n);
    let mut table = Table::new(&["n", "y", "z", "p_hat", "lower", "upper", "fitted_c", "bound_at_zero"]);
    table.push(vec![cfg.n as f64, y, z, p.estimate, p.lower, p.upper, c, 0.75 + 0.0]);
    let checks = vec![Check::at_most("p_hat", p.estimate, cfg.max_probability)];
    let summary = json!({ "p_hat": p, "y": y, "z": z, "fitted_c": c, "tail_condition": second,
        "mean_deviation": mean(&dev) });
    Ok(table.finish("anticoncentration", (seed, trials), checks, summary, None))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltConfig {
    pub sampling: SamplingConfig,
    pub ns: Vec<usize>,
    /// 1-based eigenvalue index.
    #[serde(default = "first")]
    pub index: usize,
    /// `Var(eta_j^2)`; defaults to `E eta^4 - 1` of the coefficient family.
    #[serde(default)]
    pub eta_variance: Option<f64>,
    #[serde(default = "max_ks")]
    pub max_ks: f64,
}

fn first() -> usize {
    1
}

fn max_ks() -> f64 {
    0.03
}

/// Kolmogorov distance of `sqrt(n / Var(eta^2)) (lambda_hat_j - lambda_j) / lambda_j` to N(0, 1).
pub fn clt(cfg: &CltConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    if cfg.ns.is_empty() {
        return Err(Error::Config("empty sample-size grid".into()));
    }
    let model = model_of(&cfg.sampling.model)?;
    let j = zero_based(cfg.index, model.dim())?;
    if !model.is_simple(j)? {
        return Err(Error::NotSimple(j));
    }
    let var = cfg.eta_variance.unwrap_or(cfg.sampling.coefficients.fourth_moment() - 1.0);
    let lambda = model.eigenvalues()[j];
    let mut table = Table::new(&["n", "ks", "mean", "sd"]);
    let mut ks_values = Vec::new();
    for (g, &n) in cfg.ns.iter().enumerate() {
        let gen = cfg.sampling.generator(n, seed)?;
        let stat = run_trials(trials, |t| {
            let sigma_hat = sample_covariance(&gen, trial_id(g, t), cfg.sampling.fast_gaussian)?;
            let v = linalg::sym_eigen_desc(&sigma_hat).values[j];
            Ok((n as f64 / var).sqrt() * (v - lambda) / lambda)
        })?;
        let ks = ks_normal(&stat);
        ks_values.push(ks);
        table.push(vec![n as f64, ks, mean(&stat), stats::variance(&stat).sqrt()]);
    }
    let last = *ks_values.last().unwrap_or(&f64::NAN);
    let checks = vec![Check::at_most("ks_largest_n", last, cfg.max_ks)];
    let plot = Plot {
        title: "Kolmogorov distance".into(),
        x_label: "n".into(),
        y_label: "KS".into(),
        series: vec![Series { label: "ks".into(), x: cfg.ns.iter().map(|&n| n as f64).collect(), y: ks_values }],
    };
    Ok(table.finish("clt", (seed, trials), checks, json!({ "eta_variance": var }), Some(plot)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LongMemoryConfig {
    pub model: SpectrumSpec,
    pub hurst: f64,
    pub sigma: f64,
    #[serde(default)]
    pub coefficients: CoeffFamily,
    pub ns: Vec<usize>,
    /// Number of leading eigenvalues compared.
    pub top: usize,
    #[serde(default = "three")]
    pub mean_se: f64,
}

fn three() -> f64 {
    3.0
}

/// `n^{1-H}` times the largest pairwise difference of leading relative eigenvalue
/// errors, and `n^{1-H}` times the top relative error.
pub fn long_memory_limit(cfg: &LongMemoryConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    if cfg.sigma == 0.0 {
        return Err(Error::NotLongMemory);
    }
    if cfg.ns.is_empty() {
        return Err(Error::Config("empty sample-size grid".into()));
    }
    let model = model_of(&cfg.model)?;
    let top = cfg.top;
    if top < 2 || top > model.dim() {
        return Err(Error::OutOfRange { index: top, limit: model.dim() });
    }
    for j in 0..top {
        if !model.is_simple(j)? {
            return Err(Error::NotSimple(j));
        }
    }
    let l = model.eigenvalues();
    if !l.iter().skip(top).any(|&v| v <= l[top - 1] / 2.0) {
        return Err(Error::PreconditionFailed("no eigenvalue below half of the last compared eigenvalue".into()));
    }
    let mut table = Table::new(&["n", "median_pairwise", "mean_marginal", "se_marginal", "ks_marginal"]);
    let mut medians = Vec::new();
    let mut worst_z = 0.0f64;
    for (g, &n) in cfg.ns.iter().enumerate() {
        let gen = GeneratorConfig::new(Setting::LongMemory { hurst: cfg.hurst, sigma: cfg.sigma }, n, model.clone(), cfg.coefficients, seed);
        let scale = (n as f64).powf(1.0 - cfg.hurst);
        let stats_n = run_trials(trials, |t| {
            let x = generators::generate(&gen, trial_id(g, t))?;
            let v = linalg::sym_eigen_desc(&covariance_of(&x.samples, false)?).values;
            let rel: Vec<f64> = (0..top).map(|j| (v[j] - l[j]) / l[j]).collect();
            let mut pair = 0.0f64;
            for a in 0..top {
                for b in 0..a {
                    pair = pair.max((rel[a] - rel[b]).abs());
                }
            }
            Ok((scale * pair, scale * rel[0]))
        })?;
        let pairwise: Vec<f64> = stats_n.iter().map(|s| s.0).collect();
        let marginal: Vec<f64> = stats_n.iter().map(|s| s.1).collect();
        let m = MeanSe::of(&marginal);
        let sd = stats::variance(&marginal).sqrt();
        let standardised: Vec<f64> = marginal.iter().map(|v| (v - m.mean) / sd).collect();
        worst_z = worst_z.max((m.mean / m.se).abs());
        let med = median(&pairwise);
        medians.push(med);
        table.push(vec![n as f64, med, m.mean, m.se, ks_normal(&standardised)]);
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let checks = vec![
        Check::flag("median_decreasing", decreasing),
        Check::at_most("marginal_mean_z", worst_z, cfg.mean_se),
    ];
    let plot = Plot {
        title: "Pairwise spread of leading relative errors".into(),
        x_label: "n".into(),
        y_label: "median".into(),
        series: vec![Series { label: "median".into(), x: cfg.ns.iter().map(|&n| n as f64).collect(), y: medians }],
    };
    Ok(table.finish("long_memory_limit", (seed, trials), checks, json!({}), Some(plot)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectorRiskConfig {
    pub sampling: SamplingConfig,
    /// 1-based indices for the sweep in `j` at `n_for_indices`.
    pub indices: Vec<usize>,
    pub n_for_indices: usize,
    /// Sample sizes for the sweep in `n` at `index_for_ns`.
    pub ns: Vec<usize>,
    pub index_for_ns: usize,
    #[serde(default = "j_window")]
    pub index_slope_window: [f64; 2],
    #[serde(default = "n_window")]
    pub n_slope_window: [f64; 2],
}

fn j_window() -> [f64; 2] {
    [1.6, 2.4]
}

fn n_window() -> [f64; 2] {
    [-1.2, -0.8]
}

/// Mean squared Hilbert-Schmidt distance of empirical rank-one projectors.
pub fn projector_risk(cfg: &ProjectorRiskConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let model = model_of(&cfg.sampling.model)?;
    let d = model.dim();
    let mut ns: Vec<usize> = cfg.ns.clone();
    ns.push(cfg.n_for_indices);
    ns.sort_unstable();
    ns.dedup();
    let mut wanted: Vec<usize> = cfg.indices.clone();
    wanted.push(cfg.index_for_ns);
    wanted.sort_unstable();
    wanted.dedup();
    let js: Vec<usize> = wanted.iter().map(|&j| zero_based(j, d)).collect::<Result<_>>()?;
    for &j in &js {
        if !model.is_simple(j)? {
            return Err(Error::NotSimple(j));
        }
    }
    let mut table = Table::new(&["j", "n", "mean_risk", "se", "ratio_to_j2_over_n", "leading_order"]);
    let mut risk = std::collections::BTreeMap::new();
    let mut ceiling = 0.0f64;
    for (g, &n) in ns.iter().enumerate() {
        let gen = cfg.sampling.generator(n, seed)?;
        let per_trial = run_trials(trials, |t| {
            let sigma_hat = sample_covariance(&gen, trial_id(g, t), cfg.sampling.fast_gaussian)?;
            let eig = linalg::sym_eigen_desc(&(model.eigenvectors().transpose() * sigma_hat * model.eigenvectors()));
            Ok(js.iter().map(|&j| 2.0 * (1.0 - eig.vectors[(j, j)].powi(2))).collect::<Vec<f64>>())
        })?;
        for (k, &j) in js.iter().enumerate() {
            let v: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
            ceiling = ceiling.max(v.iter().fold(0.0f64, |a, &b| a.max(b)));
            let m = MeanSe::of(&v);
            let rank = (j + 1) as f64;
            let lead = 2.0 * model.sensitivity_sum(j)? / n as f64;
            table.push(vec![rank, n as f64, m.mean, m.se, m.mean / (rank * rank / n as f64), lead]);
            risk.insert((j + 1, n), m.mean);
        }
    }
    let jx: Vec<f64> = cfg.indices.iter().map(|&j| j as f64).collect();
    let jy: Vec<f64> = cfg.indices.iter().map(|&j| risk[&(j, cfg.n_for_indices)]).collect();
    let nx: Vec<f64> = cfg.ns.iter().map(|&n| n as f64).collect();
    let ny: Vec<f64> = cfg.ns.iter().map(|&n| risk[&(cfg.index_for_ns, n)]).collect();
    let (sj, sn) = (log_log_slope(&jx, &jy), log_log_slope(&nx, &ny));
    let checks = vec![
        Check::within("slope_in_j", sj, cfg.index_slope_window[0], cfg.index_slope_window[1]),
        Check::within("slope_in_n", sn, cfg.n_slope_window[0], cfg.n_slope_window[1]),
        Check::at_most("max_risk", ceiling, 2.0),
    ];
    let plot = Plot {
        title: "Projector risk".into(),
        x_label: "j".into(),
        y_label: "E||P_hat - P||^2".into(),
        series: vec![Series { label: format!("n = {}", cfg.n_for_indices), x: jx, y: jy }],
    };
    Ok(table.finish("projector_risk", (seed, trials), checks, json!({ "slope_in_j": sj, "slope_in_n": sn }), Some(plot)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoeTransferConfig {
    pub sampling: SamplingConfig,
    /// 1-based block index.
    pub block: usize,
    pub n: usize,
    #[serde(default = "min_p")]
    pub min_p_value: f64,
    #[serde(default = "four")]
    pub moment_se: f64,
}

fn min_p() -> f64 {
    0.01
}

/// Largest eigenvalue of an `m x m` GOE matrix with N(0, 2) diagonal and N(0, 1) off-diagonal entries.
pub fn goe_top_eigenvalue(m: usize, rng: &mut impl Rng) -> f64 {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = 2f64.sqrt() * rng.sample::<f64, _>(StandardNormal);
        for j in 0..i {
            let v: f64 = rng.sample(StandardNormal);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    linalg::sym_eigen_desc(&a).values[0]
}

/// Top empirical eigenvalue of a repeated block, rescaled at the edge and
/// compared with a simulated GOE reference of the same size.
pub fn goe_transfer(cfg: &GoeTransferConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let model = model_of(&cfg.sampling.model)?;
    let r = zero_based(cfg.block, model.blocks().len())?;
    let block = model.block(r)?.clone();
    let m = block.multiplicity();
    if m < 4 {
        return Err(Error::TooSmallBlock { block: cfg.block, multiplicity: m });
    }
    let gen = cfg.sampling.generator(cfg.n, seed)?;
    let n = cfg.n as f64;
    let scale = (m as f64).powf(1.0 / 6.0);
    let centre = 2f64.sqrt() * (m as f64).sqrt();
    let idx = block.indices.clone();
    let total = (m * m * m * m) as f64;
    let (c2, c1) = (m as f64, 2.0 * (m * (m - 1)) as f64);
    let per_trial = run_trials(trials, |t| {
        let sigma_hat = sample_covariance(&gen, t, cfg.sampling.fast_gaussian)?;
        let top = linalg::sym_eigen_desc(&sigma_hat).values[idx.start];
        let stat = scale * (n.sqrt() * (top / block.mu - 1.0) - centre);
        let u = model.eigenvectors().columns(idx.start, m);
        let eta = (u.transpose() * &sigma_hat * u) / block.mu - DMatrix::identity(m, m);
        let diag: f64 = (0..m).map(|i| eta[(i, i)].powi(2)).sum();
        let off: f64 = eta.iter().map(|v| v * v).sum::<f64>() - diag;
        let all = eta.sum().powi(2);
        // Class 1 pairs each ordered off-diagonal entry with itself and its transpose.
        let class2 = n * diag / c2;
        let class1 = n * 2.0 * off / c1;
        let class0 = n * (all - diag - 2.0 * off) / (total - c2 - c1);
        let mut reference_rng = rng::stream(seed, t, role::REFERENCE);
        let reference = scale * (goe_top_eigenvalue(m, &mut reference_rng) - centre);
        Ok([stat, reference, class2, class1, class0])
    })?;
    let col = |k: usize| per_trial.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let (stat, reference) = (col(0), col(1));
    let ks = ks_two_sample(&stat, &reference);
    let mut table = Table::new(&["class", "target", "mean", "se", "z"]);
    let mut worst_z = 0.0f64;
    for (k, target) in [(2usize, 2.0), (3, 1.0), (4, 0.0)] {
        let ms = MeanSe::of(&col(k));
        let z = (ms.mean - target).abs() / ms.se;
        worst_z = worst_z.max(z);
        table.push(vec![target, target, ms.mean, ms.se, z]);
    }
    let checks = vec![
        Check::at_least("ks_p_value", ks.p_value, cfg.min_p_value),
        Check::at_most("moment_pattern_z", worst_z, cfg.moment_se),
    ];
    let summary = json!({
        "ks": ks, "multiplicity": m,
        "statistic_mean": mean(&stat), "reference_mean": mean(&reference),
        "statistic_sd": stats::variance(&stat).sqrt(), "reference_sd": stats::variance(&reference).sqrt(),
    });
    Ok(table.finish("goe_transfer", (seed, trials), checks, summary, None))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FgnCheckConfig {
    #[serde(default = "hursts")]
    pub hursts: Vec<f64>,
    #[serde(default = "fgn_n")]
    pub n: usize,
    #[serde(default = "max_lag")]
    pub max_lag: usize,
    #[serde(default = "block_sizes")]
    pub block_sizes: Vec<usize>,
    #[serde(default = "three")]
    pub se_multiple: f64,
    #[serde(default = "slope_tol")]
    pub slope_tolerance: f64,
}

fn hursts() -> Vec<f64> {
    vec![0.6, 0.8]
}

fn fgn_n() -> usize {
    4096
}

fn max_lag() -> usize {
    5
}

fn block_sizes() -> Vec<usize> {
    vec![16, 64, 256, 1024]
}

fn slope_tol() -> f64 {
    0.15
}

impl Default for FgnCheckConfig {
    fn default() -> Self {
        Self { hursts: hursts(), n: fgn_n(), max_lag: max_lag(), block_sizes: block_sizes(), se_multiple: 3.0, slope_tolerance: slope_tol() }
    }
}

/// Autocovariances and partial-sum variances of simulated fractional Gaussian noise
/// against their closed forms; `trials` independent replicates per Hurst index.
pub fn fgn_check(cfg: &FgnCheckConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    if cfg.block_sizes.iter().any(|&m| m > cfg.n) || cfg.max_lag >= cfg.n {
        return Err(Error::Config("lags and block sizes must not exceed n".into()));
    }
    let mut table = Table::new(&["hurst", "lag", "estimate", "se", "exact", "z"]);
    let mut worst_z = 0.0f64;
    let mut worst_slope_dev = 0.0f64;
    let mut slopes = Vec::new();
    let mut series = Vec::new();
    for (g, &h) in cfg.hursts.iter().enumerate() {
        let reps = run_trials(trials, |t| {
            let x = fgn(cfg.n, h, &mut rng::stream(seed, trial_id(g, t), role::SAMPLES))?;
            let acov: Vec<f64> = (0..=cfg.max_lag)
                .map(|k| x.iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / (cfg.n - k) as f64)
                .collect();
            let sums: Vec<f64> = cfg.block_sizes.iter().map(|&m| x[..m].iter().sum::<f64>().powi(2)).collect();
            Ok((acov, sums))
        })?;
        for k in 0..=cfg.max_lag {
            let v: Vec<f64> = reps.iter().map(|r| r.0[k]).collect();
            let ms = MeanSe::of(&v);
            let exact = fgn_autocovariance(k, h);
            let z = (ms.mean - exact).abs() / ms.se;
            worst_z = worst_z.max(z);
            table.push(vec![h, k as f64, ms.mean, ms.se, exact, z]);
        }
        let vars: Vec<f64> = (0..cfg.block_sizes.len()).map(|b| mean(&reps.iter().map(|r| r.1[b]).collect::<Vec<_>>())).collect();
        let xs: Vec<f64> = cfg.block_sizes.iter().map(|&m| m as f64).collect();
        let slope = log_log_slope(&xs, &vars);
        worst_slope_dev = worst_slope_dev.max((slope - 2.0 * h).abs());
        slopes.push(slope);
        series.push(Series { label: format!("H = {h}"), x: xs, y: vars });
    }
    let checks = vec![
        Check::at_most("autocovariance_z", worst_z, cfg.se_multiple),
        Check::at_most("variance_slope_deviation", worst_slope_dev, cfg.slope_tolerance),
    ];
    let plot = Plot { title: "Partial-sum variance".into(), x_label: "m".into(), y_label: "Var S_m".into(), series };
    Ok(table.finish("fgn_check", (seed, trials), checks, json!({ "variance_slopes": slopes }), Some(plot)))
}

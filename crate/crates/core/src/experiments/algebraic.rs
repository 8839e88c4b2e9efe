//! Deterministic sweeps over random models and perturbation directions.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::random::{random_direction, random_model, RandomModelOptions};
use super::{run_trials, Check, ExperimentResult, Plot, Series, Table};
use crate::error::{Error, Result};
use crate::perturbation::{
    contraction_bound_check, eigenvalue_expansion, eigenvector_expansion, multi_eigenvalue_expansion,
    projector_expansion, separation_bound_holds, separation_test, weyl_holds, ExpansionReport, Perturbation,
};
use crate::rng::{self, role};
use crate::spectrum::{SpectrumModel, SpectrumSpec};
use crate::stats::log_log_slope;

fn default_exact_opts() -> RandomModelOptions {
    // Moderate condition numbers keep the reference eigensolver accurate to ~1e-13.
    RandomModelOptions { min_dim: 2, max_dim: 20, min_ratio: 1.1, max_ratio: 1.4, repeat_prob: 0.3, max_multiplicity: 3 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactnessConfig {
    #[serde(default = "default_exact_opts")]
    pub models: RandomModelOptions,
    #[serde(default = "default_exact_tol")]
    pub tolerance: f64,
}

fn default_exact_tol() -> f64 {
    1e-10
}

impl Default for ExactnessConfig {
    fn default() -> Self {
        Self { models: default_exact_opts(), tolerance: default_exact_tol() }
    }
}

/// Every expansion at every index and block of `model` for the zero perturbation.
fn zero_residuals(model: &SpectrumModel) -> Result<[f64; 4]> {
    let pert = Perturbation::new(model, DMatrix::zeros(model.dim(), model.dim()))?;
    let mut worst = [0.0f64; 4];
    for j in 0..model.dim() {
        if model.is_simple(j)? && model.dim() > 1 {
            worst[0] = worst[0].max(eigenvalue_expansion(model, &pert, j)?.residual);
            worst[1] = worst[1].max(eigenvector_expansion(model, &pert, j)?.residual);
        }
    }
    if model.blocks().len() > 1 {
        for r in 0..model.blocks().len() {
            let r0 = model.default_r0(r)?;
            worst[2] = worst[2].max(multi_eigenvalue_expansion(model, &pert, r, r0)?.residual);
            worst[3] = worst[3].max(projector_expansion(model, &pert, r, r0)?.residual);
        }
    }
    Ok(worst)
}

pub fn exactness_sweep(cfg: &ExactnessConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let rows = run_trials(trials, |t| {
        let mut rng = rng::stream(seed, t, role::MODEL);
        let model = random_model(&cfg.models, &mut rng)?;
        let w = zero_residuals(&model)?;
        Ok(vec![t as f64, model.dim() as f64, w[0], w[1], w[2], w[3]])
    })?;
    let mut table = Table::new(&["instance", "dim", "eigenvalue", "eigenvector", "block_eigenvalues", "projector"]);
    let mut worst = 0.0f64;
    for r in rows {
        worst = worst.max(r[2..].iter().fold(0.0f64, |a, &b| a.max(b)));
        table.push(r);
    }
    let checks = vec![Check::at_most("max_residual", worst, cfg.tolerance)];
    Ok(table.finish("exactness", (seed, trials), checks, json!({ "max_residual": worst }), None))
}

fn default_scaling_opts() -> RandomModelOptions {
    RandomModelOptions { min_dim: 3, max_dim: 8, min_ratio: 1.5, max_ratio: 3.0, repeat_prob: 0.3, max_multiplicity: 3 }
}

fn default_xs() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualScalingConfig {
    #[serde(default = "default_scaling_opts")]
    pub models: RandomModelOptions,
    #[serde(default = "default_xs")]
    pub xs: Vec<f64>,
    #[serde(default = "default_linear_window")]
    pub quadratic_window: [f64; 2],
    #[serde(default = "default_cubic_window")]
    pub cubic_window: [f64; 2],
}

fn default_linear_window() -> [f64; 2] {
    [1.8, 2.2]
}

fn default_cubic_window() -> [f64; 2] {
    [2.7, 3.3]
}

impl Default for ResidualScalingConfig {
    fn default() -> Self {
        Self { models: default_scaling_opts(), xs: default_xs(), quadratic_window: default_linear_window(), cubic_window: default_cubic_window() }
    }
}

const SCALING_COLUMNS: [&str; 6] = ["eigenvalue", "eigenvector", "block_eigenvalues", "projector", "eigenvector_norm", "projector_norm"];

struct ScalingInstance {
    dim: usize,
    multiplicity: usize,
    /// `residuals[k][i]`: quantity `k` at `xs[i]`.
    residuals: [Vec<f64>; 6],
}

fn scaling_instance(cfg: &ResidualScalingConfig, rng: &mut impl Rng) -> Result<ScalingInstance> {
    let x_max = cfg.xs.iter().fold(0.0f64, |a, &b| a.max(b));
    for _ in 0..1000 {
        let model = random_model(&cfg.models, rng)?;
        let g = random_direction(model.dim(), rng);
        if !model.is_simple(0)? || model.blocks().len() < 2 {
            continue;
        }
        // Block target: the first repeated block if there is one.
        let r = model.blocks().iter().position(|b| b.multiplicity() > 1).unwrap_or(0);
        let r0 = model.default_r0(r)?;
        let reports = |x: f64| -> Result<[ExpansionReport; 4]> {
            let pert = Perturbation::from_relative(&model, &(&g * x))?;
            Ok([
                eigenvalue_expansion(&model, &pert, 0)?,
                eigenvector_expansion(&model, &pert, 0)?,
                multi_eigenvalue_expansion(&model, &pert, r, r0)?,
                projector_expansion(&model, &pert, r, r0)?,
            ])
        };
        if !reports(x_max)?.iter().all(|rep| rep.condition_satisfied) {
            continue;
        }
        let mut residuals: [Vec<f64>; 6] = Default::default();
        for &x in &cfg.xs {
            let reps = reports(x)?;
            for k in 0..4 {
                residuals[k].push(reps[k].residual);
            }
            residuals[4].push(reps[1].norm_check.as_ref().map_or(f64::NAN, |n| n.residual));
            residuals[5].push(reps[3].norm_check.as_ref().map_or(f64::NAN, |n| n.residual));
        }
        return Ok(ScalingInstance { dim: model.dim(), multiplicity: model.blocks()[r].multiplicity(), residuals });
    }
    Err(Error::PreconditionFailed("no random model satisfied the relative rank condition".into()))
}

pub fn residual_scaling(cfg: &ResidualScalingConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    if cfg.xs.len() < 2 {
        return Err(Error::Config("at least two perturbation sizes required".into()));
    }
    let instances = run_trials(trials, |t| scaling_instance(cfg, &mut rng::stream(seed, t, role::MODEL)))?;
    let mut cols = vec!["instance", "dim", "block_multiplicity"];
    let slope_names: Vec<String> = SCALING_COLUMNS.iter().map(|c| format!("slope_{c}")).collect();
    cols.extend(slope_names.iter().map(|s| s.as_str()));
    let mut table = Table::new(&cols);
    let mut slopes: [Vec<f64>; 6] = Default::default();
    let mut series = Vec::new();
    for (t, inst) in instances.iter().enumerate() {
        let mut row = vec![t as f64, inst.dim as f64, inst.multiplicity as f64];
        for (acc, residuals) in slopes.iter_mut().zip(&inst.residuals) {
            let s = log_log_slope(&cfg.xs, residuals);
            acc.push(s);
            row.push(s);
        }
        if t == 0 {
            for k in [0, 3, 4] {
                series.push(Series { label: SCALING_COLUMNS[k].into(), x: cfg.xs.clone(), y: inst.residuals[k].clone() });
            }
        }
        table.push(row);
    }
    let mut checks = Vec::new();
    for (k, name) in SCALING_COLUMNS.iter().enumerate() {
        let [lo, hi] = if k < 4 { cfg.quadratic_window } else { cfg.cubic_window };
        let mid = 0.5 * (lo + hi);
        let worst = slopes[k].iter().copied().fold(mid, |a, s| if (s - mid).abs() > (a - mid).abs() || s.is_nan() { s } else { a });
        checks.push(Check::within(format!("slope_{name}"), worst, lo, hi));
    }
    let plot = Plot { title: "Expansion residuals".into(), x_label: "x".into(), y_label: "residual".into(), series };
    Ok(table.finish("residual_scaling", (seed, trials), checks, json!({}), Some(plot)))
}

fn default_rank_one_models() -> Vec<SpectrumSpec> {
    vec![
        SpectrumSpec::Explicit { eigenvalues: vec![4.0, 2.0, 1.0, 0.3] },
        SpectrumSpec::Power { exponent: 2.0, dim: 8, scale: 1.0 },
        SpectrumSpec::Exponential { rate: 1.0, dim: 10, scale: 1.0 },
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankOneConfig {
    #[serde(default = "default_rank_one_models")]
    pub models: Vec<SpectrumSpec>,
    #[serde(default = "default_rank_one_x")]
    pub x: f64,
    /// Constant `c` in the bracket `[x - c x^2 r_j, x + c x^2 r_j]`.
    #[serde(default = "default_bracket")]
    pub bracket: f64,
    #[serde(default = "default_coeff_tol")]
    pub coefficient_tol: f64,
}

fn default_rank_one_x() -> f64 {
    1e-3
}

fn default_bracket() -> f64 {
    10.0
}

fn default_coeff_tol() -> f64 {
    1e-12
}

impl Default for RankOneConfig {
    fn default() -> Self {
        Self { models: default_rank_one_models(), x: default_rank_one_x(), bracket: default_bracket(), coefficient_tol: default_coeff_tol() }
    }
}

/// `E = x v v^T` with `v = sum_k sqrt(l_k) u_k`, for which every relative coefficient equals `x`.
pub fn rank_one_perturbation(model: &SpectrumModel, x: f64) -> Result<Perturbation> {
    let v = model.sqrt_factor() * nalgebra::DVector::from_element(model.dim(), 1.0);
    Perturbation::new(model, &v * v.transpose() * x)
}

/// The listed models plus `trials` randomly rotated geometric models.
pub fn rank_one_example(cfg: &RankOneConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let mut models = cfg.models.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
    let opts = RandomModelOptions { min_dim: 2, max_dim: 10, ..Default::default() };
    models.extend(run_trials(trials, |t| random_model(&opts, &mut rng::stream(seed, t, role::MODEL)))?);
    let x = cfg.x;
    let mut table = Table::new(&["model", "index", "rel_rank", "relative_error", "eigvec_ratio", "lower", "upper"]);
    let (mut coeff_dev, mut eig_ok, mut vec_ok, mut tested) = (0.0f64, true, true, 0usize);
    for (m, model) in models.iter().enumerate() {
        let pert = rank_one_perturbation(model, x)?;
        coeff_dev = coeff_dev.max(pert.eta_bar().iter().fold(0.0f64, |a, v| a.max((v - x).abs())));
        for j in 0..model.dim() {
            if !model.is_simple(j)? || !crate::perturbation::check_condition_simple(model, j, x)? {
                continue;
            }
            let r = model.relative_rank(j)?;
            let lambda = model.eigenvalues()[j];
            let rel = (pert.perturbed_eigenvalues()[j] - lambda).abs() / lambda;
            let dist = (pert.aligned_eigenvector(model, j)? - model.eigenvector(j)).norm() / model.eigvec_sensitivity(j)?;
            let (lo, hi) = (x - cfg.bracket * x * x * r, x + cfg.bracket * x * x * r);
            eig_ok &= rel >= lo && rel <= hi;
            vec_ok &= dist >= lo && dist <= hi;
            tested += 1;
            table.push(vec![m as f64, (j + 1) as f64, r, rel, dist, lo, hi]);
        }
    }
    let checks = vec![
        Check::at_most("coefficient_deviation", coeff_dev, cfg.coefficient_tol),
        Check::flag("eigenvalue_bracket", eig_ok),
        Check::flag("eigenvector_bracket", vec_ok),
        Check::at_least("indices_tested", tested as f64, 1.0),
    ];
    Ok(table.finish("rank_one", (seed, trials), checks, json!({ "x": x, "models": models.len() }), None))
}

fn default_sep_opts() -> RandomModelOptions {
    RandomModelOptions { min_dim: 2, max_dim: 8, min_ratio: 1.05, max_ratio: 4.0, repeat_prob: 0.2, max_multiplicity: 3 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationConfig {
    #[serde(default = "default_sep_opts")]
    pub models: RandomModelOptions,
    /// Relative tolerance on the conclusion, scaled by `max(l_1, ||E||)`.
    #[serde(default = "default_sep_tol")]
    pub tolerance: f64,
}

fn default_sep_tol() -> f64 {
    1e-9
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self { models: default_sep_opts(), tolerance: default_sep_tol() }
    }
}

fn log_uniform(lo: f64, hi: f64, rng: &mut impl Rng) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn separation_sweep(cfg: &SeparationConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let outcomes = run_trials(trials, |t| {
        let mut rng = rng::stream(seed, t, role::MODEL);
        let model = random_model(&cfg.models, &mut rng)?;
        let d = model.dim();
        let g = random_direction(d, &mut rng);
        let scale = log_uniform(1e-3, 1.0, &mut rng);
        // Half of the instances perturb in relative units, half in absolute units.
        let pert = if rng.random::<bool>() {
            Perturbation::from_relative(&model, &(g * scale))?
        } else {
            Perturbation::new(&model, g * (scale * model.eigenvalues()[0]))?
        };
        let j = rng.random_range(0..d);
        let y = log_uniform(1e-3, 1.0, &mut rng) * model.eigenvalues()[j];
        let out = separation_test(&model, &pert, j, y)?;
        let tol = cfg.tolerance * model.eigenvalues()[0].max(pert.op_norm());
        Ok((out, out.is_counterexample(tol)))
    })?;
    let mut table = Table::new(&["instance", "y", "premise_upper", "premise_lower", "deviation", "counterexample"]);
    let (mut upper, mut lower, mut bad) = (0usize, 0usize, 0usize);
    for (t, (o, ce)) in outcomes.iter().enumerate() {
        upper += o.implied_upper as usize;
        lower += o.implied_lower as usize;
        bad += *ce as usize;
        table.push(vec![t as f64, o.y, o.premise_upper, o.premise_lower, o.oracle_deviation, *ce as u8 as f64]);
    }
    let checks = vec![Check::at_most("counterexamples", bad as f64, 0.0)];
    let summary = json!({ "instances": trials, "upper_premise_true": upper, "lower_premise_true": lower, "counterexamples": bad });
    Ok(table.finish("separation", (seed, trials), checks, summary, None))
}

fn default_contraction_opts() -> RandomModelOptions {
    RandomModelOptions { min_dim: 2, max_dim: 8, min_ratio: 1.2, max_ratio: 3.0, repeat_prob: 0.0, max_multiplicity: 1 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionConfig {
    #[serde(default = "default_contraction_opts")]
    pub models: RandomModelOptions,
    #[serde(default = "default_contraction_bound")]
    pub bound: f64,
}

fn default_contraction_bound() -> f64 {
    6.0
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self { models: default_contraction_opts(), bound: default_contraction_bound() }
    }
}

/// Random instances with `x` up to the largest value allowed by the relative rank condition.
pub fn contraction_sweep(cfg: &ContractionConfig, seed: u64, trials: usize) -> Result<ExperimentResult> {
    let rows = run_trials(trials, |t| {
        let mut rng = rng::stream(seed, t, role::MODEL);
        let model = random_model(&cfg.models, &mut rng)?;
        let j = rng.random_range(0..model.dim());
        let r = model.relative_rank(j)?;
        let x = rng.random_range(0.05..0.999) / (3.0 * r);
        let pert = Perturbation::from_relative(&model, &(random_direction(model.dim(), &mut rng) * x))?;
        let x = x.max(pert.x_full());
        let ratio = contraction_bound_check(&model, &pert, j, x)?;
        let sep = separation_bound_holds(&model, &pert, j, x, 1e-12);
        let weyl = weyl_holds(&model, &pert, 1e-9);
        Ok(vec![t as f64, (j + 1) as f64, r, x, ratio, sep as u8 as f64, weyl as u8 as f64])
    })?;
    let mut table = Table::new(&["instance", "index", "rel_rank", "x", "ratio", "separation_ok", "weyl_ok"]);
    let (mut worst, mut sep_bad, mut weyl_bad) = (0.0f64, 0usize, 0usize);
    for r in rows {
        worst = worst.max(r[4]);
        sep_bad += (r[5] == 0.0) as usize;
        weyl_bad += (r[6] == 0.0) as usize;
        table.push(r);
    }
    let checks = vec![
        Check::at_most("max_ratio", worst, cfg.bound),
        Check::at_most("separation_violations", sep_bad as f64, 0.0),
        Check::at_most("weyl_violations", weyl_bad as f64, 0.0),
    ];
    Ok(table.finish("contraction", (seed, trials), checks, json!({ "max_ratio": worst }), None))
}

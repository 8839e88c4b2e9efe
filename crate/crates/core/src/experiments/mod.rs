//! Reproducible Monte Carlo experiments. Each trial draws from its own random
//! stream, trials run on the rayon pool and are collected in trial order, and
//! every aggregate is reduced sequentially, so results do not depend on the
//! number of threads.
//!
//! Indices in experiment configurations are 1-based.

mod algebraic;
mod random;
mod stochastic;
pub mod svg;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::covariance_of;
use crate::generators::{self, CoeffFamily, GeneratorConfig, Setting};
use crate::rng::{self, role};
use crate::spectrum::{SpectrumModel, SpectrumSpec};

pub use algebraic::{
    contraction_sweep, exactness_sweep, rank_one_example, residual_scaling, separation_sweep, ContractionConfig,
    ExactnessConfig, RankOneConfig, ResidualScalingConfig, SeparationConfig,
};
pub use random::{random_direction, random_model, random_orthogonal, RandomModelOptions};
pub use stochastic::{
    anticoncentration, clt, concentration, event_probability, fgn_check, goe_transfer, long_memory_limit,
    projector_risk, AnticoncentrationConfig, CltConfig, ConcentrationConfig, EventProbabilityConfig, FgnCheckConfig,
    GoeTransferConfig, LongMemoryConfig, ProjectorRiskConfig, XRule,
};

/// Top-level experiment configuration as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub trials: usize,
    #[serde(flatten)]
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Exactness(ExactnessConfig),
    ResidualScaling(ResidualScalingConfig),
    RankOne(RankOneConfig),
    Separation(SeparationConfig),
    Contraction(ContractionConfig),
    EventProbability(EventProbabilityConfig),
    Concentration(ConcentrationConfig),
    Anticoncentration(AnticoncentrationConfig),
    Clt(CltConfig),
    LongMemoryLimit(LongMemoryConfig),
    ProjectorRisk(ProjectorRiskConfig),
    GoeTransfer(GoeTransferConfig),
    FgnCheck(FgnCheckConfig),
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::Exactness(_) => "exactness",
            ExperimentSpec::ResidualScaling(_) => "residual_scaling",
            ExperimentSpec::RankOne(_) => "rank_one",
            ExperimentSpec::Separation(_) => "separation",
            ExperimentSpec::Contraction(_) => "contraction",
            ExperimentSpec::EventProbability(_) => "event_probability",
            ExperimentSpec::Concentration(_) => "concentration",
            ExperimentSpec::Anticoncentration(_) => "anticoncentration",
            ExperimentSpec::Clt(_) => "clt",
            ExperimentSpec::LongMemoryLimit(_) => "long_memory_limit",
            ExperimentSpec::ProjectorRisk(_) => "projector_risk",
            ExperimentSpec::GoeTransfer(_) => "goe_transfer",
            ExperimentSpec::FgnCheck(_) => "fgn_check",
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Pass/fail record of one acceptance threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance region, e.g. `<= 0.03` or `[1.8, 2.2]`.
    pub region: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, region: format!("<= {bound}"), passed: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, region: format!(">= {bound}"), passed: value >= bound }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, region: format!("[{lo}, {hi}]"), passed: value >= lo && value <= hi }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, region: "= 1".into(), passed: ok }
    }
}

/// Points for an optional log-log rate plot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Aggregated output of an experiment: a flat table (one row per grid point),
/// acceptance checks and a free-form summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: String,
    pub seed: u64,
    pub trials: usize,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<Plot>,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Column values by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub(crate) struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub(crate) fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub(crate) fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub(crate) fn finish(
        self,
        kind: &str,
        cfg: (u64, usize),
        checks: Vec<Check>,
        summary: serde_json::Value,
        plot: Option<Plot>,
    ) -> ExperimentResult {
        ExperimentResult { kind: kind.into(), seed: cfg.0, trials: cfg.1, columns: self.columns, rows: self.rows, checks, summary, plot }
    }
}

/// Runs `trials` independent trials on the current rayon pool and returns the
/// results in trial order.
pub fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// Trial identifier for grid point `point` so that different grid points draw from disjoint streams.
pub(crate) fn trial_id(point: usize, trial: u64) -> u64 {
    ((point as u64) << 32) | trial
}

/// Population model and sampling scheme shared by the stochastic experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub model: SpectrumSpec,
    #[serde(default)]
    pub setting: Setting,
    #[serde(default)]
    pub coefficients: CoeffFamily,
    /// Draw Gaussian i.i.d. covariances through the Wishart factorisation instead of sample rows.
    #[serde(default)]
    pub fast_gaussian: bool,
}

impl SamplingConfig {
    pub fn gaussian(model: SpectrumSpec) -> Self {
        Self { model, setting: Setting::Iid, coefficients: CoeffFamily::Gaussian, fast_gaussian: true }
    }

    pub fn generator(&self, n: usize, seed: u64) -> Result<GeneratorConfig> {
        let model = self.model.build()?;
        let cfg = GeneratorConfig::new(self.setting.clone(), n, model, self.coefficients, seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Empirical covariance for one trial.
pub fn sample_covariance(gen: &GeneratorConfig, trial: u64, fast_gaussian: bool) -> Result<DMatrix<f64>> {
    if fast_gaussian && gen.setting == Setting::Iid && gen.coefficients == CoeffFamily::Gaussian && gen.n >= gen.model.dim() {
        let mut rng = rng::stream(gen.seed, trial, role::SAMPLES);
        return generators::gaussian_covariance_fast(&gen.model, gen.n, &mut rng);
    }
    covariance_of(&generators::generate(gen, trial)?.samples, false)
}

/// Converts a 1-based index from a configuration into a 0-based index below `limit`.
pub(crate) fn zero_based(index: usize, limit: usize) -> Result<usize> {
    if index == 0 || index > limit {
        return Err(Error::OutOfRange { index, limit });
    }
    Ok(index - 1)
}

pub(crate) fn model_of(spec: &SpectrumSpec) -> Result<SpectrumModel> {
    spec.build()
}

/// Runs the configured experiment on the current rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let (seed, trials) = (config.seed, config.trials);
    match &config.spec {
        ExperimentSpec::Exactness(c) => exactness_sweep(c, seed, trials),
        ExperimentSpec::ResidualScaling(c) => residual_scaling(c, seed, trials),
        ExperimentSpec::RankOne(c) => rank_one_example(c, seed, trials),
        ExperimentSpec::Separation(c) => separation_sweep(c, seed, trials),
        ExperimentSpec::Contraction(c) => contraction_sweep(c, seed, trials),
        ExperimentSpec::EventProbability(c) => event_probability(c, seed, trials),
        ExperimentSpec::Concentration(c) => concentration(c, seed, trials),
        ExperimentSpec::Anticoncentration(c) => anticoncentration(c, seed, trials),
        ExperimentSpec::Clt(c) => clt(c, seed, trials),
        ExperimentSpec::LongMemoryLimit(c) => long_memory_limit(c, seed, trials),
        ExperimentSpec::ProjectorRisk(c) => projector_risk(c, seed, trials),
        ExperimentSpec::GoeTransfer(c) => goe_transfer(c, seed, trials),
        ExperimentSpec::FgnCheck(c) => fgn_check(c, seed, trials),
    }
}

/// Runs the experiment inside a dedicated pool with `threads` workers.
pub fn run_with_threads(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let json = r#"{"kind":"clt","seed":3,"trials":10,"sampling":{"model":{"type":"explicit","eigenvalues":[4,2,1]}},"ns":[100],"index":1}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.spec.name(), "clt");
        let back = serde_json::to_string(&cfg).unwrap();
        let again: ExperimentConfig = serde_json::from_str(&back).unwrap();
        assert_eq!(again.seed, 3);
    }

    #[test]
    fn zero_trials_rejected() {
        let json = r#"{"kind":"rank_one","trials":0}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn trials_come_back_in_order() {
        let v = run_trials(100, |t| Ok(t * 2)).unwrap();
        assert_eq!(v, (0..100).map(|t| t * 2).collect::<Vec<_>>());
    }

    #[test]
    fn checks() {
        assert!(Check::within("a", 2.0, 1.8, 2.2).passed);
        assert!(!Check::at_most("b", 0.04, 0.03).passed);
        assert!(Check::at_least("c", 0.5, 0.5).passed);
    }
}

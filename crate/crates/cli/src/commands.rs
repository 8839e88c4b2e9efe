use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use relperturb::experiments::{self, svg::render_svg, ExperimentConfig, ExperimentResult};
use relperturb::generators::{self, GeneratorConfig};
use relperturb::perturbation::{separation_test, ExpansionReport};
use relperturb::{
    eigenvalue_expansion, eigenvector_expansion, linalg, multi_eigenvalue_expansion, projector_expansion,
    Perturbation, SpectrumFile, SpectrumModel, SpectrumSpec,
};

use crate::output::{config_hash, emit, emit_all, num, Provenance, Table};
use crate::{GlobalArgs, Outcome};

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Accepts either an explicit spectrum file or a declarative spectrum (`{"type": ...}`).
fn load_model(bytes: &[u8]) -> Result<SpectrumModel> {
    let value: Value = serde_json::from_slice(bytes).context("parsing spectrum JSON")?;
    if value.get("type").is_some() {
        let spec: SpectrumSpec = serde_json::from_value(value).context("parsing spectrum description")?;
        return Ok(spec.build()?);
    }
    let file: SpectrumFile = serde_json::from_value(value).context("parsing spectrum file")?;
    Ok(SpectrumModel::try_from(file)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationFile {
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
    /// Relative coefficients in the eigenbasis of the model.
    #[serde(default)]
    relative: Option<Vec<Vec<f64>>>,
}

fn load_perturbation(model: &SpectrumModel, path: &Path) -> Result<Perturbation> {
    let file: PerturbationFile = serde_json::from_slice(&read(path)?).context("parsing perturbation file")?;
    let (rows, relative) = match (file.matrix, file.relative) {
        (Some(m), None) => (m, false),
        (None, Some(r)) => (r, true),
        _ => bail!("perturbation file needs exactly one of `matrix` or `relative`"),
    };
    let m = generators::rows_to_matrix(&rows)?;
    Ok(if relative { Perturbation::from_relative(model, &m)? } else { Perturbation::new(model, m)? })
}

fn one_based(index: usize, limit: usize, what: &str) -> Result<usize> {
    if index == 0 || index > limit {
        bail!("{what} {index} out of range 1..={limit}");
    }
    Ok(index - 1)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn rank(g: &GlobalArgs, path: &Path, index: Option<usize>) -> Result<Outcome> {
    let bytes = read(path)?;
    let model = load_model(&bytes)?;
    let d = model.dim();
    let indices: Vec<usize> = match index {
        Some(j) => vec![one_based(j, d, "index")?],
        None => (0..d).collect(),
    };
    let mut table = Table::new(&["j", "eigenvalue", "block", "multiplicity", "gap", "rel_rank", "eigvec_sensitivity", "x_star"]);
    let mut rows = Vec::new();
    for j in indices {
        let r = model.block_of(j)?;
        let m = model.block(r)?.multiplicity();
        let (gap, rank, sens, x_star) = if model.blocks().len() < 2 {
            (None, None, None, None)
        } else if m == 1 {
            let rank = model.relative_rank(j)?;
            (Some(model.spectral_gap(j)?), Some(rank), Some(model.eigvec_sensitivity(j)?), Some(1.0 / (3.0 * rank)))
        } else {
            let rank = model.relative_rank_block(r)?;
            (Some(model.block_gap(r)?), Some(rank), None, Some(1.0 / (6.0 * rank)))
        };
        let marker = |v: Option<f64>| if model.blocks().len() < 2 { "no gap".to_string() } else { opt(v) };
        table.push(vec![
            (j + 1).to_string(),
            num(model.eigenvalues()[j]),
            (r + 1).to_string(),
            m.to_string(),
            marker(gap),
            marker(rank),
            opt(sens),
            opt(x_star),
        ]);
        rows.push(json!({
            "j": j + 1, "eigenvalue": model.eigenvalues()[j], "block": r + 1, "multiplicity": m,
            "gap": gap, "rel_rank": rank, "eigvec_sensitivity": sens, "x_star": x_star,
            "no_gap": model.blocks().len() < 2,
        }));
    }
    let prov = Provenance { config_sha256: config_hash(&bytes), seed: None };
    emit(g, "rank", &table, json!({ "rows": rows }), None, &prov)?;
    Ok(Outcome::Ok)
}

enum TargetSpec {
    Eigenvalue(usize),
    Eigenvector(usize),
    Block(usize),
    Projector(usize),
}

fn parse_target(s: &str) -> Result<TargetSpec> {
    let (kind, idx) = s.split_once(':').ok_or_else(|| anyhow!("target `{s}` must look like `eigenvalue:1`"))?;
    let i: usize = idx.parse().with_context(|| format!("target index in `{s}`"))?;
    if i == 0 {
        bail!("target indices are 1-based");
    }
    Ok(match kind {
        "eigenvalue" => TargetSpec::Eigenvalue(i - 1),
        "eigenvector" => TargetSpec::Eigenvector(i - 1),
        "block" => TargetSpec::Block(i - 1),
        "projector" => TargetSpec::Projector(i - 1),
        _ => bail!("unknown target kind `{kind}`"),
    })
}

pub fn expand(g: &GlobalArgs, config: &Path, perturbation: &Path, targets: &[String], r0: Option<usize>) -> Result<Outcome> {
    let bytes = read(config)?;
    let model = load_model(&bytes)?;
    let pert = load_perturbation(&model, perturbation)?;
    let nb = model.blocks().len();
    let targets: Vec<TargetSpec> = if targets.is_empty() {
        let mut all = Vec::new();
        if nb > 1 {
            for j in 0..model.dim() {
                if model.is_simple(j)? {
                    all.push(TargetSpec::Eigenvalue(j));
                    all.push(TargetSpec::Eigenvector(j));
                }
            }
            for r in 0..nb {
                all.push(TargetSpec::Block(r));
                all.push(TargetSpec::Projector(r));
            }
        }
        all
    } else {
        targets.iter().map(|t| parse_target(t)).collect::<Result<_>>()?
    };
    let tail = |r: usize| -> Result<usize> {
        match r0 {
            Some(v) => Ok(one_based(v, nb + 1, "r0")?),
            None => Ok(model.default_r0(r)?),
        }
    };
    let mut reports: Vec<ExpansionReport> = Vec::new();
    for t in targets {
        reports.push(match t {
            TargetSpec::Eigenvalue(j) => eigenvalue_expansion(&model, &pert, j)?,
            TargetSpec::Eigenvector(j) => eigenvector_expansion(&model, &pert, j)?,
            TargetSpec::Block(r) => multi_eigenvalue_expansion(&model, &pert, r, tail(r)?)?,
            TargetSpec::Projector(r) => projector_expansion(&model, &pert, r, tail(r)?)?,
        });
    }
    let mut table = Table::new(&[
        "target", "index", "residual", "budget", "empirical_constant", "condition_satisfied", "x", "rel_rank",
        "norm_residual", "norm_budget",
    ]);
    for rep in &reports {
        let t = serde_json::to_value(rep.target)?;
        table.push(vec![
            t["kind"].as_str().unwrap_or_default().to_string(),
            (t["index"].as_u64().unwrap_or(0) + 1).to_string(),
            num(rep.residual),
            num(rep.budget),
            num(rep.empirical_constant()),
            rep.condition_satisfied.to_string(),
            num(rep.x),
            num(rep.rel_rank),
            opt(rep.norm_check.as_ref().map(|n| n.residual)),
            opt(rep.norm_check.as_ref().map(|n| n.budget)),
        ]);
    }
    let mut hashed = bytes.clone();
    hashed.extend(read(perturbation)?);
    let prov = Provenance { config_sha256: config_hash(&hashed), seed: None };
    let doc = json!({ "x_full": pert.x_full(), "indefinite": pert.is_indefinite(), "reports": reports });
    emit(g, "expand", &table, doc, None, &prov)?;
    Ok(Outcome::Ok)
}

pub fn separate(g: &GlobalArgs, config: &Path, perturbation: &Path, index: usize, offset: f64) -> Result<Outcome> {
    let bytes = read(config)?;
    let model = load_model(&bytes)?;
    let pert = load_perturbation(&model, perturbation)?;
    let j = one_based(index, model.dim(), "index")?;
    let out = separation_test(&model, &pert, j, offset)?;
    let mut table = Table::new(&["j", "y", "premise_upper", "premise_lower", "implied_upper", "implied_lower", "oracle_deviation"]);
    table.push(vec![
        index.to_string(),
        num(out.y),
        num(out.premise_upper),
        num(out.premise_lower),
        out.implied_upper.to_string(),
        out.implied_lower.to_string(),
        num(out.oracle_deviation),
    ]);
    let mut hashed = bytes.clone();
    hashed.extend(read(perturbation)?);
    let prov = Provenance { config_sha256: config_hash(&hashed), seed: None };
    emit(g, "separate", &table, serde_json::to_value(out)?, None, &prov)?;
    Ok(Outcome::Ok)
}

pub fn simulate(g: &GlobalArgs, config: &Path, trial: u64) -> Result<Outcome> {
    let bytes = read(config)?;
    let mut cfg: GeneratorConfig = serde_json::from_slice(&bytes).context("parsing generator configuration")?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let data = generators::generate(&cfg, trial)?;
    let sigma_hat = relperturb::estimation::covariance_of(&data.samples, false)?;
    let pert = Perturbation::from_estimate(&cfg.model, &sigma_hat)?;
    let eig = linalg::sym_eigen_desc(&sigma_hat);
    let d = data.dim();
    let headers: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    let mut table = Table { headers, rows: Vec::new() };
    let mut rows = Vec::with_capacity(data.n());
    for row in data.samples.row_iter() {
        let v: Vec<f64> = row.iter().copied().collect();
        table.push(v.iter().map(|x| num(*x)).collect());
        rows.push(v);
    }
    let doc = json!({
        "n": data.n(), "dim": d, "trial": trial,
        "population_eigenvalues": cfg.model.eigenvalues(),
        "empirical_eigenvalues": eig.values.as_slice(),
        "x_full": pert.x_full(),
        "samples": rows,
    });
    let prov = Provenance { config_sha256: config_hash(&bytes), seed: Some(cfg.seed) };
    emit(g, "simulate", &table, doc, None, &prov)?;
    Ok(Outcome::Ok)
}

fn result_table(r: &ExperimentResult) -> Table {
    let mut t = Table { headers: r.columns.clone(), rows: Vec::new() };
    for row in &r.rows {
        t.push(row.iter().map(|v| num(*v)).collect());
    }
    t
}

fn print_checks(r: &ExperimentResult) {
    for c in &r.checks {
        eprintln!("{} {} = {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.region);
    }
}

pub fn experiment(g: &GlobalArgs, config: &Path) -> Result<Outcome> {
    let bytes = read(config)?;
    let mut cfg: ExperimentConfig = serde_json::from_slice(&bytes).context("parsing experiment configuration")?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.trials {
        cfg.trials = t;
    }
    let result = experiments::run(&cfg)?;
    print_checks(&result);
    let svg = result.plot.as_ref().map(render_svg);
    let prov = Provenance { config_sha256: config_hash(&bytes), seed: Some(cfg.seed) };
    let name = result.kind.clone();
    emit_all(g, &name, &result_table(&result), serde_json::to_value(&result)?, svg, &prov)?;
    Ok(if result.passed() { Outcome::Ok } else { Outcome::ChecksFailed })
}

pub fn report(g: &GlobalArgs, path: &Path) -> Result<Outcome> {
    let bytes = read(path)?;
    let result: ExperimentResult = serde_json::from_slice(&bytes).context("parsing experiment result")?;
    print_checks(&result);
    let svg = result.plot.as_ref().map(render_svg);
    let prov = Provenance { config_sha256: config_hash(&bytes), seed: Some(result.seed) };
    let name = format!("{}_report", result.kind);
    emit(g, &name, &result_table(&result), serde_json::to_value(&result)?, svg, &prov)?;
    Ok(if result.checks.iter().all(|c| c.passed) { Outcome::Ok } else { Outcome::ChecksFailed })
}

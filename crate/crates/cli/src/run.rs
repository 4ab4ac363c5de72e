//! Identification runs and re-scoring of exported models.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tagsr::interpreter::ModelExport;
use tagsr::{evaluate, evolve, DataSet, DerivationTree, Individual, PolynomialModel};

use crate::config::{Report, RunConfig};
use crate::RunError;

/// Scores of one model on one data set. Non-finite values appear as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub data: String,
    pub e_s: Option<f64>,
    pub e_p: Option<f64>,
    /// Best fit rate of the simulated response, percent.
    pub bfr: Option<f64>,
    pub diverged: bool,
}

/// Means over data sets; `null` when any set has no finite value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub e_s: Option<f64>,
    pub e_p: Option<f64>,
    pub bfr: Option<f64>,
    pub sets: Vec<SetMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontModel {
    /// Position on the first front.
    pub rank: usize,
    pub id: u64,
    pub complexity: usize,
    pub headline: bool,
    pub equations: Vec<String>,
    /// Objectives the evolution sorted on.
    pub test: Metrics,
    pub validation: Metrics,
    pub model: ModelExport,
    pub genotype: DerivationTree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub grammar: String,
    pub seed: u64,
    pub pop_size: usize,
    pub generations: usize,
    /// Rank of the front member with the lowest validation E_s.
    pub headline: usize,
    pub models: Vec<FrontModel>,
}

impl ParetoReport {
    pub fn headline_model(&self) -> &FrontModel {
        &self.models[self.headline]
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// The one scoring path shared by runs and `eval`.
pub fn score(model: &PolynomialModel, d: &DataSet) -> Result<SetMetrics, RunError> {
    let r = evaluate(model, d).map_err(|e| RunError::Evaluate(format!("{}: {e}", d.name())))?;
    let bfr = r.bfr(d).map_err(|e| RunError::Evaluate(format!("{}: {e}", d.name())))?;
    Ok(SetMetrics {
        data: d.name().to_string(),
        e_s: finite(r.e_s),
        e_p: finite(r.e_p),
        bfr: finite(bfr),
        diverged: r.diverged,
    })
}

pub fn score_sets(model: &PolynomialModel, sets: &[DataSet]) -> Result<Metrics, RunError> {
    let sets: Vec<SetMetrics> = sets.iter().map(|d| score(model, d)).collect::<Result<_, _>>()?;
    let mean = |f: fn(&SetMetrics) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = sets.iter().map(f).collect();
        vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(Metrics {
        e_s: mean(|m| m.e_s),
        e_p: mean(|m| m.e_p),
        bfr: mean(|m| m.bfr),
        sets,
    })
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub report: ParetoReport,
    pub out_dir: PathBuf,
}

/// Runs the evolution on the configured data and writes the reports into
/// the output directory.
pub fn run_identification(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let grammar = cfg.grammar()?;
    let data = cfg.load_data()?;
    let gp = cfg.gp_config();
    let mut progress = Vec::new();
    let evolution = evolve(&grammar, &data.est, &data.test, &gp, &mut |r| progress.push(r.clone()))?;

    let scored: Vec<(&Individual, &PolynomialModel)> = evolution
        .front
        .iter()
        .filter(|ind| !ind.fitness.is_sentinel())
        .filter_map(|ind| ind.phenotype.as_ref().map(|m| (ind, m)))
        .collect();
    if scored.is_empty() {
        return Err(RunError::EmptyFront);
    }
    let mut models = Vec::with_capacity(scored.len());
    for (rank, (ind, m)) in scored.iter().enumerate() {
        models.push(FrontModel {
            rank,
            id: ind.id,
            complexity: ind.genotype.complexity(),
            headline: false,
            equations: m.equation_strings(),
            test: score_sets(m, &data.test)?,
            validation: score_sets(m, &data.val)?,
            model: m.to_export(),
            genotype: ind.genotype.clone(),
        });
    }
    let key = |m: &FrontModel| m.validation.e_s.unwrap_or(f64::INFINITY);
    let headline = (0..models.len())
        .min_by(|&a, &b| key(&models[a]).total_cmp(&key(&models[b])).then(a.cmp(&b)))
        .expect("front is nonempty");
    models[headline].headline = true;
    let report = ParetoReport {
        grammar: grammar.name().to_string(),
        seed: gp.seed,
        pop_size: gp.pop_size,
        generations: gp.generations,
        headline,
        models,
    };

    let out = &cfg.output.dir;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(out).map_err(io(out))?;
    let pareto = out.join("pareto.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| RunError::Evaluate(e.to_string()))?;
    fs::write(&pareto, text + "\n").map_err(io(&pareto))?;

    if cfg.output.formats.contains(&Report::Equations) {
        let path = out.join("equations.txt");
        let mut text = String::new();
        for m in &report.models {
            let flag = if m.headline { " (headline)" } else { "" };
            text.push_str(&format!("# model {}{flag}, complexity {}\n", m.rank, m.complexity));
            for eq in &m.equations {
                text.push_str(eq);
                text.push('\n');
            }
        }
        fs::write(&path, text).map_err(io(&path))?;
    }
    if cfg.output.formats.contains(&Report::Progress) {
        let path = out.join("progress.ndjson");
        let mut f = fs::File::create(&path).map_err(io(&path))?;
        for r in &progress {
            let line = serde_json::to_string(r).map_err(|e| RunError::Evaluate(e.to_string()))?;
            writeln!(f, "{line}").map_err(io(&path))?;
        }
    }
    if cfg.output.formats.contains(&Report::Series) {
        let dir = out.join("series");
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        for (rank, (_, m)) in scored.iter().enumerate() {
            for (i, d) in data.test.iter().chain(&data.val).enumerate() {
                let path = dir.join(format!("model{rank}_{i}_{}.csv", d.name()));
                write_series(m, d, &path)?;
            }
        }
    }
    Ok(RunReport {
        report,
        out_dir: out.clone(),
    })
}

/// Measured, simulated and predicted outputs, one row per sample.
fn write_series(m: &PolynomialModel, d: &DataSet, path: &Path) -> Result<(), RunError> {
    let r = evaluate(m, d).map_err(|e| RunError::Evaluate(format!("{}: {e}", d.name())))?;
    let mut text = String::from("k");
    for j in 1..=d.outputs() {
        text.push_str(&format!(",y{j},y{j}_sim,y{j}_pred"));
    }
    text.push('\n');
    for k in 0..d.len() {
        text.push_str(&k.to_string());
        for j in 0..d.outputs() {
            text.push_str(&format!(",{},{},{}", d.y()[(k, j)], r.y_sim[(k, j)], r.y_pred[(k, j)]));
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Loads a model from an exported model, a `pareto.json` or a generator
/// sidecar. For `pareto.json`, `index` picks a front member and defaults to
/// the headline.
pub fn load_model(path: &Path, index: Option<usize>) -> Result<PolynomialModel, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    let bad = |e: String| RunError::Model(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let export: ModelExport = if value.get("models").is_some() {
        let report: ParetoReport = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        let i = index.unwrap_or(report.headline);
        let m = report
            .models
            .get(i)
            .ok_or_else(|| bad(format!("no front member {i}, the front has {}", report.models.len())))?;
        m.model.clone()
    } else if let Some(m) = value.get("model") {
        // generator sidecar with its true model
        serde_json::from_value(m.clone()).map_err(|e| bad(e.to_string()))?
    } else {
        serde_json::from_value(value).map_err(|e| bad(e.to_string()))?
    };
    PolynomialModel::from_export(&export).map_err(|e| bad(e.to_string()))
}

/// Scores a stored model on one CSV file.
pub fn run_evaluate(model_path: &Path, data_path: &Path, index: Option<usize>) -> Result<SetMetrics, RunError> {
    let model = load_model(model_path, index)?;
    let d = DataSet::from_csv_path(data_path).map_err(|source| RunError::Data { path: data_path.to_path_buf(), source })?;
    score(&model, &d)
}

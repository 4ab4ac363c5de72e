//! Run configuration, read from a sectioned TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tagsr::estimation::EstimatorConfig;
use tagsr::grammar::{build_grammar, ChannelCounts, Grammar, Limits, NonlinearOp, SubModel};
use tagsr::{DataSet, GpConfig};

use crate::RunError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grammar: GrammarSection,
    pub gp: GpConfig,
    pub estimator: EstimatorConfig,
    pub data: DataSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarSection {
    /// ip, lti, narx, narmax, extnarx or expnarx.
    pub name: String,
    /// Empty selects the grammar's default operator set.
    pub nonlinear_ops: Vec<NonlinearOp>,
    pub max_delay: u32,
    pub inputs: usize,
    pub outputs: usize,
}

impl Default for GrammarSection {
    fn default() -> Self {
        GrammarSection {
            name: "narx".into(),
            nonlinear_ops: Vec::new(),
            max_delay: Limits::default().max_delay,
            inputs: 1,
            outputs: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub est: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub val: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    /// equations.txt
    Equations,
    /// progress.ndjson
    Progress,
    /// series/<model>_<set>.csv
    Series,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Reports written besides pareto.json.
    pub formats: Vec<Report>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            formats: vec![Report::Equations, Report::Progress, Report::Series],
        }
    }
}

/// Data sets of one run.
#[derive(Clone, Debug)]
pub struct RunData {
    pub est: Vec<DataSet>,
    pub test: Vec<DataSet>,
    pub val: Vec<DataSet>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    /// Reads `path`; relative data and output paths are taken from the
    /// directory holding it.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in cfg.data.est.iter_mut().chain(&mut cfg.data.test).chain(&mut cfg.data.val) {
            resolve(p);
        }
        resolve(&mut cfg.output.dir);
        Ok(cfg)
    }

    pub fn grammar(&self) -> Result<Grammar, RunError> {
        let g = &self.grammar;
        let model: SubModel = g.name.parse().map_err(|e| RunError::Config(format!("grammar.name: {e}")))?;
        let channels = ChannelCounts::new(g.inputs, g.outputs, g.outputs);
        build_grammar(model, channels, &g.nonlinear_ops)
            .and_then(|gr| {
                gr.with_limits(Limits {
                    complexity: self.gp.complexity.max(1),
                    max_delay: g.max_delay,
                })
            })
            .map_err(|e| RunError::Config(format!("grammar: {e}")))
    }

    /// Checks every setting that can be checked without data.
    pub fn validate(&self) -> Result<(), RunError> {
        self.grammar()?;
        let mut gp = self.gp.clone();
        gp.estimator = self.estimator.clone();
        gp.validate().map_err(|e| RunError::Config(e.to_string()))?;
        for (what, list) in [("est", &self.data.est), ("test", &self.data.test), ("val", &self.data.val)] {
            if list.is_empty() {
                return Err(RunError::Config(format!("data.{what} lists no files")));
            }
        }
        Ok(())
    }

    /// Loads all data sets and checks their channel counts.
    pub fn load_data(&self) -> Result<RunData, RunError> {
        let load = |paths: &[PathBuf]| -> Result<Vec<DataSet>, RunError> {
            paths
                .iter()
                .map(|p| {
                    let d = DataSet::from_csv_path(p).map_err(|source| RunError::Data { path: p.clone(), source })?;
                    if d.inputs() != self.grammar.inputs || d.outputs() != self.grammar.outputs {
                        return Err(RunError::Config(format!(
                            "{} has {} inputs and {} outputs, the grammar section declares {} and {}",
                            p.display(),
                            d.inputs(),
                            d.outputs(),
                            self.grammar.inputs,
                            self.grammar.outputs
                        )));
                    }
                    Ok(d)
                })
                .collect()
        };
        Ok(RunData {
            est: load(&self.data.est)?,
            test: load(&self.data.test)?,
            val: load(&self.data.val)?,
        })
    }

    pub fn gp_config(&self) -> GpConfig {
        GpConfig {
            estimator: self.estimator.clone(),
            ..self.gp.clone()
        }
    }
}

/// Annotated configuration with every default spelled out.
pub const TEMPLATE: &str = r#"# tagsr identification run. Relative paths are resolved from this file's
# directory. Every key is optional; the values below are the defaults.

[grammar]
# ip, lti, narx, narmax, extnarx (sin, cos, abs) or expnarx (inv, exp)
name = "narx"
# subset of the grammar's operators; empty means all of them
nonlinear_ops = []
# largest delay of any signal factor
max_delay = 10
inputs = 1
outputs = 1

[gp]
pop_size = 30
generations = 60
# largest number of auxiliary trees in a derivation
complexity = 20
# first crossover parents come from the best mu percent of the population
mu = 50.0
seed = 0
# drop offspring whose model structure already occurs
dedup = false

[estimator]
# least_squares, cmaes or local_refine
method = "least_squares"
# [simulation, prediction] error weights; least squares needs [0, 1]
weights = [0.0, 1.0]
ridge = 1e-8
seed = 0

[estimator.cmaes]
# population = 8  (default 4 + floor(3 ln n))
max_evals = 2000
# initial_sigma = 0.1  (default 0.3 * largest |coefficient|)

[estimator.local_refine]
max_evals = 1000

[data]
# CSV files with columns u1..ur, y1..yr
est = []
test = []
val = []

[output]
dir = "out"
# pareto.json is always written
formats = ["equations", "progress", "series"]
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_spells_out_defaults() {
        assert_eq!(RunConfig::parse(TEMPLATE).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[gp]\npopsize = 3\n").is_err());
        assert!(RunConfig::parse("[grammar]\nnonlinear_ops = [\"tan\"]\n").is_err());
    }

    #[test]
    fn paths_resolve_from_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[data]\nest = [\"a.csv\", \"/abs/b.csv\"]\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.data.est, vec![dir.path().join("a.csv"), PathBuf::from("/abs/b.csv")]);
        assert_eq!(cfg.output.dir, dir.path().join("out"));
    }

    #[test]
    fn grammar_and_limits() {
        let cfg = RunConfig::parse("[grammar]\nname = \"expnarx\"\nnonlinear_ops = [\"inv\"]\nmax_delay = 4\n[gp]\ncomplexity = 7\n").unwrap();
        let g = cfg.grammar().unwrap();
        assert_eq!(g.nonlinear_ops(), &[NonlinearOp::Inv]);
        assert_eq!(g.limits(), Limits { complexity: 7, max_delay: 4 });
        let bad = RunConfig::parse("[grammar]\nname = \"narx\"\nnonlinear_ops = [\"sin\"]\n").unwrap();
        assert!(bad.grammar().is_err());
    }

    #[test]
    fn empty_data_lists_rejected() {
        assert!(matches!(RunConfig::default().validate(), Err(RunError::Config(_))));
    }
}

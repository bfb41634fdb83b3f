use std::path::{Path, PathBuf};

use cfx_core::boundary::{BisectionConfig, BoundaryTrainConfig};
use cfx_core::classifier::ClassifierSpec;
use cfx_core::intervention::{InterventionConfig, Mode, NormMode};
use cfx_core::simulator::SimulatorKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub data: u64,
    pub classifier: u64,
    pub boundary: u64,
    pub simulator: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Seeds {
            data: seed,
            classifier: seed,
            boundary: seed,
            simulator: seed,
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::all(0)
    }
}

/// Which intervention modes `explain` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelect {
    Minimal,
    Constrained,
    #[default]
    Both,
}

impl ModeSelect {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelect::Minimal => vec![Mode::Minimal],
            ModeSelect::Constrained => vec![Mode::Constrained],
            ModeSelect::Both => vec![Mode::Minimal, Mode::Constrained],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainSection {
    #[serde(default)]
    pub mode: ModeSelect,
    #[serde(flatten)]
    pub search: InterventionConfig,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection {
            mode: ModeSelect::Both,
            search: InterventionConfig::default(),
        }
    }
}

fn default_split() -> f64 {
    0.7
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// Everything one pipeline run needs. Paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Dataset name used in reports and as the default run id.
    pub name: String,
    pub data: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "default_split")]
    pub split: f64,
    /// Upsample the minority class of the training split.
    #[serde(default)]
    pub upsample: bool,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default)]
    pub seeds: Seeds,
    pub classifier: ClassifierSpec,
    pub boundary: BoundaryTrainConfig,
    #[serde(default)]
    pub bisection: BisectionConfig,
    #[serde(default)]
    pub explain: ExplainSection,
    #[serde(default)]
    pub simulator: SimulatorKind,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub mode: Option<ModeSelect>,
    pub norm: Option<NormMode>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Parses the file, resolves relative paths against its directory,
    /// applies overrides and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        for p in [&mut self.data, &mut self.schema, &mut self.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seeds = Seeds::all(s);
        }
        if let Some(b) = o.beta {
            self.bisection.beta = b;
        }
        if let Some(a) = o.alpha {
            self.boundary.alpha = a;
        }
        if let Some(m) = o.mode {
            self.explain.mode = m;
        }
        if let Some(n) = o.norm {
            self.explain.search.norm = n;
        }
        if let Some(out) = &o.output {
            self.output = out.clone();
        }
        // stage seeds live in the seeds table; the nested ones are derived
        self.classifier.train.seed = self.seeds.classifier;
        self.boundary.train.seed = self.seeds.boundary;
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if self.name.trim().is_empty() {
            problems.push("name must not be empty".to_string());
        }
        for (what, p) in [("data", &self.data), ("schema", &self.schema)] {
            if !p.is_file() {
                problems.push(format!("{what} file not found: {}", p.display()));
            }
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            problems.push(format!("split must lie in (0, 1), got {}", self.split));
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                problems.push(format!("run_id {id:?} is not a plain directory name"));
            }
        }
        let mut push = |prefix: &str, r: cfx_core::Result<()>| {
            if let Err(e) = r {
                problems.push(format!("{prefix}: {e}"));
            }
        };
        push("classifier.train", self.classifier.train.validate());
        push("boundary", self.boundary.validate());
        push("bisection", self.bisection.validate());
        push("explain", self.explain.search.validate());
        match self.simulator {
            SimulatorKind::Knn { k } if k == 0 => problems.push("simulator: k must be >= 1".into()),
            SimulatorKind::LogisticQuadratic { l2 } if !(l2 > 0.0) => {
                problems.push("simulator: l2 must be > 0".into())
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems.join("\n")))
        }
    }

    pub fn run_id(&self) -> &str {
        self.run_id.as_deref().unwrap_or(&self.name)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output.join(self.run_id())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    /// Whether a counterfactual may change this feature at all.
    #[serde(default)]
    pub actionable: bool,
    /// 1 = most willing to modify. Unranked actionable features stay masked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference_rank: Option<usize>,
}

impl FeatureSpec {
    pub fn continuous(name: &str) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Continuous,
            actionable: false,
            preference_rank: None,
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
            actionable: false,
            preference_rank: None,
        }
    }

    pub fn ranked(mut self, rank: usize) -> Self {
        self.actionable = true;
        self.preference_rank = Some(rank);
        self
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    pub fn cardinality(&self) -> usize {
        match &self.kind {
            FeatureKind::Continuous => 1,
            FeatureKind::Categorical { levels } => levels.len(),
        }
    }

    /// Modifiable during an intervention: actionable and ranked.
    pub fn modifiable(&self) -> bool {
        self.actionable && self.preference_rank.is_some()
    }
}

/// Per-dataset sidecar describing features, actionability and preference
/// ranks. Stored as TOML:
///
/// ```toml
/// label = "target"
///
/// [[feature]]
/// name = "Sex"
/// kind = "categorical"
/// levels = ["F", "M"]
///
/// [[feature]]
/// name = "RestingBP"
/// kind = "continuous"
/// actionable = true
/// preference_rank = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(rename = "feature")]
    pub features: Vec<FeatureSpec>,
}

fn default_label() -> String {
    "target".to_string()
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        let schema = FeatureSchema {
            label: default_label(),
            features,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: FeatureSchema =
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.features.len();
        if d == 0 {
            return Err(Error::Schema("no features declared".into()));
        }
        let mut names = HashSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) || f.name == self.label {
                return Err(Error::Schema(format!("duplicate column name `{}`", f.name)));
            }
            if let FeatureKind::Categorical { levels } = &f.kind {
                if levels.len() < 2 {
                    return Err(Error::Schema(format!(
                        "categorical `{}` needs at least 2 levels",
                        f.name
                    )));
                }
                let unique: HashSet<_> = levels.iter().collect();
                if unique.len() != levels.len() {
                    return Err(Error::Schema(format!("`{}` repeats a level", f.name)));
                }
            }
            if let Some(r) = f.preference_rank {
                if r == 0 || r > d {
                    return Err(Error::Schema(format!(
                        "`{}`: preference_rank {r} outside 1..={d}",
                        f.name
                    )));
                }
                if !f.actionable {
                    return Err(Error::Schema(format!(
                        "`{}` has a preference rank but is not actionable",
                        f.name
                    )));
                }
            }
        }
        if !self.features.iter().any(FeatureSpec::modifiable) {
            return Err(Error::Schema(
                "at least one feature must be actionable and ranked".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn ranks(&self) -> Vec<Option<usize>> {
        self.features.iter().map(|f| f.preference_rank).collect()
    }

    pub fn categorical_count(&self) -> usize {
        self.features.iter().filter(|f| f.is_categorical()).count()
    }
}

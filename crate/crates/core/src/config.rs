//! Experiment configuration files (TOML, strict schema).
//!
//! ```toml
//! experiment = "as"            # as | l1 | continuous | er | identity-suite
//! seed = 7
//! depth = 3
//! words = [[1, 1], [1, 2, 2]]
//! checkpoints = { start = 1000, count = 8 }   # or an explicit list
//! output = "out/as_rotation"
//!
//! [model]
//! kind = "rotation"
//! start = 0.1
//! observables = [{ constant = 1.0, cos = [1.0] }]
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{check_checkpoints, geometric_checkpoints};
use crate::processes::{ProcessModel, TransitionMatrix, TrigObservable, GOLDEN_FREQUENCY};
use crate::tensor::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "as")]
    AlmostSure,
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "continuous")]
    Continuous,
    #[serde(rename = "er")]
    ErdosRenyi,
    #[serde(rename = "identity-suite")]
    IdentitySuite,
}

impl ExperimentKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::AlmostSure => "as",
            Self::L1 => "l1",
            Self::Continuous => "continuous",
            Self::ErdosRenyi => "er",
            Self::IdentitySuite => "identities",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Discrete,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSpec {
    List(Vec<usize>),
    Geometric(GeometricGrid),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub start: usize,
    pub count: usize,
}

impl CheckpointSpec {
    pub fn resolve(&self) -> Vec<usize> {
        match self {
            Self::List(v) => v.clone(),
            Self::Geometric(g) => geometric_checkpoints(g.start, g.count),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Iid {
        support: Vec<Vec<f64>>,
        probabilities: Vec<f64>,
    },
    Constant {
        value: Vec<f64>,
    },
    Markov {
        transition: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
    },
    Rotation {
        #[serde(default = "golden")]
        frequency: f64,
        #[serde(default)]
        start: f64,
        observables: Vec<ObservableSpec>,
    },
}

fn golden() -> f64 {
    GOLDEN_FREQUENCY
}

impl ModelSpec {
    pub fn build(&self) -> Result<ProcessModel> {
        match self {
            Self::Iid {
                support,
                probabilities,
            } => ProcessModel::iid(support.clone(), probabilities.clone()),
            Self::Constant { value } => ProcessModel::constant(value.clone()),
            Self::Markov { transition, values } => {
                ProcessModel::markov(TransitionMatrix::new(transition.clone())?, values.clone())
            }
            Self::Rotation {
                frequency,
                start,
                observables,
            } => ProcessModel::rotation(
                *frequency,
                *start,
                observables
                    .iter()
                    .map(|o| TrigObservable {
                        constant: o.constant,
                        cos: o.cos.clone(),
                        sin: o.sin.clone(),
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub words: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<CheckpointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineKind>,
    #[serde(default)]
    pub kahan: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
}

/// A validated configuration with its model built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: Option<ProcessModel>,
    pub words: Vec<Word>,
    pub checkpoints: Vec<usize>,
    pub depth: usize,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks the schema-level invariants and builds the model.
    pub fn validate(&self, path: &Path) -> Result<Experiment> {
        let fail = |message: String| Error::Config {
            path: path.to_path_buf(),
            message,
        };
        let wrap = |source: Error| Error::Experiment {
            path: path.to_path_buf(),
            source: Box::new(source),
        };
        if self.experiment == ExperimentKind::IdentitySuite {
            return Ok(Experiment {
                config: self.clone(),
                model: None,
                words: Vec::new(),
                checkpoints: Vec::new(),
                depth: 0,
            });
        }
        let spec = self
            .model
            .as_ref()
            .ok_or_else(|| fail("missing [model] table".into()))?;
        let model = spec.build().map_err(wrap)?;
        if self.words.is_empty() {
            return Err(fail("`words` must list at least one word".into()));
        }
        let words = self
            .words
            .iter()
            .map(|letters| Word::new(letters.clone(), model.dim()))
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        let max_degree = words.iter().map(Word::degree).max().unwrap_or(1);
        let depth = self.depth.unwrap_or(max_degree).max(1);
        if let Some(word) = words.iter().find(|w| w.degree() > depth) {
            return Err(fail(format!(
                "word {word} has degree {} > depth {depth}",
                word.degree()
            )));
        }
        let checkpoints = self
            .checkpoints
            .as_ref()
            .ok_or_else(|| fail("missing `checkpoints`".into()))?
            .resolve();
        check_checkpoints(&checkpoints).map_err(wrap)?;
        let needs_step = self.experiment == ExperimentKind::Continuous
            || (self.experiment == ExperimentKind::L1
                && self.engine == Some(EngineKind::Continuous));
        match self.step {
            Some(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(fail(format!("`step` must be positive, got {h}")))
            }
            None if needs_step => return Err(fail("missing `step`".into())),
            _ => {}
        }
        match self.experiment {
            ExperimentKind::L1 => match self.replications {
                Some(r) if r >= 2 => {}
                other => {
                    return Err(fail(format!(
                        "`replications` must be at least 2, got {other:?}"
                    )))
                }
            },
            ExperimentKind::ErdosRenyi => {
                if self.alphas.is_empty() {
                    return Err(fail("`alphas` must list at least one value".into()));
                }
                if words.iter().any(|w| w.degree() == 0) {
                    return Err(fail("scan words need degree >= 1".into()));
                }
            }
            _ => {}
        }
        if self.decimation == Some(0) {
            return Err(fail("`decimation` must be at least 1".into()));
        }
        Ok(Experiment {
            config: self.clone(),
            model: Some(model),
            words,
            checkpoints,
            depth,
        })
    }
}

/// Contents of `manifest.toml`: the config echo plus run metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub library_version: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = r#"
experiment = "as"
seed = 3
depth = 3
words = [[1, 1], [1, 2, 2]]
checkpoints = { start = 100, count = 4 }
output = "out"

[model]
kind = "rotation"
start = 0.1
observables = [{ constant = 1.0, cos = [1.0] }, { constant = 0.5, sin = [0.5] }]
"#;

    fn path() -> PathBuf {
        PathBuf::from("test.toml")
    }

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::parse(ROTATION, &path()).unwrap();
        let exp = cfg.validate(&path()).unwrap();
        assert_eq!(exp.checkpoints, vec![100, 200, 400, 800]);
        assert_eq!(exp.words.len(), 2);
        assert_eq!(exp.model.unwrap().mean(), vec![1.0, 0.5]);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::parse(ROTATION, &path()).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_toml(), &path()).unwrap();
        assert_eq!(cfg, again);
        let manifest = Manifest {
            library_version: "0.1.0".into(),
            seed: cfg.seed,
            files: vec!["as_w1-1.csv".into()],
            config: cfg.clone(),
        };
        assert_eq!(Manifest::parse(&manifest.to_toml()).unwrap().config, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = ROTATION.replace("seed = 3", "seed = 3\nsede = 4");
        assert!(matches!(
            ExperimentConfig::parse(&text, &path()),
            Err(Error::Config { .. })
        ));
        let text = ROTATION.replace("start = 0.1", "start = 0.1\nphase = 2.0");
        assert!(ExperimentConfig::parse(&text, &path()).is_err());
        let text = ROTATION.replace("cos = [1.0] }", "cos = [1.0], tan = [1.0] }");
        assert!(ExperimentConfig::parse(&text, &path()).is_err());
        let text = ROTATION.replace("count = 4", "count = 4, ratio = 3");
        assert!(ExperimentConfig::parse(&text, &path()).is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let text = ROTATION.replace("seed = 3\n", "");
        assert!(ExperimentConfig::parse(&text, &path()).is_err());
    }

    #[test]
    fn validation_errors_name_the_file() {
        let cfg =
            ExperimentConfig::parse(&ROTATION.replace("depth = 3", "depth = 2"), &path()).unwrap();
        let err = cfg.validate(&path()).unwrap_err();
        assert!(err.to_string().starts_with("test.toml"));

        let text = ROTATION.replace("{ start = 100, count = 4 }", "[100, 50]");
        let cfg = ExperimentConfig::parse(&text, &path()).unwrap();
        assert!(cfg.validate(&path()).is_err());

        let text = ROTATION.replace("[[1, 1], [1, 2, 2]]", "[[1, 3]]");
        let cfg = ExperimentConfig::parse(&text, &path()).unwrap();
        assert!(cfg
            .validate(&path())
            .unwrap_err()
            .to_string()
            .contains("test.toml"));

        let text = ROTATION.replace("experiment = \"as\"", "experiment = \"l1\"");
        let cfg = ExperimentConfig::parse(&text, &path()).unwrap();
        assert!(cfg.validate(&path()).is_err());
    }

    #[test]
    fn model_kinds_build() {
        let specs = [
            r#"kind = "iid"
support = [[0.0], [1.0]]
probabilities = [0.5, 0.5]"#,
            r#"kind = "constant"
value = [2.0, 1.0]"#,
            r#"kind = "markov"
transition = [[0.9, 0.1], [0.5, 0.5]]
values = [[0.0], [1.0]]"#,
        ];
        for spec in specs {
            let m: ModelSpec = toml::from_str(spec).unwrap();
            m.build().unwrap();
        }
        let bad: std::result::Result<ModelSpec, _> = toml::from_str(
            r#"kind = "constant"
value = [1.0]
extra = 1"#,
        );
        assert!(bad.is_err());
    }
}

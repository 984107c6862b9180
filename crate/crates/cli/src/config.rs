//! Run configuration: one JSON document with a section per concern, plus
//! dotted `--set section.key=value` overrides.

use std::path::{Path, PathBuf};

use graphrel::data::SyntheticSpec;
use graphrel::model::ModelConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Input files for real data. When `expression` is unset the synthetic
/// generator (section `synthetic`) supplies the dataset and graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    pub expression: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub survival: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub splits: usize,
    pub seed: u64,
    /// Any of `hybrid`, `gcnn`, `gcnn_rn`, `gnb`, `knn`.
    pub methods: Vec<String>,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            splits: 20,
            seed: 0,
            methods: vec!["hybrid".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub n_values: Vec<usize>,
    pub d_values: Vec<f64>,
    pub methods: Vec<String>,
    pub splits: usize,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            n_values: vec![50, 100, 200, 400],
            d_values: vec![0.0, 0.5, 1.0, 2.0],
            methods: vec!["hybrid".into(), "gcnn".into(), "gnb".into()],
            splits: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    /// `gnb` or `knn`.
    pub method: String,
    pub k: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            method: "gnb".into(),
            k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurvivalSection {
    /// Feature-map CSV from `export-embeddings`; defaults to
    /// `<output_dir>/embeddings.csv`.
    pub embeddings: Option<PathBuf>,
    pub clusters: usize,
}

impl Default for SurvivalSection {
    fn default() -> Self {
        SurvivalSection {
            embeddings: None,
            clusters: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub data: DataPaths,
    pub synthetic: SyntheticSpec,
    pub model: ModelConfig,
    pub cv: CvSection,
    pub sweep: SweepSection,
    pub baseline: BaselineSection,
    pub survival: SurvivalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            data: DataPaths::default(),
            synthetic: SyntheticSpec::default(),
            model: ModelConfig::default(),
            cv: CvSection::default(),
            sweep: SweepSection::default(),
            baseline: BaselineSection::default(),
            survival: SurvivalSection::default(),
        }
    }
}

impl RunConfig {
    /// Defaults, then the optional config file, then each override in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        // The file is resolved against the defaults first so that overrides
        // can address keys the file leaves out.
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                    CliError::Usage(format!("{}:{}:{}: {e}", p.display(), e.line(), e.column()))
                })?
            }
            None => RunConfig::default(),
        };
        let mut value = serde_json::to_value(base).expect("config serialises");
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        config
            .model
            .validate()
            .map_err(|e| CliError::Usage(format!("invalid model config: {e}")))?;
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Applies `section.key=value`. The value is parsed as JSON when possible
/// (numbers, booleans, arrays, `null`) and taken as a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{spec}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("override key `{path}` is malformed")));
    }
    let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("`{}` is not a section", keys[..i].join("."))))?;
        if !obj.contains_key(*key) && i + 1 < keys.len() {
            return Err(CliError::Usage(format!("unknown config key `{}`", keys[..=i].join("."))));
        }
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), parsed);
            return Ok(());
        }
        cur = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("keys is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_apply_nested_values() {
        let c = RunConfig::load(
            None,
            &[
                "model.optimizer.lr=0.01".into(),
                "synthetic.n=20".into(),
                "cv.methods=[\"gnb\",\"knn\"]".into(),
                "output_dir=elsewhere".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.model.optimizer.lr, 0.01);
        assert_eq!(c.synthetic.n, 20);
        assert_eq!(c.cv.methods, vec!["gnb", "knn"]);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn overrides_reach_keys_missing_from_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"model": {"kappa": 7}}"#).unwrap();
        let c = RunConfig::load(Some(&path), &["data.labels=l.csv".into()]).unwrap();
        assert_eq!(c.model.kappa, 7);
        assert_eq!(c.data.labels, Some(PathBuf::from("l.csv")));
        std::fs::write(&path, r#"{"modle": {}}"#).unwrap();
        assert!(matches!(RunConfig::load(Some(&path), &[]), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        assert!(matches!(RunConfig::load(None, &["model.lrr=1".into()]), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::load(None, &["nosuch.key=1".into()]), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::load(None, &["model".into()]), Err(CliError::Usage(_))));
    }
}

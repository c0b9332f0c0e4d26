//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Embedding credentials are never read from here; see
//! [`crate::topics::RemoteProvider::from_env`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Category, NamePolicy};
use crate::error::{Error, Result};
use crate::graph::MetricsOptions;
use crate::matcher::ScanConfig;
use crate::topics::TopicConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    /// `http(s)://` API root, or a directory of `<category>.json` pages.
    pub base_url: String,
    pub categories: Vec<Category>,
    pub limit_per_category: Option<usize>,
    pub parallelism: usize,
    pub min_request_interval_ms: u64,
    pub retry_attempts: u32,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            base_url: "https://gutendex.com".into(),
            categories: vec![Category::Philosophy],
            limit_per_category: None,
            parallelism: 4,
            min_request_interval_ms: 250,
            retry_attempts: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Lexicon,
    Remote,
}

/// Which reference set the classify stage embeds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyScope {
    #[default]
    Main,
    Expanded,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub provider: ProviderKind,
    /// Directory of `<topic>.txt` word lists; the built-in lexicon otherwise.
    pub lexicon_dir: Option<PathBuf>,
    pub scope: ClassifyScope,
    #[serde(flatten)]
    pub classifier: TopicConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Newline-delimited author ids accepted after manual review.
    pub validated_authors: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub port: u16,
    /// Static explorer build served at `/`.
    pub explorer_dir: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            port: 8080,
            explorer_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Date stamped into exported artifacts. Falls back to the fetch date.
    pub snapshot_date: Option<String>,
    pub catalog: CatalogConfig,
    pub names: NamePolicy,
    pub scan: ScanConfig,
    pub topics: TopicsConfig,
    pub datasets: DatasetConfig,
    pub analysis: MetricsOptions,
    pub serve: ServeConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: PathBuf::from("out"),
            snapshot_date: None,
            catalog: CatalogConfig::default(),
            names: NamePolicy::default(),
            scan: ScanConfig::default(),
            topics: TopicsConfig::default(),
            datasets: DatasetConfig::default(),
            analysis: MetricsOptions::default(),
            serve: ServeConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Catalog base with directory paths resolved against the config file.
    pub fn catalog_base(&self) -> String {
        let b = &self.catalog.base_url;
        if b.starts_with("http://") || b.starts_with("https://") {
            b.clone()
        } else {
            let dir = b.strip_prefix("file://").unwrap_or(b);
            self.resolve(Path::new(dir)).display().to_string()
        }
    }

    pub fn validated_path(&self) -> Result<PathBuf> {
        self.datasets
            .validated_authors
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| Error::Config("datasets.validated_authors is not set".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.catalog.categories.is_empty() {
            return Err(Error::Config("catalog.categories is empty".into()));
        }
        if self.catalog.limit_per_category == Some(0) {
            return Err(Error::Config(
                "catalog.limit_per_category must be at least 1".into(),
            ));
        }
        if self.serve.port == 0 {
            return Err(Error::Config("serve.port must be in 1..=65535".into()));
        }
        if !self.analysis.resolution.is_finite() || self.analysis.resolution <= 0.0 {
            return Err(Error::Config("analysis.resolution must be positive".into()));
        }
        if let Some(d) = &self.snapshot_date {
            chrono::NaiveDate::parse_from_str(d, "%Y-%m-%d")
                .map_err(|e| Error::Config(format!("snapshot_date `{d}`: {e}")))?;
        }
        self.scan
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.topics.classifier.validate()?;
        Ok(())
    }

    /// Digest of every setting that influences artifact contents. Output
    /// location and serving options are left out.
    pub fn config_hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.serve = ServeConfig::default();
        let json = serde_json::to_vec(&c)?;
        Ok(hex::encode(Sha256::digest(&json)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::Topic;

    const SAMPLE: &str = r#"
output_dir = "out"
snapshot_date = "2026-01-01"

[catalog]
base_url = "catalog"
categories = ["philosophy", "science"]
limit_per_category = 5

[names]
single_name = ["Dante Alighieri"]

[scan]
window_size = 100

[topics]
provider = "lexicon"
default_threshold = 0.3

[topics.thresholds]
art = 0.5

[datasets]
validated_authors = "validated.txt"

[analysis]
seed = 7

[analysis.share_sets]
ancients = ["plato-428bce", "aristotle-384bce"]
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = PipelineConfig::from_toml(SAMPLE, Path::new("/cfg")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.output_dir(), PathBuf::from("/cfg/out"));
        assert_eq!(cfg.catalog_base(), "/cfg/catalog");
        assert_eq!(
            cfg.validated_path().unwrap(),
            PathBuf::from("/cfg/validated.txt")
        );
        assert_eq!(cfg.scan.window_size, 100);
        assert_eq!(cfg.scan.per_text_target_cap, 250);
        assert_eq!(cfg.topics.classifier.threshold(Topic::Art), 0.5);
        assert_eq!(cfg.topics.classifier.threshold(Topic::Ethics), 0.3);
        assert_eq!(cfg.analysis.seed, 7);
        assert_eq!(cfg.analysis.share_sets["ancients"].len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("bogus = 1", Path::new(".")).is_err());
        let mut cfg = PipelineConfig::default();
        cfg.serve.port = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = PipelineConfig::default();
        cfg.scan.per_text_target_cap = 0;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            snapshot_date: Some("yesterday".into()),
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = PipelineConfig::from_toml(SAMPLE, Path::new("/a")).unwrap();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        b.serve.port = 9999;
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
        b.scan.per_text_target_cap = 10;
        assert_ne!(a.config_hash().unwrap(), b.config_hash().unwrap());
    }
}

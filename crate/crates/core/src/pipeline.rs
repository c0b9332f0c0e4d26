//! Stage orchestration. Every stage reads its predecessors' artifacts from
//! the output directory and writes its own, so stages can be re-run alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{ClassifyScope, PipelineConfig, ProviderKind};
use crate::corpus::{
    build_author_table, build_text_table, download_texts, fetch_catalog, normalize_bytes,
    read_authors_csv, read_texts_csv, write_authors_csv, write_dropped_texts_csv, write_texts_csv,
    AuthorTable, CatalogEntry, CatalogSource, RetryPolicy, TextRecord,
};
use crate::dataset::{
    apply_temporal_filter, read_validated_list, restrict_to_validated, summarize, ManifestSummary,
    ReferenceSet, Variant, VariantManifest,
};
use crate::error::{Error, Result};
use crate::export::{export_bundle, write_bundle, BundleMeta, TOOL_VERSION};
use crate::graph::{
    build_graph, compute_metrics, write_dense_csv, write_triples_csv, MetricsReport,
};
use crate::matcher::{compile_patterns, read_references_csv, scan_corpus, write_references_csv};
use crate::topics::{
    build_topic_subsets, read_classified_csv, write_classified_csv, Classifier, EmbeddingProvider,
    Lexicon, LexiconProvider, RemoteProvider, Topic,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Fetch,
    Scan,
    Classify,
    Analyze,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Fetch,
        Stage::Scan,
        Stage::Classify,
        Stage::Analyze,
        Stage::Export,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Fetch => "fetch",
            Stage::Scan => "scan",
            Stage::Classify => "classify",
            Stage::Analyze => "analyze",
            Stage::Export => "export",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Dataset order in metrics and bundle: main, the topics, filtered, expanded.
pub fn dataset_order() -> Vec<Variant> {
    let mut v = vec![Variant::Main];
    v.extend(Topic::ALL.map(Variant::Topic));
    v.push(Variant::Filtered);
    v.push(Variant::Expanded);
    v
}

/// Artifact locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn catalog_entries(&self) -> PathBuf {
        self.root.join("cache/catalog/entries.json")
    }
    pub fn fetch_manifest(&self) -> PathBuf {
        self.root.join("cache/catalog/manifest.json")
    }
    pub fn text_cache(&self) -> PathBuf {
        self.root.join("cache/texts")
    }
    pub fn authors(&self) -> PathBuf {
        self.root.join("authors.csv")
    }
    pub fn dropped_authors(&self) -> PathBuf {
        self.root.join("dropped_authors.csv")
    }
    pub fn texts(&self) -> PathBuf {
        self.root.join("texts.csv")
    }
    pub fn dropped_texts(&self) -> PathBuf {
        self.root.join("dropped_texts.csv")
    }
    pub fn references(&self) -> PathBuf {
        self.root.join("references.csv")
    }
    pub fn classified(&self) -> PathBuf {
        self.root.join("classified.csv")
    }
    pub fn dataset_references(&self, v: Variant) -> PathBuf {
        self.root
            .join(format!("datasets/{}.references.csv", v.dataset_id()))
    }
    pub fn dataset_manifest(&self, v: Variant) -> PathBuf {
        self.root.join(format!("datasets/{}.json", v.dataset_id()))
    }
    pub fn dense_adjacency(&self, v: Variant) -> PathBuf {
        self.root.join(format!("adjacency/{}.csv", v.dataset_id()))
    }
    pub fn triples(&self, v: Variant) -> PathBuf {
        self.root
            .join(format!("adjacency/{}.triples.csv", v.dataset_id()))
    }
    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.json")
    }
    pub fn bundle(&self) -> PathBuf {
        self.root.join("bundle.json")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchManifest {
    pub fetched_at: String,
    pub base_url: String,
    pub entries: usize,
    pub authors: usize,
    pub texts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub datasets: BTreeMap<String, MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub stage: Stage,
    pub artifacts: Vec<PathBuf>,
    pub elapsed: Duration,
}

fn require(stage: Stage, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            stage: stage.to_string(),
            path: path.to_path_buf(),
        })
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn make_provider(cfg: &PipelineConfig) -> Result<Box<dyn EmbeddingProvider>> {
    match cfg.topics.provider {
        ProviderKind::Lexicon => {
            let lexicon = match &cfg.topics.lexicon_dir {
                Some(d) => Lexicon::from_dir(&cfg.resolve(d))?,
                None => Lexicon::builtin(),
            };
            Ok(Box::new(LexiconProvider::new(&lexicon)))
        }
        ProviderKind::Remote => Ok(Box::new(RemoteProvider::from_env()?)),
    }
}

pub struct Pipeline<'a> {
    cfg: &'a PipelineConfig,
    layout: Layout,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a PipelineConfig) -> Self {
        Pipeline {
            layout: Layout::new(cfg.output_dir()),
            cfg,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Paths a stage needs to exist before it starts, beyond artifacts.
    fn check_inputs(&self, stages: &BTreeSet<Stage>) -> Result<()> {
        if stages.contains(&Stage::Classify) || stages.contains(&Stage::Analyze) {
            let p = self.cfg.validated_path()?;
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "validated author list {} not found",
                    p.display()
                )));
            }
        }
        if stages.contains(&Stage::Classify) {
            if let Some(d) = &self.cfg.topics.lexicon_dir {
                let d = self.cfg.resolve(d);
                if !d.is_dir() {
                    return Err(Error::Config(format!(
                        "lexicon directory {} not found",
                        d.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn run(&self, stages: &[Stage]) -> Result<Vec<StageReport>> {
        self.cfg.validate()?;
        let stages: BTreeSet<Stage> = stages.iter().copied().collect();
        if stages.is_empty() {
            return Err(Error::Config("no stages requested".into()));
        }
        self.check_inputs(&stages)?;
        std::fs::create_dir_all(&self.layout.root).map_err(|e| Error::io(&self.layout.root, e))?;
        let mut reports = Vec::new();
        for stage in stages {
            let start = Instant::now();
            info!("stage {stage}: start");
            let artifacts = match stage {
                Stage::Fetch => self.fetch()?,
                Stage::Scan => self.scan()?,
                Stage::Classify => self.classify()?,
                Stage::Analyze => self.analyze()?,
                Stage::Export => self.export()?,
            };
            let elapsed = start.elapsed();
            info!(
                "stage {stage}: done in {:.2}s, {} artifacts",
                elapsed.as_secs_f64(),
                artifacts.len()
            );
            reports.push(StageReport {
                stage,
                artifacts,
                elapsed,
            });
        }
        Ok(reports)
    }

    fn authors(&self, stage: Stage) -> Result<AuthorTable> {
        let p = self.layout.authors();
        require(stage, &p)?;
        read_authors_csv(&p)
    }

    fn expanded(&self, stage: Stage, authors: &AuthorTable) -> Result<ReferenceSet> {
        let p = self.layout.references();
        require(stage, &p)?;
        ReferenceSet::expanded(read_references_csv(&p)?, authors)
    }

    fn main_set(&self, expanded: &ReferenceSet, authors: &AuthorTable) -> Result<ReferenceSet> {
        let validated = read_validated_list(&self.cfg.validated_path()?)?;
        restrict_to_validated(expanded, &validated, authors)
    }

    fn fetch(&self) -> Result<Vec<PathBuf>> {
        let c = &self.cfg.catalog;
        let retry = RetryPolicy {
            attempts: c.retry_attempts,
            ..RetryPolicy::default()
        };
        let base = self.cfg.catalog_base();
        let source = CatalogSource::open(
            &base,
            retry,
            Duration::from_millis(c.min_request_interval_ms),
        )?;
        let entries: Vec<CatalogEntry> =
            fetch_catalog(&source, &c.categories, c.limit_per_category)?;
        let l = &self.layout;
        write_json(&l.catalog_entries(), &entries)?;

        let authors = build_author_table(&entries, &self.cfg.names);
        let downloads = download_texts(&source, &entries, &l.text_cache(), c.parallelism)?;
        let (texts, dropped) = build_text_table(&entries, &authors, &downloads)?;
        info!(
            "fetch: {} entries, {} authors ({} dropped), {} texts ({} dropped)",
            entries.len(),
            authors.authors.len(),
            authors.dropped.len(),
            texts.len(),
            dropped.len()
        );

        write_authors_csv(&l.authors(), &authors.authors)?;
        let mut w = csv::Writer::from_path(l.dropped_authors())?;
        for d in &authors.dropped {
            w.serialize(d)?;
        }
        w.flush().map_err(|e| Error::io(l.dropped_authors(), e))?;
        write_texts_csv(&l.texts(), &texts)?;
        write_dropped_texts_csv(&l.dropped_texts(), &dropped)?;
        let manifest = FetchManifest {
            fetched_at: chrono::Utc::now().format("%Y-%m-%d").to_string(),
            base_url: base,
            entries: entries.len(),
            authors: authors.authors.len(),
            texts: texts.len(),
        };
        write_json(&l.fetch_manifest(), &manifest)?;
        Ok(vec![
            l.catalog_entries(),
            l.authors(),
            l.dropped_authors(),
            l.texts(),
            l.dropped_texts(),
            l.fetch_manifest(),
        ])
    }

    /// Text table rows with their bodies re-read from the download cache.
    fn load_texts(&self, stage: Stage) -> Result<Vec<TextRecord>> {
        let p = self.layout.texts();
        require(stage, &p)?;
        let mut texts = read_texts_csv(&p)?;
        for t in &mut texts {
            let cached = self
                .layout
                .text_cache()
                .join(format!("{}.txt", t.source_id));
            require(stage, &cached)?;
            let raw = std::fs::read(&cached).map_err(|e| Error::io(&cached, e))?;
            t.body = normalize_bytes(&raw)?;
        }
        Ok(texts)
    }

    fn scan(&self) -> Result<Vec<PathBuf>> {
        let authors = self.authors(Stage::Scan)?;
        let texts = self.load_texts(Stage::Scan)?;
        let automaton = compile_patterns(&authors.authors, self.cfg.scan.boundary_rule)?;
        let records = scan_corpus(&texts, &automaton, &self.cfg.scan)?;
        let set = ReferenceSet::expanded(records, &authors)?;
        info!(
            "scan: {} texts, {} references",
            texts.len(),
            set.records.len()
        );
        write_references_csv(&self.layout.references(), &set.records)?;
        Ok(vec![self.layout.references()])
    }

    fn classify(&self) -> Result<Vec<PathBuf>> {
        let authors = self.authors(Stage::Classify)?;
        let expanded = self.expanded(Stage::Classify, &authors)?;
        let target = match self.cfg.topics.scope {
            ClassifyScope::Main => self.main_set(&expanded, &authors)?,
            ClassifyScope::Expanded => expanded,
        };
        let provider = make_provider(self.cfg)?;
        let classifier = Classifier::new(&self.cfg.topics.classifier, provider.as_ref())?;
        let classified = classifier.classify_all(&target.records)?;
        info!(
            "classify: {} references with provider {}",
            classified.len(),
            provider.id()
        );
        write_classified_csv(&self.layout.classified(), &classified)?;
        Ok(vec![self.layout.classified()])
    }

    fn analyze(&self) -> Result<Vec<PathBuf>> {
        let l = &self.layout;
        let authors = self.authors(Stage::Analyze)?;
        let expanded = self.expanded(Stage::Analyze, &authors)?;
        require(Stage::Analyze, &l.classified())?;
        let classified = read_classified_csv(&l.classified())?;
        let main = self.main_set(&expanded, &authors)?;
        let filtered = apply_temporal_filter(&main, &authors)?;
        let topics = build_topic_subsets(&classified, &main)?;

        let mut artifacts = Vec::new();
        let mut metrics = BTreeMap::new();
        for variant in dataset_order() {
            let (set, filters): (&ReferenceSet, Vec<String>) = match variant {
                Variant::Main => (&main, vec!["validated_authors".into()]),
                Variant::Filtered => (
                    &filtered,
                    vec!["validated_authors".into(), "temporal".into()],
                ),
                Variant::Expanded => (&expanded, vec![]),
                Variant::Topic(t) => (
                    &topics[&t],
                    vec!["validated_authors".into(), format!("topic:{t}")],
                ),
            };
            let refs_path = l.dataset_references(variant);
            ensure_parent(&refs_path)?;
            write_references_csv(&refs_path, &set.records)?;
            let summary = summarize(set);
            write_json(
                &l.dataset_manifest(variant),
                &VariantManifest {
                    variant: variant.dataset_id(),
                    source_csv: refs_path
                        .file_name()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned(),
                    filters_applied: filters,
                    summary: ManifestSummary {
                        total_authors: summary.total_authors,
                        total_references: summary.total_references,
                    },
                },
            )?;
            let g = build_graph(set)?;
            ensure_parent(&l.dense_adjacency(variant))?;
            write_dense_csv(&l.dense_adjacency(variant), &g)?;
            write_triples_csv(&l.triples(variant), &g)?;
            let report = compute_metrics(&g, &self.cfg.analysis)?;
            info!(
                "analyze: {variant}: {} authors, {} references, modularity {:?}",
                g.node_count(),
                g.total_weight(),
                report.modularity
            );
            metrics.insert(variant.dataset_id(), report);
            artifacts.extend([
                refs_path,
                l.dataset_manifest(variant),
                l.dense_adjacency(variant),
                l.triples(variant),
            ]);
        }
        write_json(&l.metrics(), &MetricsFile { datasets: metrics })?;
        artifacts.push(l.metrics());
        Ok(artifacts)
    }

    fn generated_at(&self) -> Result<String> {
        if let Some(d) = &self.cfg.snapshot_date {
            return Ok(d.clone());
        }
        let p = self.layout.fetch_manifest();
        require(Stage::Export, &p)?;
        Ok(read_json::<FetchManifest>(&p)?.fetched_at)
    }

    fn export(&self) -> Result<Vec<PathBuf>> {
        let l = &self.layout;
        let authors = self.authors(Stage::Export)?;
        require(Stage::Export, &l.metrics())?;
        let metrics: MetricsFile = read_json(&l.metrics())?;
        let universe: BTreeSet<String> = authors
            .authors
            .iter()
            .map(|a| a.author_id.clone())
            .collect();
        let mut loaded = Vec::new();
        for variant in dataset_order() {
            let Some(report) = metrics.datasets.get(&variant.dataset_id()) else {
                continue;
            };
            let p = l.dataset_references(variant);
            require(Stage::Export, &p)?;
            let set = ReferenceSet {
                variant,
                records: read_references_csv(&p)?,
                author_universe: universe.clone(),
            };
            loaded.push((variant, set, report));
        }
        for id in metrics.datasets.keys() {
            id.parse::<Variant>()?;
        }
        let refs: Vec<_> = loaded.iter().map(|(v, s, r)| (*v, s, *r)).collect();
        let meta = BundleMeta {
            generated_at: self.generated_at()?,
            tool_version: TOOL_VERSION.into(),
            config_hash: self.cfg.config_hash()?,
        };
        let bundle = export_bundle(&refs, &authors, meta)?;
        write_bundle(&l.bundle(), &bundle)?;
        info!("export: {} datasets", bundle.datasets.len());
        Ok(vec![l.bundle(), l.bundle().with_extension("json.gz")])
    }
}

pub fn run_pipeline(cfg: &PipelineConfig, stages: &[Stage]) -> Result<Vec<StageReport>> {
    Pipeline::new(cfg).run(stages)
}

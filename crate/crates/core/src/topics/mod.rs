//! Topic classification of reference contexts by embedding similarity.
//!
//! Each context window is embedded, compared with the embedding of every
//! topic term by cosine similarity, and labeled with every topic whose score
//! clears that topic's threshold. A reference may get zero, one or several
//! labels.

mod lexicon;
mod remote;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ReferenceSet, Variant};
use crate::error::{Error, Result};
use crate::matcher::ReferenceRecord;

pub use lexicon::{Lexicon, LexiconProvider};
pub use remote::RemoteProvider;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    Ethics,
    Politics,
    Religion,
    Mathematics,
    Science,
    Art,
    Metaphysics,
    Epistemology,
}

impl Topic {
    /// The eight topics in their fixed reporting order.
    pub const ALL: [Topic; 8] = [
        Topic::Ethics,
        Topic::Politics,
        Topic::Religion,
        Topic::Mathematics,
        Topic::Science,
        Topic::Art,
        Topic::Metaphysics,
        Topic::Epistemology,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Ethics => "ethics",
            Topic::Politics => "politics",
            Topic::Religion => "religion",
            Topic::Mathematics => "mathematics",
            Topic::Science => "science",
            Topic::Art => "art",
            Topic::Metaphysics => "metaphysics",
            Topic::Epistemology => "epistemology",
        }
    }

    pub fn index(self) -> usize {
        Topic::ALL.iter().position(|t| *t == self).unwrap_or(0)
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Topic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown topic `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("embedding has dimension 0".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "embedding component {i} is not finite"
            )));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

/// A deterministic map from text to fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;

    /// Embed a batch of non-empty texts, one vector per input.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;
}

pub fn embed(text: &str, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(Error::Input("cannot embed empty text".into()));
    }
    let mut v = provider.embed_batch(&[text])?;
    v.pop()
        .ok_or_else(|| Error::Provider(format!("{} returned no vector", provider.id())))
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.values().iter().zip(b.values()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedMetric(
            "cosine similarity with a zero vector".into(),
        ));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub const DEFAULT_THRESHOLD: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicConfig {
    /// Per-topic score threshold; topics not listed use `default_threshold`.
    pub thresholds: BTreeMap<Topic, f64>,
    pub default_threshold: f64,
    /// Optional text embedded in place of the bare topic term.
    pub prompts: BTreeMap<Topic, String>,
}

impl Default for TopicConfig {
    fn default() -> Self {
        TopicConfig {
            thresholds: BTreeMap::new(),
            default_threshold: DEFAULT_THRESHOLD,
            prompts: BTreeMap::new(),
        }
    }
}

impl TopicConfig {
    pub fn threshold(&self, topic: Topic) -> f64 {
        self.thresholds
            .get(&topic)
            .copied()
            .unwrap_or(self.default_threshold)
    }

    pub fn thresholds_array(&self) -> [f64; 8] {
        Topic::ALL.map(|t| self.threshold(t))
    }

    pub fn prompt(&self, topic: Topic) -> &str {
        self.prompts
            .get(&topic)
            .map_or(topic.as_str(), String::as_str)
    }

    pub fn validate(&self) -> Result<()> {
        for t in Topic::ALL {
            let v = self.threshold(t);
            // Values above 1 are allowed and simply never match.
            if !v.is_finite() || v < -1.0 {
                return Err(Error::Config(format!(
                    "threshold for {t} out of range: {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedReference {
    pub record_id: String,
    /// Scores in [`Topic::ALL`] order.
    pub scores: [f64; 8],
    pub labels: BTreeSet<Topic>,
}

/// Labels whose score reaches the threshold.
pub fn assign_labels(scores: &[f64; 8], thresholds: &[f64; 8]) -> BTreeSet<Topic> {
    Topic::ALL
        .into_iter()
        .zip(scores.iter().zip(thresholds))
        .filter(|(_, (s, t))| *s >= *t)
        .map(|(topic, _)| topic)
        .collect()
}

/// Topic vectors computed once per provider, reused across records.
pub struct Classifier<'a> {
    provider: &'a dyn EmbeddingProvider,
    topic_vectors: Vec<EmbeddingVector>,
    thresholds: [f64; 8],
    batch_size: usize,
}

impl<'a> Classifier<'a> {
    pub fn new(config: &TopicConfig, provider: &'a dyn EmbeddingProvider) -> Result<Self> {
        config.validate()?;
        let prompts: Vec<&str> = Topic::ALL.iter().map(|t| config.prompt(*t)).collect();
        let topic_vectors = provider.embed_batch(&prompts)?;
        if topic_vectors.len() != 8 {
            return Err(Error::Provider(format!(
                "expected 8 topic vectors, got {}",
                topic_vectors.len()
            )));
        }
        for (t, v) in Topic::ALL.iter().zip(&topic_vectors) {
            if v.is_zero() {
                return Err(Error::UndefinedMetric(format!(
                    "topic `{t}` embeds to the zero vector"
                )));
            }
        }
        Ok(Classifier {
            provider,
            topic_vectors,
            thresholds: config.thresholds_array(),
            batch_size: 64,
        })
    }

    fn score(&self, record: &ReferenceRecord, v: &EmbeddingVector) -> Result<ClassifiedReference> {
        let mut scores = [0.0; 8];
        // A context with no signal at all scores 0 everywhere rather than
        // failing the whole run.
        if !v.is_zero() {
            for (s, t) in scores.iter_mut().zip(&self.topic_vectors) {
                *s = cosine_similarity(v, t)?;
            }
        }
        Ok(ClassifiedReference {
            record_id: record.record_id(),
            labels: assign_labels(&scores, &self.thresholds),
            scores,
        })
    }

    pub fn classify(&self, record: &ReferenceRecord) -> Result<ClassifiedReference> {
        if record.context.trim().is_empty() {
            return Err(Error::Input(format!(
                "record {} has an empty context",
                record.record_id()
            )));
        }
        let v = embed(&record.context, self.provider)?;
        self.score(record, &v)
    }

    /// Classify many records, batching provider calls. Output order follows
    /// the input order.
    pub fn classify_all(&self, records: &[ReferenceRecord]) -> Result<Vec<ClassifiedReference>> {
        if let Some(r) = records.iter().find(|r| r.context.trim().is_empty()) {
            return Err(Error::Input(format!(
                "record {} has an empty context",
                r.record_id()
            )));
        }
        let batches = records
            .par_chunks(self.batch_size)
            .map(|chunk| {
                let texts: Vec<&str> = chunk.iter().map(|r| r.context.as_str()).collect();
                let vectors = self.provider.embed_batch(&texts)?;
                if vectors.len() != chunk.len() {
                    return Err(Error::Provider(format!(
                        "{} vectors returned for {} texts",
                        vectors.len(),
                        chunk.len()
                    )));
                }
                chunk
                    .iter()
                    .zip(&vectors)
                    .map(|(r, v)| self.score(r, v))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(batches.into_iter().flatten().collect())
    }
}

pub fn classify_reference(
    record: &ReferenceRecord,
    config: &TopicConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<ClassifiedReference> {
    Classifier::new(config, provider)?.classify(record)
}

/// One reference set per topic holding exactly the records labeled with it.
pub fn build_topic_subsets(
    classified: &[ClassifiedReference],
    base: &ReferenceSet,
) -> Result<BTreeMap<Topic, ReferenceSet>> {
    let labels: HashMap<&str, &BTreeSet<Topic>> = classified
        .iter()
        .map(|c| (c.record_id.as_str(), &c.labels))
        .collect();
    let mut subsets: BTreeMap<Topic, ReferenceSet> = Topic::ALL
        .into_iter()
        .map(|t| {
            (
                t,
                ReferenceSet {
                    variant: Variant::Topic(t),
                    records: Vec::new(),
                    author_universe: base.author_universe.clone(),
                },
            )
        })
        .collect();
    for r in &base.records {
        let id = r.record_id();
        let topics = labels
            .get(id.as_str())
            .ok_or_else(|| Error::Integrity(format!("record {id} was not classified")))?;
        for t in topics.iter() {
            if let Some(set) = subsets.get_mut(t) {
                set.records.push(r.clone());
            }
        }
    }
    Ok(subsets)
}

pub fn write_classified_csv(path: &Path, classified: &[ClassifiedReference]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["record_id"];
    header.extend(Topic::ALL.iter().map(|t| t.as_str()));
    header.push("labels");
    w.write_record(&header)?;
    for c in classified {
        let mut row = vec![c.record_id.clone()];
        row.extend(c.scores.iter().map(|s| format!("{s:.6}")));
        row.push(
            c.labels
                .iter()
                .map(|t| t.as_str())
                .collect::<Vec<_>>()
                .join(";"),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_classified_csv(path: &Path) -> Result<Vec<ClassifiedReference>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 10 {
            return Err(Error::Parse {
                source_name: path.display().to_string(),
                message: format!("expected 10 columns, found {}", row.len()),
            });
        }
        let mut scores = [0.0; 8];
        for (i, s) in scores.iter_mut().enumerate() {
            *s = row[i + 1].parse().map_err(|e| Error::Parse {
                source_name: path.display().to_string(),
                message: format!("bad score `{}`: {e}", &row[i + 1]),
            })?;
        }
        let labels = row[9]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(Topic::from_str)
            .collect::<Result<BTreeSet<_>>>()?;
        out.push(ClassifiedReference {
            record_id: row[0].to_string(),
            scores,
            labels,
        });
    }
    Ok(out)
}

//! Reference-set variants: expanded (everything matched), main (validated
//! authors only), filtered (main minus temporally impossible references)
//! and per-topic subsets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorRecord, AuthorTable};
use crate::error::{Error, Result};
use crate::matcher::ReferenceRecord;
use crate::topics::Topic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "label")]
pub enum Variant {
    Expanded,
    Main,
    Filtered,
    Topic(Topic),
}

impl Variant {
    /// Stable identifier used for file names and bundle dataset ids.
    pub fn dataset_id(&self) -> String {
        match self {
            Variant::Expanded => "expanded".into(),
            Variant::Main => "main".into(),
            Variant::Filtered => "filtered".into(),
            Variant::Topic(t) => format!("topic-{}", t.as_str()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Variant::Expanded => "Expanded".into(),
            Variant::Main => "Main".into(),
            Variant::Filtered => "Filtered".into(),
            Variant::Topic(t) => {
                let s = t.as_str();
                let mut c = s.chars();
                c.next()
                    .map(|f| f.to_uppercase().chain(c).collect())
                    .unwrap_or_default()
            }
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expanded" => Ok(Variant::Expanded),
            "main" => Ok(Variant::Main),
            "filtered" => Ok(Variant::Filtered),
            _ => s
                .strip_prefix("topic-")
                .and_then(|t| t.parse().ok())
                .map(Variant::Topic)
                .ok_or_else(|| Error::Input(format!("unknown dataset id `{s}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dataset_id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSet {
    pub variant: Variant,
    pub records: Vec<ReferenceRecord>,
    pub author_universe: BTreeSet<String>,
}

impl ReferenceSet {
    /// The expanded set: every scanned record, over every author in the table.
    pub fn expanded(records: Vec<ReferenceRecord>, authors: &AuthorTable) -> Result<Self> {
        let universe: BTreeSet<String> = authors
            .authors
            .iter()
            .map(|a| a.author_id.clone())
            .collect();
        let set = ReferenceSet {
            variant: Variant::Expanded,
            records,
            author_universe: universe,
        };
        set.check_consistent()?;
        Ok(set)
    }

    /// Every record endpoint must be inside the author universe.
    pub fn check_consistent(&self) -> Result<()> {
        for r in &self.records {
            for id in [&r.citing_author_id, &r.cited_author_id] {
                if !self.author_universe.contains(id) {
                    return Err(Error::Integrity(format!(
                        "record {} references author `{id}` outside the {} universe",
                        r.record_id(),
                        self.variant
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorTotals {
    pub incoming: u64,
    pub outgoing: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total_authors: usize,
    pub total_references: usize,
    pub per_author: BTreeMap<String, AuthorTotals>,
}

/// Keep only records whose citing and cited authors are both validated.
pub fn restrict_to_validated(
    refs: &ReferenceSet,
    validated: &BTreeSet<String>,
    authors: &AuthorTable,
) -> Result<ReferenceSet> {
    if validated.is_empty() {
        return Err(Error::Precondition("validated author list is empty".into()));
    }
    if let Some(missing) = validated.iter().find(|id| !authors.contains(id)) {
        return Err(Error::Integrity(format!(
            "validated author `{missing}` is not in the author table"
        )));
    }
    Ok(ReferenceSet {
        variant: Variant::Main,
        records: refs
            .records
            .iter()
            .filter(|r| {
                validated.contains(&r.citing_author_id) && validated.contains(&r.cited_author_id)
            })
            .cloned()
            .collect(),
        author_universe: refs
            .author_universe
            .intersection(validated)
            .cloned()
            .collect(),
    })
}

/// Drop references whose cited author was born in or after the year the
/// citing author died. Such mentions can only have been added by editors.
pub fn apply_temporal_filter(refs: &ReferenceSet, authors: &AuthorTable) -> Result<ReferenceSet> {
    let lookup: HashMap<&str, &AuthorRecord> = authors
        .authors
        .iter()
        .map(|a| (a.author_id.as_str(), a))
        .collect();
    let years = |id: &str| {
        lookup
            .get(id)
            .map(|a| (a.birth_year, a.death_year))
            .ok_or_else(|| Error::Integrity(format!("author `{id}` has no life years")))
    };
    let mut records = Vec::with_capacity(refs.records.len());
    for r in &refs.records {
        let (_, citing_death) = years(&r.citing_author_id)?;
        let (cited_birth, _) = years(&r.cited_author_id)?;
        if cited_birth < citing_death {
            records.push(r.clone());
        }
    }
    Ok(ReferenceSet {
        variant: Variant::Filtered,
        records,
        author_universe: refs.author_universe.clone(),
    })
}

pub fn summarize(refs: &ReferenceSet) -> DatasetSummary {
    let mut per_author: BTreeMap<String, AuthorTotals> = BTreeMap::new();
    for r in &refs.records {
        per_author
            .entry(r.citing_author_id.clone())
            .or_default()
            .outgoing += 1;
        per_author
            .entry(r.cited_author_id.clone())
            .or_default()
            .incoming += 1;
    }
    DatasetSummary {
        total_authors: per_author.len(),
        total_references: refs.records.len(),
        per_author,
    }
}

/// Newline-delimited author ids; blank lines and `#` comments are ignored.
pub fn read_validated_list(path: &Path) -> Result<BTreeSet<String>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// On-disk description of one materialized variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantManifest {
    pub variant: String,
    pub source_csv: String,
    pub filters_applied: Vec<String>,
    pub summary: ManifestSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub total_authors: usize,
    pub total_references: usize,
}

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_bytes, AuthorTable, CatalogEntry, MatchPolicy, TextRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DroppedText {
    pub source_id: u64,
    pub title: String,
    pub reason: String,
}

fn title_key(title: &str) -> String {
    title
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Build the cleaned text table.
///
/// `raw_bodies[i]` is the download result for `entries[i]`. Texts are
/// attributed to their first listed author. Duplicates (same catalog id,
/// or same author and title) keep the lowest catalog id.
pub fn build_text_table(
    entries: &[CatalogEntry],
    authors: &AuthorTable,
    raw_bodies: &[Result<Vec<u8>>],
) -> Result<(Vec<TextRecord>, Vec<DroppedText>)> {
    if entries.len() != raw_bodies.len() {
        return Err(Error::Input(format!(
            "{} catalog entries but {} bodies",
            entries.len(),
            raw_bodies.len()
        )));
    }
    let mut dropped = Vec::new();
    let drop = |e: &CatalogEntry, reason: String| DroppedText {
        source_id: e.source_id,
        title: e.title.clone(),
        reason,
    };

    let mut seen_ids = HashSet::new();
    let mut by_work: BTreeMap<(String, String), TextRecord> = BTreeMap::new();

    for (entry, raw) in entries.iter().zip(raw_bodies) {
        if !seen_ids.insert(entry.source_id) {
            // Same book listed under several categories.
            continue;
        }
        let Some(first) = entry.authors.first() else {
            dropped.push(drop(entry, "unknown author".into()));
            continue;
        };
        let Some(author_id) = authors.id_for(first) else {
            dropped.push(drop(
                entry,
                format!("author `{}` not in author table", first.name),
            ));
            continue;
        };
        if authors.get(&author_id).map(|a| a.policy) == Some(MatchPolicy::Excluded) {
            dropped.push(drop(entry, format!("author `{author_id}` is excluded")));
            continue;
        }
        let raw = match raw {
            Ok(bytes) => bytes,
            Err(e) => {
                dropped.push(drop(entry, format!("download failed: {e}")));
                continue;
            }
        };
        let body = match normalize_bytes(raw) {
            Ok(b) => b,
            Err(e) => {
                dropped.push(drop(entry, e.to_string()));
                continue;
            }
        };
        let raw_length = String::from_utf8_lossy(raw)
            .replace("\r\n", "\n")
            .chars()
            .count();
        let record = TextRecord {
            text_id: TextRecord::text_id_for(entry.source_id),
            source_id: entry.source_id,
            author_id: author_id.clone(),
            title: entry.title.clone(),
            category: entry.category,
            raw_length,
            body_length: body.chars().count(),
            body,
        };
        let key = (author_id, title_key(&entry.title));
        match by_work.get(&key) {
            Some(existing) if existing.source_id < record.source_id => {
                dropped.push(drop(
                    entry,
                    format!("duplicate of pg{}", existing.source_id),
                ));
            }
            Some(existing) => {
                let loser = existing.source_id;
                dropped.push(DroppedText {
                    source_id: loser,
                    title: existing.title.clone(),
                    reason: format!("duplicate of pg{}", record.source_id),
                });
                by_work.insert(key, record);
            }
            None => {
                by_work.insert(key, record);
            }
        }
    }

    let mut texts: Vec<TextRecord> = by_work.into_values().collect();
    texts.sort_by_key(|t| t.source_id);
    dropped.sort();
    Ok((texts, dropped))
}

pub fn write_texts_csv(path: &Path, texts: &[TextRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in texts {
        w.serialize(t)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_texts_csv(path: &Path) -> Result<Vec<TextRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<TextRecord>, _>>()?)
}

pub fn write_dropped_texts_csv(path: &Path, dropped: &[DroppedText]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for d in dropped {
        w.serialize(d)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

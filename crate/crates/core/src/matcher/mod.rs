//! Multi-pattern scanning of text bodies for author names.
//!
//! All non-excluded match names are compiled into one Aho-Corasick
//! automaton and every text is scanned once. Candidate hits are then
//! filtered by the word-boundary rule, self-reference exclusion and the
//! per-text cap.

mod context;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use aho_corasick::{AhoCorasick, MatchKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorRecord, MatchPolicy, TextRecord};
use crate::error::{Error, Result};

pub use context::extract_context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// The surface must be a whole word; `Kant's` does not match `Kant`.
    WordBoundary,
    /// Whole word, optionally followed by a possessive `'s`.
    #[default]
    WordBoundaryPlusPossessive,
}

/// How the reference cap is counted within one text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    /// At most `cap` records per (text, cited author).
    #[default]
    PerCitedAuthor,
    /// At most `cap` records per text in total.
    PerText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub window_size: usize,
    pub per_text_target_cap: usize,
    pub cap_mode: CapMode,
    pub boundary_rule: BoundaryRule,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            window_size: 150,
            per_text_target_cap: 250,
            cap_mode: CapMode::PerCitedAuthor,
            boundary_rule: BoundaryRule::WordBoundaryPlusPossessive,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.per_text_target_cap == 0 {
            return Err(Error::Precondition(
                "reference cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchPattern {
    pub author_id: String,
    pub surface: String,
    pub boundary_rule: BoundaryRule,
}

/// One in-text mention of `cited_author_id` inside a text by
/// `citing_author_id`. `offset` counts chars of the normalized body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub citing_author_id: String,
    pub cited_author_id: String,
    pub text_id: String,
    pub offset: usize,
    pub context: String,
}

impl ReferenceRecord {
    /// Unique key of a record within a scan.
    pub fn record_id(&self) -> String {
        format!("{}:{}:{}", self.text_id, self.offset, self.cited_author_id)
    }

    /// Canonical ordering key: text, then position, then cited author.
    pub fn sort_key(&self) -> (&str, usize, &str) {
        (&self.text_id, self.offset, &self.cited_author_id)
    }
}

/// Compiled, immutable matcher over one author table.
#[derive(Debug, Clone)]
pub struct MatcherAutomaton {
    automaton: AhoCorasick,
    patterns: Vec<MatchPattern>,
    known_authors: HashSet<String>,
}

impl MatcherAutomaton {
    pub fn patterns(&self) -> &[MatchPattern] {
        &self.patterns
    }

    pub fn knows_author(&self, author_id: &str) -> bool {
        self.known_authors.contains(author_id)
    }
}

/// Compile the match names of all non-excluded authors.
///
/// Fails if two authors share a surface; the caller has to disambiguate
/// (override or exclude) before scanning.
pub fn compile_patterns(authors: &[AuthorRecord], rule: BoundaryRule) -> Result<MatcherAutomaton> {
    let mut by_surface: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for a in authors.iter().filter(|a| a.policy != MatchPolicy::Excluded) {
        if a.match_name.is_empty() {
            return Err(Error::Input(format!(
                "author `{}` has an empty match name",
                a.author_id
            )));
        }
        by_surface
            .entry(&a.match_name)
            .or_default()
            .push(&a.author_id);
    }
    if by_surface.is_empty() {
        return Err(Error::Precondition(
            "no matchable authors after exclusions".into(),
        ));
    }
    let collisions: Vec<(String, Vec<String>)> = by_surface
        .iter()
        .filter(|(_, ids)| ids.len() > 1)
        .map(|(s, ids)| {
            let mut ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            ids.sort();
            (s.to_string(), ids)
        })
        .collect();
    if !collisions.is_empty() {
        return Err(Error::Collision(collisions));
    }

    let patterns: Vec<MatchPattern> = by_surface
        .into_iter()
        .map(|(surface, ids)| MatchPattern {
            author_id: ids[0].to_string(),
            surface: surface.to_string(),
            boundary_rule: rule,
        })
        .collect();
    let automaton = AhoCorasick::builder()
        .match_kind(MatchKind::Standard)
        .build(patterns.iter().map(|p| p.surface.as_str()))
        .map_err(|e| Error::Input(format!("could not build automaton: {e}")))?;
    Ok(MatcherAutomaton {
        automaton,
        patterns,
        known_authors: authors.iter().map(|a| a.author_id.clone()).collect(),
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Whether `body[start..end]` is a standalone occurrence under `rule`.
pub(crate) fn at_boundary(body: &str, start: usize, end: usize, rule: BoundaryRule) -> bool {
    if body[..start].chars().next_back().is_some_and(is_word_char) {
        return false;
    }
    let mut rest = body[end..].chars();
    match rest.next() {
        None => true,
        Some(c) if is_word_char(c) => false,
        Some(c) if is_apostrophe(c) => match rest.next() {
            None => true,
            Some(n) if !is_word_char(n) => true,
            Some('s') if rule == BoundaryRule::WordBoundaryPlusPossessive => {
                !rest.next().is_some_and(is_word_char)
            }
            Some(_) => false,
        },
        Some(_) => true,
    }
}

/// Scan one text, returning its references ordered by offset.
pub fn scan_text(
    text: &TextRecord,
    automaton: &MatcherAutomaton,
    config: &ScanConfig,
) -> Result<Vec<ReferenceRecord>> {
    config.validate()?;
    if !automaton.knows_author(&text.author_id) {
        return Err(Error::Integrity(format!(
            "text `{}` is attributed to unknown author `{}`",
            text.text_id, text.author_id
        )));
    }
    let body = text.body.as_str();

    let mut hits: Vec<(usize, usize, &MatchPattern)> = automaton
        .automaton
        .find_overlapping_iter(body)
        .map(|m| {
            (
                m.start(),
                m.end(),
                &automaton.patterns[m.pattern().as_usize()],
            )
        })
        .filter(|(_, _, p)| p.author_id != text.author_id)
        .filter(|&(s, e, p)| at_boundary(body, s, e, p.boundary_rule))
        .collect();
    hits.sort_by(|a, b| (a.0, &a.2.author_id).cmp(&(b.0, &b.2.author_id)));

    let cap = config.per_text_target_cap;
    let mut per_cited: HashMap<&str, usize> = HashMap::new();
    let mut total = 0usize;
    hits.retain(|(_, _, p)| {
        let used = match config.cap_mode {
            CapMode::PerCitedAuthor => per_cited.entry(p.author_id.as_str()).or_insert(0),
            CapMode::PerText => &mut total,
        };
        if *used < cap {
            *used += 1;
            true
        } else {
            false
        }
    });

    // Hits are sorted by byte start, so char offsets can be counted in one sweep.
    let mut records = Vec::with_capacity(hits.len());
    let mut chars_before = 0usize;
    let mut byte_pos = 0usize;
    for (start, end, pattern) in hits {
        chars_before += body[byte_pos..start].chars().count();
        byte_pos = start;
        records.push(ReferenceRecord {
            citing_author_id: text.author_id.clone(),
            cited_author_id: pattern.author_id.clone(),
            text_id: text.text_id.clone(),
            offset: chars_before,
            context: context::context_bytes(body, start, end, config.window_size).to_owned(),
        });
    }
    Ok(records)
}

/// Scan every text in parallel. Output is ordered by (text_id, offset,
/// cited author) regardless of scheduling.
pub fn scan_corpus(
    texts: &[TextRecord],
    automaton: &MatcherAutomaton,
    config: &ScanConfig,
) -> Result<Vec<ReferenceRecord>> {
    let per_text = texts
        .par_iter()
        .map(|t| scan_text(t, automaton, config))
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<ReferenceRecord> = per_text.into_iter().flatten().collect();
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(records)
}

pub fn write_references_csv(path: &Path, records: &[ReferenceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_references_csv(path: &Path) -> Result<Vec<ReferenceRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<Result<Vec<ReferenceRecord>, _>>()?)
}

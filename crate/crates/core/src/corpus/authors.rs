use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AuthorRecord, CatalogAuthor, CatalogEntry, MatchPolicy};
use crate::error::{Error, Result};

/// Name-handling lists applied while building the author table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NamePolicy {
    /// Match names that would produce too many false matches; never scanned.
    pub excluded: Vec<String>,
    /// Match names kept but flagged for later disambiguation.
    pub ambiguous: Vec<String>,
    /// Display names of authors known by a single (possibly multi-word)
    /// name; their full name is the match surface.
    pub single_name: Vec<String>,
    /// author_id -> explicit match surface.
    pub overrides: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DroppedAuthor {
    pub display_name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuthorTable {
    /// Sorted by `author_id`.
    pub authors: Vec<AuthorRecord>,
    pub dropped: Vec<DroppedAuthor>,
}

impl AuthorTable {
    pub fn get(&self, author_id: &str) -> Option<&AuthorRecord> {
        self.authors
            .binary_search_by(|a| a.author_id.as_str().cmp(author_id))
            .ok()
            .map(|i| &self.authors[i])
    }

    pub fn contains(&self, author_id: &str) -> bool {
        self.get(author_id).is_some()
    }

    pub fn from_records(mut authors: Vec<AuthorRecord>) -> Result<Self> {
        authors.sort();
        for pair in authors.windows(2) {
            if pair[0].author_id == pair[1].author_id {
                return Err(Error::Integrity(format!(
                    "duplicate author_id `{}` in author table",
                    pair[0].author_id
                )));
            }
        }
        Ok(AuthorTable {
            authors,
            dropped: Vec::new(),
        })
    }

    /// Resolve the author id a catalog author maps to, if it survived.
    pub fn id_for(&self, author: &CatalogAuthor) -> Option<String> {
        let birth = author.birth_year?;
        let id = author_id(&display_name(&author.name), birth);
        self.contains(&id).then_some(id)
    }
}

/// Turn a catalog name like `"Kant, Immanuel"` into `"Immanuel Kant"`.
/// Parenthetical expansions (`"Wells, H. G. (Herbert George)"`) are dropped.
pub fn display_name(catalog_name: &str) -> String {
    let mut cleaned = String::with_capacity(catalog_name.len());
    let mut depth = 0usize;
    for c in catalog_name.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => cleaned.push(c),
            _ => {}
        }
    }
    let parts: Vec<&str> = cleaned
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    let joined = match parts.as_slice() {
        [] => String::new(),
        [single] => single.to_string(),
        [surname, given, ..] => format!("{given} {surname}"),
    };
    joined.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) fn author_id(display_name: &str, birth_year: i32) -> String {
    let mut slug = String::new();
    let mut dash = false;
    for c in display_name.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            slug.push(c);
            dash = false;
        } else if !dash && !slug.is_empty() {
            slug.push('-');
            dash = true;
        }
    }
    while slug.ends_with('-') {
        slug.pop();
    }
    if birth_year < 0 {
        format!("{slug}-{}bce", -(birth_year as i64))
    } else {
        format!("{slug}-{birth_year}")
    }
}

/// Build one record per distinct author across all entries.
///
/// Authors without both life years are dropped and reported. The match name
/// is the final token of the display name, the full display name for authors
/// listed in `policy.single_name`, or an explicit override.
pub fn build_author_table(entries: &[CatalogEntry], policy: &NamePolicy) -> AuthorTable {
    let excluded: BTreeSet<&str> = policy.excluded.iter().map(String::as_str).collect();
    let ambiguous: BTreeSet<&str> = policy.ambiguous.iter().map(String::as_str).collect();
    let single: BTreeSet<&str> = policy.single_name.iter().map(String::as_str).collect();

    let mut records: BTreeMap<String, AuthorRecord> = BTreeMap::new();
    let mut dropped: BTreeSet<DroppedAuthor> = BTreeSet::new();

    for author in entries.iter().flat_map(|e| e.authors.iter()) {
        let name = display_name(&author.name);
        if name.is_empty() {
            dropped.insert(DroppedAuthor {
                display_name: author.name.clone(),
                reason: "empty name".into(),
            });
            continue;
        }
        let (birth, death) = match (author.birth_year, author.death_year) {
            (Some(b), Some(d)) => (b, d),
            _ => {
                dropped.insert(DroppedAuthor {
                    display_name: name,
                    reason: "missing birth or death year".into(),
                });
                continue;
            }
        };
        if birth >= death {
            dropped.insert(DroppedAuthor {
                display_name: name,
                reason: format!("inconsistent life years {birth}..{death}"),
            });
            continue;
        }

        let id = author_id(&name, birth);
        let match_name = policy.overrides.get(&id).cloned().unwrap_or_else(|| {
            if single.contains(name.as_str()) {
                name.clone()
            } else {
                name.split_whitespace().last().unwrap_or(&name).to_string()
            }
        });
        let match_policy = if excluded.contains(match_name.as_str()) {
            MatchPolicy::Excluded
        } else if ambiguous.contains(match_name.as_str()) {
            MatchPolicy::Ambiguous
        } else {
            MatchPolicy::Normal
        };

        let candidate = AuthorRecord {
            author_id: id.clone(),
            display_name: name,
            match_name,
            birth_year: birth,
            death_year: death,
            policy: match_policy,
        };
        // Conflicting spellings or death years resolve to the smallest value.
        match records.entry(id) {
            Entry::Vacant(v) => {
                v.insert(candidate);
            }
            Entry::Occupied(mut o) => {
                let current = o.get_mut();
                let death = current.death_year.min(candidate.death_year);
                if candidate < *current {
                    *current = candidate;
                }
                current.death_year = death;
            }
        }
    }

    AuthorTable {
        authors: records.into_values().collect(),
        dropped: dropped.into_iter().collect(),
    }
}

pub fn write_authors_csv(path: &Path, authors: &[AuthorRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for a in authors {
        w.serialize(a)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_authors_csv(path: &Path) -> Result<AuthorTable> {
    let mut r = csv::Reader::from_path(path)?;
    let records = r.deserialize().collect::<Result<Vec<AuthorRecord>, _>>()?;
    AuthorTable::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Category;

    fn entry(id: u64, authors: &[(&str, Option<i32>, Option<i32>)]) -> CatalogEntry {
        CatalogEntry {
            source_id: id,
            title: format!("Book {id}"),
            authors: authors
                .iter()
                .map(|(n, b, d)| CatalogAuthor {
                    name: n.to_string(),
                    birth_year: *b,
                    death_year: *d,
                })
                .collect(),
            category: Category::Philosophy,
            format_urls: BTreeMap::new(),
        }
    }

    #[test]
    fn display_names_are_reordered() {
        assert_eq!(display_name("Kant, Immanuel"), "Immanuel Kant");
        assert_eq!(display_name("Mill, John Stuart"), "John Stuart Mill");
        assert_eq!(display_name("Plato"), "Plato");
        assert_eq!(display_name("Wells, H. G. (Herbert George)"), "H. G. Wells");
    }

    #[test]
    fn author_ids_encode_bce() {
        assert_eq!(author_id("Plato", -428), "plato-428bce");
        assert_eq!(author_id("René Descartes", 1596), "rené-descartes-1596");
    }

    #[test]
    fn drops_author_missing_a_year() {
        let table = build_author_table(
            &[entry(1, &[("X, Y", Some(1800), None)])],
            &NamePolicy::default(),
        );
        assert!(table.authors.is_empty());
        assert_eq!(table.dropped.len(), 1);
        assert_eq!(table.dropped[0].display_name, "Y X");
    }

    #[test]
    fn one_record_per_author() {
        let kant = ("Kant, Immanuel", Some(1724), Some(1804));
        let entries: Vec<_> = (1..=4).map(|i| entry(i, &[kant])).collect();
        let table = build_author_table(&entries, &NamePolicy::default());
        assert_eq!(table.authors.len(), 1);
        let a = &table.authors[0];
        assert_eq!(a.match_name, "Kant");
        assert_eq!(a.author_id, "immanuel-kant-1724");
        assert_eq!(a.policy, MatchPolicy::Normal);
    }

    #[test]
    fn applies_exclusion_and_ambiguity() {
        let entries = [
            entry(1, &[("Bell, Clive", Some(1881), Some(1964))]),
            entry(2, &[("Smith, Adam", Some(1723), Some(1790))]),
        ];
        let policy = NamePolicy {
            excluded: vec!["Bell".into()],
            ambiguous: vec!["Smith".into()],
            ..Default::default()
        };
        let table = build_author_table(&entries, &policy);
        let by_name = |m: &str| table.authors.iter().find(|a| a.match_name == m).unwrap();
        assert_eq!(by_name("Bell").policy, MatchPolicy::Excluded);
        assert_eq!(by_name("Smith").policy, MatchPolicy::Ambiguous);
    }

    #[test]
    fn single_names_and_overrides() {
        let entries = [
            entry(1, &[("Marcus Aurelius", Some(121), Some(180))]),
            entry(2, &[("Alighieri, Dante", Some(1265), Some(1321))]),
        ];
        let policy = NamePolicy {
            single_name: vec!["Marcus Aurelius".into()],
            overrides: [("dante-alighieri-1265".to_string(), "Dante".to_string())].into(),
            ..Default::default()
        };
        let table = build_author_table(&entries, &policy);
        let names: Vec<_> = table
            .authors
            .iter()
            .map(|a| a.match_name.as_str())
            .collect();
        assert_eq!(names, ["Dante", "Marcus Aurelius"]);
    }

    #[test]
    fn order_independent() {
        let entries = vec![
            entry(1, &[("Kant, Immanuel", Some(1724), Some(1804))]),
            entry(
                2,
                &[
                    ("Hume, David", Some(1711), Some(1776)),
                    ("Anon", None, None),
                ],
            ),
            entry(3, &[("Plato", Some(-428), Some(-348))]),
        ];
        let mut reversed = entries.clone();
        reversed.reverse();
        let a = build_author_table(&entries, &NamePolicy::default());
        let b = build_author_table(&reversed, &NamePolicy::default());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("authors.csv");
        let table = build_author_table(
            &[entry(
                1,
                &[
                    ("Plato", Some(-428), Some(-348)),
                    ("Hume, David", Some(1711), Some(1776)),
                ],
            )],
            &NamePolicy::default(),
        );
        write_authors_csv(&path, &table.authors).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(
            header.starts_with("author_id,display_name,match_name,birth_year,death_year,policy\n")
        );
        assert_eq!(read_authors_csv(&path).unwrap().authors, table.authors);
    }
}

//! Catalog acquisition and the cleaned author/text tables.
//!
//! The catalog is a Gutendex-compatible JSON API (or a local directory with
//! the same page layout). Entries are turned into an [`AuthorTable`] and a list
//! of [`TextRecord`]s; every filtering decision is reported rather than
//! silently discarded.

mod authors;
mod catalog;
mod normalize;
mod texts;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub(crate) use authors::author_id;
pub use authors::{
    build_author_table, display_name, read_authors_csv, write_authors_csv, AuthorTable,
    DroppedAuthor, NamePolicy,
};
pub use catalog::{
    download_texts, fetch_catalog, parse_catalog_page, preferred_text_url, CatalogPage,
    CatalogSource, Fetcher, FsFetcher, HttpFetcher, RetryPolicy,
};
pub use normalize::{decode_text, normalize_bytes, normalize_text};
pub use texts::{
    build_text_table, read_texts_csv, write_dropped_texts_csv, write_texts_csv, DroppedText,
};

/// Catalog subject categories the fetcher understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Philosophy,
    Literature,
    Science,
    Politics,
    Religion,
    Physics,
    Mathematics,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Philosophy,
        Category::Literature,
        Category::Science,
        Category::Politics,
        Category::Religion,
        Category::Physics,
        Category::Mathematics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Philosophy => "philosophy",
            Category::Literature => "literature",
            Category::Science => "science",
            Category::Politics => "politics",
            Category::Religion => "religion",
            Category::Physics => "physics",
            Category::Mathematics => "mathematics",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Input(format!("unknown category `{s}`")))
    }
}

/// An author as listed on a catalog entry. Years are CE-signed (negative = BCE).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogAuthor {
    pub name: String,
    pub birth_year: Option<i32>,
    pub death_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub source_id: u64,
    pub title: String,
    pub authors: Vec<CatalogAuthor>,
    pub category: Category,
    /// mime type -> URL
    pub format_urls: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchPolicy {
    Normal,
    Excluded,
    Ambiguous,
}

impl fmt::Display for MatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchPolicy::Normal => "normal",
            MatchPolicy::Excluded => "excluded",
            MatchPolicy::Ambiguous => "ambiguous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub display_name: String,
    /// Surface searched for in texts: the surname, or the full name for
    /// authors known by a single name.
    pub match_name: String,
    pub birth_year: i32,
    pub death_year: i32,
    pub policy: MatchPolicy,
}

/// One cleaned text body. `body` is not persisted in the text manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRecord {
    pub text_id: String,
    pub source_id: u64,
    pub author_id: String,
    pub title: String,
    pub category: Category,
    pub raw_length: usize,
    pub body_length: usize,
    #[serde(skip)]
    pub body: String,
}

impl TextRecord {
    pub fn text_id_for(source_id: u64) -> String {
        format!("pg{source_id}")
    }
}

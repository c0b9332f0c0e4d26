//! Deterministic synthetic corpus laid out like a catalog snapshot.
//!
//! Forty authors, fifty kept texts (about 200 KB), planted self-references,
//! boundary traps (`Kantian`, `kant`, `KANT`, `preKant`), possessives, CRLF
//! files, boilerplate outside the start/end markers, one author without life
//! years, one duplicate upload, and one text naming the same author 300 times.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::{
    author_id, build_author_table, build_text_table, display_name, AuthorTable, CatalogAuthor,
    CatalogEntry, Category, NamePolicy, TextRecord,
};
use crate::error::{Error, Result};

/// Catalog-style name, birth year, death year.
pub const AUTHORS: [(&str, i32, i32); 40] = [
    ("Plato", -428, -348),
    ("Aristotle", -384, -322),
    ("Euclid", -325, -265),
    ("Epictetus", 50, 135),
    ("Machiavelli, Niccolò", 1469, 1527),
    ("Montaigne, Michel de", 1533, 1592),
    ("Bacon, Francis", 1561, 1626),
    ("Galilei, Galileo", 1564, 1642),
    ("Hobbes, Thomas", 1588, 1679),
    ("Descartes, René", 1596, 1650),
    ("Milton, John", 1608, 1674),
    ("Pascal, Blaise", 1623, 1662),
    ("Spinoza, Benedictus de", 1632, 1677),
    ("Locke, John", 1632, 1704),
    ("Newton, Isaac", 1642, 1727),
    ("Leibniz, Gottfried Wilhelm", 1646, 1716),
    ("Berkeley, George", 1685, 1753),
    ("Voltaire", 1694, 1778),
    ("Hume, David", 1711, 1776),
    ("Rousseau, Jean-Jacques", 1712, 1778),
    ("Smith, Adam", 1723, 1790),
    ("Kant, Immanuel", 1724, 1804),
    ("Burke, Edmund", 1729, 1797),
    ("Paine, Thomas", 1737, 1809),
    ("Bentham, Jeremy", 1748, 1832),
    ("Hegel, Georg Wilhelm Friedrich", 1770, 1831),
    ("Schopenhauer, Arthur", 1788, 1860),
    ("Carlyle, Thomas", 1795, 1881),
    ("Comte, Auguste", 1798, 1857),
    ("Emerson, Ralph Waldo", 1803, 1882),
    ("Mill, John Stuart", 1806, 1873),
    ("Darwin, Charles", 1809, 1882),
    ("Kierkegaard, Søren", 1813, 1855),
    ("Thoreau, Henry David", 1817, 1862),
    ("Marx, Karl", 1818, 1883),
    ("Spencer, Herbert", 1820, 1903),
    ("James, William", 1842, 1910),
    ("Nietzsche, Friedrich Wilhelm", 1844, 1900),
    ("Dewey, John", 1859, 1952),
    ("Russell, Bertrand", 1872, 1970),
];

/// Authors left off the validated list.
const UNVALIDATED: [&str; 6] = ["Smith", "James", "Bacon", "Comte", "Carlyle", "Epictetus"];

pub const HEAVY_MENTIONS: usize = 300;
const HEAVY_CITING: usize = 14; // Newton
const HEAVY_CITED: usize = 1; // Aristotle
const PAGE_SIZE: usize = 30;
pub const DEFAULT_SEED: u64 = 20_260_101;

const TOPIC_TEMPLATES: [&str; 8] = [
    "{N} held that virtue and duty are the measure of a moral life.",
    "According to {N}, the laws of the state exist to secure liberty and property.",
    "{N} wrote that faith in God and the church answers the problem of sin.",
    "The geometry of {N} begins from the point, the line and the circle.",
    "{N} made experiments on motion and force in the natural world.",
    "For {N}, beauty in poetry and music is a matter of taste.",
    "{N} treated substance and existence as the first questions of being.",
    "{N} asked whether knowledge rests on experience or on reason.",
];

const PLAIN_TEMPLATES: [&str; 4] = [
    "It was {N} who first put the matter plainly.",
    "The reader may compare the letters of {N} on this point.",
    "{N} returned to the question late in life.",
    "A later editor added a note on {N} here.",
];

const FILLER: [&str; 8] = [
    "The chapter continues with a long digression on the customs of the age.",
    "Many readers have found this passage obscure.",
    "It was printed again in a later edition with notes.",
    "The letter was never answered.",
    "Here the author pauses to summarize the argument so far.",
    "Some pages of the manuscript were lost.",
    "The naïve reader will find little of interest in what follows.",
    "Opinions on the café society of the capital differ widely.",
];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub entries: Vec<CatalogEntry>,
    /// Raw file contents by source id, markers and boilerplate included.
    pub files: BTreeMap<u64, String>,
    pub validated: BTreeSet<String>,
    pub heavy_source_id: u64,
    pub heavy_cited_id: String,
}

fn surname(catalog_name: &str) -> &str {
    catalog_name
        .split(',')
        .next()
        .unwrap_or(catalog_name)
        .trim()
}

fn id_of(catalog_name: &str, birth: i32) -> String {
    author_id(&display_name(catalog_name), birth)
}

struct Writer<'a> {
    rng: &'a mut ChaCha8Rng,
    out: String,
    sentences_in_paragraph: usize,
}

impl Writer<'_> {
    fn push(&mut self, sentence: &str) {
        if !self.out.is_empty() {
            self.out.push(' ');
        }
        self.out.push_str(sentence);
        self.sentences_in_paragraph += 1;
        if self.sentences_in_paragraph >= self.rng.random_range(4..9) {
            self.out.push_str("\n\n");
            self.sentences_in_paragraph = 0;
        }
    }
}

/// A mention surface for `name`: plain, or a matching possessive.
fn mention(rng: &mut ChaCha8Rng, name: &str) -> String {
    match rng.random_range(0..10) {
        0 => format!("{name}'s"),
        1 => format!("{name}\u{2019}s"),
        _ => name.to_string(),
    }
}

/// A phrase containing `name` only inside a larger word or in the wrong case.
fn trap(rng: &mut ChaCha8Rng, name: &str) -> String {
    let word = match rng.random_range(0..6) {
        0 => format!("{name}ian"),
        1 => format!("{name}ism"),
        2 => name.to_lowercase(),
        3 => name.to_uppercase(),
        4 => format!("pre{name}"),
        _ => format!("{name}_notes"),
    };
    format!("The {word} reading of the passage has few defenders.")
}

fn pick_cited(rng: &mut ChaCha8Rng) -> usize {
    // Plato and Aristotle are cited far more often than anyone else.
    if rng.random_bool(0.25) {
        rng.random_range(0..2)
    } else {
        rng.random_range(0..AUTHORS.len())
    }
}

fn body(rng: &mut ChaCha8Rng, own: usize, target_len: usize) -> String {
    let mut w = Writer {
        rng,
        out: String::new(),
        sentences_in_paragraph: 0,
    };
    while w.out.len() < target_len {
        let roll = w.rng.random_range(0..20);
        let sentence = match roll {
            0..=7 => {
                let cited = if w.rng.random_bool(0.08) {
                    own
                } else {
                    pick_cited(w.rng)
                };
                let t = TOPIC_TEMPLATES[w.rng.random_range(0..TOPIC_TEMPLATES.len())];
                t.replace("{N}", &mention(w.rng, surname(AUTHORS[cited].0)))
            }
            8..=10 => {
                let cited = pick_cited(w.rng);
                let t = PLAIN_TEMPLATES[w.rng.random_range(0..PLAIN_TEMPLATES.len())];
                t.replace("{N}", &mention(w.rng, surname(AUTHORS[cited].0)))
            }
            11..=12 => {
                let cited = pick_cited(w.rng);
                trap(w.rng, surname(AUTHORS[cited].0))
            }
            _ => FILLER[w.rng.random_range(0..FILLER.len())].to_string(),
        };
        w.push(&sentence);
    }
    w.out.trim_end().to_string()
}

fn heavy_body(rng: &mut ChaCha8Rng) -> String {
    let name = surname(AUTHORS[HEAVY_CITED].0);
    let mut w = Writer {
        rng,
        out: String::new(),
        sentences_in_paragraph: 0,
    };
    for i in 0..HEAVY_MENTIONS {
        let t = PLAIN_TEMPLATES[i % PLAIN_TEMPLATES.len()];
        w.push(&t.replace("{N}", name));
        if w.rng.random_bool(0.3) {
            let f = FILLER[w.rng.random_range(0..FILLER.len())];
            w.push(f);
        }
    }
    w.out.trim_end().to_string()
}

fn wrap(title: &str, body: &str, crlf: bool) -> String {
    let upper = title.to_uppercase();
    // The header names an author so that marker stripping is exercised.
    let text = format!(
        "The Project Gutenberg eBook of {title}\n\nTranscribed from the Hume Society edition.\n\n\
         *** START OF THE PROJECT GUTENBERG EBOOK {upper} ***\n\n{body}\n\n\
         *** END OF THE PROJECT GUTENBERG EBOOK {upper} ***\n\nUpdated editions will replace the previous one. \
         Thanks to Kant Street volunteers.\n"
    );
    if crlf {
        text.replace('\n', "\r\n")
    } else {
        text
    }
}

fn entry(source_id: u64, title: &str, author: CatalogAuthor) -> CatalogEntry {
    CatalogEntry {
        source_id,
        title: title.to_string(),
        authors: vec![author],
        category: Category::Philosophy,
        format_urls: BTreeMap::new(),
    }
}

fn catalog_author(i: usize) -> CatalogAuthor {
    let (name, b, d) = AUTHORS[i];
    CatalogAuthor {
        name: name.to_string(),
        birth_year: Some(b),
        death_year: Some(d),
    }
}

impl Fixture {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut files = BTreeMap::new();
        let mut heavy_source_id = 0;

        // One text per author, plus a second for the first ten.
        let mut plan: Vec<(usize, String)> = (0..AUTHORS.len())
            .map(|i| (i, format!("Discourses of {}", surname(AUTHORS[i].0))))
            .collect();
        plan.extend((0..10).map(|i| (i, format!("Letters of {}", surname(AUTHORS[i].0)))));

        for (k, (author, title)) in plan.iter().enumerate() {
            let source_id = 1000 + 7 * k as u64;
            let text = if *author == HEAVY_CITING && title.starts_with("Discourses") {
                heavy_source_id = source_id;
                heavy_body(&mut rng)
            } else {
                let target = rng.random_range(3000..4400);
                body(&mut rng, *author, target)
            };
            files.insert(source_id, wrap(title, &text, k % 7 == 3));
            entries.push(entry(source_id, title, catalog_author(*author)));
        }

        // A re-upload of an existing title under a higher id: dropped as duplicate.
        let dup_id = 1000 + 7 * plan.len() as u64;
        let (dup_author, dup_title) = &plan[5];
        files.insert(dup_id, files[&(1000 + 7 * 5)].clone());
        entries.push(entry(dup_id, dup_title, catalog_author(*dup_author)));

        // An author without life years: dropped from the table, text dropped.
        let anon_id = dup_id + 7;
        let anon = CatalogAuthor {
            name: "Anonymous".into(),
            birth_year: None,
            death_year: None,
        };
        let anon_body = body(&mut rng, 0, 1500);
        files.insert(anon_id, wrap("Sayings of the Wise", &anon_body, false));
        entries.push(entry(anon_id, "Sayings of the Wise", anon));

        let validated = AUTHORS
            .iter()
            .filter(|(n, _, _)| !UNVALIDATED.contains(&surname(n)))
            .map(|(n, b, _)| id_of(n, *b))
            .collect();

        Fixture {
            entries,
            files,
            validated,
            heavy_source_id,
            heavy_cited_id: id_of(AUTHORS[HEAVY_CITED].0, AUTHORS[HEAVY_CITED].1),
        }
    }

    pub fn total_bytes(&self) -> usize {
        self.files.values().map(String::len).sum()
    }

    /// Raw bytes per entry, in entry order.
    pub fn raw_texts(&self) -> Vec<Result<Vec<u8>>> {
        self.entries
            .iter()
            .map(|e| Ok(self.files[&e.source_id].clone().into_bytes()))
            .collect()
    }

    pub fn author_table(&self) -> AuthorTable {
        build_author_table(&self.entries, &NamePolicy::default())
    }

    /// Cleaned text table, built by the same code the fetch stage uses.
    pub fn text_table(&self) -> Result<Vec<TextRecord>> {
        Ok(build_text_table(&self.entries, &self.author_table(), &self.raw_texts())?.0)
    }

    /// Catalog pages as JSON. `page_url(n)` names page `n` (1-based) for the
    /// `next` links; text URLs are `{text_base}{source_id}.txt`.
    pub fn catalog_pages(
        &self,
        text_base: &str,
        page_url: &dyn Fn(usize) -> String,
    ) -> Vec<String> {
        let chunks: Vec<&[CatalogEntry]> = self.entries.chunks(PAGE_SIZE).collect();
        chunks
            .iter()
            .enumerate()
            .map(|(i, chunk)| {
                let results: Vec<_> = chunk
                    .iter()
                    .map(|e| {
                        json!({
                            "id": e.source_id,
                            "title": e.title,
                            "authors": e.authors.iter().map(|a| json!({
                                "name": a.name,
                                "birth_year": a.birth_year,
                                "death_year": a.death_year,
                            })).collect::<Vec<_>>(),
                            "formats": {
                                "text/plain; charset=utf-8": format!("{text_base}{}.txt", e.source_id),
                                "text/html": format!("{text_base}{}.html", e.source_id),
                            },
                        })
                    })
                    .collect();
                let next = (i + 1 < chunks.len()).then(|| page_url(i + 2));
                let page = json!({
                    "count": self.entries.len(),
                    "next": next,
                    "previous": null,
                    "results": results,
                });
                serde_json::to_string_pretty(&page).expect("fixture page serializes")
            })
            .collect()
    }

    /// Write `catalog/`, `validated.txt` and `refnet.toml` under `dir` and
    /// return the config path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let catalog = dir.join("catalog");
        let texts = catalog.join("texts");
        std::fs::create_dir_all(&texts).map_err(|e| Error::io(&texts, e))?;
        let pages = self.catalog_pages("texts/", &|n| format!("philosophy-{n}.json"));
        for (i, page) in pages.iter().enumerate() {
            let name = if i == 0 {
                "philosophy.json".to_string()
            } else {
                format!("philosophy-{}.json", i + 1)
            };
            let p = catalog.join(name);
            std::fs::write(&p, page).map_err(|e| Error::io(&p, e))?;
        }
        for (id, content) in &self.files {
            let p = texts.join(format!("{id}.txt"));
            std::fs::write(&p, content).map_err(|e| Error::io(&p, e))?;
        }
        let validated = dir.join("validated.txt");
        let mut list = String::from("# authors accepted after review\n");
        for id in &self.validated {
            list.push_str(id);
            list.push('\n');
        }
        std::fs::write(&validated, list).map_err(|e| Error::io(&validated, e))?;
        let config = dir.join("refnet.toml");
        std::fs::write(&config, self.config_toml()).map_err(|e| Error::io(&config, e))?;
        Ok(config)
    }

    pub fn config_toml(&self) -> String {
        let plato = id_of(AUTHORS[0].0, AUTHORS[0].1);
        let aristotle = id_of(AUTHORS[1].0, AUTHORS[1].1);
        format!(
            r#"output_dir = "out"
snapshot_date = "2026-01-01"

[catalog]
base_url = "catalog"
categories = ["philosophy"]
parallelism = 4
min_request_interval_ms = 0

[datasets]
validated_authors = "validated.txt"

[analysis]
seed = 42

[analysis.share_sets]
plato-aristotle = ["{plato}", "{aristotle}"]
"#
        )
    }
}

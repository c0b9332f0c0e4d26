use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Deserialize;

use super::{CatalogAuthor, CatalogEntry, Category};
use crate::error::{Error, Result};

/// Mime types accepted for text bodies, most preferred first.
const TEXT_MIME_PREFERENCE: [&str; 3] = [
    "text/plain; charset=utf-8",
    "text/plain; charset=us-ascii",
    "text/plain",
];

/// Anything that can return the bytes behind a catalog or text URL.
pub trait Fetcher: Send + Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32 << attempt.min(16);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Spaces out requests so at most one starts per `interval`.
struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

enum Attempt {
    Done(Vec<u8>),
    Transient(String),
    Fatal(String),
}

/// Blocking HTTP fetcher with bounded exponential backoff on transient
/// failures (connection errors, timeouts, 429 and 5xx).
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    limiter: RateLimiter,
}

impl HttpFetcher {
    pub fn new(retry: RetryPolicy, min_request_interval: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("refnet/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Fetch {
                context: "http client".into(),
                message: e.to_string(),
            })?;
        Ok(HttpFetcher {
            client,
            retry,
            limiter: RateLimiter {
                interval: min_request_interval,
                next: Mutex::new(None),
            },
        })
    }

    fn attempt(&self, url: &str) -> Attempt {
        self.limiter.acquire();
        let resp = match self.client.get(url).send() {
            Ok(r) => r,
            Err(e) if e.is_builder() => return Attempt::Fatal(e.to_string()),
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        let status = resp.status();
        if status.is_success() {
            return match resp.bytes() {
                Ok(b) => Attempt::Done(b.to_vec()),
                Err(e) => Attempt::Transient(e.to_string()),
            };
        }
        let msg = format!("HTTP {status}");
        if status.is_server_error() || status.as_u16() == 429 {
            Attempt::Transient(msg)
        } else {
            Attempt::Fatal(msg)
        }
    }
}

impl Fetcher for HttpFetcher {
    fn get(&self, url: &str) -> Result<Vec<u8>> {
        let mut last = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                let delay = self.retry.delay(attempt - 1);
                debug!("retrying {url} in {delay:?} ({last})");
                std::thread::sleep(delay);
            }
            match self.attempt(url) {
                Attempt::Done(bytes) => return Ok(bytes),
                Attempt::Transient(msg) => last = msg,
                Attempt::Fatal(msg) => {
                    return Err(Error::Fetch {
                        context: url.to_string(),
                        message: msg,
                    })
                }
            }
        }
        Err(Error::Fetch {
            context: url.to_string(),
            message: format!("giving up after {} attempts: {last}", self.retry.attempts),
        })
    }
}

/// Reads URLs as paths relative to a root directory. Used for offline
/// snapshots and fixtures laid out like the catalog API.
pub struct FsFetcher {
    root: PathBuf,
}

impl FsFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsFetcher { root: root.into() }
    }

    fn resolve(&self, url: &str) -> PathBuf {
        let path = url.strip_prefix("file://").unwrap_or(url);
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

impl Fetcher for FsFetcher {
    fn get(&self, url: &str) -> Result<Vec<u8>> {
        let path = self.resolve(url);
        std::fs::read(&path).map_err(|e| Error::Fetch {
            context: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// A catalog endpoint: either a Gutendex-style HTTP API or a directory
/// holding `<category>.json` pages.
pub struct CatalogSource {
    base: String,
    is_http: bool,
    fetcher: Box<dyn Fetcher>,
}

impl CatalogSource {
    pub fn new(base: &str, fetcher: Box<dyn Fetcher>) -> Self {
        CatalogSource {
            base: base.trim_end_matches('/').to_string(),
            is_http: base.starts_with("http://") || base.starts_with("https://"),
            fetcher,
        }
    }

    /// Pick the fetcher from the base string: `http(s)://` uses HTTP,
    /// anything else is treated as a local directory.
    pub fn open(base: &str, retry: RetryPolicy, min_interval: Duration) -> Result<Self> {
        if base.starts_with("http://") || base.starts_with("https://") {
            Ok(Self::new(
                base,
                Box::new(HttpFetcher::new(retry, min_interval)?),
            ))
        } else {
            let dir = base.strip_prefix("file://").unwrap_or(base);
            Ok(Self::new(base, Box::new(FsFetcher::new(dir))))
        }
    }

    pub fn first_page_url(&self, category: Category) -> String {
        if self.is_http {
            format!(
                "{}/books/?topic={category}&languages=en&mime_type=text%2Fplain",
                self.base
            )
        } else {
            format!("{category}.json")
        }
    }

    pub fn get(&self, url: &str) -> Result<Vec<u8>> {
        self.fetcher.get(url)
    }
}

#[derive(Debug, Deserialize)]
struct RawPage {
    #[serde(default)]
    next: Option<String>,
    results: Vec<RawBook>,
}

#[derive(Debug, Deserialize)]
struct RawBook {
    id: u64,
    #[serde(default)]
    title: String,
    #[serde(default)]
    authors: Vec<RawAuthor>,
    #[serde(default)]
    formats: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct RawAuthor {
    name: String,
    birth_year: Option<i32>,
    death_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogPage {
    pub entries: Vec<CatalogEntry>,
    pub next: Option<String>,
}

/// Parse one paginated catalog page, tagging every entry with `category`.
pub fn parse_catalog_page(bytes: &[u8], category: Category, page_url: &str) -> Result<CatalogPage> {
    let raw: RawPage = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        source_name: format!("catalog page {page_url}"),
        message: e.to_string(),
    })?;
    let entries = raw
        .results
        .into_iter()
        .map(|b| CatalogEntry {
            source_id: b.id,
            title: b.title,
            authors: b
                .authors
                .into_iter()
                .map(|a| CatalogAuthor {
                    name: a.name,
                    birth_year: a.birth_year,
                    death_year: a.death_year,
                })
                .collect(),
            category,
            format_urls: b.formats,
        })
        .collect();
    Ok(CatalogPage {
        entries,
        next: raw.next.filter(|n| !n.is_empty()),
    })
}

/// Fetch catalog entries for each category, in catalog order, keeping at
/// most `per_category_limit` per category.
pub fn fetch_catalog(
    source: &CatalogSource,
    categories: &[Category],
    per_category_limit: Option<usize>,
) -> Result<Vec<CatalogEntry>> {
    if categories.is_empty() {
        return Err(Error::Precondition("no categories requested".into()));
    }
    if per_category_limit == Some(0) {
        return Err(Error::Precondition(
            "per-category limit must be at least 1".into(),
        ));
    }
    let mut out = Vec::new();
    for &category in categories {
        let limit = per_category_limit.unwrap_or(usize::MAX);
        let mut seen = HashSet::new();
        let mut taken = 0usize;
        let mut next = Some(source.first_page_url(category));
        let mut pages = 0usize;
        while let Some(url) = next.take() {
            let bytes = source.get(&url).map_err(|e| match e {
                Error::Fetch { context, message } => Error::Fetch {
                    context: format!("category {category} ({context})"),
                    message,
                },
                other => other,
            })?;
            let page = parse_catalog_page(&bytes, category, &url)?;
            pages += 1;
            for entry in page.entries {
                if taken >= limit {
                    break;
                }
                if seen.insert(entry.source_id) {
                    out.push(entry);
                    taken += 1;
                }
            }
            if taken < limit {
                next = page.next;
            }
        }
        info!("catalog: category={category} entries={taken} pages={pages}");
    }
    Ok(out)
}

pub fn preferred_text_url(entry: &CatalogEntry) -> Option<&str> {
    TEXT_MIME_PREFERENCE
        .iter()
        .find_map(|m| entry.format_urls.get(*m))
        .or_else(|| {
            entry
                .format_urls
                .iter()
                .find(|(mime, url)| mime.starts_with("text/plain") && !url.ends_with(".zip"))
                .map(|(_, url)| url)
        })
        .map(String::as_str)
}

/// Download (or load from `cache_dir`) the raw bytes of every entry's text.
///
/// Runs with at most `parallelism` concurrent downloads. The result is in
/// the same order as `entries` no matter how downloads complete.
pub fn download_texts(
    source: &CatalogSource,
    entries: &[CatalogEntry],
    cache_dir: &Path,
    parallelism: usize,
) -> Result<Vec<Result<Vec<u8>>>> {
    std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let cached = cache_dir.join(format!("{}.txt", entry.source_id));
                if let Ok(bytes) = std::fs::read(&cached) {
                    return Ok(bytes);
                }
                let url = preferred_text_url(entry).ok_or_else(|| Error::Fetch {
                    context: format!("text {}", entry.source_id),
                    message: "no plain-text format available".into(),
                })?;
                let bytes = source.get(url)?;
                std::fs::write(&cached, &bytes).map_err(|e| Error::io(&cached, e))?;
                Ok(bytes)
            })
            .collect::<Vec<_>>()
    });
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed > 0 {
        warn!(
            "{failed} of {} texts could not be downloaded",
            entries.len()
        );
    }
    Ok(results)
}

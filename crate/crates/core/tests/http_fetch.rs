//! Catalog, text and embedding clients against a local HTTP server.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use refnet_core::corpus::{
    download_texts, fetch_catalog, CatalogSource, Category, HttpFetcher, RetryPolicy,
};
use refnet_core::matcher::ReferenceRecord;
use refnet_core::topics::{
    Classifier, EmbeddingProvider, LexiconProvider, RemoteProvider, TopicConfig,
};
use refnet_core::Error;
use serde_json::{json, Value};

#[derive(Default)]
struct Server {
    routes: HashMap<String, Vec<u8>>,
    /// Number of 503 responses to send before serving a path.
    failures: HashMap<String, usize>,
    hits: Mutex<HashMap<String, usize>>,
    embed_calls: Mutex<Vec<(Option<String>, usize)>>,
    base: Mutex<String>,
}

impl Server {
    fn hits(&self, path: &str) -> usize {
        self.hits.lock().unwrap().get(path).copied().unwrap_or(0)
    }
}

const BASE: &str = "{BASE}";

async fn serve_path(State(s): State<Arc<Server>>, uri: Uri) -> Response {
    let key = uri
        .path_and_query()
        .map(|p| p.as_str().to_string())
        .unwrap_or_default();
    let n = {
        let mut hits = s.hits.lock().unwrap();
        let n = hits.entry(key.clone()).or_insert(0);
        *n += 1;
        *n
    };
    if n <= s.failures.get(&key).copied().unwrap_or(0) {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    match s.routes.get(&key) {
        Some(body) => {
            let base = s.base.lock().unwrap().clone();
            String::from_utf8_lossy(body)
                .replace(BASE, &base)
                .into_response()
        }
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn embed_handler(State(s): State<Arc<Server>>, headers: HeaderMap, body: Bytes) -> Response {
    let req: Value = serde_json::from_slice(&body).unwrap();
    let texts: Vec<&str> = req["texts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_str().unwrap())
        .collect();
    let auth = headers
        .get("authorization")
        .map(|v| v.to_str().unwrap().to_string());
    s.embed_calls.lock().unwrap().push((auth, texts.len()));
    let p = LexiconProvider::builtin();
    let vectors: Vec<Vec<f64>> = p
        .embed_batch(&texts)
        .unwrap()
        .iter()
        .map(|v| v.values().to_vec())
        .collect();
    Json(json!({ "vectors": vectors })).into_response()
}

/// Start the server on its own runtime thread and return its base URL.
fn start(server: Server) -> (String, Arc<Server>) {
    let state = Arc::new(server);
    let app = Router::new()
        .route("/embed", post(embed_handler))
        .fallback(serve_path)
        .with_state(state.clone());
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    *state.base.lock().unwrap() = format!("http://{addr}");
    std::thread::spawn(move || {
        tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .unwrap()
            .block_on(async move {
                let l = tokio::net::TcpListener::from_std(listener).unwrap();
                axum::serve(l, app).await.unwrap();
            })
    });
    (format!("http://{addr}"), state)
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 4,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    }
}

fn book(base: &str, id: u64, author: &str) -> Value {
    json!({
        "id": id,
        "title": format!("Book {id}"),
        "authors": [{"name": author, "birth_year": 1700, "death_year": 1780}],
        "formats": {"text/plain; charset=utf-8": format!("{base}/texts/{id}.txt")},
    })
}

const FIRST: &str = "/books/?topic=philosophy&languages=en&mime_type=text%2Fplain";

/// Five philosophy entries over two pages, plus their texts.
fn catalog_server(page2_failures: usize) -> (String, Arc<Server>) {
    let mut server = Server::default();
    let page1 = json!({
        "count": 5,
        "next": format!("{BASE}/page2"),
        "results": [book(BASE, 1, "Hume, David"), book(BASE, 2, "Kant, Immanuel"), book(BASE, 3, "Reid, Thomas")],
    });
    let page2 = json!({
        "count": 5,
        "next": null,
        "results": [book(BASE, 4, "Smith, Adam"), book(BASE, 5, "Berkeley, George")],
    });
    server
        .routes
        .insert(FIRST.into(), page1.to_string().into_bytes());
    server
        .routes
        .insert("/page2".into(), page2.to_string().into_bytes());
    for id in 1..=5 {
        server.routes.insert(
            format!("/texts/{id}.txt"),
            format!("text number {id}").into_bytes(),
        );
    }
    server.failures.insert("/page2".into(), page2_failures);
    start(server)
}

fn source(base: &str) -> CatalogSource {
    CatalogSource::new(
        base,
        Box::new(HttpFetcher::new(fast_retry(), Duration::ZERO).unwrap()),
    )
}

#[test]
fn follows_pagination() {
    let (base, server) = catalog_server(0);
    let entries = fetch_catalog(&source(&base), &[Category::Philosophy], None).unwrap();
    let ids: Vec<u64> = entries.iter().map(|e| e.source_id).collect();
    assert_eq!(ids, vec![1, 2, 3, 4, 5]);
    assert_eq!(entries[3].authors[0].name, "Smith, Adam");
    assert_eq!(server.hits(FIRST), 1);
    assert_eq!(server.hits("/page2"), 1);
}

#[test]
fn limit_stops_before_the_next_page() {
    let (base, server) = catalog_server(0);
    let entries = fetch_catalog(&source(&base), &[Category::Philosophy], Some(3)).unwrap();
    assert_eq!(entries.len(), 3);
    assert_eq!(server.hits("/page2"), 0);
}

#[test]
fn transient_503_is_retried() {
    let (base, server) = catalog_server(2);
    let entries = fetch_catalog(&source(&base), &[Category::Philosophy], None).unwrap();
    assert_eq!(entries.len(), 5);
    assert_eq!(server.hits("/page2"), 3);
}

#[test]
fn persistent_503_gives_up() {
    let (base, server) = catalog_server(100);
    let err = fetch_catalog(&source(&base), &[Category::Philosophy], None).unwrap_err();
    assert!(matches!(err, Error::Fetch { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert_eq!(server.hits("/page2"), 4);
}

#[test]
fn not_found_is_not_retried() {
    let (base, server) = start(Server::default());
    let err = fetch_catalog(&source(&base), &[Category::Philosophy], None).unwrap_err();
    assert!(matches!(err, Error::Fetch { .. }));
    assert_eq!(server.hits(FIRST), 1);
}

#[test]
fn texts_download_once_and_then_come_from_cache() {
    let (base, server) = catalog_server(0);
    let src = source(&base);
    let entries = fetch_catalog(&src, &[Category::Philosophy], None).unwrap();
    let cache = tempfile::tempdir().unwrap();
    let first = download_texts(&src, &entries, cache.path(), 3).unwrap();
    let bodies: Vec<Vec<u8>> = first.into_iter().map(Result::unwrap).collect();
    assert_eq!(bodies[4], b"text number 5");
    let again = download_texts(&src, &entries, cache.path(), 3).unwrap();
    assert!(again.iter().all(Result::is_ok));
    for id in 1..=5 {
        assert_eq!(server.hits(&format!("/texts/{id}.txt")), 1);
    }
}

fn record(context: &str) -> ReferenceRecord {
    ReferenceRecord {
        citing_author_id: "dante".into(),
        cited_author_id: "euclid".into(),
        text_id: "pg1".into(),
        offset: 0,
        context: context.into(),
    }
}

#[test]
fn remote_provider_matches_local_lexicon() {
    let (base, server) = start(Server::default());
    let remote = RemoteProvider::new(format!("{base}/embed"), Some("secret".into()))
        .unwrap()
        .with_retry(fast_retry())
        .with_max_batch(2);
    let local = LexiconProvider::builtin();
    let cfg = TopicConfig::default();
    let records: Vec<_> = [
        "the point is the beginning of Geometry",
        "Satan and Jesus constantly at war",
        "free competition and governmental favor",
        "nothing here",
        "virtue and duty",
    ]
    .map(record)
    .to_vec();
    let a = Classifier::new(&cfg, &remote)
        .unwrap()
        .classify_all(&records)
        .unwrap();
    let b = Classifier::new(&cfg, &local)
        .unwrap()
        .classify_all(&records)
        .unwrap();
    assert_eq!(a, b);
    let calls = server.embed_calls.lock().unwrap();
    assert!(calls
        .iter()
        .all(|(auth, n)| auth.as_deref() == Some("Bearer secret") && *n <= 2));
    assert_eq!(calls.iter().map(|c| c.1).sum::<usize>(), 8 + records.len());
}

#[test]
fn remote_provider_errors_surface() {
    let (base, _) = start(Server::default());
    let missing = RemoteProvider::new(format!("{base}/nowhere"), None)
        .unwrap()
        .with_retry(fast_retry());
    assert!(matches!(
        missing.embed_batch(&["x"]),
        Err(Error::Provider(_))
    ));
    assert!(matches!(missing.embed_batch(&[" "]), Err(Error::Input(_))));
}

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, EmbeddingVector};
use crate::corpus::RetryPolicy;
use crate::error::{Error, Result};

pub const ENDPOINT_VAR: &str = "REFNET_EMBED_URL";
pub const API_KEY_VAR: &str = "REFNET_EMBED_KEY";

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an embedding service speaking
/// `POST {"texts": [..]}` -> `{"vectors": [[..], ..]}`.
pub struct RemoteProvider {
    id: String,
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    max_batch: usize,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self> {
        let endpoint = endpoint.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(RemoteProvider {
            id: format!("remote:{endpoint}"),
            endpoint,
            api_key,
            client,
            retry: RetryPolicy::default(),
            max_batch: 64,
        })
    }

    /// Endpoint and key come from `REFNET_EMBED_URL` / `REFNET_EMBED_KEY`.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(ENDPOINT_VAR)
            .map_err(|_| Error::Config(format!("{ENDPOINT_VAR} is not set")))?;
        Self::new(endpoint, std::env::var(API_KEY_VAR).ok())
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_batch(mut self, n: usize) -> Self {
        self.max_batch = n.max(1);
        self
    }

    fn post(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut last = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                let factor = 1u32 << (attempt - 1).min(16);
                std::thread::sleep(
                    self.retry
                        .base_delay
                        .saturating_mul(factor)
                        .min(self.retry.max_delay),
                );
            }
            let mut req = self
                .client
                .post(&self.endpoint)
                .json(&EmbedRequest { texts });
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            if status.is_server_error() || status.as_u16() == 429 {
                last = format!("HTTP {status}");
                continue;
            }
            if !status.is_success() {
                return Err(Error::Provider(format!("{}: HTTP {status}", self.endpoint)));
            }
            let body: EmbedResponse = resp
                .json()
                .map_err(|e| Error::Provider(format!("malformed response: {e}")))?;
            if body.vectors.len() != texts.len() {
                return Err(Error::Provider(format!(
                    "{} vectors for {} texts",
                    body.vectors.len(),
                    texts.len()
                )));
            }
            let dim = body.vectors.first().map_or(0, Vec::len);
            if body.vectors.iter().any(|v| v.len() != dim) {
                return Err(Error::Provider("vectors of differing dimension".into()));
            }
            return body.vectors.into_iter().map(EmbeddingVector::new).collect();
        }
        Err(Error::Provider(format!(
            "{}: giving up after {} attempts: {last}",
            self.endpoint, self.retry.attempts
        )))
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(Error::Input("cannot embed empty text".into()));
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.max_batch) {
            out.extend(self.post(chunk)?);
        }
        Ok(out)
    }
}

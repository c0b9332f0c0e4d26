use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-side precondition was violated (empty request, bad parameter).
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("fetch failed for {context}: {message}")]
    Fetch { context: String, message: String },

    #[error("could not parse {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    #[error("text is not valid UTF-8 (first bad byte at {offset})")]
    Encoding { offset: usize },

    /// Two or more authors share a match surface.
    #[error("match surface collisions: {}", format_collisions(.0))]
    Collision(Vec<(String, Vec<String>)>),

    /// Cross-table reference that does not resolve.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("span {start}..{end} out of range for body of {len} chars")]
    Range {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("embedding provider error: {0}")]
    Provider(String),

    #[error("stage `{stage}` is missing prerequisite {}", .path.display())]
    MissingArtifact { stage: String, path: PathBuf },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_collisions(items: &[(String, Vec<String>)]) -> String {
    items
        .iter()
        .map(|(surface, ids)| format!("`{surface}` -> [{}]", ids.join(", ")))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 stage failure, 3 integrity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Precondition(_) | Error::Config(_) => 1,
            Error::Integrity(_) | Error::Collision(_) => 3,
            _ => 2,
        }
    }
}

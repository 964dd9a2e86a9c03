//! LMFDB client for scbrauer.
//!
//! Newform records are fetched over HTTPS, cached verbatim under
//! `<cache>/<label>.json`, and converted on load into validated
//! [`NewformData`](scbrauer::newform::NewformData). Every engine test runs
//! on committed fixtures; this crate only refreshes them.
//!
//! Environment: `SCBRAUER_CACHE_DIR` sets the cache root (default `cache`)
//! and `SCBRAUER_OFFLINE=1` forbids network access.

mod cache;
mod client;
pub mod ingest;
mod transport;

pub use cache::{Cache, CacheEntry, SCHEMA_VERSION};
pub use client::{Client, ClientConfig, CoefficientMap, DEFAULT_BASE_URL};
pub use transport::{HttpResponse, Transport, UreqTransport};

#[derive(Debug, thiserror::Error)]
pub enum LmfdbError {
    #[error("fetch failed: {0}")]
    Fetch(String),
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("no cache entry for {0}")]
    CacheMiss(String),
    #[error("write failed: {0}")]
    Write(String),
    #[error(transparent)]
    Engine(#[from] scbrauer::Error),
}

impl LmfdbError {
    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        LmfdbError::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, LmfdbError>;

use crate::cache::{write_atomic, Cache, CacheEntry, SCHEMA_VERSION};
use crate::ingest::newform_from_payload;
use crate::transport::{Transport, UreqTransport};
use crate::{LmfdbError, Result};
use scbrauer::arith::FieldElem;
use scbrauer::newform::{to_json_string_with_metadata, NewformData};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

pub const DEFAULT_BASE_URL: &str = "https://www.lmfdb.org";

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub cache_dir: PathBuf,
    /// Serve from the cache only; a miss is [`LmfdbError::CacheMiss`].
    pub offline: bool,
    /// Attempts after the first on transport errors, 429 and 5xx.
    pub max_retries: u32,
    /// First retry delay; doubled on each further attempt.
    pub backoff: Duration,
    /// Minimum spacing between requests.
    pub min_interval: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            base_url: DEFAULT_BASE_URL.into(),
            cache_dir: PathBuf::from("cache"),
            offline: false,
            max_retries: 3,
            backoff: Duration::from_millis(500),
            min_interval: Duration::from_millis(250),
        }
    }
}

impl ClientConfig {
    /// Defaults overridden by `SCBRAUER_CACHE_DIR` and `SCBRAUER_OFFLINE`.
    pub fn from_env() -> Self {
        let mut c = ClientConfig::default();
        if let Some(dir) = std::env::var_os("SCBRAUER_CACHE_DIR") {
            c.cache_dir = dir.into();
        }
        if let Ok(v) = std::env::var("SCBRAUER_OFFLINE") {
            c.offline = matches!(v.trim(), "1" | "true" | "yes");
        }
        c
    }
}

/// a_n for n up to `bound`, as far as LMFDB stores them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMap {
    pub label: String,
    pub bound: u64,
    pub coefficients: BTreeMap<u64, FieldElem>,
    /// False when the record stops short of the requested bound.
    pub complete: bool,
}

pub struct Client {
    config: ClientConfig,
    transport: Box<dyn Transport>,
    cache: Cache,
    last_request: Mutex<Option<Instant>>,
    in_flight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

/// LMFDB labels and the short labels used for fixtures: digits, lowercase
/// letters, dots and dashes. Also keeps labels safe as file names and in
/// query strings.
fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label.len() <= 64
        && !label.starts_with('.')
        && label
            .bytes()
            .all(|b| b.is_ascii_digit() || b.is_ascii_lowercase() || b == b'.' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(LmfdbError::schema("label", format!("invalid label {label:?}")))
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Client {
    pub fn new(config: ClientConfig) -> Self {
        Self::with_transport(config, UreqTransport::default())
    }

    pub fn with_transport(config: ClientConfig, transport: impl Transport + 'static) -> Self {
        let cache = Cache::new(config.cache_dir.clone());
        Client {
            config,
            transport: Box::new(transport),
            cache,
            last_request: Mutex::new(None),
            in_flight: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    fn throttle(&self) {
        let mut last = self.last_request.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < self.config.min_interval {
                std::thread::sleep(self.config.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn get_json(&self, url: &str) -> Result<Value> {
        let mut attempt = 0;
        loop {
            self.throttle();
            let retryable = match self.transport.get(url) {
                Ok(resp) if resp.status == 200 => {
                    return serde_json::from_str(&resp.body)
                        .map_err(|e| LmfdbError::schema("response", format!("invalid JSON from {url}: {e}")));
                }
                Ok(resp) if resp.status == 404 => return Err(LmfdbError::NotFound(url.to_string())),
                Ok(resp) if resp.status == 429 || resp.status >= 500 => format!("HTTP {} from {url}", resp.status),
                Ok(resp) => return Err(LmfdbError::Fetch(format!("HTTP {} from {url}", resp.status))),
                Err(e) => format!("{url}: {e}"),
            };
            if attempt >= self.config.max_retries {
                return Err(LmfdbError::Fetch(format!(
                    "{retryable} (after {} attempts)",
                    attempt + 1
                )));
            }
            std::thread::sleep(self.config.backoff * 2u32.saturating_pow(attempt));
            attempt += 1;
        }
    }

    /// The single record of an API query, or `NotFound`.
    fn query_one(&self, collection: &str, key: &str, value: &str, what: &str) -> Result<Value> {
        let base = self.config.base_url.trim_end_matches('/');
        let url = format!("{base}/api/{collection}/?{key}={value}&_format=json");
        let body = self.get_json(&url)?;
        let data = body
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| LmfdbError::schema(format!("{collection}.data"), "missing result list"))?;
        match data.as_slice() {
            [] => Err(LmfdbError::NotFound(what.to_string())),
            [one] => Ok(one.clone()),
            _ => Err(LmfdbError::schema(
                format!("{collection}.data"),
                format!("{} records for {what}", data.len()),
            )),
        }
    }

    fn download(&self, label: &str) -> Result<CacheEntry> {
        if self.config.offline {
            return Err(LmfdbError::CacheMiss(label.to_string()));
        }
        let newform = self.query_one("mf_newforms", "label", label, label)?;
        let code = newform
            .get("hecke_orbit_code")
            .and_then(Value::as_i64)
            .ok_or_else(|| LmfdbError::schema("newform.hecke_orbit_code", "missing"))?;
        let hecke = self.query_one("mf_hecke_nf", "hecke_orbit_code", &code.to_string(), label)?;
        let entry = CacheEntry {
            label: label.to_string(),
            fetched_at: now_secs(),
            schema_version: SCHEMA_VERSION,
            payload: json!({ "newform": newform, "hecke_nf": hecke }),
        };
        // Reject unusable records before they reach the cache.
        newform_from_payload(&entry.payload)?;
        self.cache.put(&entry)?;
        Ok(entry)
    }

    fn label_lock(&self, label: &str) -> Arc<Mutex<()>> {
        let mut map = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(label.to_string()).or_default().clone()
    }

    /// The cached entry, downloading it on a miss. Concurrent calls for the
    /// same label share one download.
    pub fn entry(&self, label: &str) -> Result<CacheEntry> {
        check_label(label)?;
        let lock = self.label_lock(label);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        match self.cache.get(label)? {
            Some(e) => Ok(e),
            None => self.download(label),
        }
    }

    /// Downloads again, replacing any cached entry.
    pub fn refresh(&self, label: &str) -> Result<CacheEntry> {
        check_label(label)?;
        let lock = self.label_lock(label);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.download(label)
    }

    /// The cached entry without any network access.
    pub fn cached(&self, label: &str) -> Result<CacheEntry> {
        check_label(label)?;
        self.cache
            .get(label)?
            .ok_or_else(|| LmfdbError::CacheMiss(label.to_string()))
    }

    pub fn fetch_newform(&self, label: &str) -> Result<NewformData> {
        newform_from_payload(&self.entry(label)?.payload)
    }

    pub fn fetch_coefficients(&self, label: &str, up_to: u64) -> Result<CoefficientMap> {
        let f = self.fetch_newform(label)?;
        let bound = up_to.min(f.coeff_bound);
        let coefficients = f.coefficients.range(..=bound).map(|(&n, a)| (n, a.clone())).collect();
        Ok(CoefficientMap {
            label: label.to_string(),
            bound,
            coefficients,
            complete: up_to <= f.coeff_bound,
        })
    }

    /// Writes the cached form as a fixture, with provenance in `metadata`.
    /// Never touches the network, so exports are reproducible.
    pub fn export_fixture(&self, label: &str, path: impl AsRef<Path>) -> Result<NewformData> {
        let entry = self.cached(label)?;
        let f = newform_from_payload(&entry.payload)?;
        let newform = &entry.payload["newform"];
        let metadata = json!({
            "source": "lmfdb",
            "lmfdb_label": newform.get("label").cloned().unwrap_or(Value::Null),
            "fetched_at": entry.fetched_at,
            "lmfdb_inner_twists": newform.get("inner_twists").cloned().unwrap_or(Value::Null),
        });
        let text = to_json_string_with_metadata(&f, Some(metadata)) + "\n";
        write_atomic(path.as_ref(), text.as_bytes())?;
        Ok(f)
    }
}

//! Metadata providers, the on-disk metadata cache and retrieval-augmented
//! selection.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use featsel_core::llm::{rank_and_select, FeatureScore, PromptBundle, ScoreMethod, TextTemplate};
use featsel_core::rafs::{build_rafs_prompt, normalize_symbol, FeatureMetadata, MetadataSource};
use featsel_core::{Dataset, Descriptor, SelectionResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::client::CompletionClient;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::ratelimit::{backoff_delay, RateLimiter};
use crate::scoring::{score_prompts, ScoringConfig};

/// Official name and summary of a found entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataEntry {
    #[serde(default)]
    pub official_name: String,
    #[serde(default)]
    pub summary: String,
}

pub trait MetadataProvider: Send + Sync {
    fn source(&self) -> MetadataSource;
    /// `Ok(None)` when the source has no entry for `symbol`.
    fn lookup(&self, symbol: &str) -> Result<Option<MetadataEntry>>;
}

/// Entries from a JSON map `name -> {official_name, summary}`; names match
/// case-insensitively.
#[derive(Clone, Debug, Default)]
pub struct LocalFileProvider {
    entries: HashMap<String, MetadataEntry>,
}

impl LocalFileProvider {
    pub fn open(path: &Path) -> Result<Self> {
        let map: BTreeMap<String, MetadataEntry> = read_json(path)?;
        Ok(Self::from_map(map))
    }

    pub fn from_map(map: impl IntoIterator<Item = (String, MetadataEntry)>) -> Self {
        LocalFileProvider {
            entries: map.into_iter().map(|(k, v)| (normalize_symbol(&k), v)).collect(),
        }
    }
}

impl MetadataProvider for LocalFileProvider {
    fn source(&self) -> MetadataSource {
        MetadataSource::LocalFile
    }

    fn lookup(&self, symbol: &str) -> Result<Option<MetadataEntry>> {
        Ok(self.entries.get(&normalize_symbol(symbol)).cloned())
    }
}

/// Knows nothing; every lookup misses.
#[derive(Clone, Copy, Debug)]
pub struct MissingProvider(pub MetadataSource);

impl MetadataProvider for MissingProvider {
    fn source(&self) -> MetadataSource {
        self.0
    }

    fn lookup(&self, _: &str) -> Result<Option<MetadataEntry>> {
        Ok(None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NcbiConfig {
    /// E-utilities base URL (without a trailing slash).
    pub base_url: String,
    /// Restricts the symbol search, e.g. "Homo sapiens".
    pub organism: Option<String>,
    pub api_key: Option<String>,
    pub requests_per_second: f64,
    pub max_attempts: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for NcbiConfig {
    fn default() -> Self {
        NcbiConfig {
            base_url: "https://eutils.ncbi.nlm.nih.gov/entrez/eutils".into(),
            organism: Some("Homo sapiens".into()),
            api_key: None,
            requests_per_second: 3.0,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
        }
    }
}

/// NCBI Gene lookup: a symbol search for the gene id, then a summary fetch
/// for its description and summary text.
pub struct NcbiProvider {
    cfg: NcbiConfig,
    agent: ureq::Agent,
    limiter: RateLimiter,
}

impl NcbiProvider {
    pub fn new(cfg: NcbiConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = RateLimiter::new(Some(cfg.requests_per_second));
        NcbiProvider { cfg, agent, limiter }
    }

    fn get_json(&self, symbol: &str, endpoint: &str, params: &[(&str, &str)]) -> Result<Value> {
        let url = format!("{}/{endpoint}", self.cfg.base_url.trim_end_matches('/'));
        let fail = |reason: String| Error::Retrieval { feature: symbol.to_string(), reason };
        let mut last = String::new();
        for attempt in 1..=self.cfg.max_attempts.max(1) {
            if attempt > 1 {
                thread::sleep(backoff_delay(self.cfg.backoff, attempt - 1));
            }
            self.limiter.acquire();
            let mut req = self.agent.get(&url);
            for (k, v) in params {
                req = req.query(*k, *v);
            }
            if let Some(key) = &self.cfg.api_key {
                req = req.query("api_key", key);
            }
            let mut resp = match req.call() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let body = match resp.body_mut().read_to_string() {
                Ok(b) => b,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            match status {
                200..=299 => return serde_json::from_str(&body).map_err(|e| fail(format!("{endpoint}: {e}"))),
                429 | 500..=599 => last = format!("{endpoint}: http {status}"),
                _ => return Err(fail(format!("{endpoint}: http {status}"))),
            }
        }
        Err(fail(last))
    }
}

impl MetadataProvider for NcbiProvider {
    fn source(&self) -> MetadataSource {
        MetadataSource::Ncbi
    }

    fn lookup(&self, symbol: &str) -> Result<Option<MetadataEntry>> {
        let mut term = format!("{}[sym]", normalize_symbol(symbol));
        if let Some(org) = &self.cfg.organism {
            term.push_str(&format!(" AND {org}[orgn]"));
        }
        let search = self.get_json(symbol, "esearch.fcgi", &[("db", "gene"), ("term", &term), ("retmode", "json"), ("retmax", "1")])?;
        let Some(id) = search["esearchresult"]["idlist"].get(0).and_then(Value::as_str).map(str::to_string) else {
            return Ok(None);
        };
        let summary = self.get_json(symbol, "esummary.fcgi", &[("db", "gene"), ("id", &id), ("retmode", "json")])?;
        Ok(parse_gene_summary(&summary, &id))
    }
}

pub(crate) fn parse_gene_summary(v: &Value, id: &str) -> Option<MetadataEntry> {
    let doc = &v["result"][id];
    let text = |k: &str| doc[k].as_str().map(str::trim).unwrap_or_default().to_string();
    let mut official_name = text("description");
    if official_name.is_empty() {
        official_name = text("nomenclaturename");
    }
    let entry = MetadataEntry { official_name, summary: text("summary") };
    (!entry.official_name.is_empty() || !entry.summary.is_empty()).then_some(entry)
}

/// Metadata records by normalised symbol, in memory and optionally in a
/// directory with one JSON file per symbol. Written records are never
/// replaced.
#[derive(Debug, Default)]
pub struct MetadataCache {
    dir: Option<PathBuf>,
    mem: RwLock<HashMap<String, FeatureMetadata>>,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl MetadataCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(MetadataCache { dir: Some(dir), ..Self::default() })
    }

    /// File holding `symbol`'s record; characters outside `[A-Z0-9._-]`
    /// are percent-encoded.
    pub fn path_for(&self, symbol: &str) -> Option<PathBuf> {
        let key = normalize_symbol(symbol);
        let mut name = String::new();
        for b in key.bytes() {
            if b.is_ascii_alphanumeric() || b == b'.' || b == b'_' || b == b'-' {
                name.push(b as char);
            } else {
                name.push_str(&format!("%{b:02X}"));
            }
        }
        self.dir.as_ref().map(|d| d.join(format!("{name}.json")))
    }

    pub fn get(&self, symbol: &str) -> Result<Option<FeatureMetadata>> {
        let key = normalize_symbol(symbol);
        if let Some(m) = self.mem.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(Some(m.clone()));
        }
        match self.path_for(symbol) {
            Some(p) if p.exists() => {
                let m: FeatureMetadata = read_json(&p)?;
                self.mem.write().unwrap_or_else(|e| e.into_inner()).insert(key, m.clone());
                Ok(Some(m))
            }
            _ => Ok(None),
        }
    }

    fn put(&self, symbol: &str, m: &FeatureMetadata) -> Result<()> {
        if let Some(p) = self.path_for(symbol) {
            if !p.exists() {
                write_json(&p, m)?;
            }
        }
        self.mem.write().unwrap_or_else(|e| e.into_inner()).entry(normalize_symbol(symbol)).or_insert_with(|| m.clone());
        Ok(())
    }

    fn key_lock(&self, symbol: &str) -> Arc<Mutex<()>> {
        let mut locks = self.key_locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(normalize_symbol(symbol)).or_default().clone()
    }
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Cached lookup: a hit never reaches the provider; a miss queries it and
/// stores the outcome, including not-found records.
pub fn fetch_metadata(feature: &str, provider: &dyn MetadataProvider, cache: &MetadataCache) -> Result<FeatureMetadata> {
    if feature.trim().is_empty() {
        return Err(Error::Config("feature name is empty".into()));
    }
    let lock = cache.key_lock(feature);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(m) = cache.get(feature)? {
        return Ok(m);
    }
    let m = match provider.lookup(feature)? {
        Some(e) => FeatureMetadata {
            feature: feature.to_string(),
            official_name: e.official_name,
            summary: e.summary,
            source: provider.source(),
            retrieved_at: now_secs(),
            missing: false,
        },
        None => FeatureMetadata::missing(feature, provider.source(), now_secs()),
    };
    cache.put(feature, &m)?;
    Ok(m)
}

/// Retrieval-augmented prompts for every feature. A retrieval error is
/// treated like a miss, so that feature gets the plain text prompt.
pub fn rafs_prompts(
    d: &Dataset,
    desc: &Descriptor,
    provider: &dyn MetadataProvider,
    cache: &MetadataCache,
    tpl: &TextTemplate,
) -> Result<(Vec<PromptBundle>, Vec<std::result::Result<FeatureMetadata, String>>)> {
    let mut prompts = Vec::with_capacity(d.n_features());
    let mut metas = Vec::with_capacity(d.n_features());
    for f in d.feature_names() {
        let fetched = fetch_metadata(f, provider, cache);
        let meta = match &fetched {
            Ok(m) => m.clone(),
            Err(_) => FeatureMetadata::missing(f, provider.source(), now_secs()),
        };
        prompts.push(build_rafs_prompt(f, &meta, desc, d.n_features(), tpl)?);
        metas.push(fetched.map_err(|e| e.to_string()));
    }
    Ok((prompts, metas))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RafsOutcome {
    pub selection: SelectionResult,
    pub scores: Vec<FeatureScore>,
    pub prompts: Vec<PromptBundle>,
}

/// Fetch, prompt, score and rank every feature of `d`.
pub fn rafs_select(
    d: &Dataset,
    desc: &Descriptor,
    provider: &dyn MetadataProvider,
    cache: &MetadataCache,
    client: &dyn CompletionClient,
    cfg: &ScoringConfig,
    ratio: f64,
) -> Result<RafsOutcome> {
    let (prompts, metas) = rafs_prompts(d, desc, provider, cache, &cfg.text_template)?;
    let mut scores = score_prompts(&prompts, ScoreMethod::Rafs, client, cfg);
    for (s, m) in scores.iter_mut().zip(&metas) {
        if let Err(e) = m {
            let note = format!("metadata unavailable: {e}");
            s.warning = Some(match s.warning.take() {
                Some(w) => format!("{w}; {note}"),
                None => note,
            });
        }
    }
    let selection = rank_and_select(&scores, ratio)?;
    Ok(RafsOutcome { selection, scores, prompts })
}

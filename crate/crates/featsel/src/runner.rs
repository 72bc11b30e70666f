//! Resumable sweeps over datasets × methods × shot budgets × seeds.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use featsel_core::classic::{mi_filter, mrmr, random_select, rfe, DEFAULT_RFE_LAMBDA};
use featsel_core::eval::{evaluate_on_split, train_test_split, EvaluationRecord, Protocol, Shots, DEFAULT_GRID};
use featsel_core::llm::{rank_and_select, FeatureScore};
use featsel_core::rafs::MetadataSource;
use featsel_core::tabular::subsample_shots;
use featsel_core::{Dataset, Descriptor, SelectionResult, Task};
use serde::{Deserialize, Serialize};

use crate::client::{CompletionClient, HttpChatClient};
use crate::error::{Error, Result};
use crate::io::{load_dataset, read_json, write_atomic, write_json};
use crate::rafs::{rafs_select, LocalFileProvider, MetadataCache, MetadataProvider, MissingProvider, NcbiConfig, NcbiProvider};
use crate::report::{
    failure_line, read_failures, read_records, record_line, render_lines, render_summary, CellFailure, CsvAppender,
    FAILURES_HEADER, RECORDS_HEADER,
};
use crate::scoring::{score_all_features, ScoringConfig, Strategy};
use crate::transcript::{RecordingClient, ReplayClient};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mi,
    Rfe,
    Mrmr,
    Random,
    LlmData,
    LlmText,
    Rafs,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Mi, Method::Rfe, Method::Mrmr, Method::Random, Method::LlmData, Method::LlmText, Method::Rafs];

    pub fn label(self) -> &'static str {
        match self {
            Method::Mi => "mi",
            Method::Rfe => "rfe",
            Method::Mrmr => "mrmr",
            Method::Random => "random",
            Method::LlmData => "llm_data",
            Method::LlmText => "llm_text",
            Method::Rafs => "rafs",
        }
    }

    pub fn needs_llm(self) -> bool {
        matches!(self, Method::LlmData | Method::LlmText | Method::Rafs)
    }

    pub fn needs_descriptor(self) -> bool {
        matches!(self, Method::LlmText | Method::Rafs)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `-` in place of `_`.
    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.label() == name)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected one of mi, rfe, mrmr, random, llm_data, llm_text, rafs)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Defaults to the CSV file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub csv: PathBuf,
    #[serde(default)]
    pub descriptor: Option<PathBuf>,
    pub target: String,
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    /// Answer prompts from this transcript instead of the live endpoint.
    #[serde(default)]
    pub replay: Option<PathBuf>,
    /// Model id; for replay, needed only when the transcript holds several.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub requests_per_second: Option<f64>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            replay: None,
            model: None,
            max_attempts: default_attempts(),
            max_in_flight: default_in_flight(),
            requests_per_second: None,
            max_tokens: default_max_tokens(),
        }
    }
}

fn default_attempts() -> u32 {
    3
}
fn default_in_flight() -> usize {
    4
}
fn default_max_tokens() -> u32 {
    512
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Ncbi,
    Local,
    Missing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RafsConfig {
    pub provider: ProviderKind,
    /// Metadata map for the local provider.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Defaults to `<out-dir>/metadata`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub organism: Option<String>,
    #[serde(default = "default_ncbi_rate")]
    pub requests_per_second: f64,
}

fn default_ncbi_rate() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub methods: Vec<Method>,
    pub shots: Vec<Shots>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_rfe_lambda")]
    pub rfe_lambda: f64,
    /// Cells evaluated at once.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub transport: Option<TransportConfig>,
    #[serde(default)]
    pub rafs: Option<RafsConfig>,
}

fn default_ratio() -> f64 {
    0.3
}
fn default_grid() -> Vec<f64> {
    DEFAULT_GRID.to_vec()
}
fn default_folds() -> usize {
    5
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_rfe_lambda() -> f64 {
    DEFAULT_RFE_LAMBDA
}
fn default_parallelism() -> usize {
    1
}

fn has_duplicates<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().any(|(i, a)| v[..i].contains(a))
}

impl ExperimentConfig {
    /// Reads a JSON config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut self.datasets {
            fix(&mut d.csv);
            if let Some(p) = &mut d.descriptor {
                fix(p);
            }
        }
        if let Some(t) = &mut self.transport {
            if let Some(p) = &mut t.replay {
                fix(p);
            }
        }
        if let Some(r) = &mut self.rafs {
            if let Some(p) = &mut r.file {
                fix(p);
            }
            if let Some(p) = &mut r.cache_dir {
                fix(p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return bad(format!("ratio {} outside (0, 1]", self.ratio));
        }
        if self.datasets.is_empty() || self.methods.is_empty() || self.shots.is_empty() || self.seeds.is_empty() {
            return bad("datasets, methods, shots and seeds must all be non-empty".into());
        }
        if has_duplicates(&self.methods) || has_duplicates(&self.shots) || has_duplicates(&self.seeds) {
            return bad("methods, shots and seeds must not repeat".into());
        }
        let names: Vec<String> = self.datasets.iter().map(DatasetSpec::display_name).collect();
        if has_duplicates(&names) {
            return bad("dataset names must be unique".into());
        }
        if self.grid.is_empty() || self.grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("grid must hold positive, finite lambdas".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.methods.iter().any(|m| m.needs_llm()) && self.transport.is_none() {
            return bad("llm_data, llm_text and rafs need a `transport` section".into());
        }
        if let Some(t) = &self.transport {
            if t.max_attempts == 0 || t.max_in_flight == 0 {
                return bad("transport max_attempts and max_in_flight must be at least 1".into());
            }
        }
        if self.methods.contains(&Method::Rafs) {
            match &self.rafs {
                None => return bad("rafs needs a `rafs` provider section".into()),
                Some(r) if r.provider == ProviderKind::Local && r.file.is_none() => {
                    return bad("the local metadata provider needs `file`".into())
                }
                _ => {}
            }
        }
        if self.methods.iter().any(|m| m.needs_descriptor()) {
            if let Some(d) = self.datasets.iter().find(|d| d.descriptor.is_none()) {
                return bad(format!("dataset {} has no descriptor, required by llm_text / rafs", d.display_name()));
            }
        }
        Ok(())
    }
}

impl DatasetSpec {
    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
    }
}

/// Identity of one sweep cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub dataset: String,
    pub method: String,
    pub shots: Shots,
    pub seed: u64,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/shots={}/seed={}", self.dataset, self.method, self.shots, self.seed)
    }
}

impl CellKey {
    pub fn file_stem(&self) -> String {
        let clean = |s: &str| -> String {
            s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' }).collect()
        };
        format!("{}__{}__{}__{}", clean(&self.dataset), clean(&self.method), self.shots, self.seed)
    }
}

/// What a selector sees for one cell. `data` holds only the rows the
/// selector may use: the k-shot subsample of the training split, or the
/// whole training split for `full`.
pub struct CellContext<'a> {
    pub key: &'a CellKey,
    pub method: Method,
    pub data: &'a Dataset,
    pub descriptor: &'a Descriptor,
    pub seed: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSelection {
    pub selection: SelectionResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<FeatureScore>>,
}

pub trait CellSelector: Sync {
    fn select(&self, cx: &CellContext<'_>) -> Result<CellSelection>;
}

/// Runs the configured selectors.
pub struct DefaultSelector<'a> {
    client: Option<&'a dyn CompletionClient>,
    provider: Option<&'a dyn MetadataProvider>,
    cache: Option<&'a MetadataCache>,
    scoring: ScoringConfig,
    rfe_lambda: f64,
}

impl CellSelector for DefaultSelector<'_> {
    fn select(&self, cx: &CellContext<'_>) -> Result<CellSelection> {
        let d = cx.data;
        let classic = |s: SelectionResult| Ok(CellSelection { selection: s, scores: None });
        match cx.method {
            Method::Mi => classic(mi_filter(d, cx.ratio)?),
            Method::Mrmr => classic(mrmr(d, cx.ratio)?),
            Method::Rfe => classic(rfe(d, cx.ratio, self.rfe_lambda)?),
            Method::Random => classic(random_select(d, cx.ratio, cx.seed)?),
            Method::LlmData | Method::LlmText => {
                let client = self.client.ok_or_else(|| Error::Config("no completion transport".into()))?;
                let strategy = if cx.method == Method::LlmData {
                    Strategy::DataDriven { shots: d.n_rows(), seed: cx.seed }
                } else {
                    Strategy::TextBased
                };
                let scores = score_all_features(d, Some(cx.descriptor), strategy, client, &self.scoring)?;
                llm_outcome(rank_and_select(&scores, cx.ratio)?, scores)
            }
            Method::Rafs => {
                let client = self.client.ok_or_else(|| Error::Config("no completion transport".into()))?;
                let (provider, cache) = self
                    .provider
                    .zip(self.cache)
                    .ok_or_else(|| Error::Config("no metadata provider".into()))?;
                let out = rafs_select(d, cx.descriptor, provider, cache, client, &self.scoring, cx.ratio)?;
                llm_outcome(out.selection, out.scores)
            }
        }
    }
}

/// A cell where no feature could be scored carries no information.
fn llm_outcome(selection: SelectionResult, scores: Vec<FeatureScore>) -> Result<CellSelection> {
    if let Some(first) = scores.first() {
        if scores.iter().all(|s| s.error.is_some()) {
            return Err(Error::Transport(format!(
                "every feature failed; first error ({}): {}",
                first.feature,
                first.error.as_deref().unwrap_or_default()
            )));
        }
    }
    Ok(CellSelection { selection, scores: Some(scores) })
}

struct Loaded {
    name: String,
    data: Dataset,
    descriptor: Descriptor,
}

/// Outcome of a sweep over all configured cells.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// Every record in `records.csv`, in canonical order.
    pub records: Vec<EvaluationRecord>,
    pub executed: usize,
    pub skipped: usize,
    /// Failures from this run only.
    pub failures: Vec<CellFailure>,
}

/// A validated, loaded experiment bound to an output directory.
pub struct Runner {
    cfg: ExperimentConfig,
    out_dir: PathBuf,
    datasets: Vec<Loaded>,
    client: Option<Arc<dyn CompletionClient>>,
    provider: Option<Box<dyn MetadataProvider>>,
    cache: Option<MetadataCache>,
}

impl Runner {
    /// Validates the config and loads every dataset; nothing is written.
    /// The completion client is built from the config (replay file, or the
    /// live endpoint from the environment with a transcript under
    /// `<out-dir>/transcripts`).
    pub fn new(cfg: ExperimentConfig, out_dir: impl Into<PathBuf>) -> Result<Self> {
        Self::build(cfg, out_dir.into(), None)
    }

    /// As [`Runner::new`] with an explicit completion client.
    pub fn with_client(cfg: ExperimentConfig, out_dir: impl Into<PathBuf>, client: Arc<dyn CompletionClient>) -> Result<Self> {
        Self::build(cfg, out_dir.into(), Some(client))
    }

    fn build(cfg: ExperimentConfig, out_dir: PathBuf, client: Option<Arc<dyn CompletionClient>>) -> Result<Self> {
        cfg.validate()?;
        let mut datasets = Vec::new();
        for spec in &cfg.datasets {
            let (mut data, descriptor) = load_dataset(&spec.csv, spec.descriptor.as_deref(), &spec.target, spec.task)?;
            data.name = spec.display_name();
            datasets.push(Loaded { name: data.name.clone(), data, descriptor });
        }
        let needs_llm = cfg.methods.iter().any(|m| m.needs_llm());
        let client = match (client, needs_llm, &cfg.transport) {
            (Some(c), _, _) => Some(c),
            (None, true, Some(t)) => Some(build_client(t, &out_dir)?),
            _ => None,
        };
        let (provider, cache) = match (&cfg.rafs, cfg.methods.contains(&Method::Rafs)) {
            (Some(r), true) => {
                let dir = r.cache_dir.clone().unwrap_or_else(|| out_dir.join("metadata"));
                (Some(build_provider(r)?), Some(MetadataCache::on_disk(dir)?))
            }
            _ => (None, None),
        };
        Ok(Runner { cfg, out_dir, datasets, client, provider, cache })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn default_selector(&self) -> DefaultSelector<'_> {
        let scoring = match &self.cfg.transport {
            Some(t) => ScoringConfig {
                max_attempts: t.max_attempts,
                max_in_flight: t.max_in_flight,
                requests_per_second: t.requests_per_second,
                max_tokens: t.max_tokens,
                ..ScoringConfig::default()
            },
            None => ScoringConfig::default(),
        };
        DefaultSelector {
            client: self.client.as_deref(),
            provider: self.provider.as_deref(),
            cache: self.cache.as_ref(),
            scoring,
            rfe_lambda: self.cfg.rfe_lambda,
        }
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for d in &self.datasets {
            for m in &self.cfg.methods {
                for s in &self.cfg.shots {
                    for seed in &self.cfg.seeds {
                        out.push(CellKey { dataset: d.name.clone(), method: m.label().into(), shots: *s, seed: *seed });
                    }
                }
            }
        }
        out
    }

    pub fn run(&self) -> Result<RunReport> {
        self.run_with(&self.default_selector())
    }

    /// Executes every cell not already in `records.csv` or `failures.csv`,
    /// appending results as cells finish, then rewrites both files in
    /// canonical order and regenerates `summary.md`.
    pub fn run_with(&self, selector: &dyn CellSelector) -> Result<RunReport> {
        let sel_dir = self.out_dir.join("selections");
        fs::create_dir_all(&sel_dir).map_err(|e| Error::io(&sel_dir, e))?;
        let records_path = self.out_dir.join("records.csv");
        let failures_path = self.out_dir.join("failures.csv");

        let mut done: HashSet<CellKey> = HashSet::new();
        for r in read_records(&records_path)? {
            done.insert(CellKey { dataset: r.dataset, method: r.method, shots: r.shots, seed: r.seed });
        }
        for f in read_failures(&failures_path)? {
            done.insert(CellKey { dataset: f.dataset, method: f.method, shots: f.shots, seed: f.seed });
        }
        let all = self.cells();
        let pending: Vec<&CellKey> = all.iter().filter(|k| !done.contains(k)).collect();
        let skipped = all.len() - pending.len();

        let writers = Mutex::new((
            CsvAppender::open(&records_path, RECORDS_HEADER)?,
            None::<CsvAppender>,
        ));
        let new_failures = Mutex::new(Vec::new());
        let write_error = Mutex::new(None::<Error>);
        let next = AtomicUsize::new(0);
        let workers = self.cfg.parallelism.clamp(1, pending.len().max(1));
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(key) = pending.get(i) else { break };
                    let outcome = self.run_cell(key, selector, &sel_dir);
                    let mut w = writers.lock().unwrap_or_else(|e| e.into_inner());
                    let written = match outcome {
                        Ok(rec) => w.0.append(&record_line(&rec)),
                        Err(e) => {
                            let f = CellFailure {
                                dataset: key.dataset.clone(),
                                method: key.method.clone(),
                                shots: key.shots,
                                seed: key.seed,
                                error: e.to_string(),
                            };
                            let line = failure_line(&f);
                            new_failures.lock().unwrap_or_else(|e| e.into_inner()).push(f);
                            match &mut w.1 {
                                Some(a) => a.append(&line),
                                None => CsvAppender::open(&failures_path, FAILURES_HEADER).and_then(|mut a| {
                                    let r = a.append(&line);
                                    w.1 = Some(a);
                                    r
                                }),
                            }
                        }
                    };
                    if let Err(e) = written {
                        write_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                    }
                });
            }
        });
        drop(writers);
        if let Some(e) = write_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e);
        }

        let records = self.finalize(&records_path, &failures_path)?;
        let mut failures = new_failures.into_inner().unwrap_or_else(|e| e.into_inner());
        let order = |f: &CellFailure| {
            all.iter().position(|k| k.dataset == f.dataset && k.method == f.method && k.shots == f.shots && k.seed == f.seed)
        };
        failures.sort_by_key(order);
        Ok(RunReport { records, executed: pending.len(), skipped, failures })
    }

    fn position(&self, dataset: &str, method: &str, shots: Shots, seed: u64) -> (usize, usize, usize, usize, String) {
        let far = usize::MAX;
        (
            self.datasets.iter().position(|d| d.name == dataset).unwrap_or(far),
            self.cfg.methods.iter().position(|m| m.label() == method).unwrap_or(far),
            self.cfg.shots.iter().position(|s| *s == shots).unwrap_or(far),
            self.cfg.seeds.iter().position(|s| *s == seed).unwrap_or(far),
            format!("{dataset}/{method}/{shots}/{seed}"),
        )
    }

    fn finalize(&self, records_path: &Path, failures_path: &Path) -> Result<Vec<EvaluationRecord>> {
        let mut records = read_records(records_path)?;
        records.sort_by_cached_key(|r| self.position(&r.dataset, &r.method, r.shots, r.seed));
        records.dedup_by(|a, b| a.dataset == b.dataset && a.method == b.method && a.shots == b.shots && a.seed == b.seed);
        write_atomic(records_path, render_lines(RECORDS_HEADER, records.iter().map(record_line)).as_bytes())?;

        let mut failures = read_failures(failures_path)?;
        if !failures.is_empty() {
            failures.sort_by_cached_key(|f| self.position(&f.dataset, &f.method, f.shots, f.seed));
            write_atomic(failures_path, render_lines(FAILURES_HEADER, failures.iter().map(failure_line)).as_bytes())?;
        }

        let methods: Vec<String> = self.cfg.methods.iter().map(|m| m.label().to_string()).collect();
        let summary = render_summary(&records, &methods, &self.cfg.shots);
        write_atomic(&self.out_dir.join("summary.md"), summary.as_bytes())?;
        Ok(records)
    }

    fn protocol(&self) -> Protocol {
        Protocol {
            grid: self.cfg.grid.clone(),
            folds: self.cfg.folds,
            test_fraction: self.cfg.test_fraction,
            ..Protocol::default()
        }
    }

    fn run_cell(&self, key: &CellKey, selector: &dyn CellSelector, sel_dir: &Path) -> Result<EvaluationRecord> {
        let wrap = |e: Error| Error::Cell { cell: key.to_string(), source: Box::new(e) };
        let loaded = self.datasets.iter().find(|d| d.name == key.dataset).expect("cell dataset is loaded");
        let method: Method = key.method.parse().map_err(wrap)?;
        let d = &loaded.data;
        let (train, test) = train_test_split(d, self.cfg.test_fraction, key.seed).map_err(|e| wrap(e.into()))?;
        let train_d = d.select_rows(&train).map_err(|e| wrap(e.into()))?;
        let sel_d = match key.shots {
            Shots::Full => train_d,
            Shots::Count(k) => {
                let rows = subsample_shots(&train_d, k, key.seed).map_err(|e| wrap(e.into()))?;
                train_d.select_rows(&rows).map_err(|e| wrap(e.into()))?
            }
        };
        let cx = CellContext {
            key,
            method,
            data: &sel_d,
            descriptor: &loaded.descriptor,
            seed: key.seed,
            ratio: self.cfg.ratio,
        };
        let chosen = selector.select(&cx).map_err(wrap)?;
        let features = chosen
            .selection
            .selected
            .iter()
            .map(|n| d.feature_index(n))
            .collect::<featsel_core::Result<Vec<_>>>()
            .map_err(|e| wrap(e.into()))?;
        let outcome = evaluate_on_split(d, &features, &train, &test, &self.protocol(), key.seed).map_err(|e| wrap(e.into()))?;
        write_json(&sel_dir.join(format!("{}.json", key.file_stem())), &chosen).map_err(wrap)?;
        Ok(EvaluationRecord {
            dataset: key.dataset.clone(),
            method: key.method.clone(),
            shots: key.shots,
            seed: key.seed,
            metric: outcome.metric,
            value: outcome.value,
        })
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

/// Replay from the configured transcript, or the live endpoint from the
/// environment recording into `<out-dir>/transcripts/<model>.jsonl`.
pub fn build_client(t: &TransportConfig, out_dir: &Path) -> Result<Arc<dyn CompletionClient>> {
    match &t.replay {
        Some(path) => Ok(Arc::new(ReplayClient::open(path, t.model.as_deref())?)),
        None => {
            let mut http = crate::client::HttpConfig::from_env()?;
            if let Some(m) = &t.model {
                http.model = m.clone();
            }
            let path = out_dir.join("transcripts").join(format!("{}.jsonl", sanitize(&http.model)));
            Ok(Arc::new(RecordingClient::new(HttpChatClient::new(http)?, path)?))
        }
    }
}

pub fn build_provider(r: &RafsConfig) -> Result<Box<dyn MetadataProvider>> {
    Ok(match r.provider {
        ProviderKind::Local => {
            let file = r.file.as_deref().ok_or_else(|| Error::Config("the local metadata provider needs `file`".into()))?;
            Box::new(LocalFileProvider::open(file)?)
        }
        ProviderKind::Missing => Box::new(MissingProvider(MetadataSource::LocalFile)),
        ProviderKind::Ncbi => {
            let mut cfg = NcbiConfig { requests_per_second: r.requests_per_second, ..NcbiConfig::default() };
            if r.organism.is_some() {
                cfg.organism = r.organism.clone();
            }
            cfg.api_key = std::env::var("NCBI_API_KEY").ok().filter(|k| !k.trim().is_empty());
            Box::new(NcbiProvider::new(cfg))
        }
    })
}

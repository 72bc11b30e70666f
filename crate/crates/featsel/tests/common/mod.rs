#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use featsel::client::{ClientError, CompletionClient};
use featsel::featsel_core::llm::{CompletionRequest, CompletionResponse};
use featsel::rafs::{MetadataEntry, MetadataProvider};
use featsel::transcript::prompt_hash;
use featsel::featsel_core::rafs::MetadataSource;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn credit_g() -> (PathBuf, PathBuf) {
    let d = data_dir().join("credit-g");
    (d.join("credit-g.csv"), d.join("descriptor.json"))
}

pub fn heart() -> (PathBuf, PathBuf) {
    let d = data_dir().join("heart");
    (d.join("heart.csv"), d.join("descriptor.json"))
}

/// Answers every prompt with a score derived from the prompt hash, in the
/// format the prompt asks for.
#[derive(Default)]
pub struct ScriptedClient {
    pub calls: AtomicUsize,
}

impl ScriptedClient {
    pub fn score_for(system: &str, user: &str) -> f64 {
        let h = prompt_hash("scripted", system, user);
        u8::from_str_radix(&h[..2], 16).unwrap() as f64 / 255.0
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionClient for ScriptedClient {
    fn model_id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let s = Self::score_for(&req.system, &req.user);
        let text = if req.system.contains("output schema") {
            format!("{{\"reasoning\": \"Scripted judgement.\", \"score\": {s:.3}}}")
        } else {
            format!("The importance score is {s:.3}")
        };
        Ok(CompletionResponse { text, finished: true })
    }
}

/// Wraps a provider and counts lookups.
pub struct CountingProvider<P> {
    pub inner: P,
    pub lookups: Mutex<Vec<String>>,
}

impl<P> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        CountingProvider { inner, lookups: Mutex::new(Vec::new()) }
    }

    pub fn count(&self) -> usize {
        self.lookups.lock().unwrap().len()
    }
}

impl<P: MetadataProvider> MetadataProvider for CountingProvider<P> {
    fn source(&self) -> MetadataSource {
        self.inner.source()
    }

    fn lookup(&self, symbol: &str) -> featsel::Result<Option<MetadataEntry>> {
        self.lookups.lock().unwrap().push(symbol.to_string());
        self.inner.lookup(symbol)
    }
}

/// Ten gene-named numeric features over `n` rows; the first three carry
/// the class signal.
pub fn gene_csv(n: usize) -> String {
    let genes = ["TP53", "BRCA1", "EGFR", "MYC", "KRAS", "PTEN", "APC", "RB1", "VHL", "CDH1"];
    let mut s = genes.join(",") + ",status\n";
    for i in 0..n {
        let y = i % 2;
        let vals: Vec<String> = (0..10)
            .map(|j| {
                let noise = ((i * 31 + j * 17) % 13) as f64 / 13.0;
                let v = if j < 3 { y as f64 * 2.0 + noise } else { noise * 3.0 };
                format!("{v:.4}")
            })
            .collect();
        s += &format!("{},{}\n", vals.join(","), if y == 1 { "tumor" } else { "normal" });
    }
    s
}

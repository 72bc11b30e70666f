//! Append-only prompt/response transcripts and the clients that record
//! and replay them.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use featsel_core::llm::{CompletionRequest, CompletionResponse};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::{ClientError, CompletionClient};
use crate::error::{Error, Result};

/// Hex SHA-256 over the length-prefixed model id, system and user text.
pub fn prompt_hash(model_id: &str, system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    for part in [model_id, system, user] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

/// One line of a transcript file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub hash: String,
    pub model_id: String,
    pub system: String,
    pub user: String,
    pub response_text: String,
}

impl TranscriptRecord {
    pub fn new(model_id: &str, req: &CompletionRequest, response_text: &str) -> Self {
        TranscriptRecord {
            hash: prompt_hash(model_id, &req.system, &req.user),
            model_id: model_id.to_string(),
            system: req.system.clone(),
            user: req.user.clone(),
            response_text: response_text.to_string(),
        }
    }
}

/// Records of a transcript file in file order. A missing file reads as empty.
pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TranscriptRecord =
            serde_json::from_str(&line).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        if rec.hash != prompt_hash(&rec.model_id, &rec.system, &rec.user) {
            return Err(Error::format(path, format!("line {}: hash does not match content", i + 1)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Answers prompts from a transcript; never touches the network.
#[derive(Debug)]
pub struct ReplayClient {
    model_id: String,
    responses: HashMap<String, String>,
}

impl ReplayClient {
    /// With `model_id` unset the transcript must name exactly one model.
    pub fn open(path: &Path, model_id: Option<&str>) -> Result<Self> {
        if !path.exists() {
            return Err(Error::Config(format!("transcript {} does not exist", path.display())));
        }
        Self::from_records(read_transcript(path)?, model_id).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_records(records: Vec<TranscriptRecord>, model_id: Option<&str>) -> Result<Self> {
        let model_id = match model_id {
            Some(m) => m.to_string(),
            None => {
                let mut ids: Vec<&str> = records.iter().map(|r| r.model_id.as_str()).collect();
                ids.sort_unstable();
                ids.dedup();
                match ids.as_slice() {
                    [one] => one.to_string(),
                    [] => return Err(Error::Config("transcript is empty".into())),
                    _ => return Err(Error::Config(format!("transcript holds several models ({}); pick one", ids.join(", ")))),
                }
            }
        };
        let responses = records.into_iter().map(|r| (r.hash, r.response_text)).collect();
        Ok(ReplayClient { model_id, responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl CompletionClient for ReplayClient {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let hash = prompt_hash(&self.model_id, &req.system, &req.user);
        match self.responses.get(&hash) {
            Some(text) => Ok(CompletionResponse { text: text.clone(), finished: true }),
            None => Err(ClientError::NotRecorded(hash)),
        }
    }
}

/// Wraps a live client and appends every new exchange to a transcript.
/// Prompts already in the file are answered from it.
pub struct RecordingClient<C> {
    inner: C,
    path: PathBuf,
    state: Mutex<RecState>,
}

struct RecState {
    file: File,
    known: HashMap<String, String>,
}

impl<C: CompletionClient> RecordingClient<C> {
    pub fn new(inner: C, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let known = read_transcript(&path)?.into_iter().map(|r| (r.hash, r.response_text)).collect();
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(RecordingClient { inner, path, state: Mutex::new(RecState { file, known }) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<C: CompletionClient> CompletionClient for RecordingClient<C> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let hash = prompt_hash(self.inner.model_id(), &req.system, &req.user);
        if let Some(text) = self.state.lock().unwrap_or_else(|e| e.into_inner()).known.get(&hash) {
            return Ok(CompletionResponse { text: text.clone(), finished: true });
        }
        let resp = self.inner.complete(req)?;
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if !st.known.contains_key(&hash) {
            let rec = TranscriptRecord::new(self.inner.model_id(), req, &resp.text);
            let mut line = serde_json::to_string(&rec).expect("record serialises");
            line.push('\n');
            st.file
                .write_all(line.as_bytes())
                .and_then(|_| st.file.flush())
                .map_err(|e| ClientError::Fatal(format!("writing {}: {e}", self.path.display())))?;
            st.known.insert(hash, resp.text.clone());
        }
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Echo(AtomicUsize);

    impl CompletionClient for Echo {
        fn model_id(&self) -> &str {
            "echo-1"
        }

        fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(CompletionResponse { text: format!("score for {}", req.user), finished: true })
        }
    }

    #[test]
    fn hash_separates_fields() {
        assert_ne!(prompt_hash("m", "ab", "c"), prompt_hash("m", "a", "bc"));
        assert_eq!(prompt_hash("m", "s", "u").len(), 64);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let rec = RecordingClient::new(Echo(AtomicUsize::new(0)), &path).unwrap();
        let a = CompletionRequest::greedy("sys", "a", 16);
        let b = CompletionRequest::greedy("sys", "b", 16);
        let ra = rec.complete(&a).unwrap();
        rec.complete(&b).unwrap();
        rec.complete(&a).unwrap();
        assert_eq!(rec.inner.0.load(Ordering::SeqCst), 2);
        assert_eq!(read_transcript(&path).unwrap().len(), 2);

        let replay = ReplayClient::open(&path, None).unwrap();
        assert_eq!(replay.model_id(), "echo-1");
        assert_eq!(replay.complete(&a).unwrap().text, ra.text);
        let c = CompletionRequest::greedy("sys", "c", 16);
        assert!(matches!(replay.complete(&c), Err(ClientError::NotRecorded(_))));
    }

    #[test]
    fn reopened_recorder_reuses_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let a = CompletionRequest::greedy("s", "a", 8);
        RecordingClient::new(Echo(AtomicUsize::new(0)), &path).unwrap().complete(&a).unwrap();
        let again = RecordingClient::new(Echo(AtomicUsize::new(0)), &path).unwrap();
        again.complete(&a).unwrap();
        assert_eq!(again.inner.0.load(Ordering::SeqCst), 0);
        assert_eq!(read_transcript(&path).unwrap().len(), 1);
    }

    #[test]
    fn tampered_line_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut rec = TranscriptRecord::new("m", &CompletionRequest::greedy("s", "u", 1), "x");
        rec.user = "changed".into();
        fs::write(&path, serde_json::to_string(&rec).unwrap()).unwrap();
        assert!(matches!(read_transcript(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn replay_needs_single_model_or_choice() {
        let req = CompletionRequest::greedy("s", "u", 1);
        let recs = vec![TranscriptRecord::new("m1", &req, "1"), TranscriptRecord::new("m2", &req, "2")];
        assert!(ReplayClient::from_records(recs.clone(), None).is_err());
        let r = ReplayClient::from_records(recs, Some("m2")).unwrap();
        assert_eq!(r.complete(&req).unwrap().text, "2");
    }
}

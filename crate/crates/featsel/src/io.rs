//! CSV datasets, descriptor files and JSON helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use featsel_core::{Dataset, Descriptor, Task};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Header and string cells of a comma-separated file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::format(path, "empty file"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

/// Pretty JSON with a trailing newline, written through a temporary file so
/// readers never see a partial document.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_descriptor(path: &Path) -> Result<Descriptor> {
    read_json(path)
}

/// Loads a CSV dataset named after the file stem, with its descriptor when
/// one is given. Descriptor `column_kinds` override kind inference.
pub fn load_dataset(csv_path: &Path, descriptor: Option<&Path>, target: &str, task: Task) -> Result<(Dataset, Descriptor)> {
    let desc = match descriptor {
        Some(p) => load_descriptor(p)?,
        None => Descriptor::default(),
    };
    let (header, rows) = read_csv(csv_path)?;
    let name = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let d = Dataset::from_records(name, &header, &rows, target, task, &desc.column_kinds)
        .map_err(|source| Error::Data { path: csv_path.into(), source })?;
    if let Some(p) = descriptor {
        desc.validate_against(&d).map_err(|source| Error::Data { path: p.into(), source })?;
    }
    Ok((d, desc))
}

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::model::{GuiDocument, SCHEMA_VERSION};
use super::{CorpusError, CorpusIndex, RecordError};

pub const MANIFEST_FILE: &str = "corpus.manifest.json";

/// Summary written next to the per-GUI records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub count_total: usize,
    pub count_filtered: usize,
    pub count_documents: usize,
    pub corpus_hash: String,
}

/// Loads a corpus from a directory of `<gui_id>.json` records, or from a
/// JSON-lines bundle with one record per line.
///
/// Invalid records do not abort the load; they are listed in
/// [`CorpusIndex::load_errors`]. Only an unreadable source is fatal.
pub fn load_corpus(source: &Path) -> Result<CorpusIndex, CorpusError> {
    let unreadable = |e| CorpusError::Unreadable {
        path: source.display().to_string(),
        source: e,
    };
    let meta = fs::metadata(source).map_err(unreadable)?;

    let mut records: Vec<(String, Result<GuiDocument, String>)> = Vec::new();
    let mut manifest = None;
    if meta.is_dir() {
        let mut files: Vec<_> = fs::read_dir(source)
            .map_err(unreadable)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            if name == MANIFEST_FILE {
                manifest = Some(read_manifest(&path)?);
                continue;
            }
            let parsed = fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|raw| parse_record(&raw));
            records.push((name, parsed));
        }
    } else {
        let file = fs::File::open(source).map_err(unreadable)?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(unreadable)?;
            if line.trim().is_empty() {
                continue;
            }
            records.push((format!("{}:{}", source.display(), i + 1), parse_record(&line)));
        }
    }

    let mut documents = BTreeMap::new();
    let mut load_errors = Vec::new();
    for (origin, parsed) in records {
        match parsed {
            Ok(doc) => {
                if documents.contains_key(&doc.gui_id) {
                    load_errors.push(RecordError {
                        source: origin,
                        gui_id: Some(doc.gui_id.clone()),
                        reason: "duplicate gui_id".into(),
                    });
                } else {
                    documents.insert(doc.gui_id.clone(), doc);
                }
            }
            Err(reason) => load_errors.push(RecordError {
                gui_id: salvage_gui_id(&origin, &reason),
                source: origin,
                reason,
            }),
        }
    }

    let count_filtered = manifest.as_ref().map_or(0, |m: &CorpusManifest| m.count_filtered);
    let index = CorpusIndex {
        count_total: documents.len() + count_filtered,
        count_filtered,
        documents,
        build_timestamp: Utc::now(),
        load_errors,
    };
    Ok(index)
}

fn parse_record(raw: &str) -> Result<GuiDocument, String> {
    let doc: GuiDocument = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    match doc.validate() {
        Ok(()) => Ok(doc),
        Err(reason) => Err(format!("gui_id {:?}: {reason}", doc.gui_id)),
    }
}

fn salvage_gui_id(_origin: &str, reason: &str) -> Option<String> {
    // validation failures are prefixed with the parsed id
    let rest = reason.strip_prefix("gui_id \"")?;
    let end = rest.find('"')?;
    Some(rest[..end].to_string())
}

fn read_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    let bad = |reason: String| CorpusError::Manifest {
        path: path.display().to_string(),
        reason,
    };
    let raw = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let manifest: CorpusManifest = serde_json::from_str(&raw).map_err(|e| bad(e.to_string()))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(bad(format!(
            "schema_version {} unsupported",
            manifest.schema_version
        )));
    }
    Ok(manifest)
}

/// Writes `index` as a corpus directory: one pretty-printed record per GUI
/// plus the manifest.
pub fn write_corpus(index: &CorpusIndex, dir: &Path) -> Result<CorpusManifest, CorpusError> {
    let err = |e: std::io::Error| CorpusError::Write {
        path: dir.display().to_string(),
        reason: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(err)?;
    for doc in index.iter() {
        let body = serde_json::to_string_pretty(doc).expect("documents serialize");
        fs::write(dir.join(format!("{}.json", doc.gui_id)), body + "\n").map_err(err)?;
    }
    let manifest = CorpusManifest {
        schema_version: SCHEMA_VERSION,
        count_total: index.count_total,
        count_filtered: index.count_filtered,
        count_documents: index.len(),
        corpus_hash: index.content_hash(),
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_FILE), body + "\n").map_err(err)?;
    Ok(manifest)
}

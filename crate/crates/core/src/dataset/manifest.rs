//! Corpus manifests: one JSON object per line,
//!
//! ```text
//! {"video_id": "video7020", "captions": [{"caption_id": "c1", "text": "a man is singing"}],
//!  "duration_seconds": 11.3, "split": "test"}
//! ```
//!
//! Videos may carry any positive number of captions. `duration_seconds` may
//! be omitted or `null`; only the length/rank analysis needs it.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Split names that are valid even when a manifest has no entries for them.
pub const KNOWN_SPLITS: &[&str] = &["train", "validation", "val", "test", "test-1kA"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caption {
    pub caption_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub captions: Vec<Caption>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub name: String,
    pub entries: Vec<VideoEntry>,
}

impl CorpusManifest {
    /// Checks id uniqueness, non-empty caption lists and durations.
    pub fn new(name: impl Into<String>, entries: Vec<VideoEntry>) -> Result<Self> {
        let mut videos = HashSet::new();
        let mut captions = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            let line = i + 1;
            validate_entry(e, line, &mut videos, &mut captions)?;
        }
        Ok(Self {
            name: name.into(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoEntry> {
        self.entries.iter().find(|e| e.video_id == video_id)
    }

    pub fn video_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.video_id.as_str())
    }

    /// `(caption, owning video)` pairs in manifest order.
    pub fn captions(&self) -> impl Iterator<Item = (&Caption, &VideoEntry)> {
        self.entries
            .iter()
            .flat_map(|e| e.captions.iter().map(move |c| (c, e)))
    }

    pub fn caption_count(&self) -> usize {
        self.entries.iter().map(|e| e.captions.len()).sum()
    }

    /// Maps every video id and every caption id to its video entry.
    pub fn lookup(&self) -> HashMap<&str, &VideoEntry> {
        let mut map = HashMap::new();
        for e in &self.entries {
            map.insert(e.video_id.as_str(), e);
        }
        for e in &self.entries {
            for c in &e.captions {
                map.entry(c.caption_id.as_str()).or_insert(e);
            }
        }
        map
    }

    pub fn splits(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.split.as_str()) {
                seen.push(e.split.as_str());
            }
        }
        seen
    }
}

fn validate_entry<'a>(
    e: &'a VideoEntry,
    line: usize,
    videos: &mut HashSet<&'a str>,
    captions: &mut HashSet<&'a str>,
) -> Result<()> {
    let fail = |message: String| Err(Error::Parse { line, message });
    if !videos.insert(&e.video_id) {
        return fail(format!("duplicate video_id {:?}", e.video_id));
    }
    if e.captions.is_empty() {
        return fail(format!("video {:?} has no captions", e.video_id));
    }
    for c in &e.captions {
        if !captions.insert(&c.caption_id) {
            return fail(format!("duplicate caption_id {:?}", c.caption_id));
        }
    }
    if let Some(d) = e.duration_seconds {
        if !(d >= 0.0 && d.is_finite()) {
            return fail(format!("invalid duration {d} for {:?}", e.video_id));
        }
    }
    Ok(())
}

fn field<'a>(
    obj: &'a serde_json::Map<String, Value>,
    name: &'static str,
    line: usize,
) -> Result<&'a Value> {
    match obj.get(name) {
        Some(v) => Ok(v),
        None => Err(Error::MissingField { line, field: name }),
    }
}

fn string_field(
    obj: &serde_json::Map<String, Value>,
    name: &'static str,
    line: usize,
) -> Result<String> {
    field(obj, name, line)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("`{name}` must be a string"),
        })
}

fn parse_entry(text: &str, line: usize) -> Result<VideoEntry> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line,
        message: "expected a JSON object".into(),
    })?;
    let video_id = string_field(obj, "video_id", line)?;
    let split = string_field(obj, "split", line)?;
    let captions = field(obj, "captions", line)?
        .as_array()
        .ok_or_else(|| Error::Parse {
            line,
            message: "`captions` must be an array".into(),
        })?
        .iter()
        .map(|c| {
            let c = c.as_object().ok_or_else(|| Error::Parse {
                line,
                message: "caption must be an object".into(),
            })?;
            Ok(Caption {
                caption_id: string_field(c, "caption_id", line)?,
                text: string_field(c, "text", line)?,
            })
        })
        .collect::<Result<_>>()?;
    let duration_seconds = match obj.get("duration_seconds") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or_else(|| Error::Parse {
            line,
            message: "`duration_seconds` must be a number".into(),
        })?),
    };
    Ok(VideoEntry {
        video_id,
        captions,
        duration_seconds,
        split,
    })
}

/// Parses JSON Lines; blank lines are skipped and errors carry the 1-based
/// line number.
pub fn parse_manifest<R: BufRead>(name: impl Into<String>, reader: R) -> Result<CorpusManifest> {
    let mut entries = Vec::new();
    let mut videos = HashSet::new();
    let mut captions = HashSet::new();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(parse_entry(&line, line_no)?);
        lines.push(line_no);
    }
    for (e, &line) in entries.iter().zip(&lines) {
        validate_entry(e, line, &mut videos, &mut captions)?;
    }
    Ok(CorpusManifest {
        name: name.into(),
        entries,
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_manifest(name, BufReader::new(File::open(path)?))
}

pub fn write_manifest(manifest: &CorpusManifest, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in &manifest.entries {
        serde_json::to_writer(&mut w, e).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Entries tagged `split_name`; `"all"` keeps everything.
pub fn select_split(manifest: &CorpusManifest, split_name: &str) -> Result<CorpusManifest> {
    if split_name == "all" {
        return Ok(manifest.clone());
    }
    let entries: Vec<VideoEntry> = manifest
        .entries
        .iter()
        .filter(|e| e.split == split_name)
        .cloned()
        .collect();
    if entries.is_empty() {
        return Err(if KNOWN_SPLITS.contains(&split_name) {
            Error::EmptySplit(split_name.to_owned())
        } else {
            Error::UnknownSplit(split_name.to_owned())
        });
    }
    Ok(CorpusManifest {
        name: format!("{}:{split_name}", manifest.name),
        entries,
    })
}

/// Entries whose video id is listed, in list order.
pub fn select_ids(
    manifest: &CorpusManifest,
    ids: &[String],
    label: &str,
) -> Result<CorpusManifest> {
    if ids.is_empty() {
        return Err(Error::EmptySplit(label.to_owned()));
    }
    let index: HashMap<&str, &VideoEntry> = manifest
        .entries
        .iter()
        .map(|e| (e.video_id.as_str(), e))
        .collect();
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
        let e = index
            .get(id.as_str())
            .ok_or_else(|| Error::Integrity(format!("split {label} lists unknown video {id}")))?;
        entries.push((*e).clone());
    }
    Ok(CorpusManifest {
        name: format!("{}:{label}", manifest.name),
        entries,
    })
}

/// One id per line; blank lines and `#` comments are ignored.
pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// Every archive id must be known to the full manifest, and every video
/// (resp. caption) of the selected split must be present in the archive.
pub fn check_references<'a>(
    full: &CorpusManifest,
    selected: &CorpusManifest,
    video_ids: impl IntoIterator<Item = &'a str>,
    caption_ids: impl IntoIterator<Item = &'a str>,
) -> Result<()> {
    let known_videos: HashSet<&str> = full.video_ids().collect();
    let known_captions: HashSet<&str> = full
        .captions()
        .map(|(c, _)| c.caption_id.as_str())
        .collect();

    let mut have_videos = HashSet::new();
    for id in video_ids {
        if !known_videos.contains(id) {
            return Err(Error::Integrity(format!(
                "archive video {id} is not in the manifest"
            )));
        }
        have_videos.insert(id);
    }
    let mut have_captions = HashSet::new();
    for id in caption_ids {
        if !known_captions.contains(id) {
            return Err(Error::Integrity(format!(
                "archive caption {id} is not in the manifest"
            )));
        }
        have_captions.insert(id);
    }
    for e in &selected.entries {
        if !have_videos.contains(e.video_id.as_str()) {
            return Err(Error::Integrity(format!(
                "video {} has no embedding",
                e.video_id
            )));
        }
        for c in &e.captions {
            if !have_captions.contains(c.caption_id.as_str()) {
                return Err(Error::Integrity(format!(
                    "caption {} has no embedding",
                    c.caption_id
                )));
            }
        }
    }
    Ok(())
}

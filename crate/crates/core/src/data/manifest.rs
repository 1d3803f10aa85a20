//! Newline-delimited JSON dataset manifests.
//!
//! Every non-blank line is one JSON object. An optional first line of the
//! form `{"manifest": "<id>", "role": "real" | "synthetic" | "noise"}` names
//! the dataset; without it the id is the file stem and the role is
//! `synthetic`. Utterance lines carry `id`, `audio_path`, `speaker`, and
//! optionally `text` and `duration_s`. Relative audio paths resolve against
//! the manifest's directory. A missing `duration_s` is read from the WAV
//! header.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetRole {
    #[serde(alias = "real_reference")]
    Real,
    Synthetic,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    pub id: String,
    pub audio_path: PathBuf,
    pub speaker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub id: String,
    pub role: DatasetRole,
    entries: Vec<UtteranceEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    manifest: String,
    role: DatasetRole,
}

#[derive(Serialize)]
struct HeaderOut<'a> {
    manifest: &'a str,
    role: DatasetRole,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    id: String,
    audio_path: PathBuf,
    speaker: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    duration_s: Option<f64>,
}

impl DatasetManifest {
    /// Validates uniqueness and non-emptiness. Paths are not checked here.
    pub fn new(
        id: impl Into<String>,
        role: DatasetRole,
        entries: Vec<UtteranceEntry>,
    ) -> Result<Self, DataError> {
        if entries.is_empty() {
            return Err(DataError::MalformedRecord {
                line: 0,
                reason: "manifest has no utterances".into(),
            });
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(DataError::DuplicateId(e.id.clone()));
            }
            if !e.duration_s.is_finite() || e.duration_s <= 0.0 {
                return Err(DataError::MalformedRecord {
                    line: 0,
                    reason: format!("utterance `{}` has non-positive duration", e.id),
                });
            }
        }
        Ok(Self { id: id.into(), role, entries })
    }

    pub fn entries(&self) -> &[UtteranceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<UtteranceEntry> {
        self.entries
    }

    pub fn with_role(mut self, role: DatasetRole) -> Self {
        self.role = role;
        self
    }

    /// Reads and validates a manifest file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let default_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&text, base, &default_id)
    }

    /// Parses manifest text; relative audio paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path, default_id: &str) -> Result<Self, DataError> {
        let mut id = default_id.to_owned();
        let mut role = DatasetRole::Synthetic;
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        let mut first = true;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| {
                DataError::MalformedRecord { line, reason: e.to_string() }
            })?;
            if first && value.get("manifest").is_some() {
                let header: HeaderRecord = serde_json::from_value(value).map_err(|e| {
                    DataError::MalformedRecord { line, reason: e.to_string() }
                })?;
                id = header.manifest;
                role = header.role;
                first = false;
                continue;
            }
            first = false;

            let rec: EntryRecord = serde_json::from_value(value)
                .map_err(|e| DataError::MalformedRecord { line, reason: e.to_string() })?;
            if rec.id.is_empty() {
                return Err(DataError::MalformedRecord { line, reason: "empty id".into() });
            }
            if !seen.insert(rec.id.clone()) {
                return Err(DataError::DuplicateId(rec.id));
            }
            let audio_path = if rec.audio_path.is_relative() {
                base.join(&rec.audio_path)
            } else {
                rec.audio_path
            };
            if !audio_path.is_file() {
                return Err(DataError::MissingFile { line, path: audio_path });
            }
            let duration_s = match rec.duration_s {
                Some(d) => d,
                None => wav_duration(&audio_path)
                    .map_err(|reason| DataError::MalformedRecord { line, reason })?,
            };
            if !duration_s.is_finite() || duration_s <= 0.0 {
                return Err(DataError::MalformedRecord {
                    line,
                    reason: format!("duration_s must be positive, got {duration_s}"),
                });
            }
            entries.push(UtteranceEntry {
                id: rec.id,
                audio_path,
                speaker: rec.speaker,
                text: rec.text,
                duration_s,
            });
        }

        if entries.is_empty() {
            return Err(DataError::MalformedRecord {
                line: 1,
                reason: "manifest has no utterances".into(),
            });
        }
        Ok(Self { id, role, entries })
    }

    /// Serializes with a header line. Audio paths are written verbatim.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&HeaderOut { manifest: &self.id, role: self.role })
            .expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| DataError::io(path, e))
    }
}

fn wav_duration(path: &Path) -> Result<f64, String> {
    let reader = hound::WavReader::open(path)
        .map_err(|e| format!("no duration_s and {} is not a readable WAV: {e}", path.display()))?;
    let spec = reader.spec();
    Ok(reader.duration() as f64 / spec.sample_rate as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(dir: &Path, name: &str) {
        fs::write(dir.join(name), b"").unwrap();
    }

    #[test]
    fn reads_two_entries_in_order() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.wav");
        touch(dir.path(), "b.wav");
        let text = concat!(
            r#"{"id":"u2","audio_path":"b.wav","speaker":"s1","duration_s":4.0}"#, "\n",
            r#"{"id":"u1","audio_path":"a.wav","speaker":"s2","text":"hi","duration_s":3.5}"#, "\n",
        );
        let path = dir.path().join("clean.jsonl");
        fs::write(&path, text).unwrap();
        let m = DatasetManifest::read(&path).unwrap();
        assert_eq!(m.id, "clean");
        assert_eq!(m.role, DatasetRole::Synthetic);
        assert_eq!(m.len(), 2);
        assert_eq!(m.entries()[0].id, "u2");
        assert_eq!(m.entries()[1].text.as_deref(), Some("hi"));
        assert_eq!(m.entries()[0].audio_path, dir.path().join("b.wav"));
    }

    #[test]
    fn header_sets_id_and_role() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.wav");
        let text = concat!(
            r#"{"manifest":"zeros","role":"noise"}"#, "\n",
            r#"{"id":"u1","audio_path":"a.wav","speaker":"n","duration_s":3.0}"#, "\n",
        );
        let m = DatasetManifest::parse(text, dir.path(), "x").unwrap();
        assert_eq!(m.id, "zeros");
        assert_eq!(m.role, DatasetRole::Noise);
    }

    #[test]
    fn duplicate_id() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.wav");
        let line = r#"{"id":"u1","audio_path":"a.wav","speaker":"s","duration_s":3.0}"#;
        let text = format!("{line}\n{line}\n");
        assert!(matches!(
            DatasetManifest::parse(&text, dir.path(), "x"),
            Err(DataError::DuplicateId(id)) if id == "u1"
        ));
    }

    #[test]
    fn empty_file_is_malformed() {
        assert!(matches!(
            DatasetManifest::parse("", Path::new("."), "x"),
            Err(DataError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn malformed_line_number_reported() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.wav");
        let text = concat!(
            r#"{"id":"u1","audio_path":"a.wav","speaker":"s","duration_s":3.0}"#, "\n",
            "\n",
            r#"{"id":"u2","speaker":"s"}"#, "\n",
        );
        match DatasetManifest::parse(text, dir.path(), "x") {
            Err(DataError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file() {
        let text = r#"{"id":"u1","audio_path":"nope.wav","speaker":"s","duration_s":3.0}"#;
        assert!(matches!(
            DatasetManifest::parse(text, Path::new("/nonexistent"), "x"),
            Err(DataError::MissingFile { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_read_preserves_entries() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.wav");
        let entry = UtteranceEntry {
            id: "u1".into(),
            audio_path: dir.path().join("a.wav"),
            speaker: "s".into(),
            text: None,
            duration_s: 3.25,
        };
        let m = DatasetManifest::new("ref", DatasetRole::Real, vec![entry]).unwrap();
        let path = dir.path().join("m.jsonl");
        m.write(&path).unwrap();
        assert_eq!(DatasetManifest::read(&path).unwrap(), m);
    }
}

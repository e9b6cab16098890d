//! Image manifest: one JSON object per line, one line per image.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Unassigned,
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Unassigned => "unassigned",
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Where an augmented image came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub parent: String,
    /// Operation descriptor, e.g. `brightness(+0.75)`.
    pub op: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub source_dataset: String,
    pub original_class: String,
    pub final_class: String,
    #[serde(default)]
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
    pub path: String,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
}

impl ImageRecord {
    pub fn is_augmented(&self) -> bool {
        self.lineage.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub global_seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<ImageRecord>,
    pub meta: ManifestMeta,
}

impl Manifest {
    pub fn new(records: Vec<ImageRecord>) -> Self {
        Self {
            records,
            meta: ManifestMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records per final class, in class-name order.
    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.final_class.as_str()).or_default() += 1;
        }
        counts
    }

    pub fn classes(&self) -> Vec<&str> {
        self.class_counts().into_keys().collect()
    }

    /// Checks id uniqueness and that no augmented record is in the test split.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.records.len());
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::validation(format!("duplicate record id `{}`", r.id)));
            }
            if r.is_augmented() && r.split == Split::Test {
                return Err(Error::validation(format!(
                    "augmented record `{}` assigned to the test split",
                    r.id
                )));
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: Read>(r: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ImageRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        Ok(Self::new(records))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, class: &str) -> ImageRecord {
        ImageRecord {
            id: id.into(),
            source_dataset: "src".into(),
            original_class: class.into(),
            final_class: class.into(),
            split: Split::Unassigned,
            lineage: None,
            path: format!("{id}.png"),
            width: 4,
            height: 4,
        }
    }

    #[test]
    fn jsonl_layout_and_round_trip() {
        let mut m = Manifest::new(vec![rec("a", "x"), rec("b", "y")]);
        m.records[1].split = Split::Train;
        m.records[1].lineage = Some(Lineage {
            parent: "a".into(),
            op: "flip(horizontal)".into(),
            seed: u64::MAX,
        });
        let text = m.to_jsonl_string();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"id":"a","source_dataset":"src","original_class":"x","final_class":"x","split":"unassigned","path":"a.png","width":4,"height":4}"#
        );
        assert!(text.lines().nth(1).unwrap().contains(r#""lineage":{"parent":"a","op":"flip(horizontal)","seed":18446744073709551615}"#));
        let back = Manifest::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back.records, m.records);
    }

    #[test]
    fn minimal_rows_parse() {
        let line = r#"{"id":"q","source_dataset":"s","original_class":"c","final_class":"c","split":"test","path":"p"}"#;
        let m = Manifest::read_jsonl(line.as_bytes()).unwrap();
        assert_eq!(m.records[0].split, Split::Test);
        assert_eq!(m.records[0].width, 0);
        let err = Manifest::read_jsonl(format!("{line}\n{{\"id\":1}}").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn validate_catches_duplicates_and_augmented_test() {
        let m = Manifest::new(vec![rec("a", "x"), rec("a", "x")]);
        assert!(m.validate().is_err());
        let mut aug = rec("b", "x");
        aug.split = Split::Test;
        aug.lineage = Some(Lineage {
            parent: "a".into(),
            op: "identity".into(),
            seed: 1,
        });
        assert!(Manifest::new(vec![rec("a", "x"), aug]).validate().is_err());
    }
}

//! Dataset construction: merge sources, clean up classes, split, balance.
//!
//! The usual order is [`merge_sources`] -> [`apply_class_rules`] -> holdout
//! [`stratified_split`] -> [`balance_to_target`] -> train/val
//! [`stratified_split`]. The holdout runs on original images only, so test
//! images are never augmented.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{file_stem_for, mode_ops, plan_entry, AugConfig, AugOp, AugmentationMode};
use crate::error::{Error, Result};
use crate::manifest::{ImageRecord, Lineage, Manifest, Split};
use crate::seed::{derive_seed, rng};

/// Smallest class size kept by cleanup is `DEFAULT_MIN_CLASS_SIZE + 1`.
pub const DEFAULT_MIN_CLASS_SIZE: usize = 200;
pub const DEFAULT_BALANCE_TARGET: usize = 3_500;

/// Shipped rule and roster files.
pub mod data {
    pub const DELETE_RULES: &str = include_str!("../data/class_deletions.json");
    pub const MERGE_RULES: &str = include_str!("../data/class_merges.json");
    pub const PLDC80_ROSTER: &str = include_str!("../data/pldc80_roster.json");
    /// The nine merged sources with synthetic per-class counts.
    pub const SOURCES_FIXTURE: &str = include_str!("../data/sources_synthetic.json");
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "ppm"];

/// One input dataset: class name to image files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub name: String,
    pub classes: BTreeMap<String, Vec<String>>,
}

/// Source entry of a sources file. Exactly one of `dir`, `classes` or
/// `class_counts` is set; `class_counts` produces synthetic file names for
/// manifest-only runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_counts: Option<BTreeMap<String, usize>>,
}

impl SourceSpec {
    /// Resolves to concrete file lists; relative `dir`s are taken from `base`.
    pub fn resolve(&self, base: &Path) -> Result<Source> {
        let set = [self.dir.is_some(), self.classes.is_some(), self.class_counts.is_some()];
        if set.iter().filter(|s| **s).count() != 1 {
            return Err(Error::invalid(format!(
                "source `{}` needs exactly one of dir, classes, class_counts",
                self.name
            )));
        }
        let classes = if let Some(dir) = &self.dir {
            scan_class_dirs(&base.join(dir))?
        } else if let Some(classes) = &self.classes {
            classes.clone()
        } else {
            self.class_counts
                .as_ref()
                .expect("checked above")
                .iter()
                .map(|(class, &n)| {
                    let files = (1..=n).map(|i| format!("{}/{i:06}.jpg", file_stem_for(class))).collect();
                    (class.clone(), files)
                })
                .collect()
        };
        Ok(Source {
            name: self.name.clone(),
            classes,
        })
    }
}

fn scan_class_dirs(root: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut classes = BTreeMap::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let class_dir = entry.map_err(|e| Error::io(root, e))?.path();
        if !class_dir.is_dir() {
            continue;
        }
        let class = class_dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let mut files = Vec::new();
        for f in fs::read_dir(&class_dir).map_err(|e| Error::io(&class_dir, e))? {
            let path = f.map_err(|e| Error::io(&class_dir, e))?.path();
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
                files.push(path.display().to_string());
            }
        }
        files.sort();
        classes.insert(class, files);
    }
    Ok(classes)
}

pub fn load_source_specs(path: &Path) -> Result<Vec<SourceSpec>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text)
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// One record per file; `final_class` starts as `source::class`.
pub fn merge_sources(sources: &[Source]) -> Result<Manifest> {
    let mut names = HashSet::new();
    let mut ids = HashSet::new();
    let mut records = Vec::new();
    for source in sources {
        if !names.insert(source.name.as_str()) {
            return Err(Error::invalid(format!("duplicate source name `{}`", source.name)));
        }
        for (class, files) in &source.classes {
            if files.is_empty() {
                return Err(Error::invalid(format!("source `{}` class `{class}` has no files", source.name)));
            }
            for file in files {
                let base = Path::new(file).file_name().and_then(|s| s.to_str()).unwrap_or(file);
                let id = format!("{}/{}/{}", source.name, class, base);
                if !ids.insert(id.clone()) {
                    return Err(Error::invalid(format!("duplicate image id `{id}`")));
                }
                records.push(ImageRecord {
                    id,
                    source_dataset: source.name.clone(),
                    original_class: class.clone(),
                    final_class: format!("{}::{class}", source.name),
                    split: Split::Unassigned,
                    lineage: None,
                    path: file.clone(),
                    width: 0,
                    height: 0,
                });
            }
        }
    }
    Ok(Manifest::new(records))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteReason {
    TooSmall,
    Complex,
    MultiDisease,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "args", rename_all = "lowercase")]
pub enum ClassRule {
    Delete { class: String, reason: DeleteReason },
    Merge { class_a: String, class_b: String, into: String },
}

pub fn parse_rules(text: &str) -> Result<Vec<ClassRule>> {
    parse_json(text)
}

pub fn load_rules(path: &Path) -> Result<Vec<ClassRule>> {
    parse_rules(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Deletion list followed by merge list, as shipped.
pub fn builtin_rules() -> Vec<ClassRule> {
    let mut rules = parse_rules(data::DELETE_RULES).expect("shipped delete rules parse");
    rules.extend(parse_rules(data::MERGE_RULES).expect("shipped merge rules parse"));
    rules
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub class: String,
    pub plant: String,
}

pub fn pldc80_roster() -> Vec<RosterEntry> {
    parse_json(data::PLDC80_ROSTER).expect("shipped roster parses")
}

pub fn sources_fixture() -> Vec<SourceSpec> {
    parse_json(data::SOURCES_FIXTURE).expect("shipped sources fixture parses")
}

/// Class name to plant.
pub fn plant_map(roster: &[RosterEntry]) -> BTreeMap<String, String> {
    roster.iter().map(|r| (r.class.clone(), r.plant.clone())).collect()
}

/// Fails listing every final class missing from the roster.
pub fn check_roster(m: &Manifest, roster: &[RosterEntry]) -> Result<()> {
    let known: HashSet<&str> = roster.iter().map(|r| r.class.as_str()).collect();
    let unknown: Vec<&str> = m.classes().into_iter().filter(|c| !known.contains(c)).collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::validation(format!("classes not in roster: {}", unknown.join(", "))))
    }
}

/// Normalized key used to spot classes naming the same plant/disease pair:
/// the part after `::`, lower-cased, punctuation and separators collapsed.
pub fn class_key(name: &str) -> String {
    let tail = name.rsplit("::").next().unwrap_or(name);
    tail.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanupReport {
    pub classes_before: usize,
    pub classes_after_delete: usize,
    pub classes_after: usize,
    pub deleted: Vec<(String, DeleteReason, usize)>,
    pub merged: Vec<(String, String, String)>,
    /// Distinct surviving classes whose [`class_key`] collides.
    pub key_collisions: Vec<(String, String)>,
}

/// Deletes explicit and undersized (`count <= min_size`) classes, then applies
/// merges.
pub fn apply_class_rules(m: &Manifest, rules: &[ClassRule], min_size: usize) -> Result<(Manifest, CleanupReport)> {
    let counts: BTreeMap<String, usize> = m.class_counts().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut missing = BTreeSet::new();
    for rule in rules {
        let names: Vec<&String> = match rule {
            ClassRule::Delete { class, .. } => vec![class],
            ClassRule::Merge { class_a, class_b, .. } => vec![class_a, class_b],
        };
        missing.extend(names.into_iter().filter(|n| !counts.contains_key(*n)).cloned());
    }
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "rules reference missing classes: {}",
            missing.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }

    let mut deleted: BTreeMap<String, DeleteReason> = BTreeMap::new();
    for rule in rules {
        if let ClassRule::Delete { class, reason } = rule {
            deleted.insert(class.clone(), *reason);
        }
    }
    for (class, &n) in &counts {
        if n <= min_size {
            deleted.entry(class.clone()).or_insert(DeleteReason::TooSmall);
        }
    }

    let mut relabel: BTreeMap<String, String> = BTreeMap::new();
    let mut merged = Vec::new();
    for rule in rules {
        if let ClassRule::Merge { class_a, class_b, into } = rule {
            for c in [class_a, class_b] {
                if deleted.contains_key(c) {
                    return Err(Error::validation(format!("merge rule references deleted class `{c}`")));
                }
                if relabel.insert(c.clone(), into.clone()).is_some() {
                    return Err(Error::validation(format!("class `{c}` is merged twice")));
                }
            }
            merged.push((class_a.clone(), class_b.clone(), into.clone()));
        }
    }

    let records: Vec<ImageRecord> = m
        .records
        .iter()
        .filter(|r| !deleted.contains_key(&r.final_class))
        .map(|r| {
            let mut r = r.clone();
            if let Some(into) = relabel.get(&r.final_class) {
                r.final_class = into.clone();
            }
            r
        })
        .collect();
    let out = Manifest {
        records,
        meta: m.meta.clone(),
    };

    let surviving = out.classes();
    let mut by_key: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for c in &surviving {
        by_key.entry(class_key(c)).or_default().push(c);
    }
    let key_collisions = by_key
        .values()
        .filter(|v| v.len() > 1)
        .flat_map(|v| v.windows(2).map(|w| (w[0].to_string(), w[1].to_string())))
        .collect();

    let report = CleanupReport {
        classes_before: counts.len(),
        classes_after_delete: counts.len() - deleted.len(),
        classes_after: surviving.len(),
        deleted: deleted.iter().map(|(c, r)| (c.clone(), *r, counts[c])).collect(),
        merged,
        key_collisions,
    };
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitKind {
    /// Originals into train/test, `test_fraction` held out.
    Holdout { test_fraction: f64 },
    /// Originals into train/test with `train_fraction` for training.
    Ratio { train_fraction: f64 },
    /// Train records into train/val.
    TrainVal { val_fraction: f64 },
}

/// Always stratified per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub seed: u64,
}

/// `floor(x + 0.5)`, tolerant of binary representation error at exact halves.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Train-side count for a class of `n` at train fraction `r`.
pub fn train_count(n: usize, r: f64) -> usize {
    round_half_up(r * n as f64).min(n)
}

/// Per-class seeded split. Within a class records are ordered by id and then
/// shuffled, so the result depends only on the record set and the seed.
/// Returns warnings for classes too small to split.
pub fn stratified_split(m: &Manifest, spec: &SplitSpec) -> Result<(Manifest, Vec<String>)> {
    let (fraction, train_fraction, first, second, tag) = match spec.kind {
        SplitKind::Holdout { test_fraction } => (test_fraction, 1.0 - test_fraction, Split::Train, Split::Test, "holdout"),
        SplitKind::Ratio { train_fraction } => (train_fraction, train_fraction, Split::Train, Split::Test, "ratio"),
        SplitKind::TrainVal { val_fraction } => (val_fraction, 1.0 - val_fraction, Split::Train, Split::Val, "train_val"),
    };
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let train_val = matches!(spec.kind, SplitKind::TrainVal { .. });

    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in m.records.iter().enumerate() {
        if r.final_class.is_empty() {
            return Err(Error::validation(format!("record `{}` has no class", r.id)));
        }
        if train_val {
            if r.split == Split::Train {
                by_class.entry(&r.final_class).or_default().push(i);
            }
        } else {
            if r.is_augmented() {
                return Err(Error::validation(format!(
                    "{tag} split only takes original images, `{}` is augmented",
                    r.id
                )));
            }
            by_class.entry(&r.final_class).or_default().push(i);
        }
    }

    let mut out = m.clone();
    let mut warnings = Vec::new();
    let seed = spec.seed.to_string();
    for (class, mut idx) in by_class {
        idx.sort_by(|&a, &b| m.records[a].id.cmp(&m.records[b].id));
        let mut rng = rng(derive_seed(&[&seed, tag, class]));
        idx.shuffle(&mut rng);
        if idx.len() < 2 {
            warnings.push(format!("class `{class}` has {} image(s); not split", idx.len()));
        }
        let k = train_count(idx.len(), train_fraction);
        for (pos, &i) in idx.iter().enumerate() {
            out.records[i].split = if pos < k { first } else { second };
        }
    }
    Ok((out, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassBalance {
    pub class: String,
    pub originals: usize,
    pub pool: usize,
    pub selected: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub classes: Vec<ClassBalance>,
    pub warnings: Vec<String>,
}

pub fn balance_to_target(m: &Manifest, target: usize, mode: AugmentationMode, seed: u64) -> Result<(Manifest, BalanceReport)> {
    balance_to_target_with(m, target, mode, seed, &AugConfig::default())
}

/// Expands every train class into its augmentation pool and samples exactly
/// `target` records: without replacement when the pool is large enough,
/// otherwise the whole pool plus duplicates drawn with replacement (ids
/// suffixed `#dupN`). Non-train records pass through unchanged and first.
pub fn balance_to_target_with(
    m: &Manifest,
    target: usize,
    mode: AugmentationMode,
    seed: u64,
    cfg: &AugConfig,
) -> Result<(Manifest, BalanceReport)> {
    if target == 0 {
        return Err(Error::invalid("balance target must be positive"));
    }
    let mut train: BTreeMap<&str, Vec<&ImageRecord>> = BTreeMap::new();
    let mut records = Vec::with_capacity(m.len());
    for r in &m.records {
        match r.split {
            Split::Unassigned => {
                return Err(Error::validation(format!("record `{}` has no split; split before balancing", r.id)))
            }
            Split::Train if r.is_augmented() => {
                return Err(Error::validation(format!("record `{}` is already augmented", r.id)))
            }
            Split::Train => train.entry(&r.final_class).or_default().push(r),
            _ => records.push(r.clone()),
        }
    }

    let mut report = BalanceReport::default();
    let seed_str = seed.to_string();
    let ops = mode_ops(mode, cfg);
    for (class, mut originals) in train {
        originals.sort_by(|a, b| a.id.cmp(&b.id));
        // pool member i is op i % len(ops) applied to original i / len(ops)
        let pool = originals.len() * ops.len();
        let member = |i: usize| -> ImageRecord {
            let parent = originals[i / ops.len()];
            let entry = plan_entry(&parent.id, i % ops.len(), ops[i % ops.len()], seed);
            if entry.op == AugOp::Identity {
                return parent.clone();
            }
            let id = entry.output_id();
            let (width, height) = match entry.op {
                AugOp::Rotate { quarter_turns } if quarter_turns % 2 == 1 => (parent.height, parent.width),
                _ => (parent.width, parent.height),
            };
            ImageRecord {
                path: format!("augmented/{}.png", file_stem_for(&id)),
                id,
                lineage: Some(Lineage {
                    parent: parent.id.clone(),
                    op: entry.op.to_string(),
                    seed: entry.stream_seed,
                }),
                width,
                height,
                ..parent.clone()
            }
        };

        let mut rng = rng(derive_seed(&[&seed_str, "balance", class]));
        let mut duplicates = 0;
        if pool >= target {
            let mut picked = index::sample(&mut rng, pool, target).into_vec();
            picked.sort_unstable();
            records.extend(picked.into_iter().map(member));
        } else {
            let start = records.len();
            records.extend((0..pool).map(member));
            duplicates = target - pool;
            for n in 1..=duplicates {
                let src = records[start + rng.random_range(0..pool)].clone();
                let lineage = src.lineage.clone().unwrap_or_else(|| Lineage {
                    parent: src.id.clone(),
                    op: AugOp::Identity.to_string(),
                    seed: 0,
                });
                records.push(ImageRecord {
                    id: format!("{}#dup{n}", src.id),
                    lineage: Some(lineage),
                    ..src
                });
            }
            report.warnings.push(format!(
                "class `{class}`: pool of {pool} below target {target}; {duplicates} duplicates sampled with replacement"
            ));
        }
        report.classes.push(ClassBalance {
            class: class.to_string(),
            originals: originals.len(),
            pool,
            selected: target,
            duplicates,
        });
    }
    Ok((
        Manifest {
            records,
            meta: m.meta.clone(),
        },
        report,
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub unassigned: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test + self.unassigned
    }

    fn add(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Val => self.val += 1,
            Split::Test => self.test += 1,
            Split::Unassigned => self.unassigned += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    /// Distinct plants over classes found in the plant map; 0 without a map.
    pub plants: usize,
    pub classes: usize,
    pub total: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub unassigned: usize,
    pub augmented: usize,
    pub per_class: BTreeMap<String, SplitCounts>,
    /// Percent of `total` in train, val and test.
    pub split_percent: [f64; 3],
}

pub fn summarize(m: &Manifest, plants: Option<&BTreeMap<String, String>>) -> Summary {
    let mut per_class: BTreeMap<String, SplitCounts> = BTreeMap::new();
    let mut all = SplitCounts::default();
    let mut augmented = 0;
    for r in &m.records {
        per_class.entry(r.final_class.clone()).or_default().add(r.split);
        all.add(r.split);
        augmented += usize::from(r.is_augmented());
    }
    let plant_count = plants.map_or(0, |map| {
        per_class.keys().filter_map(|c| map.get(c)).collect::<BTreeSet<_>>().len()
    });
    let total = all.total();
    let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
    Summary {
        plants: plant_count,
        classes: per_class.len(),
        total,
        train: all.train,
        val: all.val,
        test: all.test,
        unassigned: all.unassigned,
        augmented,
        split_percent: [pct(all.train), pct(all.val), pct(all.test)],
        per_class,
    }
}

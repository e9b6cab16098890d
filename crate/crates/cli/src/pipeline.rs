//! augment, build-dataset and split.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use leafkit::augment::{
    apply_aug_op, build_plan, execute_plan, AugOp, AugmentationMode, DirSink, Image, ImageLoader, OutputFormat,
};
use leafkit::dataset::{
    apply_class_rules, balance_to_target, builtin_rules, check_roster, load_rules, load_source_specs,
    merge_sources, plant_map, pldc80_roster, sources_fixture, stratified_split, summarize, RosterEntry,
    SourceSpec, SplitKind, SplitSpec, DEFAULT_BALANCE_TARGET, DEFAULT_MIN_CLASS_SIZE,
};
use leafkit::manifest::{ImageRecord, Manifest, Split};
use rayon::prelude::*;
use serde_json::json;

use crate::settings::{create_dir, ensure_outside, usage, write_text, Settings};
use crate::{AugmentArgs, BuildDatasetArgs, SplitArgs};

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "ppm"];

fn is_image(path: &Path) -> bool {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str()))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .with_context(|| format!("reading {}", dir.display()))?;
    paths.sort();
    Ok(paths)
}

/// Images directly in a directory (id = stem) and in its class
/// subdirectories (id = `class/stem`, class recorded on the row).
struct TreeLoader {
    dataset: String,
    images: BTreeMap<String, (String, PathBuf)>,
}

impl TreeLoader {
    fn scan(root: &Path) -> Result<Self> {
        let mut images = BTreeMap::new();
        let mut add = |id: String, class: &str, path: PathBuf| -> Result<()> {
            if let Some((_, prev)) = images.insert(id.clone(), (class.to_string(), path.clone())) {
                anyhow::bail!("{} and {} map to the same id `{id}`", prev.display(), path.display());
            }
            Ok(())
        };
        for path in sorted_entries(root)? {
            if path.is_dir() {
                let class = path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                for file in sorted_entries(&path)?.into_iter().filter(|p| is_image(p)) {
                    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                    add(format!("{class}/{stem}"), &class, file.clone())?;
                }
            } else if is_image(&path) {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                add(stem, "", path.clone())?;
            }
        }
        let dataset = root
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().and_then(|s| s.to_str()).map(str::to_string))
            .unwrap_or_default();
        Ok(Self { dataset, images })
    }

    fn ids(&self) -> Vec<String> {
        self.images.keys().cloned().collect()
    }
}

impl ImageLoader for TreeLoader {
    fn load(&self, id: &str) -> leafkit::Result<Image> {
        let (_, path) = self
            .images
            .get(id)
            .ok_or_else(|| leafkit::Error::InvalidArgument(format!("no image with id `{id}`")))?;
        Image::load(path)
    }

    fn record(&self, id: &str) -> Option<ImageRecord> {
        let (class, path) = self.images.get(id)?;
        Some(ImageRecord {
            id: id.to_string(),
            source_dataset: self.dataset.clone(),
            original_class: class.clone(),
            final_class: class.clone(),
            split: Split::Unassigned,
            lineage: None,
            path: path.display().to_string(),
            width: 0,
            height: 0,
        })
    }
}

pub fn augment(args: AugmentArgs, jobs: Option<usize>) -> Result<()> {
    let s = Settings::load(args.config.as_deref(), &["mode", "seed", "in", "out", "format", "manifest"])?;
    let jobs = s.init_pool(jobs)?;
    let input: PathBuf = s.require(args.input, "in")?;
    let out: PathBuf = s.require(args.out, "out")?;
    let mode: AugmentationMode = s.require(args.mode, "mode")?;
    let format: OutputFormat = s.pick(args.format, "format", OutputFormat::Png)?;
    let manifest_path = s.pick(args.manifest, "manifest", out.join("manifest.jsonl"))?;
    let seed = s.seed(args.seed)?;
    if !input.is_dir() {
        return usage(format!("--in {} is not a directory", input.display()));
    }
    ensure_outside(&input, &out)?;
    ensure_outside(&input, &manifest_path)?;

    let loader = TreeLoader::scan(&input)?;
    let ids = loader.ids();
    if ids.is_empty() {
        anyhow::bail!("no images found in {}", input.display());
    }
    let plan = build_plan(mode, &ids, seed)?;
    let sink = DirSink::new(&out, format)?;
    let rows = execute_plan(&plan, &loader, &sink, jobs)?;
    let manifest = Manifest::new(rows);
    if let Some(dir) = manifest_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    manifest.save(&manifest_path)?;
    println!(
        "{} source images x {} ({mode}) -> {} images in {}",
        ids.len(),
        mode.multiplier(),
        manifest.len(),
        out.display()
    );
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

fn load_roster(arg: &str) -> Result<Vec<RosterEntry>> {
    if arg == "builtin" {
        return Ok(pldc80_roster());
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {arg}"))
}

pub fn build_dataset(args: BuildDatasetArgs, jobs: Option<usize>) -> Result<()> {
    let s = Settings::load(
        args.config.as_deref(),
        &[
            "sources",
            "rules",
            "roster",
            "min_class_size",
            "target",
            "mode",
            "seed",
            "holdout",
            "val_fraction",
            "out",
            "materialize",
        ],
    )?;
    s.init_pool(jobs)?;
    let sources: String = s.require(args.sources, "sources")?;
    let out: PathBuf = s.require(args.out, "out")?;
    let rules_path: Option<PathBuf> = s.pick_opt(args.rules, "rules")?;
    let roster: Option<String> = s.pick_opt(args.roster, "roster")?;
    let min_size = s.pick(args.min_class_size, "min_class_size", DEFAULT_MIN_CLASS_SIZE)?;
    let target = s.pick(args.target, "target", DEFAULT_BALANCE_TARGET)?;
    let mode = s.pick(args.mode, "mode", AugmentationMode::Combined)?;
    let holdout = s.pick(args.holdout, "holdout", 0.2)?;
    let val_fraction = s.pick(args.val_fraction, "val_fraction", 0.2)?;
    let materialize = args.materialize || s.pick(None, "materialize", false)?;
    let seed = s.seed(args.seed)?;

    let (specs, base): (Vec<SourceSpec>, PathBuf) = if sources == "builtin" {
        (sources_fixture(), PathBuf::new())
    } else {
        let path = Path::new(&sources);
        ensure_outside(path, &out.join("manifest.jsonl"))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (load_source_specs(path)?, base)
    };
    let mut resolved = Vec::with_capacity(specs.len());
    for spec in &specs {
        if let Some(dir) = &spec.dir {
            ensure_outside(&base.join(dir), &out)?;
        }
        resolved.push(spec.resolve(&base).with_context(|| format!("source `{}`", spec.name))?);
    }
    let rules = match &rules_path {
        Some(p) => load_rules(p).with_context(|| format!("loading {}", p.display()))?,
        None => builtin_rules(),
    };

    let merged = merge_sources(&resolved)?;
    let (cleaned, cleanup) = apply_class_rules(&merged, &rules, min_size)?;
    let plants = match &roster {
        Some(arg) => {
            let entries = load_roster(arg)?;
            check_roster(&cleaned, &entries)?;
            Some(plant_map(&entries))
        }
        None => None,
    };
    let (held, mut split_warnings) = stratified_split(
        &cleaned,
        &SplitSpec {
            kind: SplitKind::Holdout { test_fraction: holdout },
            seed,
        },
    )?;
    let (balanced, balance) = balance_to_target(&held, target, mode, seed)?;
    let (mut manifest, more) = stratified_split(
        &balanced,
        &SplitSpec {
            kind: SplitKind::TrainVal { val_fraction },
            seed,
        },
    )?;
    split_warnings.extend(more);
    manifest.meta.global_seed = Some(seed);
    let params = &mut manifest.meta.params;
    params.insert("min_class_size".into(), json!(min_size));
    params.insert("target".into(), json!(target));
    params.insert("mode".into(), json!(mode.as_str()));
    params.insert("holdout".into(), json!(holdout));
    params.insert("val_fraction".into(), json!(val_fraction));

    let summary = summarize(&manifest, plants.as_ref());
    create_dir(&out)?;
    manifest.save(&out.join("manifest.jsonl"))?;
    let report = json!({
        "run": manifest.meta,
        "cleanup": cleanup,
        "split_warnings": split_warnings,
        "balance": balance,
        "summary": summary,
    });
    write_text(&out.join("summary.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;

    for w in split_warnings.iter().chain(&balance.warnings) {
        eprintln!("warning: {w}");
    }
    println!(
        "classes {} -> {} after deletion -> {} after merging",
        cleanup.classes_before, cleanup.classes_after_delete, cleanup.classes_after
    );
    if plants.is_some() {
        println!("plants {}", summary.plants);
    }
    println!(
        "images {}: train {}, val {}, test {} ({} augmented)",
        summary.total, summary.train, summary.val, summary.test, summary.augmented
    );
    if materialize {
        let written = render_augmented(&held, &manifest, &out)?;
        println!("rendered {written} augmented images under {}", out.join("augmented").display());
    }
    println!("wrote {}", out.join("manifest.jsonl").display());
    Ok(())
}

/// Renders every derived record whose image lives under `out`, from its
/// parent's file in `originals`.
fn render_augmented(originals: &Manifest, manifest: &Manifest, out: &Path) -> Result<usize> {
    let parents: HashMap<&str, &str> = originals.records.iter().map(|r| (r.id.as_str(), r.path.as_str())).collect();
    let mut seen = HashSet::new();
    let jobs: Vec<(&str, &str, AugOp, u64)> = manifest
        .records
        .iter()
        .filter_map(|r| {
            let l = r.lineage.as_ref()?;
            (r.path.starts_with("augmented/") && seen.insert(r.path.as_str())).then_some((r, l))
        })
        .map(|(r, l)| -> Result<_> {
            let parent = parents
                .get(l.parent.as_str())
                .with_context(|| format!("parent `{}` of `{}` not in manifest", l.parent, r.id))?;
            Ok((r.path.as_str(), *parent, l.op.parse::<AugOp>()?, l.seed))
        })
        .collect::<Result<_>>()?;
    create_dir(&out.join("augmented"))?;
    jobs.par_iter().try_for_each(|(path, parent, op, seed)| -> Result<()> {
        let img = Image::load(Path::new(parent))?;
        apply_aug_op(&img, op, *seed)?.save(&out.join(path))?;
        Ok(())
    })?;
    Ok(jobs.len())
}

pub fn split(args: SplitArgs, jobs: Option<usize>) -> Result<()> {
    let s = Settings::load(
        args.config.as_deref(),
        &["manifest", "dir", "ratio", "holdout", "val_fraction", "seed", "out"],
    )?;
    s.init_pool(jobs)?;
    let manifest_path: Option<PathBuf> = s.pick_opt(args.manifest, "manifest")?;
    let dir: Option<PathBuf> = s.pick_opt(args.dir, "dir")?;
    let out: PathBuf = s.require(args.out, "out")?;
    let kinds: Vec<SplitKind> = [
        s.pick_opt(args.ratio, "ratio")?.map(|train_fraction| SplitKind::Ratio { train_fraction }),
        s.pick_opt(args.holdout, "holdout")?.map(|test_fraction| SplitKind::Holdout { test_fraction }),
        s.pick_opt(args.val_fraction, "val_fraction")?.map(|val_fraction| SplitKind::TrainVal { val_fraction }),
    ]
    .into_iter()
    .flatten()
    .collect();
    let [kind] = kinds[..] else {
        return usage("give exactly one of --ratio, --holdout, --val-fraction");
    };
    let seed = s.seed(args.seed)?;

    let input = match (manifest_path, dir) {
        (Some(m), None) => {
            ensure_outside(&m, &out)?;
            Manifest::load(&m)?
        }
        (None, Some(d)) => {
            ensure_outside(&d, &out)?;
            let name = d
                .canonicalize()
                .with_context(|| format!("reading {}", d.display()))?
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset")
                .to_string();
            let spec = SourceSpec {
                name,
                dir: Some(d),
                classes: None,
                class_counts: None,
            };
            merge_sources(&[spec.resolve(Path::new(""))?])?
        }
        _ => return usage("give exactly one of --manifest, --dir"),
    };
    let (manifest, warnings) = stratified_split(&input, &SplitSpec { kind, seed })?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    manifest.save(&out)?;

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let summary = summarize(&manifest, None);
    let width = summary.per_class.keys().map(String::len).max().unwrap_or(5).max(5);
    println!("{:<width$}  {:>7}  {:>7}  {:>7}", "class", "train", "val", "test");
    for (class, c) in &summary.per_class {
        println!("{class:<width$}  {:>7}  {:>7}  {:>7}", c.train, c.val, c.test);
    }
    println!("{:<width$}  {:>7}  {:>7}  {:>7}", "total", summary.train, summary.val, summary.test);
    Ok(())
}

use std::fs;
use std::path::Path;

use leafkit::augment::{build_plan, execute_plan, AugmentationMode, DirLoader, DirSink, Image, OutputFormat};
use leafkit::dataset::{
    apply_class_rules, balance_to_target, builtin_rules, check_roster, merge_sources, plant_map, pldc80_roster,
    sources_fixture, stratified_split, summarize, ClassRule, DeleteReason, Source, SplitKind, SplitSpec,
};
use leafkit::manifest::{Manifest, Split};

fn shipped_sources() -> Manifest {
    let sources: Vec<Source> = sources_fixture().iter().map(|s| s.resolve(Path::new(".")).unwrap()).collect();
    merge_sources(&sources).unwrap()
}

#[test]
fn shipped_cleanup_reaches_roster() {
    let merged = shipped_sources();
    assert_eq!(merged.len(), 124_860);
    assert_eq!(merged.classes().len(), 95);
    let (clean, report) = apply_class_rules(&merged, &builtin_rules(), 200).unwrap();
    assert_eq!((report.classes_before, report.classes_after_delete, report.classes_after), (95, 85, 80));
    assert_eq!(report.merged.len(), 5);
    let reasons = |r: DeleteReason| report.deleted.iter().filter(|d| d.1 == r).count();
    assert_eq!(reasons(DeleteReason::Complex) + reasons(DeleteReason::MultiDisease) + reasons(DeleteReason::TooSmall), 10);
    check_roster(&clean, &pldc80_roster()).unwrap();
    let summary = summarize(&clean, Some(&plant_map(&pldc80_roster())));
    assert_eq!((summary.classes, summary.plants), (80, 22));
}

#[test]
fn roster_check_names_unknown_classes() {
    let merged = shipped_sources();
    let err = check_roster(&merged, &pldc80_roster()).unwrap_err();
    assert!(err.to_string().contains("fgvc8::complex"));
}

#[test]
fn merge_of_deleted_class_is_rejected() {
    let merged = shipped_sources();
    let rules = vec![
        ClassRule::Delete { class: "diamos::curl".into(), reason: DeleteReason::Other },
        ClassRule::Merge { class_a: "diamos::curl".into(), class_b: "diamos::healthy".into(), into: "x".into() },
    ];
    assert!(apply_class_rules(&merged, &rules, 0).is_err());
}

#[test]
fn balanced_manifest_survives_save_and_load() {
    let (clean, _) = apply_class_rules(&shipped_sources(), &builtin_rules(), 200).unwrap();
    let small = Manifest::new(clean.records.into_iter().filter(|r| r.source_dataset == "cds").collect());
    let (held, _) = stratified_split(&small, &SplitSpec { kind: SplitKind::Holdout { test_fraction: 0.2 }, seed: 1 }).unwrap();
    let (balanced, report) = balance_to_target(&held, 500, AugmentationMode::Combined, 1).unwrap();
    assert!(report.classes.iter().all(|c| c.selected == 500));
    // holdout images are never augmented
    assert!(balanced.records.iter().filter(|r| r.split == Split::Test).all(|r| r.lineage.is_none()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    balanced.save(&path).unwrap();
    let back = Manifest::load(&path).unwrap();
    assert_eq!(back.records, balanced.records);
    back.validate().unwrap();
}

#[test]
fn plan_execution_writes_one_image_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    let output = dir.path().join("out");
    fs::create_dir_all(&input).unwrap();
    fs::create_dir_all(&output).unwrap();
    for i in 0..4u8 {
        let img = Image::from_fn(5, 3, |r, c| [i * 40, (r * 50) as u8, (c * 30) as u8]).unwrap();
        img.save(&input.join(format!("leaf{i}.png"))).unwrap();
    }
    let loader = DirLoader::scan(&input).unwrap();
    let plan = build_plan(AugmentationMode::Transform, &loader.ids(), 3).unwrap();
    let rows = execute_plan(&plan, &loader, &DirSink::new(&output, OutputFormat::Png).unwrap(), 2).unwrap();
    assert_eq!(rows.len(), 24);
    assert_eq!(fs::read_dir(&output).unwrap().count(), 24);
    let rotated = rows.iter().find(|r| r.id == "leaf0@01").unwrap();
    assert_eq!((rotated.width, rotated.height), (3, 5));
    assert_eq!(rotated.lineage.as_ref().unwrap().op, "rotate(1)");
    assert!(rows.iter().filter(|r| !r.id.contains('@')).all(|r| r.lineage.is_none()));
    // inputs untouched
    assert_eq!(fs::read_dir(&input).unwrap().count(), 4);
}

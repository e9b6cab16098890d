use std::fs;
use std::path::Path;

use leafkit::harness::{emit_results, ExperimentLog, PhaseLog, PhaseReports};
use leafkit::metrics::{aggregate_mean, read_benchmark_csv, read_runs_jsonl, GroupBy, MetricReport, Phase};

fn fixture(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

fn phase(phase: Phase, acc: f64, f1: f64, best: usize) -> PhaseLog {
    let report = MetricReport::from_scalars(acc, f1);
    PhaseLog {
        phase,
        epochs: Vec::new(),
        best_epoch: Some(best),
        stopped_early: true,
        reports: Some(PhaseReports {
            train: report.clone(),
            val: report.clone(),
            test: report,
        }),
    }
}

/// Two runs at mean +- sd reproduce a mean/sd pair exactly.
fn replay_row() -> Vec<(String, String, ExperimentLog)> {
    let run = |sign: f64, best_ft: usize| ExperimentLog {
        phases: vec![
            phase(Phase::Tl, 0.78001 + sign * 0.00117, 0.62425 + sign * 0.14137, 34),
            phase(Phase::Ft, 0.82496 + sign * 0.00689, 0.69262 + sign * 0.12900, best_ft),
        ],
    };
    vec![
        ("ConvNeXtSmall".into(), "cassava".into(), run(-1.0, 5)),
        ("ConvNeXtSmall".into(), "cassava".into(), run(1.0, 6)),
    ]
}

#[test]
fn emitted_csv_matches_golden_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out/results.csv");
    let jsonl_path = dir.path().join("out/runs.jsonl");
    emit_results(&replay_row(), &csv_path, Some(&jsonl_path)).unwrap();
    let first = fs::read(&csv_path).unwrap();
    assert_eq!(String::from_utf8(first.clone()).unwrap(), fixture("golden_results.csv"));

    emit_results(&replay_row(), &csv_path, Some(&jsonl_path)).unwrap();
    assert_eq!(fs::read(&csv_path).unwrap(), first);

    let runs = read_runs_jsonl(fs::File::open(&jsonl_path).unwrap()).unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs.iter().all(|r| r.validate().is_ok()));
}

#[test]
fn emit_names_unwritable_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = emit_results(&replay_row(), &blocker.join("results.csv"), None).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn per_model_means_match_published_averages() {
    // published means are rounded to 4 decimals from 5-decimal inputs
    const TOL: f64 = 5e-5 + 5e-6;
    let rows = read_benchmark_csv(fixture("benchmark_runs.csv").as_bytes()).unwrap();
    assert_eq!(rows.len(), 23 * 18);
    let runs: Vec<_> = rows.iter().flat_map(|r| r.runs()).collect();
    let means = aggregate_mean(&runs, GroupBy::Model).unwrap();
    let published = fixture("model_means.csv");
    for line in published.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let value = |i: usize| f[i].parse::<f64>().unwrap();
        for (phase, acc, f1, epochs) in [(Phase::Tl, value(1), value(2), value(3)), (Phase::Ft, value(4), value(5), value(6))] {
            let g = means.iter().find(|g| g.key == f[0] && g.phase == phase).unwrap();
            assert_eq!(g.runs, 18);
            assert!((g.accuracy - acc).abs() <= TOL, "{} {phase:?} acc {} vs {acc}", f[0], g.accuracy);
            assert!((g.macro_f1 - f1).abs() <= TOL, "{} {phase:?} f1 {} vs {f1}", f[0], g.macro_f1);
            assert!((g.best_epoch - epochs).abs() <= 5e-5, "{} {phase:?} epochs {} vs {epochs}", f[0], g.best_epoch);
        }
    }
}

#[test]
fn benchmark_fixture_round_trips_through_writer() {
    let text = fixture("benchmark_runs.csv");
    let rows = read_benchmark_csv(text.as_bytes()).unwrap();
    let mut buf = Vec::new();
    leafkit::metrics::write_benchmark_csv(&rows, &mut buf).unwrap();
    assert_eq!(read_benchmark_csv(buf.as_slice()).unwrap(), rows);
}

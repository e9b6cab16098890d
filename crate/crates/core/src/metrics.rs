//! Classification metrics, run aggregation and model leaderboards.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = labels.len();
        if counts.len() != k || counts.iter().any(|row| row.len() != k) {
            return Err(Error::invalid(format!("confusion matrix must be {k}x{k}")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::invalid(format!("duplicate label `{dup}`")));
        }
        Ok(Self { labels, counts })
    }

    /// Matrix with labels `0..k` named by their index.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        Self::new((0..counts.len()).map(|i| i.to_string()).collect(), counts)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_from_pairs<S: AsRef<str>>(pairs: &[(S, S)], labels: &[String]) -> Result<ConfusionMatrix> {
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let lookup = |l: &str| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| Error::validation(format!("unknown label `{l}`")))
    };
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (t, p) in pairs {
        counts[lookup(t.as_ref())?][lookup(p.as_ref())?] += 1;
    }
    ConfusionMatrix::new(labels.to_vec(), counts)
}

/// How per-class precision, recall and F1 are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Unweighted mean over classes.
    #[default]
    Macro,
    /// Mean weighted by class support.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// The `macro_*` fields hold whichever averaging was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default)]
    pub per_class: Vec<ClassMetrics>,
}

impl MetricReport {
    /// Report carrying only accuracy and F1, as produced by scripted trainers.
    pub fn from_scalars(accuracy: f64, f1: f64) -> Self {
        Self {
            accuracy,
            macro_precision: 0.0,
            macro_recall: 0.0,
            macro_f1: f1,
            averaging: Averaging::Macro,
            per_class: Vec::new(),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_report(cm: &ConfusionMatrix) -> Result<MetricReport> {
    compute_report_with(cm, Averaging::Macro)
}

/// Zero denominators give 0 for precision, recall and F1.
pub fn compute_report_with(cm: &ConfusionMatrix, averaging: Averaging) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let k = cm.labels.len();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c];
            let row: u64 = cm.counts[c].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[c]).sum();
            let precision = ratio(tp, col);
            let recall = ratio(tp, row);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label: cm.labels[c].clone(),
                precision,
                recall,
                f1,
                support: row,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| match averaging {
        Averaging::Macro => per_class.iter().map(f).sum::<f64>() / k as f64,
        Averaging::Weighted => per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64,
    };
    Ok(MetricReport {
        accuracy: ratio(cm.trace(), total),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        averaging,
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Tl,
    Ft,
}

/// One (model, dataset, phase) result. `best_epoch` is real because
/// repeated runs report their mean best epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub dataset: String,
    pub phase: Phase,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub best_epoch: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MetricReport>,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.accuracy) || !in_unit(self.macro_f1) {
            return Err(Error::validation(format!(
                "{}/{}: metrics must lie in [0, 1]",
                self.model, self.dataset
            )));
        }
        if self.best_epoch.is_nan() || self.best_epoch < 1.0 {
            return Err(Error::validation(format!("{}/{}: best_epoch must be >= 1", self.model, self.dataset)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Model,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMean {
    pub key: String,
    pub phase: Phase,
    pub runs: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub best_epoch: f64,
}

/// Mean metrics per (group key, phase), in key then phase order.
pub fn aggregate_mean(runs: &[RunRecord], group_by: GroupBy) -> Result<Vec<GroupMean>> {
    if runs.is_empty() {
        return Err(Error::invalid("no runs to aggregate"));
    }
    let mut groups: BTreeMap<(&str, Phase), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        let key = match group_by {
            GroupBy::Model => &r.model,
            GroupBy::Dataset => &r.dataset,
        };
        groups.entry((key, r.phase)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((key, phase), rs)| {
            let n = rs.len() as f64;
            GroupMean {
                key: key.to_string(),
                phase,
                runs: rs.len(),
                accuracy: rs.iter().map(|r| r.accuracy).sum::<f64>() / n,
                macro_f1: rs.iter().map(|r| r.macro_f1).sum::<f64>() / n,
                best_epoch: rs.iter().map(|r| r.best_epoch).sum::<f64>() / n,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    ByAvgMetric,
    ByAvgRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub name: String,
    pub score: f64,
    pub rank: f64,
}

/// Rows in rank order; tied entries keep their input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub method: RankMethod,
    pub rows: Vec<RankRow>,
}

impl RankingTable {
    pub fn rank_of(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.name == name).map(|r| r.rank)
    }

    pub fn names(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,model,score\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.4}", format_number(r.rank), r.name, r.score);
        }
        out
    }

    pub fn to_leaderboard(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
        let header = match self.method {
            RankMethod::ByAvgMetric => "avg metric",
            RankMethod::ByAvgRank => "avg rank",
        };
        let mut out = format!("{:>5}  {:<width$}  {header}\n", "rank", "model");
        for r in &self.rows {
            let _ = writeln!(out, "{:>5}  {:<width$}  {:.4}", format_number(r.rank), r.name, r.score);
        }
        out
    }
}

/// Integers without a fraction, everything else in shortest round-trip form.
pub fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn fractional_ranks(scores: &[f64], descending: bool) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = scores[a].total_cmp(&scores[b]);
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    (order, ranks)
}

fn ranking(entries: &[(String, f64)], descending: bool, method: RankMethod) -> RankingTable {
    let scores: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let (order, ranks) = fractional_ranks(&scores, descending);
    RankingTable {
        method,
        rows: order
            .into_iter()
            .map(|i| RankRow {
                name: entries[i].0.clone(),
                score: entries[i].1,
                rank: ranks[i],
            })
            .collect(),
    }
}

/// Ranks 1..M by score; ties share the mean of their positions.
pub fn rank_by_value(entries: &[(String, f64)], descending: bool) -> RankingTable {
    ranking(entries, descending, RankMethod::ByAvgMetric)
}

/// Mean per-dataset rank per model, ranked ascending.
pub fn average_rank(per_dataset_ranks: &[(String, Vec<f64>)]) -> Result<RankingTable> {
    let Some((_, first)) = per_dataset_ranks.first() else {
        return Err(Error::invalid("no models to rank"));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::invalid("no dataset ranks"));
    }
    if let Some((model, ranks)) = per_dataset_ranks.iter().find(|(_, r)| r.len() != n) {
        return Err(Error::validation(format!(
            "model `{model}` has {} dataset ranks, expected {n}",
            ranks.len()
        )));
    }
    let means: Vec<(String, f64)> = per_dataset_ranks
        .iter()
        .map(|(m, r)| (m.clone(), r.iter().sum::<f64>() / n as f64))
        .collect();
    Ok(ranking(&means, false, RankMethod::ByAvgRank))
}

/// One row of the benchmark results table: mean TL and FT metrics with their
/// standard deviations and mean best epochs over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub dataset: String,
    pub acc: f64,
    pub f1: f64,
    pub acc_sd: f64,
    pub f1_sd: f64,
    pub acc_ft: f64,
    pub f1_ft: f64,
    pub acc_sd_ft: f64,
    pub f1_sd_ft: f64,
    pub best_epoch: f64,
    pub best_epoch_ft: f64,
}

pub const BENCHMARK_HEADER: &str = "model,dataset,acc,f1,acc_sd,f1_sd,acc_ft,f1_ft,acc_sd_ft,f1_sd_ft,best_epoch,best_epoch_ft";

impl BenchmarkRow {
    pub fn runs(&self) -> [RunRecord; 2] {
        let run = |phase, accuracy, macro_f1, best_epoch| RunRecord {
            model: self.model.clone(),
            dataset: self.dataset.clone(),
            phase,
            accuracy,
            macro_f1,
            best_epoch,
            report: None,
        };
        [
            run(Phase::Tl, self.acc, self.f1, self.best_epoch),
            run(Phase::Ft, self.acc_ft, self.f1_ft, self.best_epoch_ft),
        ]
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Acc => self.acc,
            Metric::F1 => self.f1,
            Metric::AccFt => self.acc_ft,
            Metric::F1Ft => self.f1_ft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Acc,
    F1,
    AccFt,
    F1Ft,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acc" => Ok(Metric::Acc),
            "f1" => Ok(Metric::F1),
            "acc_ft" | "acc-ft" => Ok(Metric::AccFt),
            "f1_ft" | "f1-ft" => Ok(Metric::F1Ft),
            _ => Err(Error::invalid(format!("unknown metric `{s}` (acc, f1, acc_ft, f1_ft)"))),
        }
    }
}

/// Metrics with five decimals; epochs as integers when whole.
pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{BENCHMARK_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{},{}",
            r.model,
            r.dataset,
            r.acc,
            r.f1,
            r.acc_sd,
            r.f1_sd,
            r.acc_ft,
            r.f1_ft,
            r.acc_sd_ft,
            r.f1_sd_ft,
            format_number(r.best_epoch),
            format_number(r.best_epoch_ft)
        )?;
    }
    w.flush()
}

pub fn read_benchmark_csv<R: Read>(r: R) -> Result<Vec<BenchmarkRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        rows.push(row.map_err(|e: csv::Error| Error::Parse {
            line: e.position().map_or(i + 2, |p| p.line() as usize),
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

pub fn load_benchmark_csv(path: &Path) -> Result<Vec<BenchmarkRow>> {
    read_benchmark_csv(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Per-dataset ranks by `metric` (higher is better), keyed by model in
/// first-seen order; every model must appear once per dataset.
pub fn dataset_ranks(rows: &[BenchmarkRow], metric: Metric) -> Result<Vec<(String, Vec<f64>)>> {
    let mut models: Vec<String> = Vec::new();
    let mut datasets: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
    for r in rows {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
        datasets.entry(&r.dataset).or_default().push((r.model.clone(), r.metric(metric)));
    }
    let mut per_model: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (dataset, entries) in &datasets {
        if entries.len() != models.len() {
            return Err(Error::validation(format!(
                "dataset `{dataset}` has {} models, expected {}",
                entries.len(),
                models.len()
            )));
        }
        for row in rank_by_value(entries, true).rows {
            let slot = models.iter().find(|m| **m == row.name).expect("model collected above");
            per_model.entry(slot).or_default().push(row.rank);
        }
    }
    Ok(models
        .iter()
        .map(|m| (m.clone(), per_model.remove(m.as_str()).unwrap_or_default()))
        .collect())
}

pub fn write_runs_jsonl<W: Write>(runs: &[RunRecord], mut w: W) -> std::io::Result<()> {
    for r in runs {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_runs_jsonl<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut runs = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if !line.trim().is_empty() {
            runs.push(serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?);
        }
    }
    Ok(runs)
}

/// `truth,predicted` rows, optional header `true,pred` (any names).
pub fn read_pairs_csv<R: Read>(r: R) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut pairs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        if i == 0 && matches!(&rec[0], "true" | "truth" | "y_true" | "label") {
            continue;
        }
        pairs.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pairs_to_matrix() {
        let cm = confusion_from_pairs(&[("a", "a"), ("b", "b")], &labels(&["a", "b"])).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0], vec![0, 1]]);
        let empty: [(&str, &str); 0] = [];
        assert_eq!(confusion_from_pairs(&empty, &labels(&["a", "b"])).unwrap().total(), 0);
        let err = confusion_from_pairs(&[("a", "zebra")], &labels(&["a"])).unwrap_err();
        assert!(err.to_string().contains("zebra"));
    }

    #[test]
    fn worked_two_class_matrix() {
        let cm = ConfusionMatrix::from_counts(vec![vec![8, 2], vec![4, 6]]).unwrap();
        let r = compute_report(&cm).unwrap();
        assert!((r.accuracy - 0.7).abs() < 1e-12);
        assert!((r.per_class[0].precision - 8.0 / 12.0).abs() < 1e-12);
        assert!((r.per_class[0].f1 - 0.727_272_727_272_727_3).abs() < 1e-12);
        assert!((r.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.macro_f1 - 0.696_969_696_969_697).abs() < 1e-9);
    }

    #[test]
    fn never_predicted_class() {
        let cm = ConfusionMatrix::from_counts(vec![vec![5, 0], vec![3, 0]]).unwrap();
        let r = compute_report(&cm).unwrap();
        assert_eq!(r.per_class[1].precision, 0.0);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert!(r.macro_f1.is_finite());
        assert!(compute_report(&ConfusionMatrix::from_counts(vec![vec![0]]).unwrap()).is_err());
    }

    #[test]
    fn weighted_averaging() {
        let cm = ConfusionMatrix::from_counts(vec![vec![8, 2], vec![4, 6]]).unwrap();
        let r = compute_report_with(&cm, Averaging::Weighted).unwrap();
        let expect = (0.727_272_727_272_727_3 * 10.0 + (2.0 / 3.0) * 10.0) / 20.0;
        assert!((r.macro_f1 - expect).abs() < 1e-12);
        // weighted recall is accuracy
        assert!((r.macro_recall - r.accuracy).abs() < 1e-12);
    }

    #[test]
    fn ranks_with_ties() {
        let e = vec![("a".to_string(), 0.9), ("b".to_string(), 0.9), ("c".to_string(), 0.5)];
        let t = rank_by_value(&e, true);
        assert_eq!(t.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1.5, 1.5, 3.0]);
        assert_eq!(t.names(), vec!["a", "b", "c"]);
        let single = rank_by_value(&[("x".to_string(), 1.0)], true);
        assert_eq!(single.rows[0].rank, 1.0);
    }

    #[test]
    fn average_rank_rules() {
        let same = vec![("a".to_string(), vec![1.0, 2.0]), ("b".to_string(), vec![1.0, 2.0])];
        let t = average_rank(&same).unwrap();
        assert_eq!(t.rows[0].rank, 1.5);
        let one = vec![("a".to_string(), vec![2.0]), ("b".to_string(), vec![1.0])];
        let t = average_rank(&one).unwrap();
        assert_eq!(t.names(), vec!["b", "a"]);
        assert_eq!(t.rows[0].score, 1.0);
        let ragged = vec![("a".to_string(), vec![1.0, 2.0]), ("b".to_string(), vec![1.0])];
        assert!(matches!(average_rank(&ragged), Err(Error::Validation(_))));
    }

    #[test]
    fn aggregate_two_runs() {
        let run = |acc| RunRecord {
            model: "m".into(),
            dataset: "d".into(),
            phase: Phase::Ft,
            accuracy: acc,
            macro_f1: acc,
            best_epoch: 3.0,
            report: None,
        };
        let g = aggregate_mean(&[run(0.8), run(0.9)], GroupBy::Model).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0].accuracy - 0.85).abs() < 1e-12);
        assert!(aggregate_mean(&[], GroupBy::Model).is_err());
    }

    #[test]
    fn benchmark_csv_round_trip() {
        let row = BenchmarkRow {
            model: "ConvNeXtSmall".into(),
            dataset: "cassava".into(),
            acc: 0.78001,
            f1: 0.62425,
            acc_sd: 0.00117,
            f1_sd: 0.14137,
            acc_ft: 0.82496,
            f1_ft: 0.69262,
            acc_sd_ft: 0.00689,
            f1_sd_ft: 0.129,
            best_epoch: 34.0,
            best_epoch_ft: 5.5,
        };
        let mut buf = Vec::new();
        write_benchmark_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "ConvNeXtSmall,cassava,0.78001,0.62425,0.00117,0.14137,0.82496,0.69262,0.00689,0.12900,34,5.5"
        );
        assert_eq!(read_benchmark_csv(text.as_bytes()).unwrap(), vec![row]);
    }

    #[test]
    fn pairs_csv() {
        let p = read_pairs_csv("true,pred\na,b\nb,b\n".as_bytes()).unwrap();
        assert_eq!(p, vec![("a".into(), "b".into()), ("b".into(), "b".into())]);
        assert!(read_pairs_csv("a,b,c\n".as_bytes()).is_err());
    }
}

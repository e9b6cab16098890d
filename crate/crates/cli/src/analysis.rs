//! protoclass, metrics, rank and params.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use leafkit::augment::read_id_list;
use leafkit::metrics::{
    average_rank, compute_report_with, confusion_from_pairs, dataset_ranks, load_benchmark_csv, rank_by_value,
    read_pairs_csv, Averaging, Metric, RankMethod, RankingTable,
};
use leafkit::protoclass::{
    build_prototypes, evaluate, load_embeddings, predict_all, write_embeddings, PrototypeSet, ShotConfig,
};
use leafkit::tensorkit::{
    ca_param_count, dense_param_count, densenet201_breakdown, ParamBreakdown, DEFAULT_CA_RATIO,
    DENSENET201_FEATURES,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::settings::{ensure_outside, usage, write_text, Settings};
use crate::{MetricsArgs, ParamsArgs, ProtoBuildArgs, ProtoQueryArgs, ProtoclassCommand, RankArgs, ShotArgs};

/// Flag parser for enums that only implement `Deserialize`.
pub fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankBy {
    AvgMetric,
    AvgRank,
}

impl FromStr for RankBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_serde(s).map_err(|_| format!("expected avg-metric or avg-rank, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Text,
    Csv,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_serde(s).map_err(|_| format!("expected text or csv, got `{s}`"))
    }
}

/// Prints to stdout, or writes the file when `out` is set.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

const SHOT_KEYS: [&str; 3] = ["supports", "shots", "seed"];

fn prototypes_from_supports(s: &Settings, a: ShotArgs) -> Result<PrototypeSet> {
    let supports: PathBuf = s.require(a.supports, "supports")?;
    let k = s.pick(a.shots, "shots", 1)?;
    let seed = s.seed(a.seed)?;
    let items = load_embeddings(&supports).with_context(|| format!("loading {}", supports.display()))?;
    Ok(build_prototypes(&items, &ShotConfig { k, seed })?)
}

pub fn protoclass(cmd: ProtoclassCommand, jobs: Option<usize>) -> Result<()> {
    match cmd {
        ProtoclassCommand::Build(a) => build(a, jobs),
        ProtoclassCommand::Predict(a) => query(a, jobs, false),
        ProtoclassCommand::Eval(a) => query(a, jobs, true),
    }
}

fn build(a: ProtoBuildArgs, jobs: Option<usize>) -> Result<()> {
    let mut keys = SHOT_KEYS.to_vec();
    keys.push("out");
    let s = Settings::load(a.config.as_deref(), &keys)?;
    s.init_pool(jobs)?;
    let out: PathBuf = s.require(a.out, "out")?;
    if let Some(supports) = s.pick_opt(a.shots.supports.clone(), "supports")? {
        ensure_outside(&supports, &out)?;
    }
    let set = prototypes_from_supports(&s, a.shots)?;
    let mut buf = Vec::new();
    write_embeddings(&set.to_embeddings(), &mut buf)?;
    write_text(&out, std::str::from_utf8(&buf)?)?;
    println!(
        "{} prototypes ({}-shot, dim {}) -> {}",
        set.labels().count(),
        set.shots(),
        set.dim(),
        out.display()
    );
    Ok(())
}

fn query(a: ProtoQueryArgs, jobs: Option<usize>, eval: bool) -> Result<()> {
    let mut keys = SHOT_KEYS.to_vec();
    keys.extend(["prototypes", "queries", "out"]);
    let s = Settings::load(a.config.as_deref(), &keys)?;
    s.init_pool(jobs)?;
    let queries_path: PathBuf = s.require(a.queries, "queries")?;
    let out: Option<PathBuf> = s.pick_opt(a.out, "out")?;
    let prototypes: Option<PathBuf> = s.pick_opt(a.prototypes, "prototypes")?;
    if let Some(out) = &out {
        ensure_outside(&queries_path, out)?;
        if let Some(p) = &prototypes {
            ensure_outside(p, out)?;
        }
    }
    let set = match prototypes {
        Some(path) => {
            let items = load_embeddings(&path).with_context(|| format!("loading {}", path.display()))?;
            PrototypeSet::from_embeddings(&items, s.pick(a.shots.shots, "shots", 1)?)?
        }
        None => prototypes_from_supports(&s, a.shots)?,
    };
    let queries = load_embeddings(&queries_path).with_context(|| format!("loading {}", queries_path.display()))?;

    let text = if eval {
        serde_json::to_string_pretty(&evaluate(&queries, &set)?)? + "\n"
    } else {
        let mut text = String::from("id,label,predicted,distance\n");
        for (q, p) in queries.iter().zip(predict_all(&queries, &set)?) {
            writeln!(text, "{},{},{},{}", q.id, q.label, p.label, p.distances[&p.label])?;
        }
        text
    };
    emit(out.as_deref(), &text)
}

pub fn metrics(a: MetricsArgs) -> Result<()> {
    let s = Settings::load(a.config.as_deref(), &["pairs", "labels", "averaging", "out"])?;
    let pairs_path: PathBuf = s.require(a.pairs, "pairs")?;
    let labels_path: Option<PathBuf> = s.pick_opt(a.labels, "labels")?;
    let averaging = s.pick(a.averaging, "averaging", Averaging::Macro)?;
    let out: Option<PathBuf> = s.pick_opt(a.out, "out")?;
    if let Some(out) = &out {
        ensure_outside(&pairs_path, out)?;
    }

    let file = fs::File::open(&pairs_path).with_context(|| format!("opening {}", pairs_path.display()))?;
    let pairs = read_pairs_csv(file).with_context(|| format!("reading {}", pairs_path.display()))?;
    let labels = match labels_path {
        Some(p) => read_id_list(&p)?,
        None => {
            let mut l: Vec<String> = pairs.iter().flat_map(|(t, p)| [t.clone(), p.clone()]).collect();
            l.sort();
            l.dedup();
            l
        }
    };
    let cm = confusion_from_pairs(&pairs, &labels)?;
    let report = compute_report_with(&cm, averaging)?;
    let doc = json!({
        "labels": cm.labels(),
        "confusion": cm.counts(),
        "report": report,
    });
    emit(out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))
}

/// Model name followed by one rank per dataset; the first row is a header.
fn read_ranks(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let mut fields = line.split(',').map(str::trim);
            let model = fields.next().unwrap_or_default().to_string();
            let ranks = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("{} line {}: bad rank", path.display(), i + 1))?;
            Ok((model, ranks))
        })
        .collect()
}

pub fn rank(a: RankArgs) -> Result<()> {
    let s = Settings::load(a.config.as_deref(), &["by", "results", "metric", "ranks", "format", "out"])?;
    let by: RankBy = s.require(a.by, "by")?;
    let results: Option<PathBuf> = s.pick_opt(a.results, "results")?;
    let ranks: Option<PathBuf> = s.pick_opt(a.ranks, "ranks")?;
    let metric = s.pick(a.metric, "metric", Metric::AccFt)?;
    let format = s.pick(a.format, "format", TableFormat::Text)?;
    let out: Option<PathBuf> = s.pick_opt(a.out, "out")?;
    for input in results.iter().chain(&ranks) {
        if let Some(out) = &out {
            ensure_outside(input, out)?;
        }
    }

    let table: RankingTable = match (by, &ranks, &results) {
        (RankBy::AvgRank, Some(path), _) => average_rank(&read_ranks(path)?)?,
        (RankBy::AvgRank, None, Some(path)) => average_rank(&dataset_ranks(&load_benchmark_csv(path)?, metric)?)?,
        (RankBy::AvgMetric, _, Some(path)) => {
            let rows = load_benchmark_csv(path)?;
            let mut models: Vec<(String, f64, usize)> = Vec::new();
            for r in &rows {
                match models.iter_mut().find(|(m, _, _)| *m == r.model) {
                    Some(slot) => {
                        slot.1 += r.metric(metric);
                        slot.2 += 1;
                    }
                    None => models.push((r.model.clone(), r.metric(metric), 1)),
                }
            }
            let means: Vec<(String, f64)> = models.into_iter().map(|(m, sum, n)| (m, sum / n as f64)).collect();
            let mut t = rank_by_value(&means, true);
            t.method = RankMethod::ByAvgMetric;
            t
        }
        (RankBy::AvgMetric, _, None) => return usage("--by avg-metric needs --results"),
        (RankBy::AvgRank, None, None) => return usage("--by avg-rank needs --results or --ranks"),
    };
    let text = match format {
        TableFormat::Text => table.to_leaderboard(),
        TableFormat::Csv => table.to_csv(),
    };
    emit(out.as_deref(), &text)
}

/// `1234567` as `1,234,567`.
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

pub fn params(a: ParamsArgs) -> Result<()> {
    let s = Settings::load(
        a.config.as_deref(),
        &["head_classes", "ca_channels", "ca_ratio", "ca_separate", "ca_bias"],
    )?;
    let classes: usize = s.require(a.head_classes, "head_classes")?;
    let channels = s.pick(a.ca_channels, "ca_channels", DENSENET201_FEATURES)?;
    let ratio = s.pick(a.ca_ratio, "ca_ratio", DEFAULT_CA_RATIO)?;
    let separate = a.ca_separate || s.pick(None, "ca_separate", false)?;
    let bias = a.ca_bias || s.pick(None, "ca_bias", false)?;

    let head = dense_param_count(channels, classes, true)?;
    let ca = ca_param_count(channels, ratio, !separate, bias)?;
    let mut text = String::new();
    writeln!(text, "classification head ({channels} -> {classes}): {}", thousands(head))?;
    writeln!(
        text,
        "channel attention ({channels} channels, ratio {ratio}, {}{}): {}",
        if separate { "separate MLPs" } else { "shared MLP" },
        if bias { ", biases" } else { "" },
        thousands(ca)
    )?;
    if channels == DENSENET201_FEATURES {
        let base = densenet201_breakdown(classes, None)?;
        let with_ca = ParamBreakdown {
            total: base.total + ca,
            frozen_non_trainable: base.frozen_non_trainable + ca,
            unfrozen_trainable: base.unfrozen_trainable + ca,
            ..base
        };
        let rows = [
            ("total", base.total, with_ca.total),
            ("trainable, backbone frozen", base.frozen_trainable, with_ca.frozen_trainable),
            ("non-trainable, backbone frozen", base.frozen_non_trainable, with_ca.frozen_non_trainable),
            ("trainable, unfrozen", base.unfrozen_trainable, with_ca.unfrozen_trainable),
            ("non-trainable, unfrozen", base.unfrozen_non_trainable, with_ca.unfrozen_non_trainable),
        ];
        writeln!(text, "\nDenseNet201 backbone")?;
        writeln!(text, "{:<32}{:>14}{:>14}", "", "baseline", "attention")?;
        for (name, b, c) in rows {
            writeln!(text, "{name:<32}{:>14}{:>14}", thousands(b), thousands(c))?;
        }
    }
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands_groups_digits() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(11_526), "11,526");
        assert_eq!(thousands(19_255_110), "19,255,110");
    }

    #[test]
    fn enum_flags_parse() {
        assert_eq!("avg-rank".parse::<RankBy>().unwrap(), RankBy::AvgRank);
        assert!("avg_rank".parse::<RankBy>().is_err());
        assert_eq!(parse_serde::<Averaging>("weighted").unwrap(), Averaging::Weighted);
    }
}

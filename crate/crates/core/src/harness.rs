//! Transfer-learning then fine-tuning control loop over an abstract trainer.
//!
//! Each phase trains with early stopping, restores the snapshot of its best
//! epoch and evaluates train, val and test. Epochs are counted from 1 in
//! every phase.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{write_benchmark_csv, write_runs_jsonl, BenchmarkRow, MetricReport, Phase, RunRecord};

pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_PATIENCE: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    #[default]
    ValLoss,
    ValAccuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Min,
    Max,
}

impl Monitor {
    pub fn mode(self) -> Mode {
        match self {
            Monitor::ValLoss => Mode::Min,
            Monitor::ValAccuracy => Mode::Max,
        }
    }

    pub fn value(self, m: &EpochMetrics) -> f64 {
        match self {
            Monitor::ValLoss => m.val_loss,
            Monitor::ValAccuracy => m.val_acc,
        }
    }
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}

fn default_patience() -> Option<usize> {
    Some(DEFAULT_PATIENCE)
}

fn default_true() -> bool {
    true
}

/// `patience: null` disables early stopping; an absent key means 50.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_epochs")]
    pub tl_epochs: usize,
    #[serde(default = "default_epochs")]
    pub ft_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: Option<usize>,
    #[serde(default)]
    pub monitor: Monitor,
    #[serde(default = "default_true")]
    pub frozen_first: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tl_epochs: DEFAULT_EPOCHS,
            ft_epochs: DEFAULT_EPOCHS,
            patience: default_patience(),
            monitor: Monitor::ValLoss,
            frozen_first: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ft_epochs == 0 || (self.frozen_first && self.tl_epochs == 0) {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Train,
    Val,
    Test,
}

/// What a concrete trainer provides. The classifier head is always trainable;
/// `set_frozen` toggles the feature extractor.
pub trait Trainer {
    type Token: Clone;

    fn set_frozen(&mut self, frozen: bool) -> Result<()>;
    /// The harness overwrites `epoch` with its own per-phase counter.
    fn train_one_epoch(&mut self) -> Result<EpochMetrics>;
    fn snapshot(&mut self) -> Result<Self::Token>;
    fn restore(&mut self, token: &Self::Token) -> Result<()>;
    fn evaluate(&mut self, split: EvalSplit) -> Result<MetricReport>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

fn improves(value: f64, best: f64, mode: Mode) -> bool {
    match mode {
        Mode::Min => value < best,
        Mode::Max => value > best,
    }
}

fn best_index(values: impl IntoIterator<Item = f64>, mode: Mode) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| improves(v, b, mode)) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Stops once the latest epoch is at least `max(patience, 1)` epochs past the
/// best one. Improvement is strict, so a plateau does not reset the count.
pub fn early_stop_step(history: &[f64], patience: i64, mode: Mode) -> Result<StopDecision> {
    if patience < 0 {
        return Err(Error::invalid(format!("patience must be >= 0, got {patience}")));
    }
    let best = best_index(history.iter().copied(), mode).ok_or_else(|| Error::invalid("empty history"))?;
    let since = (history.len() - 1 - best) as i64;
    Ok(if since >= patience.max(1) {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    })
}

/// 1-based epoch of the best monitored value; earliest wins ties.
pub fn select_best_epoch(log: &[EpochMetrics], monitor: Monitor) -> Option<usize> {
    best_index(log.iter().map(|m| monitor.value(m)), monitor.mode()).map(|i| log[i].epoch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReports {
    pub train: MetricReport,
    pub val: MetricReport,
    pub test: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLog {
    pub phase: Phase,
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
    pub reports: Option<PhaseReports>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub phases: Vec<PhaseLog>,
}

impl ExperimentLog {
    pub fn phase(&self, phase: Phase) -> Option<&PhaseLog> {
        self.phases.iter().find(|p| p.phase == phase)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log serializes")
    }
}

/// A failed experiment with everything completed before the failure.
#[derive(Debug)]
pub struct ExperimentAbort {
    pub log: ExperimentLog,
    pub error: Error,
}

impl fmt::Display for ExperimentAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let epochs: usize = self.log.phases.iter().map(|p| p.epochs.len()).sum();
        write!(f, "experiment aborted after {epochs} epoch(s): {}", self.error)
    }
}

impl std::error::Error for ExperimentAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn run_phase<T: Trainer>(
    trainer: &mut T,
    phase: Phase,
    epochs: usize,
    cfg: &ExperimentConfig,
    log: &mut ExperimentLog,
) -> Result<()> {
    log.phases.push(PhaseLog {
        phase,
        epochs: Vec::new(),
        best_epoch: None,
        stopped_early: false,
        reports: None,
    });
    let current = log.phases.last_mut().expect("just pushed");
    trainer.set_frozen(phase == Phase::Tl)?;

    let mode = cfg.monitor.mode();
    let mut history = Vec::with_capacity(epochs);
    let mut best: Option<(f64, T::Token)> = None;
    for epoch in 1..=epochs {
        let mut m = trainer.train_one_epoch()?;
        m.epoch = epoch;
        let value = cfg.monitor.value(&m);
        current.epochs.push(m);
        history.push(value);
        if best.as_ref().is_none_or(|(b, _)| improves(value, *b, mode)) {
            best = Some((value, trainer.snapshot()?));
            current.best_epoch = Some(epoch);
        }
        if let Some(p) = cfg.patience {
            if early_stop_step(&history, p as i64, mode)? == StopDecision::Stop {
                current.stopped_early = epoch < epochs;
                break;
            }
        }
    }

    let (_, token) = best.expect("at least one epoch ran");
    trainer.restore(&token)?;
    let train = trainer.evaluate(EvalSplit::Train)?;
    let val = trainer.evaluate(EvalSplit::Val)?;
    let test = trainer.evaluate(EvalSplit::Test)?;
    current.reports = Some(PhaseReports { train, val, test });
    Ok(())
}

/// Runs the frozen phase (when `frozen_first`) and then the unfrozen phase.
pub fn run_experiment<T: Trainer>(trainer: &mut T, cfg: &ExperimentConfig) -> Result<ExperimentLog, ExperimentAbort> {
    let mut log = ExperimentLog::default();
    if let Err(error) = cfg.validate() {
        return Err(ExperimentAbort { log, error });
    }
    let mut phases = Vec::new();
    if cfg.frozen_first {
        phases.push((Phase::Tl, cfg.tl_epochs));
    }
    phases.push((Phase::Ft, cfg.ft_epochs));
    for (phase, epochs) in phases {
        if let Err(error) = run_phase(trainer, phase, epochs, cfg, &mut log) {
            return Err(ExperimentAbort { log, error });
        }
    }
    Ok(log)
}

/// Calls seen by a [`ScriptedTrainer`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "call")]
pub enum TraceEvent {
    SetFrozen { frozen: bool },
    Train { epoch: usize },
    Snapshot { token: ScriptToken },
    Restore { token: ScriptToken },
    Evaluate { split: EvalSplit },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptToken {
    pub frozen: bool,
    pub epoch: usize,
}

/// `[train_loss, train_acc, val_loss, val_acc]` per epoch.
pub type Quadruple = [f64; 4];

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Both(Vec<Quadruple>),
    Split { tl: Vec<Quadruple>, ft: Vec<Quadruple> },
}

/// Replays per-epoch metrics. The frozen phase reads `tl`, the unfrozen phase
/// `ft`; a single list serves both. Running past the end of a script is a
/// trainer failure. Evaluation reports the restored epoch's train accuracy
/// for the train split and its val accuracy for val and test, with F1 equal
/// to accuracy.
#[derive(Debug, Clone)]
pub struct ScriptedTrainer {
    tl: Vec<Quadruple>,
    ft: Vec<Quadruple>,
    frozen: bool,
    cursor: usize,
    loaded: Option<ScriptToken>,
    trace: Vec<TraceEvent>,
}

impl ScriptedTrainer {
    pub fn new(tl: Vec<Quadruple>, ft: Vec<Quadruple>) -> Self {
        Self {
            tl,
            ft,
            frozen: false,
            cursor: 0,
            loaded: None,
            trace: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScriptFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(match file {
            ScriptFile::Both(q) => Self::new(q.clone(), q),
            ScriptFile::Split { tl, ft } => Self::new(tl, ft),
        })
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    fn script(&self, frozen: bool) -> &[Quadruple] {
        if frozen {
            &self.tl
        } else {
            &self.ft
        }
    }
}

impl Trainer for ScriptedTrainer {
    type Token = ScriptToken;

    fn set_frozen(&mut self, frozen: bool) -> Result<()> {
        self.trace.push(TraceEvent::SetFrozen { frozen });
        self.frozen = frozen;
        self.cursor = 0;
        Ok(())
    }

    fn train_one_epoch(&mut self) -> Result<EpochMetrics> {
        let [train_loss, train_acc, val_loss, val_acc] = *self
            .script(self.frozen)
            .get(self.cursor)
            .ok_or_else(|| Error::Trainer(format!("script exhausted after {} epochs", self.cursor)))?;
        self.cursor += 1;
        self.loaded = None;
        self.trace.push(TraceEvent::Train { epoch: self.cursor });
        Ok(EpochMetrics {
            epoch: self.cursor,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        })
    }

    fn snapshot(&mut self) -> Result<ScriptToken> {
        let token = ScriptToken {
            frozen: self.frozen,
            epoch: self.cursor,
        };
        self.trace.push(TraceEvent::Snapshot { token });
        Ok(token)
    }

    fn restore(&mut self, token: &ScriptToken) -> Result<()> {
        if token.epoch == 0 || token.epoch > self.script(token.frozen).len() {
            return Err(Error::Trainer(format!("unknown snapshot {token:?}")));
        }
        self.trace.push(TraceEvent::Restore { token: *token });
        self.loaded = Some(*token);
        Ok(())
    }

    fn evaluate(&mut self, split: EvalSplit) -> Result<MetricReport> {
        self.trace.push(TraceEvent::Evaluate { split });
        let token = self.loaded.unwrap_or(ScriptToken {
            frozen: self.frozen,
            epoch: self.cursor,
        });
        let q = self
            .script(token.frozen)
            .get(token.epoch.wrapping_sub(1))
            .ok_or_else(|| Error::Trainer("evaluate before any training".into()))?;
        let acc = if split == EvalSplit::Train { q[1] } else { q[3] };
        Ok(MetricReport::from_scalars(acc, acc))
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Test-split results of one logged phase.
fn phase_result(log: &ExperimentLog, phase: Phase) -> Result<(f64, f64, f64)> {
    let p = log
        .phase(phase)
        .ok_or_else(|| Error::validation(format!("log has no {phase:?} phase")))?;
    match (&p.reports, p.best_epoch) {
        (Some(r), Some(best)) => Ok((r.test.accuracy, r.test.macro_f1, best as f64)),
        _ => Err(Error::validation(format!("{phase:?} phase is incomplete"))),
    }
}

/// One row per (model, dataset) in first-seen order: means and population
/// standard deviations over repeated runs, mean best epochs.
pub fn summarize_logs(logs: &[(String, String, ExperimentLog)]) -> Result<Vec<BenchmarkRow>> {
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&ExperimentLog>> = BTreeMap::new();
    for (model, dataset, log) in logs {
        let key = (model.as_str(), dataset.as_str());
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(log);
    }
    order
        .into_iter()
        .map(|key| {
            let mut cols: [Vec<f64>; 6] = Default::default();
            for log in &groups[&key] {
                let (a, f, e) = phase_result(log, Phase::Tl)?;
                let (a_ft, f_ft, e_ft) = phase_result(log, Phase::Ft)?;
                for (col, v) in cols.iter_mut().zip([a, f, e, a_ft, f_ft, e_ft]) {
                    col.push(v);
                }
            }
            let (acc, acc_sd) = mean_sd(&cols[0]);
            let (f1, f1_sd) = mean_sd(&cols[1]);
            let (acc_ft, acc_sd_ft) = mean_sd(&cols[3]);
            let (f1_ft, f1_sd_ft) = mean_sd(&cols[4]);
            Ok(BenchmarkRow {
                model: key.0.to_string(),
                dataset: key.1.to_string(),
                acc,
                f1,
                acc_sd,
                f1_sd,
                acc_ft,
                f1_ft,
                acc_sd_ft,
                f1_sd_ft,
                best_epoch: mean_sd(&cols[2]).0,
                best_epoch_ft: mean_sd(&cols[5]).0,
            })
        })
        .collect()
}

/// Per-phase test results, one record per logged phase.
pub fn run_records(logs: &[(String, String, ExperimentLog)]) -> Vec<RunRecord> {
    logs.iter()
        .flat_map(|(model, dataset, log)| {
            log.phases.iter().filter_map(move |p| {
                let r = p.reports.as_ref()?;
                Some(RunRecord {
                    model: model.clone(),
                    dataset: dataset.clone(),
                    phase: p.phase,
                    accuracy: r.test.accuracy,
                    macro_f1: r.test.macro_f1,
                    best_epoch: p.best_epoch? as f64,
                    report: Some(r.test.clone()),
                })
            })
        })
        .collect()
}

/// Writes the results table as CSV and, optionally, the per-run records as
/// JSON Lines.
pub fn emit_results(
    logs: &[(String, String, ExperimentLog)],
    csv_path: &Path,
    jsonl_path: Option<&Path>,
) -> Result<Vec<BenchmarkRow>> {
    let rows = summarize_logs(logs)?;
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    };
    write(csv_path, &|w| write_benchmark_csv(&rows, w))?;
    if let Some(path) = jsonl_path {
        let runs = run_records(logs);
        write(path, &|w| write_runs_jsonl(&runs, w))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quads(val_losses: &[f64]) -> Vec<Quadruple> {
        val_losses.iter().map(|&v| [v, 0.5, v, 1.0 - v / 10.0]).collect()
    }

    #[test]
    fn early_stop_examples() {
        let mut h = vec![1.0, 0.9, 0.8];
        h.extend(std::iter::repeat_n(0.8, 49));
        assert_eq!(early_stop_step(&h, 50, Mode::Min).unwrap(), StopDecision::Continue);
        h.push(0.85);
        assert_eq!(h.len(), 53);
        assert_eq!(early_stop_step(&h, 50, Mode::Min).unwrap(), StopDecision::Stop);

        let dec: Vec<f64> = (0..40).map(|i| 10.0 - i as f64).collect();
        for p in [0, 1, 5, 50] {
            assert_eq!(early_stop_step(&dec, p, Mode::Min).unwrap(), StopDecision::Continue);
        }
        assert_eq!(early_stop_step(&[1.0, 1.0], 0, Mode::Min).unwrap(), StopDecision::Stop);
        assert_eq!(early_stop_step(&[1.0], 0, Mode::Min).unwrap(), StopDecision::Continue);
        assert!(early_stop_step(&[1.0], -1, Mode::Min).is_err());
        assert!(early_stop_step(&[], 3, Mode::Min).is_err());
        assert_eq!(early_stop_step(&[0.5, 0.4, 0.3], 1, Mode::Max).unwrap(), StopDecision::Stop);
    }

    #[test]
    fn best_epoch_selection() {
        let log: Vec<EpochMetrics> = [0.5, 0.3, 0.4]
            .iter()
            .enumerate()
            .map(|(i, &v)| EpochMetrics {
                epoch: i + 1,
                train_loss: v,
                train_acc: 0.0,
                val_loss: v,
                val_acc: v,
            })
            .collect();
        assert_eq!(select_best_epoch(&log, Monitor::ValLoss), Some(2));
        assert_eq!(select_best_epoch(&log, Monitor::ValAccuracy), Some(1));
        let flat: Vec<EpochMetrics> = log.iter().map(|m| EpochMetrics { val_loss: 1.0, ..*m }).collect();
        assert_eq!(select_best_epoch(&flat, Monitor::ValLoss), Some(1));
        assert_eq!(select_best_epoch(&[], Monitor::ValLoss), None);
    }

    #[test]
    fn monotone_run_uses_all_epochs() {
        let losses: Vec<f64> = (0..200).map(|i| 2.0 - i as f64 * 0.005).collect();
        let mut t = ScriptedTrainer::new(quads(&losses), quads(&losses));
        let log = run_experiment(&mut t, &ExperimentConfig::default()).unwrap();
        for p in &log.phases {
            assert_eq!(p.epochs.len(), 200);
            assert_eq!(p.best_epoch, Some(200));
            assert!(!p.stopped_early);
        }
    }

    #[test]
    fn patience_zero_worsening_runs_two_epochs() {
        let losses: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let mut t = ScriptedTrainer::new(quads(&losses), quads(&losses));
        let cfg = ExperimentConfig {
            patience: Some(0),
            ..Default::default()
        };
        let log = run_experiment(&mut t, &cfg).unwrap();
        assert!(log.phases.iter().all(|p| p.epochs.len() == 2 && p.best_epoch == Some(1)));
    }

    #[test]
    fn disabled_patience_and_ft_only() {
        let losses = vec![1.0; 7];
        let mut t = ScriptedTrainer::new(quads(&losses), quads(&losses));
        let cfg = ExperimentConfig {
            tl_epochs: 7,
            ft_epochs: 7,
            patience: None,
            frozen_first: false,
            ..Default::default()
        };
        let log = run_experiment(&mut t, &cfg).unwrap();
        assert_eq!(log.phases.len(), 1);
        assert_eq!(log.phases[0].phase, Phase::Ft);
        assert_eq!(log.phases[0].epochs.len(), 7);
        assert_eq!(t.trace()[0], TraceEvent::SetFrozen { frozen: false });
    }

    #[test]
    fn abort_keeps_completed_epochs() {
        let mut t = ScriptedTrainer::new(quads(&[3.0, 2.0, 1.0]), quads(&[1.0]));
        let cfg = ExperimentConfig {
            tl_epochs: 3,
            ft_epochs: 5,
            ..Default::default()
        };
        let err = run_experiment(&mut t, &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Trainer(_)));
        assert_eq!(err.log.phases.len(), 2);
        assert_eq!(err.log.phases[0].epochs.len(), 3);
        assert!(err.log.phases[0].reports.is_some());
        assert_eq!(err.log.phases[1].epochs.len(), 1);
    }

    #[test]
    fn config_json() {
        let cfg = ExperimentConfig::from_json(r#"{"ft_epochs": 150, "patience": null}"#).unwrap();
        assert_eq!((cfg.tl_epochs, cfg.ft_epochs, cfg.patience), (200, 150, None));
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
        assert!(ExperimentConfig::from_json(r#"{"tl_epochs": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"patience": -1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"monitor": "val_accuracy", "bogus": 1}"#).is_err());
    }

    #[test]
    fn script_formats() {
        assert!(ScriptedTrainer::from_json("[[1,0.5,1,0.5]]").is_ok());
        assert!(ScriptedTrainer::from_json(r#"{"tl": [[1,0.5,1,0.5]], "ft": []}"#).is_ok());
        assert!(ScriptedTrainer::from_json("[[1,0.5,1]]").is_err());
    }

    #[test]
    fn two_run_statistics() {
        let log = |acc: f64| {
            let reports = PhaseReports {
                train: MetricReport::from_scalars(acc, acc),
                val: MetricReport::from_scalars(acc, acc),
                test: MetricReport::from_scalars(acc, acc),
            };
            let phase = |phase| PhaseLog {
                phase,
                epochs: Vec::new(),
                best_epoch: Some(4),
                stopped_early: false,
                reports: Some(reports.clone()),
            };
            ExperimentLog {
                phases: vec![phase(Phase::Tl), phase(Phase::Ft)],
            }
        };
        let logs = vec![("m".to_string(), "d".to_string(), log(0.8)), ("m".to_string(), "d".to_string(), log(0.9))];
        let rows = summarize_logs(&logs).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].acc - 0.85).abs() < 1e-12);
        assert!((rows[0].acc_sd - 0.05).abs() < 1e-12);
        assert_eq!(rows[0].best_epoch, 4.0);

        let single = summarize_logs(&logs[..1]).unwrap();
        assert_eq!((single[0].acc_sd, single[0].f1_sd_ft), (0.0, 0.0));
    }
}

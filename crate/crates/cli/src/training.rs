//! harness run.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};
use leafkit::harness::{emit_results, run_experiment, ExperimentConfig, ExperimentLog, ScriptedTrainer};
use serde_json::json;

use crate::settings::{create_dir, ensure_outside, usage, write_text, UsageError};
use crate::HarnessRunArgs;

/// `--patience N` or `--patience none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Patience(pub Option<usize>);

impl FromStr for Patience {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" | "off" => Ok(Patience(None)),
            _ => s
                .parse()
                .map(|n| Patience(Some(n)))
                .map_err(|_| format!("expected an epoch count or `none`, got `{s}`")),
        }
    }
}

fn log_json(logs: &[(String, String, ExperimentLog)], error: Option<String>) -> String {
    let runs: Vec<_> = logs
        .iter()
        .map(|(model, dataset, log)| json!({"model": model, "dataset": dataset, "phases": log.phases}))
        .collect();
    let doc = json!({"runs": runs, "error": error});
    serde_json::to_string_pretty(&doc).expect("log serializes") + "\n"
}

pub fn run(a: HarnessRunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text)
                .map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(n) = a.tl_epochs {
        cfg.tl_epochs = n;
    }
    if let Some(n) = a.ft_epochs {
        cfg.ft_epochs = n;
    }
    if let Some(Patience(p)) = a.patience {
        cfg.patience = p;
    }
    if let Some(m) = a.monitor {
        cfg.monitor = m;
    }
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    for input in a.mock_trainer.iter().chain(&a.config) {
        ensure_outside(input, &a.out)?;
    }

    let scripts = a
        .mock_trainer
        .iter()
        .map(|path| -> Result<(PathBuf, ScriptedTrainer)> {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let trainer = ScriptedTrainer::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok((path.clone(), trainer))
        })
        .collect::<Result<Vec<_>>>()?;

    create_dir(&a.out)?;
    let log_path = a.out.join("log.json");
    let mut logs = Vec::with_capacity(scripts.len());
    for (path, mut trainer) in scripts {
        match run_experiment(&mut trainer, &cfg) {
            Ok(log) => logs.push((a.model.clone(), a.dataset.clone(), log)),
            Err(abort) => {
                let message = format!("{}: {abort}", path.display());
                logs.push((a.model.clone(), a.dataset.clone(), abort.log));
                write_text(&log_path, &log_json(&logs, Some(message.clone())))?;
                anyhow::bail!("{message} (partial log in {})", log_path.display());
            }
        }
    }
    write_text(&log_path, &log_json(&logs, None))?;
    let rows = emit_results(&logs, &a.out.join("results.csv"), Some(&a.out.join("runs.jsonl")))?;
    for r in &rows {
        println!(
            "{} on {}: acc {:.5} f1 {:.5} (transfer), acc {:.5} f1 {:.5} (fine-tuned), best epochs {} / {}",
            r.model, r.dataset, r.acc, r.f1, r.acc_ft, r.f1_ft, r.best_epoch, r.best_epoch_ft
        );
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

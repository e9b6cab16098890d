//! Option resolution (flag, then config file, then default) and path guards.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

pub const SEED_ENV: &str = "LEAFKIT_SEED";

/// Bad or missing options; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

/// A subcommand's JSON config file. Keys are the long flag names with `-`
/// replaced by `_`.
#[derive(Debug, Default)]
pub struct Settings {
    map: Map<String, Value>,
    path: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let Value::Object(map) = value else {
            return usage(format!("{}: config must be a JSON object", path.display()));
        };
        if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str()) && k.as_str() != "jobs") {
            return usage(format!("{}: unknown config key `{key}`", path.display()));
        }
        Ok(Self {
            map,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| {
                UsageError(format!(
                    "{}: bad value for `{key}`: {e}",
                    self.path.as_deref().unwrap_or(Path::new("config")).display()
                ))
                .into()
            }),
        }
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Like [`Settings::pick_opt`], but missing everywhere is a usage error.
    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T> {
        match self.pick_opt(flag, key)? {
            Some(v) => Ok(v),
            None => usage(format!("--{} is required (flag or config key `{key}`)", key.replace('_', "-"))),
        }
    }

    /// `--seed`, else config `seed`, else the environment variable.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(seed) = self.pick_opt(flag, "seed")? {
            return Ok(seed);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| UsageError(format!("{SEED_ENV}=`{v}` is not an unsigned integer")).into()),
            Err(_) => usage(format!("a seed is required: pass --seed, set `seed` in --config, or export {SEED_ENV}")),
        }
    }

    /// Sizes the global worker pool from `--jobs` or config `jobs`.
    pub fn init_pool(&self, flag: Option<usize>) -> Result<usize> {
        let jobs = self.pick(flag, "jobs", 0)?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("starting worker threads")?;
        Ok(jobs)
    }
}

/// Absolute form of a path that may not exist yet.
fn resolve(path: &Path) -> Result<PathBuf> {
    let abs = std::path::absolute(path).with_context(|| format!("resolving {}", path.display()))?;
    let mut existing = abs.as_path();
    let mut rest = Vec::new();
    while !existing.exists() {
        match (existing.parent(), existing.file_name()) {
            (Some(parent), Some(name)) => {
                rest.push(name.to_os_string());
                existing = parent;
            }
            _ => break,
        }
    }
    let mut out = existing.canonicalize().unwrap_or_else(|_| existing.to_path_buf());
    out.extend(rest.iter().rev());
    Ok(out)
}

/// Outputs must not land in (or be) an input.
pub fn ensure_outside(input: &Path, output: &Path) -> Result<()> {
    let (i, o) = (resolve(input)?, resolve(output)?);
    if o == i || (input.is_dir() && o.starts_with(&i)) {
        anyhow::bail!(
            "refusing to write {} inside input {}",
            output.display(),
            input.display()
        );
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"target": 10, "seed": 4}"#).unwrap();
        let s = Settings::load(Some(&path), &["target", "seed"]).unwrap();
        assert_eq!(s.pick(Some(3), "target", 1).unwrap(), 3);
        assert_eq!(s.pick(None, "target", 1).unwrap(), 10);
        assert_eq!(s.pick(None, "other", 1).unwrap(), 1);
        assert_eq!(s.seed(None).unwrap(), 4);
        assert_eq!(s.seed(Some(9)).unwrap(), 9);
        assert!(Settings::load(Some(&path), &["seed"]).is_err());
    }

    #[test]
    fn output_inside_input_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in");
        fs::create_dir(&input).unwrap();
        assert!(ensure_outside(&input, &input.join("out")).is_err());
        assert!(ensure_outside(&input, &input).is_err());
        assert!(ensure_outside(&input, &dir.path().join("out")).is_ok());
        let file = dir.path().join("m.jsonl");
        fs::write(&file, "").unwrap();
        assert!(ensure_outside(&file, &file).is_err());
        assert!(ensure_outside(&file, &dir.path().join("n.jsonl")).is_ok());
    }
}

//! Nearest-prototype one-shot and few-shot classification over embedding
//! vectors.
//!
//! Embedding files are CSV with a `id,label,dim=D` header followed by
//! `id,label,v0,...,v(D-1)` rows. An empty label marks an unlabeled query.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_report, confusion_from_pairs, MetricReport};
use crate::seed::{derive_seed, rng};

/// Expected width of DenseNet201 embeddings; not enforced.
pub const DEFAULT_DIM: usize = 1920;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub id: String,
    pub label: String,
    pub vector: Vec<f64>,
}

impl Embedding {
    pub fn is_labeled(&self) -> bool {
        !self.label.is_empty()
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_embeddings<R: Read>(r: R) -> Result<Vec<Embedding>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_error(1, e.to_string()))?,
        None => return Err(parse_error(1, "missing `id,label,dim=D` header")),
    };
    let dim = match (header.get(0), header.get(1), header.get(2), header.len()) {
        (Some("id"), Some("label"), Some(d), 3) => d
            .strip_prefix("dim=")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| parse_error(1, format!("bad dimension field `{d}`")))?,
        _ => return Err(parse_error(1, "expected header `id,label,dim=D`")),
    };

    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| parse_error(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != dim + 2 {
            return Err(parse_error(
                line,
                format!("expected {dim} values, found {}", rec.len().saturating_sub(2)),
            ));
        }
        let vector = rec
            .iter()
            .skip(2)
            .map(|cell| match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(line, format!("`{cell}` is not a finite number"))),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Embedding {
            id: rec[0].to_string(),
            label: rec[1].to_string(),
            vector,
        });
    }
    Ok(out)
}

pub fn load_embeddings(path: &Path) -> Result<Vec<Embedding>> {
    parse_embeddings(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Values are written in shortest round-trip form, so reading back is exact.
pub fn write_embeddings<W: Write>(items: &[Embedding], w: W) -> Result<()> {
    let dim = check_dims(items)?;
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(w);
    let io = |e: csv::Error| Error::invalid(format!("writing embeddings: {e}"));
    writer
        .write_record(["id", "label", &format!("dim={dim}")])
        .map_err(io)?;
    for e in items {
        let mut row = vec![e.id.clone(), e.label.clone()];
        row.extend(e.vector.iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::invalid(format!("writing embeddings: {e}")))
}

fn check_dims(items: &[Embedding]) -> Result<usize> {
    let dim = items.first().map_or(0, |e| e.vector.len());
    match items.iter().find(|e| e.vector.len() != dim) {
        Some(e) => Err(Error::Dimension {
            expected: dim,
            actual: e.vector.len(),
        }),
        None => Ok(dim),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    dim: usize,
    shots: usize,
    prototypes: BTreeMap<String, Vec<f64>>,
}

impl PrototypeSet {
    pub fn new(prototypes: BTreeMap<String, Vec<f64>>, shots: usize) -> Result<Self> {
        let Some(first) = prototypes.values().next() else {
            return Err(Error::invalid("prototype set needs at least one class"));
        };
        let dim = first.len();
        if let Some(v) = prototypes.values().find(|v| v.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: v.len(),
            });
        }
        if shots == 0 {
            return Err(Error::invalid("shots must be positive"));
        }
        Ok(Self { dim, shots, prototypes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.prototypes.get(label).map(Vec::as_slice)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.prototypes.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.prototypes.iter().map(|(l, v)| (l.as_str(), v.as_slice()))
    }

    /// One embedding per prototype with id and label both set to the class.
    pub fn to_embeddings(&self) -> Vec<Embedding> {
        self.iter()
            .map(|(l, v)| Embedding {
                id: l.to_string(),
                label: l.to_string(),
                vector: v.to_vec(),
            })
            .collect()
    }

    pub fn from_embeddings(items: &[Embedding], shots: usize) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in items {
            if map.insert(e.label.clone(), e.vector.clone()).is_some() {
                return Err(Error::validation(format!("duplicate prototype `{}`", e.label)));
            }
        }
        Self::new(map, shots)
    }
}

/// Picks `k` supports per class (seeded, or all when exactly `k` exist) and
/// averages them component-wise.
pub fn build_prototypes(supports: &[Embedding], cfg: &ShotConfig) -> Result<PrototypeSet> {
    if cfg.k == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    check_dims(supports)?;
    let mut by_label: BTreeMap<&str, Vec<&Embedding>> = BTreeMap::new();
    for e in supports {
        if !e.is_labeled() {
            return Err(Error::validation(format!("support `{}` has no label", e.id)));
        }
        by_label.entry(&e.label).or_default().push(e);
    }
    let seed = cfg.seed.to_string();
    let mut prototypes = BTreeMap::new();
    for (label, mut items) in by_label {
        if items.len() < cfg.k {
            return Err(Error::validation(format!(
                "class `{label}` has {} supports, needs {}",
                items.len(),
                cfg.k
            )));
        }
        items.sort_by(|a, b| a.id.cmp(&b.id));
        let chosen: Vec<&Embedding> = if items.len() == cfg.k {
            items
        } else {
            let mut idx = index::sample(&mut rng(derive_seed(&[&seed, "shots", label])), items.len(), cfg.k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| items[i]).collect()
        };
        let dim = chosen[0].vector.len();
        let mut mean = vec![0.0; dim];
        for e in &chosen {
            for (m, v) in mean.iter_mut().zip(&e.vector) {
                *m += v;
            }
        }
        let k = cfg.k as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        prototypes.insert(label.to_string(), mean);
    }
    PrototypeSet::new(prototypes, cfg.k)
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let squares: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok(pairwise_sum(&squares).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: String,
    pub distances: BTreeMap<String, f64>,
}

/// Nearest prototype; equal distances go to the lexicographically smallest
/// label.
pub fn predict(query: &[f64], protos: &PrototypeSet) -> Result<Prediction> {
    if query.len() != protos.dim {
        return Err(Error::Dimension {
            expected: protos.dim,
            actual: query.len(),
        });
    }
    let mut distances = BTreeMap::new();
    let mut best: Option<(&str, f64)> = None;
    for (label, proto) in protos.iter() {
        let d = euclidean_distance(query, proto)?;
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((label, d));
        }
        distances.insert(label.to_string(), d);
    }
    let (label, _) = best.expect("prototype set is never empty");
    Ok(Prediction {
        label: label.to_string(),
        distances,
    })
}

pub fn predict_all(queries: &[Embedding], protos: &PrototypeSet) -> Result<Vec<Prediction>> {
    queries.par_iter().map(|q| predict(&q.vector, protos)).collect()
}

/// Confusion labels are the union of prototype and query labels, sorted.
pub fn evaluate(queries: &[Embedding], protos: &PrototypeSet) -> Result<MetricReport> {
    if let Some(q) = queries.iter().find(|q| !q.is_labeled()) {
        return Err(Error::validation(format!("query `{}` has no label", q.id)));
    }
    let predictions = predict_all(queries, protos)?;
    let mut labels: Vec<String> = protos.labels().map(str::to_string).collect();
    labels.extend(queries.iter().map(|q| q.label.clone()));
    labels.sort();
    labels.dedup();
    let pairs: Vec<(&str, &str)> = queries
        .iter()
        .zip(&predictions)
        .map(|(q, p)| (q.label.as_str(), p.label.as_str()))
        .collect();
    compute_report(&confusion_from_pairs(&pairs, &labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(id: &str, label: &str, v: &[f64]) -> Embedding {
        Embedding {
            id: id.into(),
            label: label.into(),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn parse_basic_and_errors() {
        let text = "id,label,dim=4\na,x,1,2,3,4\nb,,0.5,-1e-3,0,7\nc,y,1,1,1,1\n";
        let items = parse_embeddings(text.as_bytes()).unwrap();
        assert_eq!(items.len(), 3);
        assert!(!items[1].is_labeled());
        assert_eq!(items[1].vector[1], -1e-3);

        let ragged = "id,label,dim=2\na,x,1,2\nb,x,1\n";
        assert!(matches!(parse_embeddings(ragged.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let nan = "id,label,dim=1\na,x,zero\n";
        assert!(matches!(parse_embeddings(nan.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(parse_embeddings("id,label\n".as_bytes()).is_err());
    }

    #[test]
    fn write_read_is_exact() {
        let items = vec![emb("a", "x", &[0.1, 1.0 / 3.0, -2.5e-300]), emb("b", "", &[f64::MAX, 0.0, -0.0])];
        let mut buf = Vec::new();
        write_embeddings(&items, &mut buf).unwrap();
        assert_eq!(parse_embeddings(buf.as_slice()).unwrap(), items);
    }

    #[test]
    fn prototypes_are_means() {
        let one = build_prototypes(&[emb("s", "A", &[3.0, 4.0])], &ShotConfig { k: 1, seed: 0 }).unwrap();
        assert_eq!(one.get("A").unwrap(), &[3.0, 4.0]);
        let two = build_prototypes(
            &[emb("s1", "A", &[0.0, 0.0]), emb("s2", "A", &[2.0, 2.0])],
            &ShotConfig { k: 2, seed: 0 },
        )
        .unwrap();
        assert_eq!(two.get("A").unwrap(), &[1.0, 1.0]);
        let err = build_prototypes(&[emb("s", "B", &[1.0])], &ShotConfig { k: 2, seed: 0 }).unwrap_err();
        assert!(err.to_string().contains("`B`"));
    }

    #[test]
    fn shot_sampling_is_seeded() {
        let supports: Vec<Embedding> = (0..20).map(|i| emb(&format!("s{i:02}"), "A", &[i as f64])).collect();
        let a = build_prototypes(&supports, &ShotConfig { k: 5, seed: 9 }).unwrap();
        let b = build_prototypes(&supports, &ShotConfig { k: 5, seed: 9 }).unwrap();
        assert_eq!(a, b);
        let mut shuffled = supports.clone();
        shuffled.reverse();
        assert_eq!(build_prototypes(&shuffled, &ShotConfig { k: 5, seed: 9 }).unwrap(), a);
    }

    #[test]
    fn distances() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.5; 30], &[1.5; 30]).unwrap(), 0.0);
        assert!(matches!(euclidean_distance(&[1.0], &[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn predict_geometry_and_ties() {
        let protos = PrototypeSet::new(
            BTreeMap::from([("A".to_string(), vec![0.0, 0.0]), ("B".to_string(), vec![10.0, 0.0])]),
            1,
        )
        .unwrap();
        let p = predict(&[3.0, 4.0], &protos).unwrap();
        assert_eq!(p.label, "A");
        assert_eq!(p.distances["A"], 5.0);
        assert_eq!(predict(&[10.0, 0.0], &protos).unwrap().distances["B"], 0.0);
        // equidistant -> smallest label
        assert_eq!(predict(&[5.0, 1.0], &protos).unwrap().label, "A");
        assert!(predict(&[1.0], &protos).is_err());
    }

    #[test]
    fn evaluate_on_prototypes_is_perfect() {
        let protos = PrototypeSet::new(
            BTreeMap::from([("A".to_string(), vec![0.0]), ("B".to_string(), vec![1.0])]),
            1,
        )
        .unwrap();
        let queries = protos.to_embeddings();
        assert_eq!(evaluate(&queries, &protos).unwrap().accuracy, 1.0);
        assert!(evaluate(&[emb("q", "", &[0.0])], &protos).is_err());
    }
}

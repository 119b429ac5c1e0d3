//! k-nearest-neighbor retrieval over neuron distance matrices.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::neuron_distance;
use crate::par;
use crate::paths::PathSet;
use crate::resample::ElasticConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub relative_path: PathBuf,
    pub label: String,
}

/// A labeled set of reconstructions, read from a `id,relative_path,label` CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusIndex {
    pub entries: Vec<CorpusEntry>,
    /// Directory that `relative_path`s are resolved against.
    pub base: PathBuf,
}

impl CorpusIndex {
    pub fn read_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let read = || -> Result<Self> {
            let mut rdr = csv::Reader::from_path(path)?;
            let entries = rdr.deserialize().collect::<Result<Vec<CorpusEntry>, _>>()?;
            let index = Self {
                entries,
                base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            index.check_ids()?;
            Ok(index)
        };
        read().map_err(|e| e.in_file(path))
    }

    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    fn check_ids(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.id) {
                return Err(Error::Contract(format!("duplicate corpus id {:?}", e.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn file(&self, idx: usize) -> PathBuf {
        self.base.join(&self.entries[idx].relative_path)
    }

    /// Distinct labels in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.label) {
                out.push(e.label.clone());
            }
        }
        out
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }
}

/// Dense distance table with labeled rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    /// Row-major.
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.col_ids.len() + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.col_ids.len();
        &self.values[r * n..(r + 1) * n]
    }

    /// Neuron distances between every `rows[i]` and `cols[j]`, filled in
    /// parallel. With `symmetric` set the two lists must be identical and only
    /// the upper triangle is computed.
    pub fn compute(
        rows: &[PathSet],
        cols: &[PathSet],
        cfg: &ElasticConfig,
        symmetric: bool,
    ) -> Result<Self> {
        let (nr, nc) = (rows.len(), cols.len());
        let cells: Vec<(usize, usize)> = if symmetric {
            (0..nr)
                .flat_map(|i| (i + 1..nc).map(move |j| (i, j)))
                .collect()
        } else {
            (0..nr).flat_map(|i| (0..nc).map(move |j| (i, j))).collect()
        };
        let results = par::map_range(cells.len(), |k| {
            let (i, j) = cells[k];
            neuron_distance(&rows[i], &cols[j], cfg).map(|(d, _)| d)
        });
        let mut values = vec![0.0; nr * nc];
        for (&(i, j), d) in cells.iter().zip(results) {
            let d = d?;
            values[i * nc + j] = d;
            if symmetric {
                values[j * nc + i] = d;
            }
        }
        Ok(Self {
            row_ids: rows.iter().map(|p| p.neuron_id.clone()).collect(),
            col_ids: cols.iter().map(|p| p.neuron_id.clone()).collect(),
            values,
        })
    }

    /// CSV with a header `id,<col ids...>` and one line per row id.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(self.col_ids.iter().cloned());
        w.write_record(&header)?;
        for (r, id) in self.row_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(r).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        let col_ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut row_ids = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != col_ids.len() + 1 {
                return Err(Error::Parse {
                    line: line + 2,
                    message: format!("expected {} fields, found {}", col_ids.len() + 1, rec.len()),
                });
            }
            row_ids.push(rec[0].to_string());
            for f in rec.iter().skip(1) {
                values.push(f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line + 2,
                    message: format!("distance {f:?} is not a number"),
                })?);
            }
        }
        Ok(Self {
            row_ids,
            col_ids,
            values,
        })
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        std::fs::File::open(path)
            .map_err(Error::from)
            .and_then(Self::read_csv)
            .map_err(|e| e.in_file(path))
    }

    /// Reorders rows and columns to the given ids.
    pub fn select(&self, rows: &[String], cols: &[String]) -> Result<Self> {
        let find = |ids: &[String], id: &String| {
            ids.iter()
                .position(|x| x == id)
                .ok_or_else(|| Error::Contract(format!("id {id:?} missing from distance matrix")))
        };
        let ri = rows
            .iter()
            .map(|id| find(&self.row_ids, id))
            .collect::<Result<Vec<_>>>()?;
        let ci = cols
            .iter()
            .map(|id| find(&self.col_ids, id))
            .collect::<Result<Vec<_>>>()?;
        let values = ri
            .iter()
            .flat_map(|&r| ci.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Ok(Self {
            row_ids: rows.to_vec(),
            col_ids: cols.to_vec(),
            values,
        })
    }
}

/// Majority vote among the `k` nearest neighbors.
///
/// `neighbors` holds `(distance, label)` for every cluster member; equal
/// distances keep their input order. Ties in the vote go to the class with
/// the smallest summed neighbor distance, then to the smaller label.
pub fn knn_classify(neighbors: &[(f64, &str)], k: usize) -> Result<String> {
    if neighbors.is_empty() {
        return Err(Error::Contract("empty cluster set".into()));
    }
    if k == 0 || k > neighbors.len() {
        return Err(Error::Contract(format!(
            "k = {k} with {} cluster members",
            neighbors.len()
        )));
    }
    let mut order: Vec<usize> = (0..neighbors.len()).collect();
    order.sort_by(|&a, &b| neighbors[a].0.total_cmp(&neighbors[b].0).then(a.cmp(&b)));
    let mut tally: HashMap<&str, (usize, f64)> = HashMap::new();
    for &i in &order[..k] {
        let t = tally.entry(neighbors[i].1).or_default();
        t.0 += 1;
        t.1 += neighbors[i].0;
    }
    let winner = tally
        .into_iter()
        .min_by(|a, b| {
            b.1 .0
                .cmp(&a.1 .0)
                .then(a.1 .1.total_cmp(&b.1 .1))
                .then(a.0.cmp(b.0))
        })
        .expect("k >= 1");
    Ok(winner.0.to_string())
}

/// Classifies row `query` of `dist` against the columns in `cluster`,
/// skipping columns whose id equals the query's.
pub fn classify_row(
    dist: &DistanceMatrix,
    query: usize,
    cluster: &[usize],
    labels: &[String],
    k: usize,
) -> Result<String> {
    let qid = &dist.row_ids[query];
    let neighbors: Vec<(f64, &str)> = cluster
        .iter()
        .filter(|&&c| &dist.col_ids[c] != qid)
        .map(|&c| (dist.get(query, c), labels[c].as_str()))
        .collect();
    knn_classify(&neighbors, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Fraction of each class placed in the cluster set.
    pub ratio: f64,
    pub repeats: usize,
    pub k: usize,
    pub seed: u64,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Parses `"9:1"` (cluster:test) or a plain fraction such as `"0.9"`.
pub fn parse_ratio(text: &str) -> Result<f64> {
    let bad = || Error::Contract(format!("invalid ratio {text:?}"));
    let frac = match text.split_once(':') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if a < 0.0 || b < 0.0 || a + b <= 0.0 {
                return Err(bad());
            }
            a / (a + b)
        }
        None => text.trim().parse().map_err(|_| bad())?,
    };
    if (0.0..=1.0).contains(&frac) && frac > 0.0 {
        Ok(frac)
    } else {
        Err(bad())
    }
}

/// Stratified random cluster/test splits scored by k-NN retrieval.
///
/// `dist` is the square corpus matrix and `labels[i]` the class of its row
/// and column `i`. Every repeat shuffles the whole corpus with a generator
/// seeded from `seed`, then puts the first `round(ratio · n_c)` shuffled
/// members of each class in the cluster set.
pub fn evaluate(
    dist: &DistanceMatrix,
    labels: &[String],
    ratio: f64,
    repeats: usize,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    let n = labels.len();
    if dist.row_ids.len() != n || dist.col_ids.len() != n {
        return Err(Error::Contract(
            "distance matrix does not match the corpus".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::Contract("repeats must be at least 1".into()));
    }
    let mut classes: Vec<&str> = Vec::new();
    for l in labels {
        if !classes.contains(&l.as_str()) {
            classes.push(l);
        }
    }
    let class_size: HashMap<&str, usize> = classes
        .iter()
        .map(|c| (*c, labels.iter().filter(|l| l == c).count()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accuracies = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut taken: HashMap<&str, usize> = HashMap::new();
        let (mut cluster, mut test) = (Vec::new(), Vec::new());
        for &i in &order {
            let c = labels[i].as_str();
            let quota = (ratio * class_size[c] as f64).round() as usize;
            let t = taken.entry(c).or_default();
            if *t < quota {
                *t += 1;
                cluster.push(i);
            } else {
                test.push(i);
            }
        }
        for c in &classes {
            if taken.get(c).copied().unwrap_or(0) == 0 {
                return Err(Error::Stratification(c.to_string()));
            }
        }
        if test.is_empty() {
            return Err(Error::Contract("split left no test samples".into()));
        }
        cluster.sort_unstable();
        test.sort_unstable();
        let mut correct = 0;
        for &q in &test {
            if classify_row(dist, q, &cluster, labels, k)? == labels[q] {
                correct += 1;
            }
        }
        accuracies.push(correct as f64 / test.len() as f64);
    }
    let mean_accuracy = accuracies.iter().sum::<f64>() / repeats as f64;
    Ok(EvalReport {
        ratio,
        repeats,
        k,
        seed,
        accuracies,
        mean_accuracy,
    })
}

//! Retrieval evaluation.
//!
//! A trained model is judged by how well its distances reproduce the
//! ground-truth neighborhoods: for each query trajectory, rank all
//! others under both distance functions and compare the top lists.
//!
//! * `HR@k`: fraction of the true top `k` that appears in the
//!   predicted top `k`.
//! * `NDCG@k`: discounted-gain agreement with binary relevance, where
//!   an item is relevant iff it sits in the true top `k`; position `i`
//!   of the predicted list is discounted by `log2(i + 1)`.
//!
//! The query is never its own candidate, and ties in either ranking
//! break by ascending trajectory id, so every number here is
//! deterministic. Queries default to all trajectories; a seeded
//! subsample keeps large runs cheap.
//!
//! The module also pairs up ground-truth and predicted relative
//! violation sizes over all violating triples, the raw material for
//! the violation-recovery comparisons in the examples.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufWriter, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{tri_index, DistanceMatrix};
use crate::traj::{fmt_f64, Dataset};
use crate::trainer::{EmbeddingModel, Mode};
use crate::violation::{rvs_of_predicted, violating_triples};

/// Which trajectories act as queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySelection {
    All,
    /// A uniform sample without replacement, fixed by the seed.
    Sample { count: usize, seed: u64 },
}

/// Evaluation settings. The defaults follow the reporting convention
/// used throughout this crate: hit rates at 5, 10, and 50, gain
/// agreement at 10 and 50, every trajectory a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    pub hr_ks: Vec<usize>,
    pub ndcg_ks: Vec<usize>,
    pub queries: QuerySelection,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            hr_ks: vec![5, 10, 50],
            ndcg_ks: vec![10, 50],
            queries: QuerySelection::All,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hr_ks.is_empty() && self.ndcg_ks.is_empty() {
            return Err(Error::Config("no k values requested".into()));
        }
        if self.hr_ks.iter().chain(&self.ndcg_ks).any(|&k| k == 0) {
            return Err(Error::Config("k values must be positive".into()));
        }
        if let QuerySelection::Sample { count, .. } = self.queries {
            if count == 0 {
                return Err(Error::Config("query sample count must be positive".into()));
            }
        }
        Ok(())
    }

    fn max_k(&self) -> usize {
        self.hr_ks.iter().chain(&self.ndcg_ks).copied().max().unwrap_or(0)
    }
}

/// Mean retrieval scores over the evaluated queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: Mode,
    pub hr: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub query_count: usize,
}

impl EvalReport {
    /// Writes `stat,k,value` rows, hit rates first.
    pub fn write_csv(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        writeln!(w, "stat,k,value").map_err(io_err)?;
        for (k, v) in &self.hr {
            writeln!(w, "hr,{},{}", k, fmt_f64(*v)).map_err(io_err)?;
        }
        for (k, v) in &self.ndcg {
            writeln!(w, "ndcg,{},{}", k, fmt_f64(*v)).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "mode {}  ({} queries)", self.mode, self.query_count)?;
        for (k, v) in &self.hr {
            writeln!(f, "  HR@{k:<3} {v:.4}")?;
        }
        for (k, v) in &self.ndcg {
            writeln!(f, "  NDCG@{k:<2} {v:.4}")?;
        }
        Ok(())
    }
}

/// Ids of the `k` nearest candidates, ties broken by ascending id.
///
/// `ids` and `distances` run in parallel and must already exclude the
/// query itself.
pub fn knn(ids: &[u64], distances: &[f64], k: usize) -> Result<Vec<u64>> {
    if ids.len() != distances.len() {
        return Err(Error::Config(format!(
            "{} ids against {} distances",
            ids.len(),
            distances.len()
        )));
    }
    if k > ids.len() {
        return Err(Error::Config(format!(
            "k = {} exceeds the {} candidates",
            k,
            ids.len()
        )));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        distances[a]
            .total_cmp(&distances[b])
            .then(ids[a].cmp(&ids[b]))
    });
    Ok(order[..k].iter().map(|&i| ids[i]).collect())
}

/// `|top-k(pred) ∩ top-k(truth)| / k`.
pub fn hit_rate(pred: &[u64], truth: &[u64], k: usize) -> Result<f64> {
    check_rank_len(pred, truth, k)?;
    let truth_top: BTreeSet<u64> = truth[..k].iter().copied().collect();
    let hits = pred[..k].iter().filter(|id| truth_top.contains(id)).count();
    Ok(hits as f64 / k as f64)
}

/// Binary-relevance NDCG of the predicted top `k` against the true
/// top `k`: position `i` (1-based) contributes `1 / log2(i + 1)` when
/// it holds a true top-`k` id, normalized by the all-relevant prefix.
pub fn ndcg(pred: &[u64], truth: &[u64], k: usize) -> Result<f64> {
    check_rank_len(pred, truth, k)?;
    let truth_top: BTreeSet<u64> = truth[..k].iter().copied().collect();
    let mut dcg = 0.0;
    let mut ideal = 0.0;
    for (i, id) in pred[..k].iter().enumerate() {
        let discount = 1.0 / ((i + 2) as f64).log2();
        ideal += discount;
        if truth_top.contains(id) {
            dcg += discount;
        }
    }
    Ok(dcg / ideal)
}

fn check_rank_len(pred: &[u64], truth: &[u64], k: usize) -> Result<()> {
    if pred.len() < k || truth.len() < k {
        return Err(Error::Config(format!(
            "rankings of length {} and {} cannot be compared at k = {}",
            pred.len(),
            truth.len(),
            k
        )));
    }
    Ok(())
}

/// Mean HR and NDCG of an arbitrary predicted distance against the
/// ground truth, without going through a model. `predicted(i, j)`
/// is read for `i != j` over the matrix's index space.
///
/// This is the ranking core of [`evaluate`]; it is public so oracle
/// and baseline predictors can be scored directly.
pub fn evaluate_predictions<F>(
    gt: &DistanceMatrix,
    predicted: F,
    cfg: &EvalConfig,
) -> Result<(BTreeMap<usize, f64>, BTreeMap<usize, f64>, usize)>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    cfg.validate()?;
    let n = gt.n();
    if n < 2 {
        return Err(Error::Data("evaluation needs at least two trajectories".into()));
    }
    let max_k = cfg.max_k();
    if max_k > n - 1 {
        return Err(Error::Config(format!(
            "k = {max_k} exceeds the {} candidates per query",
            n - 1
        )));
    }

    let queries: Vec<usize> = match cfg.queries {
        QuerySelection::All => (0..n).collect(),
        QuerySelection::Sample { count, seed } => {
            if count > n {
                return Err(Error::Config(format!(
                    "cannot sample {count} queries from {n} trajectories"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, n, count).into_vec();
            picked.sort_unstable();
            picked
        }
    };

    // Per-query scores in parallel; the mean is taken in query order.
    let per_query: Vec<(Vec<f64>, Vec<f64>)> = queries
        .par_iter()
        .map(|&q| {
            let ids: Vec<u64> = (0..n).filter(|&j| j != q).map(|j| gt.ids()[j]).collect();
            let true_d: Vec<f64> = (0..n).filter(|&j| j != q).map(|j| gt.get(q, j)).collect();
            let pred_d: Vec<f64> = (0..n)
                .filter(|&j| j != q)
                .map(|j| predicted(q.min(j), q.max(j)))
                .collect();
            let truth_rank = knn(&ids, &true_d, max_k).expect("k bounded above");
            let pred_rank = knn(&ids, &pred_d, max_k).expect("k bounded above");
            let hr: Vec<f64> = cfg
                .hr_ks
                .iter()
                .map(|&k| hit_rate(&pred_rank, &truth_rank, k).expect("k bounded above"))
                .collect();
            let nd: Vec<f64> = cfg
                .ndcg_ks
                .iter()
                .map(|&k| ndcg(&pred_rank, &truth_rank, k).expect("k bounded above"))
                .collect();
            (hr, nd)
        })
        .collect();

    let count = queries.len() as f64;
    let mut hr = BTreeMap::new();
    for (pos, &k) in cfg.hr_ks.iter().enumerate() {
        let sum: f64 = per_query.iter().map(|(h, _)| h[pos]).sum();
        hr.insert(k, sum / count);
    }
    let mut nd = BTreeMap::new();
    for (pos, &k) in cfg.ndcg_ks.iter().enumerate() {
        let sum: f64 = per_query.iter().map(|(_, d)| d[pos]).sum();
        nd.insert(k, sum / count);
    }
    Ok((hr, nd, queries.len()))
}

/// All upper-triangle model distances of a dataset, addressed through
/// a closure suitable for [`evaluate_predictions`] and
/// [`rvs_pairs`].
pub fn predicted_triangle(model: &EmbeddingModel, ds: &Dataset) -> Result<Vec<f64>> {
    let n = ds.len();
    let encoded: Vec<_> = ds
        .trajectories()
        .iter()
        .map(|t| model.encode(t))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| {
            let (xa, fa) = &encoded[i];
            let (xb, fb) = &encoded[j];
            model.pair_distance(xa, fa, xb, fb)
        })
        .collect())
}

/// Scores a model's retrieval quality against a ground-truth matrix.
///
/// The dataset must list exactly the matrix's ids in matrix order.
pub fn evaluate(
    model: &EmbeddingModel,
    ds: &Dataset,
    gt: &DistanceMatrix,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if ds.ids() != gt.ids() {
        return Err(Error::Data(
            "dataset and matrix disagree on ids or their order".into(),
        ));
    }
    let n = ds.len();
    let pred = predicted_triangle(model, ds)?;
    let (hr, ndcg, query_count) =
        evaluate_predictions(gt, |i, j| pred[tri_index(n, i, j)], cfg)?;
    Ok(EvalReport {
        mode: model.config().mode,
        hr,
        ndcg,
        query_count,
    })
}

/// Ground-truth and predicted relative violation sizes over every
/// violating triple of the ground truth, in lexicographic triple
/// order.
pub fn rvs_pairs(
    model: &EmbeddingModel,
    ds: &Dataset,
    gt: &DistanceMatrix,
) -> Result<Vec<(f64, f64)>> {
    if ds.ids() != gt.ids() {
        return Err(Error::Data(
            "dataset and matrix disagree on ids or their order".into(),
        ));
    }
    let n = ds.len();
    let pred = predicted_triangle(model, ds)?;
    let triples = violating_triples(gt)?;
    Ok(rvs_of_predicted(
        gt,
        |i, j| pred[tri_index(n, i, j)],
        &triples,
    ))
}

/// Writes `rvs_true,rvs_pred` rows.
pub fn write_rvs_pairs(
    pairs: &[(f64, f64)],
    writer: impl Write,
    origin: &str,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let io_err = |e| Error::io(origin, e);
    writeln!(w, "rvs_true,rvs_pred").map_err(io_err)?;
    for (t, p) in pairs {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*p)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

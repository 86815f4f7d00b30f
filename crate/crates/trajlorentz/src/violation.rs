//! Triangle-violation statistics over distance matrices.
//!
//! For a triple of trajectories with pairwise distances
//! `(f_ij, f_ik, f_jk)`, each distance has an excess over the other
//! two, for example `f_ij - f_ik - f_jk`. When any excess is positive
//! the triple violates the triangle inequality. Two aggregates
//! summarize how common and how severe this is across a matrix:
//!
//! * `RV`, the ratio of violating triples among those examined;
//! * `RVS`, the relative violation size of one triple,
//!   `(max - sum of the other two) / (sum of the other two)`,
//!   positive exactly for violating triples; `ARVS` is its mean over
//!   the violating ones.
//!
//! Triples can be enumerated exhaustively or sampled uniformly with a
//! seed; both paths are sequential and deterministic. All-zero
//! (degenerate) triples are excluded from both sides of the `RV` ratio
//! and reported separately.

use std::io::{BufWriter, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DistanceMatrix;
use crate::traj::fmt_f64;

/// Pairwise distances of one triple, in the fixed order
/// `(f_ij, f_ik, f_jk)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleDistances {
    pub f_ij: f64,
    pub f_ik: f64,
    pub f_jk: f64,
}

impl TripleDistances {
    pub fn new(f_ij: f64, f_ik: f64, f_jk: f64) -> Self {
        TripleDistances { f_ij, f_ik, f_jk }
    }

    /// Reads the three distances of positions `(i, j, k)` out of a
    /// matrix.
    pub fn from_matrix(m: &DistanceMatrix, i: usize, j: usize, k: usize) -> Self {
        TripleDistances {
            f_ij: m.get(i, j),
            f_ik: m.get(i, k),
            f_jk: m.get(j, k),
        }
    }
}

/// Triangle-violation flag: does any distance exceed the sum of the
/// other two? Equality is not a violation.
pub fn tvf(t: &TripleDistances) -> bool {
    let TripleDistances { f_ij, f_ik, f_jk } = *t;
    f_ij - f_ik - f_jk > 0.0 || f_jk - f_ij - f_ik > 0.0 || f_ik - f_ij - f_jk > 0.0
}

/// Relative violation size: `(max - rest) / rest` where `rest` is the
/// sum of the two non-maximal distances.
///
/// The value is permutation-invariant (ties for the maximum all give
/// the same ratio), positive exactly when [`tvf`] holds, and at least
/// `-1`. A triple with a positive maximum but `rest = 0` yields
/// `+inf`. The all-zero triple has no meaningful ratio and is an
/// error; sampling routines count such triples as degenerate instead.
pub fn rvs(t: &TripleDistances) -> Result<f64> {
    let TripleDistances { f_ij, f_ik, f_jk } = *t;
    // Fixed tie order f_ij, then f_jk, then f_ik; any choice among
    // tied maxima gives the same ratio.
    let max = if f_ij >= f_jk && f_ij >= f_ik {
        f_ij
    } else if f_jk >= f_ik {
        f_jk
    } else {
        f_ik
    };
    let rest = f_ij + f_ik + f_jk - max;
    if max == 0.0 && rest == 0.0 {
        return Err(Error::Data(
            "all three distances are zero; the relative violation size is undefined".into(),
        ));
    }
    Ok((max - rest) / rest)
}

/// Fixed-width histogram with clamping edge bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo);
        Histogram {
            lo,
            hi,
            counts: vec![0; bins],
        }
    }

    /// The layout used for violation reports: `[-1, 2]` in 60 bins of
    /// width 0.05.
    pub fn rvs_default() -> Self {
        Histogram::new(-1.0, 2.0, 60)
    }

    /// Counts a value; out-of-range values land in the nearest edge
    /// bin.
    pub fn record(&mut self, v: f64) {
        let bins = self.counts.len();
        let width = (self.hi - self.lo) / bins as f64;
        let idx = ((v - self.lo) / width).floor();
        let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
        self.counts[idx] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + i as f64 * width, self.lo + (i + 1) as f64 * width)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Writes `bin_lo,bin_hi,count` rows.
    pub fn write_csv(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        writeln!(w, "bin_lo,bin_hi,count").map_err(io_err)?;
        for (i, c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(i);
            writeln!(w, "{},{},{}", fmt_f64(lo), fmt_f64(hi), c).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Aggregate violation statistics over a set of triples.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationStats {
    /// Non-degenerate triples examined.
    pub sampled: u64,
    /// How many of them violate the triangle inequality.
    pub violating: u64,
    /// All-zero triples that were skipped.
    pub degenerate: u64,
    /// `violating / sampled`; zero when nothing was sampled.
    pub rv: f64,
    /// Mean relative violation size over the violating triples; zero
    /// when there are none.
    pub arvs: f64,
    /// Relative violation sizes of every sampled triple.
    pub histogram: Histogram,
}

impl ViolationStats {
    fn from_triples(triples: impl Iterator<Item = TripleDistances>) -> Self {
        let mut sampled = 0u64;
        let mut violating = 0u64;
        let mut degenerate = 0u64;
        let mut rvs_sum = 0.0;
        let mut histogram = Histogram::rvs_default();
        for t in triples {
            match rvs(&t) {
                Err(_) => degenerate += 1,
                Ok(v) => {
                    sampled += 1;
                    histogram.record(v);
                    if v > 0.0 {
                        violating += 1;
                        rvs_sum += v;
                    }
                }
            }
        }
        let rv = if sampled == 0 {
            0.0
        } else {
            violating as f64 / sampled as f64
        };
        let arvs = if violating == 0 {
            0.0
        } else {
            rvs_sum / violating as f64
        };
        ViolationStats {
            sampled,
            violating,
            degenerate,
            rv,
            arvs,
            histogram,
        }
    }

    /// Writes a one-row summary: `sampled,violating,degenerate,rv,arvs`.
    pub fn write_csv(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        writeln!(w, "sampled,violating,degenerate,rv,arvs").map_err(io_err)?;
        writeln!(
            w,
            "{},{},{},{},{}",
            self.sampled,
            self.violating,
            self.degenerate,
            fmt_f64(self.rv),
            fmt_f64(self.arvs)
        )
        .map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

fn check_matrix_size(m: &DistanceMatrix) -> Result<()> {
    if m.n() < 3 {
        return Err(Error::Data(format!(
            "violation statistics need at least 3 trajectories, got {}",
            m.n()
        )));
    }
    Ok(())
}

/// Examines `count` uniformly drawn triples `i < j < k` (with
/// replacement across draws). Equal seeds give equal statistics.
pub fn sample_violations(m: &DistanceMatrix, count: u64, seed: u64) -> Result<ViolationStats> {
    check_matrix_size(m)?;
    let n = m.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        loop {
            let mut t = [
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            ];
            t.sort_unstable();
            if t[0] != t[1] && t[1] != t[2] {
                return (t[0], t[1], t[2]);
            }
        }
    };
    Ok(ViolationStats::from_triples((0..count).map(|_| {
        let (i, j, k) = draw();
        TripleDistances::from_matrix(m, i, j, k)
    })))
}

/// Examines every triple `i < j < k` once, in lexicographic order.
pub fn exhaustive_violations(m: &DistanceMatrix) -> Result<ViolationStats> {
    check_matrix_size(m)?;
    let n = m.n();
    let triples = (0..n).flat_map(move |i| {
        (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k)))
    });
    Ok(ViolationStats::from_triples(
        triples.map(|(i, j, k)| TripleDistances::from_matrix(m, i, j, k)),
    ))
}

/// Every violating triple of the matrix, in lexicographic order.
pub fn violating_triples(m: &DistanceMatrix) -> Result<Vec<(usize, usize, usize)>> {
    check_matrix_size(m)?;
    let n = m.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if tvf(&TripleDistances::from_matrix(m, i, j, k)) {
                    out.push((i, j, k));
                }
            }
        }
    }
    Ok(out)
}

/// Pairs each triple's ground-truth relative violation size with the
/// one induced by a predicted distance function over the same index
/// space.
///
/// Degenerate ground-truth triples are skipped. A degenerate predicted
/// triple is scored `0.0`, the boundary value between violation and
/// compliance.
pub fn rvs_of_predicted(
    m_true: &DistanceMatrix,
    predicted: impl Fn(usize, usize) -> f64,
    triples: &[(usize, usize, usize)],
) -> Vec<(f64, f64)> {
    triples
        .iter()
        .filter_map(|&(i, j, k)| {
            let true_rvs = rvs(&TripleDistances::from_matrix(m_true, i, j, k)).ok()?;
            let pred = TripleDistances::new(predicted(i, j), predicted(i, k), predicted(j, k));
            let pred_rvs = rvs(&pred).unwrap_or(0.0);
            Some((true_rvs, pred_rvs))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{apex, lorentz_distance, spatial_reflection, HyperbolicPoint};
    use crate::metrics::MetricKind;
    use approx::assert_relative_eq;

    /// The worked four-trajectory matrix: one violating triple
    /// (distances 5, 2, 1) and a fourth trajectory far from everything.
    fn worked_matrix() -> DistanceMatrix {
        DistanceMatrix::from_upper(
            MetricKind::Dtw,
            vec![0, 1, 2, 3],
            // pairs (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
            vec![5.0, 2.0, 10.0, 1.0, 10.0, 10.0],
        )
        .unwrap()
    }

    #[test]
    fn test_tvf_cases() {
        assert!(tvf(&TripleDistances::new(4.0, 15.0, 9.0)));
        assert!(tvf(&TripleDistances::new(15.0, 4.0, 9.0)));
        // Equality is not a violation.
        assert!(!tvf(&TripleDistances::new(1.0, 1.0, 2.0)));
        assert!(!tvf(&TripleDistances::new(0.0, 0.0, 0.0)));
        assert!(!tvf(&TripleDistances::new(3.0, 4.0, 5.0)));
    }

    #[test]
    fn test_rvs_values() {
        assert_eq!(rvs(&TripleDistances::new(5.0, 2.0, 1.0)).unwrap(), 2.0 / 3.0);
        assert_eq!(rvs(&TripleDistances::new(1.0, 1.0, 2.0)).unwrap(), 0.0);
        assert_eq!(
            rvs(&TripleDistances::new(15.0, 4.0, 9.0)).unwrap(),
            2.0 / 13.0
        );
    }

    #[test]
    fn test_rvs_permutation_invariant() {
        let perms = [
            (5.0, 2.0, 1.0),
            (5.0, 1.0, 2.0),
            (2.0, 5.0, 1.0),
            (2.0, 1.0, 5.0),
            (1.0, 5.0, 2.0),
            (1.0, 2.0, 5.0),
        ];
        for (a, b, c) in perms {
            assert_eq!(rvs(&TripleDistances::new(a, b, c)).unwrap(), 2.0 / 3.0);
        }
        // Ties for the maximum agree regardless of which one is chosen.
        assert_eq!(rvs(&TripleDistances::new(3.0, 3.0, 1.0)).unwrap(), -0.25);
        assert_eq!(rvs(&TripleDistances::new(1.0, 3.0, 3.0)).unwrap(), -0.25);
    }

    #[test]
    fn test_rvs_degenerate_and_infinite() {
        assert!(rvs(&TripleDistances::new(0.0, 0.0, 0.0)).is_err());
        assert_eq!(
            rvs(&TripleDistances::new(5.0, 0.0, 0.0)).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn test_exhaustive_on_worked_matrix() {
        let stats = exhaustive_violations(&worked_matrix()).unwrap();
        assert_eq!(stats.sampled, 4);
        assert_eq!(stats.violating, 1);
        assert_eq!(stats.degenerate, 0);
        assert_eq!(stats.rv, 0.25);
        assert_eq!(stats.arvs, 2.0 / 3.0);
        assert_eq!(stats.histogram.total(), 4);
    }

    #[test]
    fn test_sampling_approaches_exhaustive() {
        let stats = sample_violations(&worked_matrix(), 40_000, 7).unwrap();
        assert!((stats.rv - 0.25).abs() < 0.01, "rv = {}", stats.rv);
        // Every violating triple scores 2/3; summing thousands of them
        // and dividing back is exact only up to accumulation rounding.
        assert_relative_eq!(stats.arvs, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn test_sampling_is_deterministic() {
        let a = sample_violations(&worked_matrix(), 5000, 42).unwrap();
        let b = sample_violations(&worked_matrix(), 5000, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_metric_matrix_has_no_violations() {
        // Distances between points on a line always obey the triangle
        // inequality.
        let xs = [0.0f64, 0.7, 1.9, 4.2, 5.0];
        let mut values = Vec::new();
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                values.push((xs[i] - xs[j]).abs());
            }
        }
        let m = DistanceMatrix::from_upper(
            MetricKind::Dtw,
            (0..xs.len() as u64).collect(),
            values,
        )
        .unwrap();
        let stats = exhaustive_violations(&m).unwrap();
        assert_eq!(stats.violating, 0);
        assert_eq!(stats.rv, 0.0);
        assert_eq!(stats.arvs, 0.0);
    }

    #[test]
    fn test_degenerate_triples_are_counted_not_ratioed() {
        let m = DistanceMatrix::from_upper(
            MetricKind::Dtw,
            vec![0, 1, 2],
            vec![0.0, 0.0, 0.0],
        )
        .unwrap();
        let stats = exhaustive_violations(&m).unwrap();
        assert_eq!(stats.sampled, 0);
        assert_eq!(stats.degenerate, 1);
        assert_eq!(stats.rv, 0.0);
    }

    #[test]
    fn test_too_small_matrix_rejected() {
        let m =
            DistanceMatrix::from_upper(MetricKind::Dtw, vec![0, 1], vec![1.0]).unwrap();
        assert!(exhaustive_violations(&m).is_err());
        assert!(sample_violations(&m, 10, 0).is_err());
    }

    #[test]
    fn test_histogram_binning() {
        let mut h = Histogram::rvs_default();
        h.record(-1.0); // first bin
        h.record(-0.999);
        h.record(0.0); // bin 20
        h.record(2.0); // clamped into the last bin
        h.record(55.0); // clamped
        h.record(-7.0); // clamped low
        assert_eq!(h.counts()[0], 3);
        assert_eq!(h.counts()[20], 1);
        assert_eq!(h.counts()[59], 2);
        assert_eq!(h.total(), 6);
        let (lo, hi) = h.bin_edges(0);
        assert_relative_eq!(lo, -1.0);
        assert_relative_eq!(hi, -0.95);
    }

    #[test]
    fn test_histogram_csv_layout() {
        let mut h = Histogram::rvs_default();
        h.record(0.5);
        let mut buf = Vec::new();
        h.write_csv(&mut buf, "<mem>").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_lo,bin_hi,count");
        assert_eq!(lines.len(), 61);
    }

    #[test]
    fn test_violating_triples_enumeration() {
        let triples = violating_triples(&worked_matrix()).unwrap();
        assert_eq!(triples, vec![(0, 1, 2)]);
    }

    #[test]
    fn test_rvs_of_predicted_identity() {
        let m = worked_matrix();
        let triples = violating_triples(&m).unwrap();
        let pairs = rvs_of_predicted(&m, |i, j| m.get(i, j), &triples);
        assert_eq!(pairs, vec![(2.0 / 3.0, 2.0 / 3.0)]);
    }

    #[test]
    fn test_rvs_of_predicted_euclidean_never_violates() {
        use rand::{Rng, SeedableRng};
        let m = worked_matrix();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let embed: Vec<[f64; 3]> =
            (0..4).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let pred = |i: usize, j: usize| {
            embed[i]
                .iter()
                .zip(&embed[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let all_triples: Vec<_> = (0..4)
            .flat_map(|i| (i + 1..4).flat_map(move |j| (j + 1..4).map(move |k| (i, j, k))))
            .collect();
        for (_, pred_rvs) in rvs_of_predicted(&m, pred, &all_triples) {
            assert!(pred_rvs <= 1e-12, "euclidean prediction violated: {pred_rvs}");
        }
    }

    #[test]
    fn test_rvs_of_predicted_lorentz_witness() {
        // Predicted distances from a mirrored pair and the apex:
        // (6, 1, 1) gives a predicted relative violation size of 2.
        let a = HyperbolicPoint::new(vec![2.0, 3.0f64.sqrt()], 1.0).unwrap();
        let pts = [a.clone(), spatial_reflection(&a), apex(1, 1.0)];
        let m = worked_matrix();
        let pred =
            |i: usize, j: usize| lorentz_distance(&pts[i.min(2)], &pts[j.min(2)]).unwrap();
        let pairs = rvs_of_predicted(&m, pred, &[(0, 1, 2)]);
        assert_eq!(pairs.len(), 1);
        assert_relative_eq!(pairs[0].1, 2.0, epsilon = 1e-9);
    }
}

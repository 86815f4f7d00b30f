//! The five trajectory similarity measures.
//!
//! All measures work on the planar coordinates only and ignore
//! timestamps. None of them requires equal lengths, and none of them is
//! guaranteed to satisfy the triangle inequality; quantifying how badly
//! it fails is the job of the [`crate::violation`] module.
//!
//! * `dtw`: dynamic time warping, the minimum total point-to-point
//!   cost over monotone alignments,
//!   `DTW[i][j] = d(a_i, b_j) + min(DTW[i-1][j], DTW[i][j-1], DTW[i-1][j-1])`,
//!   with the first row and column accumulated as prefix sums.
//! * `sspd`: symmetrized segment-path distance, the mean distance from
//!   each point of one trajectory to the other trajectory's polyline,
//!   averaged over both directions.
//! * `edr`: edit distance on real sequences; two points match when
//!   they are within `epsilon`, and every insert, delete, or mismatched
//!   substitution costs 1.
//! * `hausdorff`: the larger of the two directed nearest-point
//!   distances between the point sets.
//! * `dfrechet`: discrete Fréchet distance, the smallest leash length
//!   over monotone couplings.

use crate::error::{Error, Result};
use crate::traj::{Point, Trajectory};

/// Selects a measure; EDR carries its matching threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    Dtw,
    Sspd,
    Edr { epsilon: f64 },
    Hausdorff,
    DFrechet,
}

impl MetricKind {
    /// Checks parameter domains (currently only the EDR threshold).
    pub fn validate(&self) -> Result<()> {
        if let MetricKind::Edr { epsilon } = self {
            if !epsilon.is_finite() || *epsilon <= 0.0 {
                return Err(Error::Config(format!(
                    "edr epsilon must be positive and finite, got {epsilon}"
                )));
            }
        }
        Ok(())
    }

    /// Short name as used by the command line and in file headers.
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Dtw => "dtw",
            MetricKind::Sspd => "sspd",
            MetricKind::Edr { .. } => "edr",
            MetricKind::Hausdorff => "hausdorff",
            MetricKind::DFrechet => "dfrechet",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Dispatches to the measure selected by `kind`.
///
/// Both trajectories must be non-empty; [`crate::traj::Dataset`]
/// guarantees that for anything loaded through it.
pub fn compute(kind: MetricKind, a: &Trajectory, b: &Trajectory) -> f64 {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "similarity measures need non-empty trajectories"
    );
    match kind {
        MetricKind::Dtw => dtw(a, b),
        MetricKind::Sspd => sspd(a, b),
        MetricKind::Edr { epsilon } => edr(a, b, epsilon),
        MetricKind::Hausdorff => hausdorff(a, b),
        MetricKind::DFrechet => dfrechet(a, b),
    }
}

/// Dynamic time warping with Euclidean point cost.
pub fn dtw(a: &Trajectory, b: &Trajectory) -> f64 {
    let pa = &a.points;
    let pb = &b.points;
    let m = pb.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, p) in pa.iter().enumerate() {
        for (j, q) in pb.iter().enumerate() {
            let step = if i == 0 && j == 0 {
                0.0
            } else if i == 0 {
                cur[j - 1]
            } else if j == 0 {
                prev[0]
            } else {
                prev[j].min(prev[j - 1]).min(cur[j - 1])
            };
            cur[j] = p.dist(q) + step;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Distance from a point to the segment `[s, e]`.
fn point_segment_dist(p: &Point, s: &Point, e: &Point) -> f64 {
    let vx = e.lon - s.lon;
    let vy = e.lat - s.lat;
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.dist(s);
    }
    let t = (((p.lon - s.lon) * vx + (p.lat - s.lat) * vy) / len2).clamp(0.0, 1.0);
    let proj = Point::new(s.lon + t * vx, s.lat + t * vy);
    p.dist(&proj)
}

/// Distance from a point to a polyline; a single-point polyline
/// degenerates to the point distance.
fn point_polyline_dist(p: &Point, poly: &[Point]) -> f64 {
    if poly.len() == 1 {
        return p.dist(&poly[0]);
    }
    poly.windows(2)
        .map(|w| point_segment_dist(p, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// One direction of SSPD: the mean polyline distance of `a`'s points.
fn spd(a: &Trajectory, b: &Trajectory) -> f64 {
    let sum: f64 = a
        .points
        .iter()
        .map(|p| point_polyline_dist(p, &b.points))
        .sum();
    sum / a.points.len() as f64
}

/// Symmetrized segment-path distance, `(SPD(a,b) + SPD(b,a)) / 2`.
pub fn sspd(a: &Trajectory, b: &Trajectory) -> f64 {
    0.5 * (spd(a, b) + spd(b, a))
}

/// Edit distance on real sequences with matching threshold `epsilon`.
///
/// The result is an integer-valued count returned as `f64` to line up
/// with the other measures.
pub fn edr(a: &Trajectory, b: &Trajectory, epsilon: f64) -> f64 {
    let pa = &a.points;
    let pb = &b.points;
    let m = pb.len();
    // prev holds row i of the (la+1) x (lb+1) table; row 0 is 0..=m.
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for (i, p) in pa.iter().enumerate() {
        cur[0] = i + 1;
        for (j, q) in pb.iter().enumerate() {
            let subst = if p.dist(q) <= epsilon { 0 } else { 1 };
            cur[j + 1] = (prev[j] + subst).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m] as f64
}

/// Directed Hausdorff distance from `a`'s points to `b`'s points.
fn directed_hausdorff(a: &Trajectory, b: &Trajectory) -> f64 {
    a.points
        .iter()
        .map(|p| {
            b.points
                .iter()
                .map(|q| p.dist(q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between the two point sets.
pub fn hausdorff(a: &Trajectory, b: &Trajectory) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Discrete Fréchet distance,
/// `F[i][j] = max(d(a_i, b_j), min(F[i-1][j], F[i][j-1], F[i-1][j-1]))`.
pub fn dfrechet(a: &Trajectory, b: &Trajectory) -> f64 {
    let pa = &a.points;
    let pb = &b.points;
    let m = pb.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, p) in pa.iter().enumerate() {
        for (j, q) in pb.iter().enumerate() {
            let reach = if i == 0 && j == 0 {
                0.0
            } else if i == 0 {
                cur[j - 1]
            } else if j == 0 {
                prev[0]
            } else {
                prev[j].min(prev[j - 1]).min(cur[j - 1])
            };
            cur[j] = p.dist(q).max(reach);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-12;

    fn traj(id: u64, pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::new(id, pts.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    /// The tiny comb-shaped trio used throughout the crate: a straight
    /// wall, a zigzag that reaches toward it, and an offset drifting
    /// path. Its DTW distances are the integers 4, 9, 15, and
    /// 15 > 4 + 9 breaks the triangle inequality.
    fn comb_trio() -> (Trajectory, Trajectory, Trajectory) {
        (
            traj(0, &[(0.0, 0.0), (0.0, 1.0), (0.0, 3.0)]),
            traj(1, &[(2.0, 0.0), (0.0, 1.0), (2.0, 3.0)]),
            traj(2, &[(3.0, 0.0), (3.0, 1.0), (4.0, 3.0), (5.0, 3.0)]),
        )
    }

    // ---- independent oracles ------------------------------------------
    //
    // Top-down memoized recursions, deliberately written against the
    // textbook definitions rather than sharing code with the rolling-row
    // implementations above.

    fn dtw_oracle(a: &[Point], b: &[Point]) -> f64 {
        fn go(i: usize, j: usize, a: &[Point], b: &[Point], memo: &mut Vec<Vec<f64>>) -> f64 {
            if memo[i][j].is_finite() {
                return memo[i][j];
            }
            let d = a[i].dist(&b[j]);
            let v = if i == 0 && j == 0 {
                d
            } else if i == 0 {
                d + go(0, j - 1, a, b, memo)
            } else if j == 0 {
                d + go(i - 1, 0, a, b, memo)
            } else {
                let best = go(i - 1, j, a, b, memo)
                    .min(go(i, j - 1, a, b, memo))
                    .min(go(i - 1, j - 1, a, b, memo));
                d + best
            };
            memo[i][j] = v;
            v
        }
        let mut memo = vec![vec![f64::INFINITY; b.len()]; a.len()];
        go(a.len() - 1, b.len() - 1, a, b, &mut memo)
    }

    fn edr_oracle(a: &[Point], b: &[Point], eps: f64) -> f64 {
        fn go(
            i: usize,
            j: usize,
            a: &[Point],
            b: &[Point],
            eps: f64,
            memo: &mut Vec<Vec<Option<usize>>>,
        ) -> usize {
            if let Some(v) = memo[i][j] {
                return v;
            }
            let v = if i == 0 {
                j
            } else if j == 0 {
                i
            } else {
                let subst = if a[i - 1].dist(&b[j - 1]) <= eps { 0 } else { 1 };
                (go(i - 1, j - 1, a, b, eps, memo) + subst)
                    .min(go(i - 1, j, a, b, eps, memo) + 1)
                    .min(go(i, j - 1, a, b, eps, memo) + 1)
            };
            memo[i][j] = Some(v);
            v
        }
        let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
        go(a.len(), b.len(), a, b, eps, &mut memo) as f64
    }

    /// Brute force over every monotone coupling; exponential, so only
    /// for short inputs.
    fn dfrechet_oracle(a: &[Point], b: &[Point]) -> f64 {
        fn go(i: usize, j: usize, leash: f64, a: &[Point], b: &[Point], best: &mut f64) {
            let leash = leash.max(a[i].dist(&b[j]));
            if leash >= *best {
                return;
            }
            if i == a.len() - 1 && j == b.len() - 1 {
                *best = leash;
                return;
            }
            if i + 1 < a.len() {
                go(i + 1, j, leash, a, b, best);
            }
            if j + 1 < b.len() {
                go(i, j + 1, leash, a, b, best);
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                go(i + 1, j + 1, leash, a, b, best);
            }
        }
        let mut best = f64::INFINITY;
        go(0, 0, 0.0, a, b, &mut best);
        best
    }

    /// Point-to-segment distance by dense sampling, for checking the
    /// closed-form projection.
    fn segment_dist_sampled(p: &Point, s: &Point, e: &Point) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                let q = Point::new(s.lon + t * (e.lon - s.lon), s.lat + t * (e.lat - s.lat));
                p.dist(&q)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn seeded_trajs(seed: u64, count: usize, max_len: usize) -> Vec<Trajectory> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let len = rng.gen_range(1..=max_len);
                let pts = (0..len)
                    .map(|_| Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
                    .collect();
                Trajectory::new(i as u64, pts)
            })
            .collect()
    }

    // ---- dtw ----------------------------------------------------------

    #[test]
    fn test_dtw_comb_trio_is_integer_exact() {
        let (a, b, c) = comb_trio();
        // Every point cost on the optimal paths is the root of a perfect
        // square, so the sums are exact in floating point.
        assert_eq!(dtw(&a, &b), 4.0);
        assert_eq!(dtw(&b, &c), 9.0);
        assert_eq!(dtw(&a, &c), 15.0);
    }

    #[test]
    fn test_dtw_self_is_zero() {
        let (a, _, c) = comb_trio();
        assert_eq!(dtw(&a, &a), 0.0);
        assert_eq!(dtw(&c, &c), 0.0);
    }

    #[test]
    fn test_dtw_single_points() {
        let a = traj(0, &[(0.0, 0.0)]);
        let b = traj(1, &[(3.0, 4.0)]);
        assert_eq!(dtw(&a, &b), 5.0);
    }

    #[test]
    fn test_dtw_symmetry() {
        for pair in seeded_trajs(11, 20, 6).chunks(2) {
            assert_relative_eq!(dtw(&pair[0], &pair[1]), dtw(&pair[1], &pair[0]), epsilon = TOL);
        }
    }

    #[test]
    fn test_dtw_matches_oracle() {
        let ts = seeded_trajs(42, 60, 6);
        for pair in ts.chunks(2) {
            let got = dtw(&pair[0], &pair[1]);
            let want = dtw_oracle(&pair[0].points, &pair[1].points);
            assert_relative_eq!(got, want, epsilon = TOL, max_relative = TOL);
        }
    }

    #[test]
    fn test_dtw_translation_invariance() {
        let ts = seeded_trajs(7, 20, 6);
        for pair in ts.chunks(2) {
            let shift = |t: &Trajectory| {
                let pts = t
                    .points
                    .iter()
                    .map(|p| Point::new(p.lon + 13.25, p.lat - 7.5))
                    .collect();
                Trajectory::new(t.id, pts)
            };
            let base = dtw(&pair[0], &pair[1]);
            let moved = dtw(&shift(&pair[0]), &shift(&pair[1]));
            assert_relative_eq!(base, moved, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    // ---- sspd ---------------------------------------------------------

    #[test]
    fn test_sspd_point_vs_segment() {
        // One direction projects onto the segment (distance 1), the
        // other averages the two endpoint distances (2), so the
        // symmetrized value is 1.5.
        let a = traj(0, &[(0.0, 0.0)]);
        let b = traj(1, &[(0.0, 1.0), (0.0, 3.0)]);
        assert_relative_eq!(sspd(&a, &b), 1.5, epsilon = TOL);
    }

    #[test]
    fn test_sspd_identical_is_zero() {
        let (_, b, _) = comb_trio();
        assert_eq!(sspd(&b, &b), 0.0);
    }

    #[test]
    fn test_sspd_symmetry() {
        let ts = seeded_trajs(3, 20, 6);
        for pair in ts.chunks(2) {
            assert_relative_eq!(
                sspd(&pair[0], &pair[1]),
                sspd(&pair[1], &pair[0]),
                epsilon = TOL
            );
        }
    }

    #[test]
    fn test_segment_dist_matches_dense_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let s = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let e = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let exact = point_segment_dist(&p, &s, &e);
            let sampled = segment_dist_sampled(&p, &s, &e);
            assert_relative_eq!(exact, sampled, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn test_segment_dist_degenerate_segment() {
        let p = Point::new(1.0, 1.0);
        let s = Point::new(4.0, 5.0);
        assert_eq!(point_segment_dist(&p, &s, &s), 5.0);
    }

    // ---- edr ----------------------------------------------------------

    #[test]
    fn test_edr_identical_is_zero() {
        let (a, _, _) = comb_trio();
        assert_eq!(edr(&a, &a, 0.25), 0.0);
    }

    #[test]
    fn test_edr_one_deletion() {
        let a = traj(0, &[(0.0, 0.0), (0.0, 1.0)]);
        let b = traj(1, &[(0.0, 0.0)]);
        assert_eq!(edr(&a, &b, 0.1), 1.0);
    }

    #[test]
    fn test_edr_all_within_epsilon() {
        let a = traj(0, &[(0.0, 0.0), (0.1, 0.0)]);
        let b = traj(1, &[(0.05, 0.05), (0.1, 0.1)]);
        assert_eq!(edr(&a, &b, 1.0), 0.0);
    }

    #[test]
    fn test_edr_bounded_by_longer_length() {
        let ts = seeded_trajs(9, 40, 6);
        for pair in ts.chunks(2) {
            let v = edr(&pair[0], &pair[1], 0.5);
            assert!(v >= 0.0 && v <= pair[0].len().max(pair[1].len()) as f64);
            assert_eq!(v, v.round(), "edr must be integer-valued");
        }
    }

    #[test]
    fn test_edr_matches_oracle() {
        let ts = seeded_trajs(13, 60, 6);
        for pair in ts.chunks(2) {
            for eps in [0.05, 0.5, 2.0, 8.0] {
                let got = edr(&pair[0], &pair[1], eps);
                let want = edr_oracle(&pair[0].points, &pair[1].points, eps);
                assert_eq!(got, want);
            }
        }
    }

    // ---- hausdorff ----------------------------------------------------

    #[test]
    fn test_hausdorff_point_vs_pair() {
        let a = traj(0, &[(0.0, 0.0)]);
        let b = traj(1, &[(0.0, 1.0), (0.0, 3.0)]);
        // a -> b is 1, b -> a is max(1, 3) = 3.
        assert_eq!(hausdorff(&a, &b), 3.0);
    }

    #[test]
    fn test_hausdorff_symmetry_and_zero() {
        let (a, b, _) = comb_trio();
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert_relative_eq!(hausdorff(&a, &b), hausdorff(&b, &a), epsilon = TOL);
    }

    // ---- discrete frechet ---------------------------------------------

    #[test]
    fn test_dfrechet_parallel_segments() {
        let a = traj(0, &[(0.0, 0.0), (1.0, 0.0)]);
        let b = traj(1, &[(0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(dfrechet(&a, &b), 1.0);
    }

    #[test]
    fn test_dfrechet_matches_coupling_enumeration() {
        let ts = seeded_trajs(21, 60, 6);
        for pair in ts.chunks(2) {
            let got = dfrechet(&pair[0], &pair[1]);
            let want = dfrechet_oracle(&pair[0].points, &pair[1].points);
            assert_relative_eq!(got, want, epsilon = TOL, max_relative = TOL);
        }
    }

    #[test]
    fn test_dfrechet_at_least_hausdorff() {
        let ts = seeded_trajs(33, 40, 6);
        for pair in ts.chunks(2) {
            assert!(dfrechet(&pair[0], &pair[1]) >= hausdorff(&pair[0], &pair[1]) - TOL);
        }
    }

    // ---- dispatch and config ------------------------------------------

    #[test]
    fn test_compute_dispatch() {
        let (a, b, _) = comb_trio();
        assert_eq!(compute(MetricKind::Dtw, &a, &b), dtw(&a, &b));
        assert_eq!(
            compute(MetricKind::Edr { epsilon: 0.5 }, &a, &b),
            edr(&a, &b, 0.5)
        );
        assert_eq!(compute(MetricKind::Hausdorff, &a, &b), hausdorff(&a, &b));
        assert_eq!(compute(MetricKind::Sspd, &a, &b), sspd(&a, &b));
        assert_eq!(compute(MetricKind::DFrechet, &a, &b), dfrechet(&a, &b));
    }

    #[test]
    fn test_edr_epsilon_validation() {
        assert!(MetricKind::Edr { epsilon: 0.005 }.validate().is_ok());
        assert!(MetricKind::Edr { epsilon: 0.0 }.validate().is_err());
        assert!(MetricKind::Edr { epsilon: -1.0 }.validate().is_err());
        assert!(MetricKind::Edr { epsilon: f64::NAN }.validate().is_err());
        assert!(MetricKind::Dtw.validate().is_ok());
    }

    #[test]
    fn test_metric_names() {
        assert_eq!(MetricKind::Dtw.to_string(), "dtw");
        assert_eq!(MetricKind::Edr { epsilon: 0.1 }.to_string(), "edr");
        assert_eq!(MetricKind::DFrechet.to_string(), "dfrechet");
    }
}

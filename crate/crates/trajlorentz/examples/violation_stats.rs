//! Measuring how badly a trajectory measure breaks the triangle
//! inequality across a whole dataset.
//!
//! For every triple of trajectories the largest pairwise distance is
//! compared against the sum of the other two. The violation rate is
//! the fraction of triples where it wins; the mean relative violation
//! size says by how much. A warping measure on comb-shaped data
//! violates freely, while the same pipeline on single-point data
//! (where DTW degenerates to plain point distance, a metric) reports
//! exactly zero.
//!
//! Run: cargo run --example violation_stats

use trajlorentz::violation::{exhaustive_violations, sample_violations};
use trajlorentz::{gen_metric_dataset, gen_violating_dataset, DistanceMatrix, MetricKind};

fn main() -> trajlorentz::Result<()> {
    let ds = gen_violating_dataset(60, 1)?;
    let m = DistanceMatrix::compute(&ds, MetricKind::Dtw)?;

    // 60 trajectories give binom(60, 3) = 34220 triples, cheap enough
    // to enumerate outright.
    let exact = exhaustive_violations(&m)?;
    println!("comb-field dataset, n = 60, dtw, every triple:");
    println!("  triples      {}", exact.sampled);
    println!("  violating    {}", exact.violating);
    println!("  rate         {:.4}", exact.rv);
    println!("  mean size    {:.4}", exact.arvs);

    // Sampling reaches the same neighborhood at a fraction of the
    // cost, which is what larger datasets fall back to.
    let sampled = sample_violations(&m, 5_000, 7)?;
    println!("5000 sampled triples: rate {:.4}, mean size {:.4}", sampled.rv, sampled.arvs);

    // The histogram covers every triple: negative sizes are the slack
    // of law-abiding triples, positive ones are real violations, and
    // the edge bins absorb anything beyond the [-1, 2] range.
    println!();
    println!("relative-size histogram, re-binned by 0.25:");
    let counts = exact.histogram.counts();
    for group in (0..counts.len()).step_by(5) {
        let total: u64 = counts[group..(group + 5).min(counts.len())].iter().sum();
        let (lo, _) = exact.histogram.bin_edges(group);
        let (_, hi) = exact.histogram.bin_edges((group + 4).min(counts.len() - 1));
        let bar = "#".repeat((total as usize / 150).min(60));
        println!("  [{lo:>5.2}, {hi:>5.2})  {total:>6}  {bar}");
    }

    let control = gen_metric_dataset(60, 1)?;
    let mc = DistanceMatrix::compute(&control, MetricKind::Dtw)?;
    let stats = exhaustive_violations(&mc)?;
    println!();
    println!(
        "single-point control, same pipeline: rate {:.4}, violating {}",
        stats.rv, stats.violating
    );
    Ok(())
}

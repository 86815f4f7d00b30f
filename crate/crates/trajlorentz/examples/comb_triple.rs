//! The three-trajectory witness that breaks the triangle inequality.
//!
//! Dynamic time warping may match one point to many, so padding a
//! trajectory with repeats can shrink its distance to one neighbor
//! while stretching it to another. Seed 0 of the synthetic generator
//! starts with a hand-placed trio where this bites: the direct hop
//! costs 15 while the detour through the middle trajectory costs only
//! 4 + 9 = 13.
//!
//! Run: cargo run --example comb_triple

use trajlorentz::violation::{rvs, tvf, TripleDistances};
use trajlorentz::{gen_violating_dataset, metrics, DistanceMatrix, MetricKind};

fn main() -> trajlorentz::Result<()> {
    let ds = gen_violating_dataset(3, 0)?;
    for traj in ds.trajectories() {
        let pts: Vec<String> = traj
            .points
            .iter()
            .map(|p| format!("({:.0}, {:.0})", p.lon, p.lat))
            .collect();
        println!("trajectory {}: {}", traj.id, pts.join(" "));
    }

    let [a, b, c] = ds.trajectories() else {
        unreachable!("the dataset was built with exactly three trajectories")
    };
    let d01 = metrics::dtw(a, b);
    let d02 = metrics::dtw(a, c);
    let d12 = metrics::dtw(b, c);
    println!();
    println!("dtw(0, 1) = {d01}");
    println!("dtw(0, 2) = {d02}");
    println!("dtw(1, 2) = {d12}");
    println!(
        "direct hop {} > detour {} + {} = {}, excess {}",
        d02,
        d01,
        d12,
        d01 + d12,
        d02 - d01 - d12
    );

    let t = TripleDistances::new(d01, d02, d12);
    println!("violates the triangle inequality: {}", tvf(&t));
    println!("relative violation size: {:.6}", rvs(&t)?);

    // The same trio under a metric measure stays within the law, so
    // the warping itself, not the geometry, is what breaks it.
    println!();
    for kind in [MetricKind::Hausdorff, MetricKind::DFrechet] {
        let m = DistanceMatrix::compute(&ds, kind)?;
        let t = TripleDistances::from_matrix(&m, 0, 1, 2);
        println!(
            "{}: d01 = {:.3}, d02 = {:.3}, d12 = {:.3}, violates: {}",
            kind.name(),
            t.f_ij,
            t.f_ik,
            t.f_jk,
            tvf(&t)
        );
    }
    Ok(())
}

//! Trajectory similarity with room for triangle-inequality violations.
//!
//! Classical trajectory measures such as dynamic time warping are not
//! metrics: for three trajectories it regularly happens that
//! `d(a, c) > d(a, b) + d(b, c)`. Any model that approximates such a
//! measure with distances in a Euclidean (or any metric) embedding space
//! is therefore biased before training starts. This crate provides the
//! pieces needed to quantify that effect and to lift it:
//!
//! * five trajectory measures (DTW, SSPD, EDR, Hausdorff, discrete
//!   Fréchet) plus a parallel pairwise distance matrix with a compact
//!   binary file format,
//! * triangle-violation statistics over distance matrices: the
//!   violation indicator, ratio of violating triples, and relative
//!   violation size with histograms,
//! * Lorentzian geometry on the hyperboloid: the Lorentz inner product,
//!   a triangle-violation-capable distance, two projections from
//!   Euclidean space (a naive lift and a norm-compressed `cosh`
//!   parametrization), all with analytic gradients,
//! * a gated fusion distance that blends the Lorentz and Euclidean
//!   distances per pair,
//! * a small trainer (lookup-table and grid-cell encoders, SGD with
//!   momentum) and a retrieval evaluator (hit rate, NDCG),
//! * synthetic dataset generators with controlled violation structure.
//!
//! # Where to start
//!
//! The `examples/` directory is the guided tour; each file is runnable
//! on its own and prints what it demonstrates:
//!
//! ```text
//! cargo run --example comb_triple        four measures on a tiny violating triple
//! cargo run --example lorentz_basics     inner product, hyperboloid, violation witness
//! cargo run --example projections        naive lift collapse vs cosh compression
//! cargo run --example violation_stats    RV / ARVS / histogram on synthetic data
//! cargo run --example fusion_gate        the per-pair Lorentz/Euclidean gate
//! cargo run --example train_retrieval    end-to-end: synth, train, evaluate
//! ```
//!
//! The same pipeline is scriptable through the `trajlorentz` binary
//! (`synth`, `dist`, `violations`, `train`, `eval`, `project`); run it
//! with `--help` for the file formats and flags.
//!
//! # Conventions
//!
//! Points are `(lon, lat)` pairs in arbitrary planar units; nothing in
//! the crate projects or rescales coordinates. Distances are plain
//! `f64`. Every randomized entry point takes an explicit seed, and all
//! parallel code reduces in a fixed order, so equal seeds give
//! byte-identical outputs regardless of thread count.

pub mod error;
pub mod eval;
pub mod fusion;
pub mod lorentz;
pub mod matrix;
pub mod metrics;
pub mod synth;
pub mod traj;
pub mod trainer;
pub mod violation;

pub mod cli;

pub use error::{Error, Result};
pub use eval::{EvalConfig, EvalReport, QuerySelection};
pub use fusion::FactorEmbedding;
pub use lorentz::{HyperbolicPoint, ProjectionConfig};
pub use matrix::DistanceMatrix;
pub use metrics::MetricKind;
pub use synth::{gen_metric_dataset, gen_violating_dataset};
pub use traj::{BBox, Dataset, Grid, Point, Trajectory};
pub use trainer::{EmbeddingModel, EncoderKind, LossKind, Mode, TrainConfig, TrainLog};
pub use violation::{TripleDistances, ViolationStats};

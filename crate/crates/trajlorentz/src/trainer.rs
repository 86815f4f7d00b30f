//! Distance-learning trainer.
//!
//! The model assigns every trajectory an embedding `x` plus two gate
//! factor vectors, and is fit so that a mode-dependent distance
//! between embeddings matches the ground-truth matrix. Targets are
//! normalized by `μ`, the mean ground-truth distance, so learning
//! rates transfer between datasets; predicted distances consequently
//! live in normalized units.
//!
//! Four modes share one parameter layout:
//!
//! * `original`: Euclidean distance between embeddings;
//! * `lh-vanilla`: Lorentz distance between naive hyperboloid lifts;
//! * `lh-cosh`: Lorentz distance between `cosh` lifts;
//! * `fusion-dist`: the gated blend of `lh-cosh` and `original`.
//!
//! Two encoders map a trajectory to its parameter rows. `lookup` owns
//! one row per trajectory id (transductive, the default). `gridmean`
//! owns one row per occupied grid cell and averages the rows of the
//! cells a trajectory visits, with multiplicity, so unseen
//! trajectories over the same area can be encoded too.
//!
//! Training is plain SGD with momentum 0.9 over sampled pairs: per
//! epoch each anchor contributes its nearest ground-truth neighbors
//! plus uniformly drawn partners. Everything is sequential and seeded,
//! so a config reproduces its run bit for bit.
//!
//! The on-disk form (`LHM1`, little-endian) stores the config
//! snapshot, `μ`, the encoder keys, and the parameter table:
//!
//! ```text
//! magic "LHM1", u32 version 1,
//! u8 mode, u8 loss, u8 encoder,
//! u32 embed_dim, u32 factor_dim,
//! f64 beta, c, norm_clamp, learning_rate,
//! u32 epochs, batch_pairs, neighbors_per_anchor, random_pairs_per_anchor,
//! u64 seed, f64 mu,
//! [gridmean only: f64 cell_size, f64 bbox min_lon/min_lat/max_lon/max_lat]
//! u64 n_rows, n_rows x u64 key,
//! n_rows x (embed_dim + 2 factor_dim) x f64 table
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fusion::{fusion_backward, fusion_distance, FactorEmbedding};
use crate::lorentz::{
    cosh_project, cosh_project_backward, euclidean_distance, euclidean_distance_backward,
    lorentz_distance, lorentz_distance_backward, vanilla_project, vanilla_project_backward,
    ProjectionConfig,
};
use crate::matrix::DistanceMatrix;
use crate::traj::{fmt_f64, Dataset, Grid, Trajectory};

/// Momentum coefficient of the SGD update; fixed rather than
/// configurable because nothing in the pipeline tunes it.
const MOMENTUM: f64 = 0.9;

/// Half-width of the uniform parameter initialization.
const INIT_RANGE: f64 = 0.05;

/// Which distance the model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Original,
    LhVanilla,
    LhCosh,
    FusionDist,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Original, Mode::LhVanilla, Mode::LhCosh, Mode::FusionDist];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Original => "original",
            Mode::LhVanilla => "lh-vanilla",
            Mode::LhCosh => "lh-cosh",
            Mode::FusionDist => "fusion-dist",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "original" => Ok(Mode::Original),
            "lh-vanilla" => Ok(Mode::LhVanilla),
            "lh-cosh" => Ok(Mode::LhCosh),
            "fusion-dist" => Ok(Mode::FusionDist),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}; expected original, lh-vanilla, lh-cosh, or fusion-dist"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Training objective on normalized distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Mae,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            other => Err(Error::Config(format!(
                "unknown loss {other:?}; expected mse or mae"
            ))),
        }
    }
}

/// How trajectories map to parameter rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncoderKind {
    /// One row per trajectory id.
    Lookup,
    /// One row per occupied grid cell of the given size; a trajectory
    /// is the multiplicity-weighted mean of its cells' rows.
    GridMean { cell_size: f64 },
}

/// Full training configuration; the defaults are the ones every
/// example in this crate uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub factor_dim: usize,
    pub beta: f64,
    pub c: f64,
    pub norm_clamp: f64,
    pub mode: Mode,
    pub loss: LossKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_pairs: usize,
    pub neighbors_per_anchor: usize,
    pub random_pairs_per_anchor: usize,
    pub seed: u64,
    pub encoder: EncoderKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 32,
            factor_dim: 8,
            beta: 1.0,
            c: 4.0,
            norm_clamp: 50.0,
            mode: Mode::FusionDist,
            loss: LossKind::Mse,
            learning_rate: 1e-3,
            epochs: 300,
            batch_pairs: 32,
            neighbors_per_anchor: 10,
            random_pairs_per_anchor: 10,
            seed: 0,
            encoder: EncoderKind::Lookup,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 {
            return Err(Error::Config("embed_dim must be positive".into()));
        }
        if self.factor_dim == 0 {
            return Err(Error::Config("factor_dim must be positive".into()));
        }
        self.projection().validate()?;
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.batch_pairs == 0 {
            return Err(Error::Config("batch_pairs must be positive".into()));
        }
        if self.neighbors_per_anchor == 0 && self.random_pairs_per_anchor == 0 {
            return Err(Error::Config(
                "at least one of neighbors_per_anchor and random_pairs_per_anchor must be positive"
                    .into(),
            ));
        }
        if let EncoderKind::GridMean { cell_size } = self.encoder {
            if !cell_size.is_finite() || cell_size <= 0.0 {
                return Err(Error::Config(format!(
                    "grid cell size must be positive and finite, got {cell_size}"
                )));
            }
        }
        Ok(())
    }

    /// The projection parameters shared by the Lorentz modes.
    pub fn projection(&self) -> ProjectionConfig {
        ProjectionConfig {
            beta: self.beta,
            c: self.c,
            norm_clamp: self.norm_clamp,
        }
    }

    /// Width of one parameter row: embedding plus both gate factors.
    pub fn row_width(&self) -> usize {
        self.embed_dim + 2 * self.factor_dim
    }
}

/// Per-epoch mean losses of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

impl TrainLog {
    /// Writes `epoch,mean_loss` rows.
    pub fn write_csv(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        writeln!(w, "epoch,mean_loss").map_err(io_err)?;
        for (epoch, loss) in self.epoch_losses.iter().enumerate() {
            writeln!(w, "{},{}", epoch, fmt_f64(*loss)).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Residual summary of a model against a ground-truth matrix, in
/// normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStats {
    pub mse: f64,
    pub mae: f64,
}

/// A trainable (or trained) embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    config: TrainConfig,
    mu: f64,
    /// Lookup: trajectory ids. Gridmean: occupied cell indices.
    keys: Vec<u64>,
    key_index: BTreeMap<u64, usize>,
    /// Row-major table, `keys.len()` rows of `config.row_width()`.
    table: Vec<f64>,
    /// Present only for the gridmean encoder.
    grid: Option<Grid>,
}

impl EmbeddingModel {
    /// Creates an untrained model for a dataset.
    ///
    /// Parameters are drawn uniformly from `[-0.05, 0.05]` with the
    /// config seed. The normalizer `μ` starts neutral at 1 and is
    /// fitted by [`EmbeddingModel::train`].
    pub fn init(ds: &Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;

        let (keys, grid) = match config.encoder {
            EncoderKind::Lookup => (ds.ids(), None),
            EncoderKind::GridMean { cell_size } => {
                let grid = Grid::new(ds.bbox(), cell_size)?;
                let mut cells: Vec<u64> = ds
                    .trajectories()
                    .iter()
                    .flat_map(|t| t.points.iter().map(|p| grid.cell(p)))
                    .collect();
                cells.sort_unstable();
                cells.dedup();
                (cells, Some(grid))
            }
        };
        let key_index: BTreeMap<u64, usize> =
            keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let table = (0..keys.len() * config.row_width())
            .map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
            .collect();

        Ok(EmbeddingModel {
            config,
            mu: 1.0,
            keys,
            key_index,
            table,
            grid,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// The normalization constant: the mean ground-truth distance seen
    /// by the last [`EmbeddingModel::train`] call, 1 until then.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Row keys: trajectory ids (lookup) or grid cells (gridmean).
    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    /// One parameter row, `[x | v_lo | v_eu]`.
    pub fn row(&self, key: u64) -> Option<&[f64]> {
        let w = self.config.row_width();
        self.key_index.get(&key).map(|&i| &self.table[i * w..(i + 1) * w])
    }

    /// Overwrites one parameter row; meant for warm starts and tests.
    pub fn set_row(&mut self, key: u64, row: &[f64]) -> Result<()> {
        let w = self.config.row_width();
        if row.len() != w {
            return Err(Error::Config(format!(
                "row must have {} entries, got {}",
                w,
                row.len()
            )));
        }
        match self.key_index.get(&key) {
            None => Err(Error::Data(format!("unknown row key {key}"))),
            Some(&i) => {
                self.table[i * w..(i + 1) * w].copy_from_slice(row);
                Ok(())
            }
        }
    }

    /// Encodes a trajectory into its embedding and gate factors.
    pub fn encode(&self, t: &Trajectory) -> Result<(Vec<f64>, FactorEmbedding)> {
        let (row, _) = self.encode_with_sources(t)?;
        Ok(self.split_row(row))
    }

    /// Encoder core: the combined row plus the `(row index, weight)`
    /// sources it came from, which the backward pass scatters into.
    fn encode_with_sources(&self, t: &Trajectory) -> Result<(Vec<f64>, Vec<(usize, f64)>)> {
        let w = self.config.row_width();
        match self.config.encoder {
            EncoderKind::Lookup => match self.key_index.get(&t.id) {
                None => Err(Error::Data(format!(
                    "trajectory id {} was not seen at init; the lookup encoder cannot encode it",
                    t.id
                ))),
                Some(&i) => Ok((self.table[i * w..(i + 1) * w].to_vec(), vec![(i, 1.0)])),
            },
            EncoderKind::GridMean { .. } => {
                let grid = self.grid.as_ref().expect("gridmean model carries its grid");
                let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
                let total = t.points.len() as f64;
                let mut row = vec![0.0; w];
                for p in &t.points {
                    // Cells outside the table (possible for data beyond
                    // the training area) contribute zeros.
                    if let Some(&i) = self.key_index.get(&grid.cell(p)) {
                        *weights.entry(i).or_insert(0.0) += 1.0;
                    }
                }
                let sources: Vec<(usize, f64)> = weights
                    .into_iter()
                    .map(|(i, count)| (i, count / total))
                    .collect();
                for &(i, weight) in &sources {
                    for (out, v) in row.iter_mut().zip(&self.table[i * w..(i + 1) * w]) {
                        *out += weight * v;
                    }
                }
                Ok((row, sources))
            }
        }
    }

    fn split_row(&self, row: Vec<f64>) -> (Vec<f64>, FactorEmbedding) {
        let d = self.config.embed_dim;
        let m = self.config.factor_dim;
        let x = row[..d].to_vec();
        let f = FactorEmbedding::new(row[d..d + m].to_vec(), row[d + m..d + 2 * m].to_vec());
        (x, f)
    }

    /// The model's distance between two trajectories, in normalized
    /// units.
    pub fn model_distance(&self, a: &Trajectory, b: &Trajectory) -> Result<f64> {
        let (xa, fa) = self.encode(a)?;
        let (xb, fb) = self.encode(b)?;
        Ok(self.pair_distance(&xa, &fa, &xb, &fb))
    }

    /// Mode dispatch on already-encoded trajectories.
    pub fn pair_distance(
        &self,
        xa: &[f64],
        fa: &FactorEmbedding,
        xb: &[f64],
        fb: &FactorEmbedding,
    ) -> f64 {
        let proj = self.config.projection();
        match self.config.mode {
            Mode::Original => euclidean_distance(xa, xb),
            Mode::LhVanilla => {
                let pa = vanilla_project(xa, proj.beta);
                let pb = vanilla_project(xb, proj.beta);
                lorentz_distance(&pa, &pb).expect("lifts share curvature")
            }
            Mode::LhCosh => {
                let pa = cosh_project(xa, &proj);
                let pb = cosh_project(xb, &proj);
                lorentz_distance(&pa, &pb).expect("lifts share curvature")
            }
            Mode::FusionDist => fusion_distance(xa, xb, fa, fb, &proj).d_fu,
        }
    }

    /// Gradient of `upstream * pair_distance` with respect to the two
    /// encoded inputs. Factor gradients are zero outside fusion mode.
    fn pair_backward(
        &self,
        xa: &[f64],
        fa: &FactorEmbedding,
        xb: &[f64],
        fb: &FactorEmbedding,
        upstream: f64,
    ) -> (Vec<f64>, Vec<f64>, FactorEmbedding, FactorEmbedding) {
        let proj = self.config.projection();
        let m = self.config.factor_dim;
        match self.config.mode {
            Mode::Original => {
                let (gxa, gxb) = euclidean_distance_backward(xa, xb, upstream);
                (gxa, gxb, FactorEmbedding::zeros(m), FactorEmbedding::zeros(m))
            }
            Mode::LhVanilla => {
                let pa = vanilla_project(xa, proj.beta);
                let pb = vanilla_project(xb, proj.beta);
                let (gpa, gpb) = lorentz_distance_backward(&pa, &pb, upstream);
                let gxa = vanilla_project_backward(xa, proj.beta, &gpa);
                let gxb = vanilla_project_backward(xb, proj.beta, &gpb);
                (gxa, gxb, FactorEmbedding::zeros(m), FactorEmbedding::zeros(m))
            }
            Mode::LhCosh => {
                let pa = cosh_project(xa, &proj);
                let pb = cosh_project(xb, &proj);
                let (gpa, gpb) = lorentz_distance_backward(&pa, &pb, upstream);
                let gxa = cosh_project_backward(xa, &proj, &gpa);
                let gxb = cosh_project_backward(xb, &proj, &gpb);
                (gxa, gxb, FactorEmbedding::zeros(m), FactorEmbedding::zeros(m))
            }
            Mode::FusionDist => {
                let g = fusion_backward(xa, xb, fa, fb, &proj, upstream);
                (g.xa, g.xb, g.fa, g.fb)
            }
        }
    }

    /// Loss of one pair and the derivative with respect to the
    /// predicted distance.
    fn loss_and_slope(&self, predicted: f64, target: f64) -> (f64, f64) {
        let diff = predicted - target;
        match self.config.loss {
            LossKind::Mse => (diff * diff, 2.0 * diff),
            LossKind::Mae => (diff.abs(), diff.signum() * if diff == 0.0 { 0.0 } else { 1.0 }),
        }
    }

    /// Mean loss and gradient of one batch of index pairs, without
    /// touching the parameters. The gradient has the table's shape.
    fn batch_gradient(
        &self,
        ds: &Dataset,
        gt: &DistanceMatrix,
        pairs: &[(usize, usize)],
    ) -> Result<(Vec<f64>, f64)> {
        let w = self.config.row_width();
        let d = self.config.embed_dim;
        let m = self.config.factor_dim;
        let mut grad = vec![0.0; self.table.len()];
        let mut loss_sum = 0.0;
        let scale = 1.0 / pairs.len() as f64;

        for &(i, j) in pairs {
            let ta = &ds.trajectories()[i];
            let tb = &ds.trajectories()[j];
            let (row_a, src_a) = self.encode_with_sources(ta)?;
            let (row_b, src_b) = self.encode_with_sources(tb)?;
            let (xa, fa) = self.split_row(row_a);
            let (xb, fb) = self.split_row(row_b);

            let predicted = self.pair_distance(&xa, &fa, &xb, &fb);
            let target = gt.get(i, j) / self.mu;
            let (loss, slope) = self.loss_and_slope(predicted, target);
            loss_sum += loss;

            let (gxa, gxb, gfa, gfb) = self.pair_backward(&xa, &fa, &xb, &fb, slope * scale);
            let scatter = |grad: &mut Vec<f64>,
                           sources: &[(usize, f64)],
                           gx: &[f64],
                           gf: &FactorEmbedding| {
                for &(row, weight) in sources {
                    let base = row * w;
                    for (k, g) in gx.iter().enumerate() {
                        grad[base + k] += weight * g;
                    }
                    for (k, g) in gf.v_lo.iter().enumerate() {
                        grad[base + d + k] += weight * g;
                    }
                    for (k, g) in gf.v_eu.iter().enumerate() {
                        grad[base + d + m + k] += weight * g;
                    }
                }
            };
            scatter(&mut grad, &src_a, &gxa, &gfa);
            scatter(&mut grad, &src_b, &gxb, &gfb);
        }
        Ok((grad, loss_sum * scale))
    }

    /// Runs the configured number of epochs and returns the loss log.
    ///
    /// The matrix must list exactly the dataset's ids in dataset
    /// order. Before the first epoch the normalizer `μ` is fitted as
    /// the mean ground-truth distance; targets are `gt / μ`.
    ///
    /// Fully sequential and reproducible: pair sampling, shuffling,
    /// and updates all consume the seeded generator in a fixed order.
    /// Momentum state lives only for the duration of the call.
    pub fn train(&mut self, ds: &Dataset, gt: &DistanceMatrix) -> Result<TrainLog> {
        check_alignment(ds, gt)?;
        let n = ds.len();
        if n < 2 {
            return Err(Error::Data("training needs at least two trajectories".into()));
        }
        let mu = gt.values().iter().sum::<f64>() / gt.values().len() as f64;
        if mu <= 0.0 {
            return Err(Error::Data(
                "ground-truth distances are all zero; nothing to normalize against".into(),
            ));
        }
        self.mu = mu;
        let neighbors = nearest_neighbors(
            gt,
            self.config.neighbors_per_anchor.min(n - 1),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(1));
        let mut velocity = vec![0.0; self.table.len()];
        let mut log = TrainLog {
            epoch_losses: Vec::with_capacity(self.config.epochs),
        };

        for epoch in 0..self.config.epochs {
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            for i in 0..n {
                for &j in &neighbors[i] {
                    pairs.push((i, j));
                }
                for _ in 0..self.config.random_pairs_per_anchor {
                    let mut j = rng.gen_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    pairs.push((i, j));
                }
            }
            pairs.shuffle(&mut rng);

            let mut loss_sum = 0.0;
            let mut pair_count = 0usize;
            for batch in pairs.chunks(self.config.batch_pairs) {
                let (grad, batch_loss) = self.batch_gradient(ds, gt, batch)?;
                loss_sum += batch_loss * batch.len() as f64;
                pair_count += batch.len();
                for ((p, v), g) in self.table.iter_mut().zip(&mut velocity).zip(&grad) {
                    *v = MOMENTUM * *v - self.config.learning_rate * g;
                    *p += *v;
                }
            }
            let mean_loss = loss_sum / pair_count as f64;
            if !mean_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: mean_loss,
                    learning_rate: self.config.learning_rate,
                });
            }
            log.epoch_losses.push(mean_loss);
        }

        if self.table.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                epoch: self.config.epochs,
                loss: f64::NAN,
                learning_rate: self.config.learning_rate,
            });
        }
        Ok(log)
    }

    /// Residuals over every pair of the matrix, in normalized units.
    pub fn fit_stats(&self, ds: &Dataset, gt: &DistanceMatrix) -> Result<FitStats> {
        check_alignment(ds, gt)?;
        let n = ds.len();
        let encoded: Vec<(Vec<f64>, FactorEmbedding)> = ds
            .trajectories()
            .iter()
            .map(|t| self.encode(t))
            .collect::<Result<_>>()?;
        let mut se = 0.0;
        let mut ae = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                let (xa, fa) = &encoded[i];
                let (xb, fb) = &encoded[j];
                let predicted = self.pair_distance(xa, fa, xb, fb);
                let diff = predicted - gt.get(i, j) / self.mu;
                se += diff * diff;
                ae += diff.abs();
                count += 1;
            }
        }
        Ok(FitStats {
            mse: se / count as f64,
            mae: ae / count as f64,
        })
    }

    /// Writes the `LHM1` binary form.
    pub fn write(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        w.write_all(b"LHM1").map_err(io_err)?;
        w.write_all(&1u32.to_le_bytes()).map_err(io_err)?;
        let mode = match self.config.mode {
            Mode::Original => 0u8,
            Mode::LhVanilla => 1,
            Mode::LhCosh => 2,
            Mode::FusionDist => 3,
        };
        let loss = match self.config.loss {
            LossKind::Mse => 0u8,
            LossKind::Mae => 1,
        };
        let encoder = match self.config.encoder {
            EncoderKind::Lookup => 0u8,
            EncoderKind::GridMean { .. } => 1,
        };
        w.write_all(&[mode, loss, encoder]).map_err(io_err)?;
        for v in [self.config.embed_dim, self.config.factor_dim] {
            w.write_all(&(v as u32).to_le_bytes()).map_err(io_err)?;
        }
        for v in [
            self.config.beta,
            self.config.c,
            self.config.norm_clamp,
            self.config.learning_rate,
        ] {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        for v in [
            self.config.epochs,
            self.config.batch_pairs,
            self.config.neighbors_per_anchor,
            self.config.random_pairs_per_anchor,
        ] {
            w.write_all(&(v as u32).to_le_bytes()).map_err(io_err)?;
        }
        w.write_all(&self.config.seed.to_le_bytes()).map_err(io_err)?;
        w.write_all(&self.mu.to_le_bytes()).map_err(io_err)?;
        if let EncoderKind::GridMean { cell_size } = self.config.encoder {
            let grid = self.grid.as_ref().expect("gridmean model carries its grid");
            w.write_all(&cell_size.to_le_bytes()).map_err(io_err)?;
            let b = grid.bbox();
            for v in [b.min_lon, b.min_lat, b.max_lon, b.max_lat] {
                w.write_all(&v.to_le_bytes()).map_err(io_err)?;
            }
        }
        w.write_all(&(self.keys.len() as u64).to_le_bytes()).map_err(io_err)?;
        for k in &self.keys {
            w.write_all(&k.to_le_bytes()).map_err(io_err)?;
        }
        for v in &self.table {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// Writes the `LHM1` binary form to a file path.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(&name, e))?;
        self.write(file, &name)
    }

    /// Reads the `LHM1` binary form.
    pub fn read(reader: impl Read, origin: &str) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let bad = |msg: String| Error::Data(format!("{origin}: {msg}"));
        let mut b4 = [0u8; 4];
        read_exact(&mut r, &mut b4, origin)?;
        if &b4 != b"LHM1" {
            return Err(bad(format!("bad magic {b4:?}, expected \"LHM1\"")));
        }
        read_exact(&mut r, &mut b4, origin)?;
        let version = u32::from_le_bytes(b4);
        if version != 1 {
            return Err(bad(format!("unsupported model version {version}")));
        }
        let mut b3 = [0u8; 3];
        read_exact(&mut r, &mut b3, origin)?;
        let mode = match b3[0] {
            0 => Mode::Original,
            1 => Mode::LhVanilla,
            2 => Mode::LhCosh,
            3 => Mode::FusionDist,
            t => return Err(bad(format!("unknown mode tag {t}"))),
        };
        let loss = match b3[1] {
            0 => LossKind::Mse,
            1 => LossKind::Mae,
            t => return Err(bad(format!("unknown loss tag {t}"))),
        };
        let read_u32 = |r: &mut BufReader<_>| -> Result<u32> {
            let mut b = [0u8; 4];
            read_exact(r, &mut b, origin)?;
            Ok(u32::from_le_bytes(b))
        };
        let read_f64 = |r: &mut BufReader<_>| -> Result<f64> {
            let mut b = [0u8; 8];
            read_exact(r, &mut b, origin)?;
            Ok(f64::from_le_bytes(b))
        };
        let embed_dim = read_u32(&mut r)? as usize;
        let factor_dim = read_u32(&mut r)? as usize;
        let beta = read_f64(&mut r)?;
        let c = read_f64(&mut r)?;
        let norm_clamp = read_f64(&mut r)?;
        let learning_rate = read_f64(&mut r)?;
        let epochs = read_u32(&mut r)? as usize;
        let batch_pairs = read_u32(&mut r)? as usize;
        let neighbors_per_anchor = read_u32(&mut r)? as usize;
        let random_pairs_per_anchor = read_u32(&mut r)? as usize;
        let mut b8 = [0u8; 8];
        read_exact(&mut r, &mut b8, origin)?;
        let seed = u64::from_le_bytes(b8);
        read_exact(&mut r, &mut b8, origin)?;
        let mu = f64::from_le_bytes(b8);

        let (encoder, grid) = match b3[2] {
            0 => (EncoderKind::Lookup, None),
            1 => {
                read_exact(&mut r, &mut b8, origin)?;
                let cell_size = f64::from_le_bytes(b8);
                let mut bounds = [0.0f64; 4];
                for v in &mut bounds {
                    read_exact(&mut r, &mut b8, origin)?;
                    *v = f64::from_le_bytes(b8);
                }
                let bbox = crate::traj::BBox {
                    min_lon: bounds[0],
                    min_lat: bounds[1],
                    max_lon: bounds[2],
                    max_lat: bounds[3],
                };
                (EncoderKind::GridMean { cell_size }, Some(Grid::new(bbox, cell_size)?))
            }
            t => return Err(bad(format!("unknown encoder tag {t}"))),
        };

        let config = TrainConfig {
            embed_dim,
            factor_dim,
            beta,
            c,
            norm_clamp,
            mode,
            loss,
            learning_rate,
            epochs,
            batch_pairs,
            neighbors_per_anchor,
            random_pairs_per_anchor,
            seed,
            encoder,
        };
        config.validate().map_err(|e| bad(e.to_string()))?;
        if !mu.is_finite() || mu <= 0.0 {
            return Err(bad(format!("stored mu must be positive, got {mu}")));
        }

        read_exact(&mut r, &mut b8, origin)?;
        let n_rows = u64::from_le_bytes(b8) as usize;
        if n_rows == 0 {
            return Err(bad("model has no parameter rows".into()));
        }
        let mut keys = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            read_exact(&mut r, &mut b8, origin)?;
            keys.push(u64::from_le_bytes(b8));
        }
        let key_index: BTreeMap<u64, usize> =
            keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        if key_index.len() != keys.len() {
            return Err(bad("model row keys must be distinct".into()));
        }
        let mut table = Vec::with_capacity(n_rows * config.row_width());
        for _ in 0..n_rows * config.row_width() {
            read_exact(&mut r, &mut b8, origin)?;
            let v = f64::from_le_bytes(b8);
            if !v.is_finite() {
                return Err(bad("model table contains a non-finite value".into()));
            }
            table.push(v);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::io(origin, e))? != 0 {
            return Err(bad("trailing bytes after model payload".into()));
        }
        Ok(EmbeddingModel {
            config,
            mu,
            keys,
            key_index,
            table,
            grid,
        })
    }

    /// Reads the `LHM1` binary form from a file path.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(&name, e))?;
        Self::read(file, &name)
    }
}

fn check_alignment(ds: &Dataset, gt: &DistanceMatrix) -> Result<()> {
    if ds.ids() != gt.ids() {
        return Err(Error::Data(
            "dataset and matrix disagree on ids or their order".into(),
        ));
    }
    Ok(())
}

/// For each anchor, the indices of its nearest neighbors by
/// ground-truth distance, ties broken by ascending id.
fn nearest_neighbors(gt: &DistanceMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = gt.n();
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                gt.get(i, a)
                    .partial_cmp(&gt.get(i, b))
                    .expect("matrix values are finite")
                    .then(gt.ids()[a].cmp(&gt.ids()[b]))
            });
            others.truncate(k);
            others
        })
        .collect()
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], origin: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Data(format!("{origin}: file truncated"))
        } else {
            Error::io(origin, e)
        }
    })
}

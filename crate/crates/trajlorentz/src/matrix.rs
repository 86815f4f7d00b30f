//! Pairwise distance matrices and their on-disk format.
//!
//! A [`DistanceMatrix`] stores the upper triangle of the symmetric
//! pairwise matrix row-major, together with the id order and the
//! measure that produced it. Pairs are evaluated in parallel with
//! rayon, but results land in pre-assigned slots, so the matrix (and
//! every file written from it) is byte-identical no matter how many
//! threads run.
//!
//! The binary format (`TDM1`) is little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TDM1"
//! 4       4     u32 trajectory count n
//! 8       1     u8 metric tag (0 dtw, 1 sspd, 2 edr, 3 hausdorff, 4 dfrechet)
//! 9       8     f64 edr epsilon (0.0 when the metric is not edr)
//! 17      8n    u64 trajectory ids, matrix order
//! 17+8n   8T    f64 upper-triangle values, T = n(n-1)/2
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind};
use crate::traj::{fmt_f64, Dataset};

const MAGIC: &[u8; 4] = b"TDM1";

/// Symmetric pairwise distances between the trajectories of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    metric: MetricKind,
    ids: Vec<u64>,
    values: Vec<f64>,
}

/// Flat position of pair `(i, j)` with `i < j` in an upper triangle
/// stored row-major.
pub(crate) fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl DistanceMatrix {
    /// Evaluates the selected measure on every unordered pair.
    ///
    /// Runs on the current rayon pool; install a sized pool first to
    /// bound the worker count.
    pub fn compute(ds: &Dataset, metric: MetricKind) -> Result<Self> {
        metric.validate()?;
        let n = ds.len();
        let trajs = ds.trajectories();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let values: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| metrics::compute(metric, &trajs[i], &trajs[j]))
            .collect();
        for (&(i, j), &v) in pairs.iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite distance between trajectories {} and {}",
                    trajs[i].id, trajs[j].id
                )));
            }
        }
        Ok(DistanceMatrix {
            metric,
            ids: ds.ids(),
            values,
        })
    }

    /// Wraps precomputed upper-triangle values (row-major, `i < j`).
    pub fn from_upper(metric: MetricKind, ids: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        metric.validate()?;
        let n = ids.len();
        if n == 0 {
            return Err(Error::Data("distance matrix needs at least one id".into()));
        }
        if values.len() != n * (n - 1) / 2 {
            return Err(Error::Data(format!(
                "expected {} upper-triangle values for {} ids, got {}",
                n * (n - 1) / 2,
                n,
                values.len()
            )));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::Data("distance matrix ids must be distinct".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Data(format!(
                "distance values must be finite and non-negative, got {v}"
            )));
        }
        Ok(DistanceMatrix {
            metric,
            ids,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Trajectory ids in matrix order; `get` indices refer to this.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Raw upper triangle, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Distance between positions `i` and `j` (symmetric, zero on the
    /// diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.values[tri_index(self.n(), i, j)]
    }

    /// Writes the `TDM1` binary form.
    pub fn write_binary(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        w.write_all(MAGIC).map_err(io_err)?;
        w.write_all(&(self.n() as u32).to_le_bytes()).map_err(io_err)?;
        let (tag, eps) = match self.metric {
            MetricKind::Dtw => (0u8, 0.0),
            MetricKind::Sspd => (1, 0.0),
            MetricKind::Edr { epsilon } => (2, epsilon),
            MetricKind::Hausdorff => (3, 0.0),
            MetricKind::DFrechet => (4, 0.0),
        };
        w.write_all(&[tag]).map_err(io_err)?;
        w.write_all(&eps.to_le_bytes()).map_err(io_err)?;
        for id in &self.ids {
            w.write_all(&id.to_le_bytes()).map_err(io_err)?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// Writes the `TDM1` binary form to a file path.
    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(&name, e))?;
        self.write_binary(file, &name)
    }

    /// Reads the `TDM1` binary form.
    pub fn read_binary(reader: impl Read, origin: &str) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let bad = |msg: String| Error::Data(format!("{origin}: {msg}"));

        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, origin)?;
        if &magic != MAGIC {
            return Err(bad(format!("bad magic {magic:?}, expected \"TDM1\"")));
        }
        let mut b4 = [0u8; 4];
        read_exact(&mut r, &mut b4, origin)?;
        let n = u32::from_le_bytes(b4) as usize;
        if n == 0 {
            return Err(bad("matrix has zero trajectories".into()));
        }
        let mut tag = [0u8; 1];
        read_exact(&mut r, &mut tag, origin)?;
        let mut b8 = [0u8; 8];
        read_exact(&mut r, &mut b8, origin)?;
        let epsilon = f64::from_le_bytes(b8);
        let metric = match tag[0] {
            0 => MetricKind::Dtw,
            1 => MetricKind::Sspd,
            2 => MetricKind::Edr { epsilon },
            3 => MetricKind::Hausdorff,
            4 => MetricKind::DFrechet,
            t => return Err(bad(format!("unknown metric tag {t}"))),
        };
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            read_exact(&mut r, &mut b8, origin)?;
            ids.push(u64::from_le_bytes(b8));
        }
        let t = n * (n - 1) / 2;
        let mut values = Vec::with_capacity(t);
        for _ in 0..t {
            read_exact(&mut r, &mut b8, origin)?;
            values.push(f64::from_le_bytes(b8));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::io(origin, e))? != 0 {
            return Err(bad("trailing bytes after matrix payload".into()));
        }
        DistanceMatrix::from_upper(metric, ids, values)
    }

    /// Reads the `TDM1` binary form from a file path.
    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(&name, e))?;
        Self::read_binary(file, &name)
    }

    /// Writes the readable export: header `i,j,dist`, one row per
    /// unordered pair (ids, not positions), doubles at 17 significant
    /// digits.
    pub fn write_csv(&self, writer: impl Write, origin: &str) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io_err = |e| Error::io(origin, e);
        writeln!(w, "i,j,dist").map_err(io_err)?;
        let n = self.n();
        for i in 0..n {
            for j in i + 1..n {
                writeln!(
                    w,
                    "{},{},{}",
                    self.ids[i],
                    self.ids[j],
                    fmt_f64(self.get(i, j))
                )
                .map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)
    }
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

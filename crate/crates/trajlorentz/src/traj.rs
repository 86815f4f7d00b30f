//! Trajectory model: points, trajectories, datasets, and a flat grid index.
//!
//! A trajectory is an ordered sequence of planar points tagged with a
//! numeric id. Coordinates are treated as arbitrary planar units; no
//! geodesy is applied. Datasets guarantee what the rest of the crate
//! relies on: at least one trajectory, no empty trajectories, unique
//! ids, and finite coordinates.
//!
//! The on-disk form is CSV with header `traj_id,seq,lon,lat` and an
//! optional trailing `t` column. `seq` only orders points within a
//! trajectory; gaps are legal and not preserved. Doubles are written
//! with 17 significant digits so that a write/read cycle is bit-exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A single observation: position plus an optional timestamp.
///
/// The timestamp is carried through i/o untouched; none of the distance
/// measures in this crate consume it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub lon: f64,
    pub lat: f64,
    pub t: Option<f64>,
}

impl Point {
    /// Point without a timestamp.
    pub fn new(lon: f64, lat: f64) -> Self {
        Point { lon, lat, t: None }
    }

    /// Euclidean distance in the coordinate plane.
    pub fn dist(&self, other: &Point) -> f64 {
        let dx = self.lon - other.lon;
        let dy = self.lat - other.lat;
        (dx * dx + dy * dy).sqrt()
    }
}

/// An ordered point sequence with a dataset-unique id.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn new(id: u64, points: Vec<Point>) -> Self {
        Trajectory { id, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned bounding box over `(lon, lat)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn height(&self) -> f64 {
        self.max_lat - self.min_lat
    }
}

/// A validated collection of trajectories.
///
/// Construction checks the invariants the numeric code assumes, so
/// downstream modules can index freely without re-validating.
#[derive(Debug, Clone)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    by_id: BTreeMap<u64, usize>,
    bbox: BBox,
}

impl Dataset {
    /// Validates and wraps a trajectory list. Trajectory order is
    /// preserved; it defines the index space used by distance matrices.
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::Data("dataset contains no trajectories".into()));
        }
        let mut by_id = BTreeMap::new();
        let mut bbox = BBox {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        };
        for (idx, t) in trajectories.iter().enumerate() {
            if t.points.is_empty() {
                return Err(Error::Data(format!("trajectory {} has no points", t.id)));
            }
            if by_id.insert(t.id, idx).is_some() {
                return Err(Error::Data(format!("duplicate trajectory id {}", t.id)));
            }
            for p in &t.points {
                if !p.lon.is_finite() || !p.lat.is_finite() {
                    return Err(Error::Data(format!(
                        "trajectory {} has a non-finite coordinate",
                        t.id
                    )));
                }
                bbox.min_lon = bbox.min_lon.min(p.lon);
                bbox.min_lat = bbox.min_lat.min(p.lat);
                bbox.max_lon = bbox.max_lon.max(p.lon);
                bbox.max_lat = bbox.max_lat.max(p.lat);
            }
        }
        Ok(Dataset {
            trajectories,
            by_id,
            bbox,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn get(&self, id: u64) -> Option<&Trajectory> {
        self.by_id.get(&id).map(|&i| &self.trajectories[i])
    }

    /// Position of an id in storage order, if present.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    /// Ids in storage order.
    pub fn ids(&self) -> Vec<u64> {
        self.trajectories.iter().map(|t| t.id).collect()
    }

    /// Tight bounding box over every point in the dataset.
    pub fn bbox(&self) -> BBox {
        self.bbox
    }
}

/// Flat row-major grid over a bounding box.
///
/// Cell `0` is the corner at `(min_lon, min_lat)`; indices grow along
/// `lon` first. Points on the max edges fall into the last cell of
/// their row or column, and points outside the box are clamped to the
/// nearest edge cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    bbox: BBox,
    cell_size: f64,
    cols: u64,
    rows: u64,
}

impl Grid {
    pub fn new(bbox: BBox, cell_size: f64) -> Result<Self> {
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(Error::Config(format!(
                "grid cell size must be positive and finite, got {cell_size}"
            )));
        }
        let cols = (bbox.width() / cell_size).ceil().max(1.0) as u64;
        let rows = (bbox.height() / cell_size).ceil().max(1.0) as u64;
        Ok(Grid {
            bbox,
            cell_size,
            cols,
            rows,
        })
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cols(&self) -> u64 {
        self.cols
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn n_cells(&self) -> u64 {
        self.cols * self.rows
    }

    /// Row-major cell index of a point.
    pub fn cell(&self, p: &Point) -> u64 {
        let col = ((p.lon - self.bbox.min_lon) / self.cell_size).floor();
        let row = ((p.lat - self.bbox.min_lat) / self.cell_size).floor();
        let col = (col.max(0.0) as u64).min(self.cols - 1);
        let row = (row.max(0.0) as u64).min(self.rows - 1);
        row * self.cols + col
    }
}

/// Reads trajectory CSV from an open reader. `origin` names the source
/// in error messages (a path, or something like `"<stdin>"`).
pub fn read_trajectories(reader: impl Read, origin: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);

    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_t = match cols.as_slice() {
        ["traj_id", "seq", "lon", "lat"] => false,
        ["traj_id", "seq", "lon", "lat", "t"] => true,
        other => {
            return Err(parse_err(
                1,
                format!(
                    "expected header traj_id,seq,lon,lat[,t], got {:?}",
                    other.join(",")
                ),
            ))
        }
    };

    // Points are keyed by (id, seq) so out-of-order and interleaved rows
    // are accepted; ids keep first-appearance order.
    let mut order: Vec<u64> = Vec::new();
    let mut rows: BTreeMap<u64, BTreeMap<u64, Point>> = BTreeMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);

        let field = |i: usize| record.get(i).unwrap_or("");
        let id: u64 = field(0)
            .parse()
            .map_err(|_| parse_err(line, format!("bad traj_id {:?}", field(0))))?;
        let seq: u64 = field(1)
            .parse()
            .map_err(|_| parse_err(line, format!("bad seq {:?}", field(1))))?;
        let lon: f64 = field(2)
            .parse()
            .map_err(|_| parse_err(line, format!("bad lon {:?}", field(2))))?;
        let lat: f64 = field(3)
            .parse()
            .map_err(|_| parse_err(line, format!("bad lat {:?}", field(3))))?;
        let t = if has_t {
            Some(
                field(4)
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad t {:?}", field(4))))?,
            )
        } else {
            None
        };
        if !lon.is_finite() || !lat.is_finite() {
            return Err(parse_err(line, "non-finite coordinate".into()));
        }

        let traj = rows.entry(id).or_insert_with(|| {
            order.push(id);
            BTreeMap::new()
        });
        if traj.insert(seq, Point { lon, lat, t }).is_some() {
            return Err(parse_err(
                line,
                format!("duplicate point (traj_id {id}, seq {seq})"),
            ));
        }
    }

    if order.is_empty() {
        return Err(Error::Data(format!("{origin}: no trajectory rows")));
    }

    let trajectories = order
        .into_iter()
        .map(|id| {
            let points = rows.remove(&id).unwrap().into_values().collect();
            Trajectory::new(id, points)
        })
        .collect();
    Dataset::new(trajectories)
}

/// Reads trajectory CSV from a file path.
pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&name, e))?;
    read_trajectories(BufReader::new(file), &name)
}

/// Writes trajectory CSV. The `t` column is emitted only when every
/// point in the dataset carries a timestamp.
pub fn write_trajectories(ds: &Dataset, writer: impl Write, origin: &str) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let io_err = |e| Error::io(origin, e);

    let all_t = ds
        .trajectories()
        .iter()
        .all(|t| t.points.iter().all(|p| p.t.is_some()));
    if all_t {
        writeln!(w, "traj_id,seq,lon,lat,t").map_err(io_err)?;
    } else {
        writeln!(w, "traj_id,seq,lon,lat").map_err(io_err)?;
    }
    for t in ds.trajectories() {
        for (seq, p) in t.points.iter().enumerate() {
            if all_t {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    t.id,
                    seq,
                    fmt_f64(p.lon),
                    fmt_f64(p.lat),
                    fmt_f64(p.t.unwrap())
                )
                .map_err(io_err)?;
            } else {
                writeln!(w, "{},{},{},{}", t.id, seq, fmt_f64(p.lon), fmt_f64(p.lat))
                    .map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

/// Writes trajectory CSV to a file path.
pub fn save_trajectories(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&name, e))?;
    write_trajectories(ds, file, &name)
}

/// Formats a double with 17 significant digits, enough for an exact
/// decimal round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_csv() -> &'static str {
        "traj_id,seq,lon,lat\n\
         0,0,0,0\n\
         0,1,0,1\n\
         0,2,0,3\n\
         1,0,2,0\n\
         1,1,0,1\n\
         1,2,2,3\n\
         2,0,3,0\n\
         2,1,3,1\n\
         2,2,4,3\n\
         2,3,5,3\n"
    }

    #[test]
    fn test_load_groups_and_orders() {
        let ds = read_trajectories(small_csv().as_bytes(), "<mem>").unwrap();
        assert_eq!(ds.len(), 3);
        let lens: Vec<usize> = ds.trajectories().iter().map(|t| t.len()).collect();
        assert_eq!(lens, vec![3, 3, 4]);
        assert_eq!(ds.ids(), vec![0, 1, 2]);
        assert_eq!(ds.get(2).unwrap().points[3], Point::new(5.0, 3.0));
    }

    #[test]
    fn test_load_sorts_by_seq_and_accepts_interleaving() {
        let csv = "traj_id,seq,lon,lat\n7,2,3,0\n8,0,9,9\n7,0,1,0\n7,1,2,0\n";
        let ds = read_trajectories(csv.as_bytes(), "<mem>").unwrap();
        assert_eq!(ds.ids(), vec![7, 8]);
        let xs: Vec<f64> = ds.get(7).unwrap().points.iter().map(|p| p.lon).collect();
        assert_eq!(xs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn test_load_reads_timestamps() {
        let csv = "traj_id,seq,lon,lat,t\n0,0,1,2,100.5\n0,1,3,4,101.5\n";
        let ds = read_trajectories(csv.as_bytes(), "<mem>").unwrap();
        assert_eq!(ds.get(0).unwrap().points[1].t, Some(101.5));
    }

    #[test]
    fn test_malformed_field_reports_line() {
        let csv = "traj_id,seq,lon,lat\n0,0,0,0\n0,1,oops,1\n";
        let err = read_trajectories(csv.as_bytes(), "bad.csv").unwrap_err();
        match err {
            Error::Parse { path, line, .. } => {
                assert_eq!(path, "bad.csv");
                assert_eq!(line, 3);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn test_duplicate_point_rejected() {
        let csv = "traj_id,seq,lon,lat\n0,0,0,0\n0,0,1,1\n";
        let err = read_trajectories(csv.as_bytes(), "<mem>").unwrap_err();
        assert!(err.to_string().contains("duplicate point"));
    }

    #[test]
    fn test_empty_input_rejected() {
        let err = read_trajectories("traj_id,seq,lon,lat\n".as_bytes(), "<mem>").unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        let err = read_trajectories("".as_bytes(), "<mem>").unwrap_err();
        assert!(matches!(err, Error::Data(_) | Error::Parse { .. }));
    }

    #[test]
    fn test_wrong_header_rejected() {
        let csv = "id,step,x,y\n0,0,0,0\n";
        let err = read_trajectories(csv.as_bytes(), "<mem>").unwrap_err();
        assert!(err.to_string().contains("expected header"));
    }

    #[test]
    fn test_dataset_rejects_duplicate_ids() {
        let t = Trajectory::new(5, vec![Point::new(0.0, 0.0)]);
        let err = Dataset::new(vec![t.clone(), t]).unwrap_err();
        assert!(err.to_string().contains("duplicate trajectory id"));
    }

    #[test]
    fn test_dataset_rejects_non_finite() {
        let t = Trajectory::new(0, vec![Point::new(f64::NAN, 0.0)]);
        assert!(Dataset::new(vec![t]).is_err());
    }

    #[test]
    fn test_bbox_is_tight() {
        let ds = read_trajectories(small_csv().as_bytes(), "<mem>").unwrap();
        assert_eq!(
            ds.bbox(),
            BBox {
                min_lon: 0.0,
                min_lat: 0.0,
                max_lon: 5.0,
                max_lat: 3.0
            }
        );
    }

    #[test]
    fn test_grid_cells() {
        let bbox = BBox {
            min_lon: 0.0,
            min_lat: 0.0,
            max_lon: 10.0,
            max_lat: 10.0,
        };
        let grid = Grid::new(bbox, 1.0).unwrap();
        assert_eq!(grid.n_cells(), 100);
        assert_eq!(grid.cell(&Point::new(0.0, 0.0)), 0);
        assert_eq!(grid.cell(&Point::new(2.5, 3.5)), 32);
        // Max edges map into the last cell rather than one past it.
        assert_eq!(grid.cell(&Point::new(10.0, 10.0)), 99);
        // Outside points clamp to the nearest edge cell.
        assert_eq!(grid.cell(&Point::new(-0.5, 4.2)), 40);
    }

    #[test]
    fn test_grid_degenerate_bbox() {
        let bbox = BBox {
            min_lon: 3.0,
            min_lat: 1.0,
            max_lon: 3.0,
            max_lat: 1.0,
        };
        let grid = Grid::new(bbox, 0.25).unwrap();
        assert_eq!(grid.n_cells(), 1);
        assert_eq!(grid.cell(&Point::new(3.0, 1.0)), 0);
    }

    #[test]
    fn test_grid_rejects_bad_cell_size() {
        let bbox = BBox {
            min_lon: 0.0,
            min_lat: 0.0,
            max_lon: 1.0,
            max_lat: 1.0,
        };
        assert!(Grid::new(bbox, 0.0).is_err());
        assert!(Grid::new(bbox, -1.0).is_err());
        assert!(Grid::new(bbox, f64::NAN).is_err());
    }

    #[test]
    fn test_roundtrip_keeps_bits() {
        let csv = "traj_id,seq,lon,lat\n0,0,0.1,0.2\n0,1,1e-300,3.14159265358979\n";
        let ds = read_trajectories(csv.as_bytes(), "<mem>").unwrap();
        let mut buf = Vec::new();
        write_trajectories(&ds, &mut buf, "<mem>").unwrap();
        let ds2 = read_trajectories(buf.as_slice(), "<mem>").unwrap();
        assert_eq!(ds.trajectories(), ds2.trajectories());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_point() -> impl Strategy<Value = Point> {
        (-1.0e12..1.0e12f64, -1.0e12..1.0e12f64).prop_map(|(lon, lat)| Point::new(lon, lat))
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        prop::collection::vec(prop::collection::vec(arb_point(), 1..5), 1..4).prop_map(|tts| {
            let trajectories = tts
                .into_iter()
                .enumerate()
                .map(|(i, pts)| Trajectory::new(i as u64, pts))
                .collect();
            Dataset::new(trajectories).unwrap()
        })
    }

    proptest! {
        #[test]
        fn prop_csv_roundtrip_bit_exact(ds in arb_dataset()) {
            let mut buf = Vec::new();
            write_trajectories(&ds, &mut buf, "<mem>").unwrap();
            let back = read_trajectories(buf.as_slice(), "<mem>").unwrap();
            prop_assert_eq!(ds.trajectories(), back.trajectories());
        }

        #[test]
        fn prop_grid_covers_bbox(ds in arb_dataset(), cell in 0.1..1.0e11f64) {
            let grid = Grid::new(ds.bbox(), cell).unwrap();
            for t in ds.trajectories() {
                for p in &t.points {
                    prop_assert!(grid.cell(p) < grid.n_cells());
                }
            }
        }
    }
}

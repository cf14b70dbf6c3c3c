//! Initial manifolds: the half circle, the planar spiral, the S-curve
//! surface, and clouds read from CSV files.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Spiral parameter range `t ∈ [-1, 5]`.
pub const SPIRAL_T_RANGE: (f64, f64) = (-1.0, 5.0);

/// Description of an initial manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldSpec {
    HalfCircle { radius: f64, count: usize },
    Spiral { count: usize },
    SCurve { grid_u: usize, grid_v: usize, scale: f64 },
    Csv { path: PathBuf },
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<PointCloud> {
        match self {
            ManifoldSpec::HalfCircle { radius, count } => half_circle(*radius, *count),
            ManifoldSpec::Spiral { count } => spiral(*count),
            ManifoldSpec::SCurve { grid_u, grid_v, scale } => s_curve(*grid_u, *grid_v, *scale),
            ManifoldSpec::Csv { path } => load_csv(path),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldSpec::HalfCircle { .. } => "half_circle",
            ManifoldSpec::Spiral { .. } => "spiral",
            ManifoldSpec::SCurve { .. } => "s_curve",
            ManifoldSpec::Csv { .. } => "csv",
        }
    }
}

fn check_count(name: &'static str, count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::invalid(name, format!("need at least 2 samples, got {count}")));
    }
    Ok(())
}

/// `count` evenly spaced values from `lo` to `hi`, endpoints included.
fn linspace(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(move |k| if k == count - 1 { hi } else { lo + step * k as f64 })
}

/// Upper half circle of the given radius with uniform angular spacing,
/// from `(radius, 0)` to `(-radius, 0)`.
pub fn half_circle(radius: f64, count: usize) -> Result<PointCloud> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::invalid("radius", format!("must be positive, got {radius}")));
    }
    check_count("count", count)?;
    let coords = (0..count)
        .flat_map(|k| {
            let theta = k as f64 * PI / (count - 1) as f64;
            [radius * theta.cos(), radius * theta.sin()]
        })
        .collect();
    PointCloud::from_flat(2, coords)
}

/// Planar spiral `((t + 10) cos πt, (t + 10) sin πt)` sampled uniformly in `t` on `[-1, 5]`.
pub fn spiral(count: usize) -> Result<PointCloud> {
    check_count("count", count)?;
    let (lo, hi) = SPIRAL_T_RANGE;
    let coords = linspace(lo, hi, count)
        .flat_map(|t| {
            let rho = t + 10.0;
            let (s, c) = (PI * t).sin_cos();
            [rho * c, rho * s]
        })
        .collect();
    PointCloud::from_flat(2, coords)
}

/// S-shaped surface in R³: `scale · (sin u, v, sign(u)(cos u − 1))` over a
/// `grid_u × grid_v` grid with `u ∈ [−3π/2, 3π/2]` and `v ∈ [0, 2]`.
///
/// Points are ordered u-major: index `a * grid_v + b` holds `(u_a, v_b)`.
pub fn s_curve(grid_u: usize, grid_v: usize, scale: f64) -> Result<PointCloud> {
    check_count("grid_u", grid_u)?;
    check_count("grid_v", grid_v)?;
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
    }
    let mut coords = Vec::with_capacity(grid_u * grid_v * 3);
    for u in linspace(-1.5 * PI, 1.5 * PI, grid_u) {
        // signum(0.0) is 1.0, but cos(0) - 1 vanishes there anyway
        let z = if u == 0.0 { 0.0 } else { u.signum() * (u.cos() - 1.0) };
        for v in linspace(0.0, 2.0, grid_v) {
            coords.extend_from_slice(&[scale * u.sin(), scale * v, scale * z]);
        }
    }
    PointCloud::from_flat(3, coords)
}

/// Reads a cloud from comma-separated text, one point per row.
///
/// A first row that does not parse as numbers is treated as a header and skipped.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path)
}

/// Reads CSV from any reader. `origin` is only used in error messages.
pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<PointCloud> {
    let ingest = |row: usize, column: usize, message: String| Error::Ingest {
        path: origin.to_path_buf(),
        row,
        column,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut dim: Option<usize> = None;
    let mut coords = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| ingest(row, 0, e.to_string()))?;
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(col, cell)| cell.parse::<f64>().map_err(|_| col + 1))
            .collect();
        if idx == 0 && parsed.iter().any(|c| c.is_err()) {
            log::debug!("{}: skipping header row", origin.display());
            continue;
        }
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(ingest(
                row,
                record.len().min(expected) + 1,
                format!("expected {expected} columns, found {}", record.len()),
            ));
        }
        for (col, value) in parsed.into_iter().enumerate() {
            let value = value.map_err(|c| ingest(row, c, format!("not a number: {:?}", &record[c - 1])))?;
            if !value.is_finite() {
                return Err(ingest(row, col + 1, format!("non-finite value {value}")));
            }
            coords.push(value);
        }
    }
    let dim = dim.ok_or_else(|| ingest(1, 0, "no data rows".into()))?;
    PointCloud::from_flat(dim, coords)
}

/// Writes one point per line with 17 significant digits.
pub fn write_csv<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for p in cloud.points() {
        line.clear();
        for (k, x) in p.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn save_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(cloud, BufWriter::new(file)).map_err(io_err)
}

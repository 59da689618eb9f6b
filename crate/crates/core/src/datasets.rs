//! Synthetic 2D clustering datasets, CSV ingestion, and min-max scaling into
//! the open unit hypercube.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scaled coordinates are clamped into `[SCALE_EPS, 1 - SCALE_EPS]`.
pub const SCALE_EPS: f64 = 1e-6;

/// Per-feature `(min, max)` of the data a scaling was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub ranges: Vec<(f64, f64)>,
}

impl Scaling {
    /// Fits per-feature ranges; every feature must take at least two values.
    pub fn fit(raw: ArrayView2<'_, f64>, names: Option<&[String]>) -> Result<Self> {
        if raw.nrows() < 2 {
            return Err(Error::Empty("scaling needs at least two rows"));
        }
        let mut ranges = Vec::with_capacity(raw.ncols());
        for (j, col) in raw.columns().into_iter().enumerate() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                let name = names
                    .and_then(|n| n.get(j).cloned())
                    .unwrap_or_else(|| format!("#{j}"));
                return Err(Error::ConstantFeature(name));
            }
            ranges.push((lo, hi));
        }
        Ok(Self { ranges })
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    /// `(x - min) / (max - min)`, clamped into `[SCALE_EPS, 1 - SCALE_EPS]`.
    pub fn apply(&self, raw: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if raw.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: raw.ncols(),
            });
        }
        let mut out = raw.to_owned();
        for (mut col, &(lo, hi)) in out.columns_mut().into_iter().zip(&self.ranges) {
            col.mapv_inplace(|x| ((x - lo) / (hi - lo)).clamp(SCALE_EPS, 1.0 - SCALE_EPS));
        }
        Ok(out)
    }
}

/// N×M observations with optional labels, feature names and scaling record.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Array2<f64>,
    pub labels: Option<Vec<i64>>,
    pub feature_names: Option<Vec<String>>,
    pub scaling: Option<Scaling>,
}

impl Dataset {
    pub fn new(points: Array2<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.nrows() {
                return Err(Error::LengthMismatch {
                    left: points.nrows(),
                    right: l.len(),
                });
            }
        }
        Ok(Self {
            points,
            labels,
            feature_names: None,
            scaling: None,
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Min-max scales every feature into the unit interval, recording the ranges.
    pub fn scaled(self) -> Result<Self> {
        let scaling = Scaling::fit(self.points.view(), self.feature_names.as_deref())?;
        let points = scaling.apply(self.points.view())?;
        Ok(Self {
            points,
            scaling: Some(scaling),
            ..self
        })
    }

    fn column_names(&self) -> Vec<String> {
        self.feature_names
            .clone()
            .unwrap_or_else(|| (0..self.dim()).map(|j| format!("x{}", j + 1)).collect())
    }

    /// Writes a header row of feature names plus a trailing `label` column
    /// when labels are present. Floats use the shortest exact representation.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let to_err = |e: csv::Error| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut writer = csv::Writer::from_path(path).map_err(to_err)?;
        let mut header = self.column_names();
        if self.labels.is_some() {
            header.push("label".to_string());
        }
        writer.write_record(&header).map_err(to_err)?;
        for (i, row) in self.points.rows().into_iter().enumerate() {
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(labels) = &self.labels {
                record.push(labels[i].to_string());
            }
            writer.write_record(&record).map_err(to_err)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `scale_unit` on a bare matrix.
pub fn scale_unit(raw: ArrayView2<'_, f64>) -> Result<Dataset> {
    Dataset::new(raw.to_owned(), None)?.scaled()
}

/// Reads a headed CSV of numeric features.
///
/// `label_column`, when given, is removed from the features and turned into
/// integer labels: integer cells are kept as-is, otherwise the distinct
/// strings are numbered in sorted order. Columns in `drop_columns` are
/// discarded. No scaling is applied.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
    drop_columns: &[String],
) -> Result<Dataset> {
    let path = path.as_ref();
    let to_err = |e: csv::Error| Error::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no such file", path.display()),
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(to_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(to_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let label_idx = label_column.map(find).transpose()?;
    let dropped: Vec<usize> = drop_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != label_idx && !dropped.contains(i))
        .collect();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut n_rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(to_err)?;
        // 1-based line number in the file, counting the header.
        let line = row + 2;
        for &j in &feature_idx {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: line,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        if let Some(j) = label_idx {
            raw_labels.push(record.get(j).unwrap_or("").to_string());
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Empty("CSV has no data rows"));
    }
    let points = Array2::from_shape_vec((n_rows, feature_idx.len()), values)
        .expect("row lengths are enforced by the csv reader");
    let labels = label_idx.map(|_| encode_labels(&raw_labels));
    let mut dataset = Dataset::new(points, labels)?;
    dataset.feature_names = Some(feature_idx.iter().map(|&j| headers[j].clone()).collect());
    Ok(dataset)
}

fn encode_labels(raw: &[String]) -> Vec<i64> {
    if let Ok(ints) = raw
        .iter()
        .map(|s| s.parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
    {
        return ints;
    }
    let mut distinct: Vec<&String> = raw.iter().collect();
    distinct.sort();
    distinct.dedup();
    raw.iter()
        .map(|s| distinct.binary_search(&s).expect("label is present") as i64)
        .collect()
}

/// Names accepted by [`generate`].
pub const DATASET_NAMES: [&str; 4] = ["blobs", "unequal_variance", "anisotropic", "circles"];

/// Three 2D Gaussian clusters with per-cluster isotropic std and an optional
/// shared linear transform `[[t00, t01], [t10, t11]]` applied to the noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianClusters {
    pub n_per_cluster: usize,
    pub centers: Vec<[f64; 2]>,
    pub stds: Vec<f64>,
    pub transform: Option<[[f64; 2]; 2]>,
}

impl Default for GaussianClusters {
    fn default() -> Self {
        Self::blobs()
    }
}

impl GaussianClusters {
    pub fn blobs() -> Self {
        Self {
            n_per_cluster: 500,
            centers: vec![[-6.0, 0.0], [0.0, 6.0], [6.0, 0.0]],
            stds: vec![1.0, 1.0, 1.0],
            transform: None,
        }
    }

    pub fn unequal_variance() -> Self {
        Self {
            stds: vec![1.0, 1.0, 4.0],
            ..Self::blobs()
        }
    }

    /// Noise covariance `1.5 · [[1, 0.9], [0.9, 1]]`, applied through its
    /// Cholesky factor.
    pub fn anisotropic() -> Self {
        let scale = 1.5f64.sqrt();
        let rho = 0.9f64;
        Self {
            transform: Some([
                [scale, 0.0],
                [scale * rho, scale * (1.0 - rho * rho).sqrt()],
            ]),
            ..Self::blobs()
        }
    }

    pub fn generate_raw(&self, seed: u64) -> Result<Dataset> {
        if self.centers.len() != self.stds.len() || self.centers.is_empty() {
            return Err(Error::InvalidParams("need one std per center".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_per_cluster * self.centers.len();
        let mut points = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        let t = self.transform.unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
        let mut row = 0;
        for (k, (center, &std)) in self.centers.iter().zip(&self.stds).enumerate() {
            for _ in 0..self.n_per_cluster {
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                points[[row, 0]] = center[0] + std * (t[0][0] * z0 + t[0][1] * z1);
                points[[row, 1]] = center[1] + std * (t[1][0] * z0 + t[1][1] * z1);
                labels.push(k as i64);
                row += 1;
            }
        }
        Dataset::new(points, Some(labels))
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        self.generate_raw(seed)?.scaled()
    }
}

/// Two concentric noisy circles; label 0 is the outer circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Circles {
    pub n_per_circle: usize,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub noise_std: f64,
}

impl Default for Circles {
    fn default() -> Self {
        Self {
            n_per_circle: 500,
            outer_radius: 1.0,
            inner_radius: 0.3,
            noise_std: 0.04,
        }
    }
}

impl Circles {
    pub fn generate_raw(&self, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * self.n_per_circle;
        let mut points = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for (k, radius) in [self.outer_radius, self.inner_radius]
            .into_iter()
            .enumerate()
        {
            for i in 0..self.n_per_circle {
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                let row = k * self.n_per_circle + i;
                points[[row, 0]] = radius * angle.cos() + self.noise_std * nx;
                points[[row, 1]] = radius * angle.sin() + self.noise_std * ny;
                labels.push(k as i64);
            }
        }
        Dataset::new(points, Some(labels))
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        self.generate_raw(seed)?.scaled()
    }
}

pub fn make_blobs(seed: u64) -> Result<Dataset> {
    GaussianClusters::blobs().generate(seed)
}

pub fn make_unequal_variance(seed: u64) -> Result<Dataset> {
    GaussianClusters::unequal_variance().generate(seed)
}

pub fn make_anisotropic(seed: u64) -> Result<Dataset> {
    GaussianClusters::anisotropic().generate(seed)
}

pub fn make_circles(seed: u64) -> Result<Dataset> {
    Circles::default().generate(seed)
}

/// Overrides for the generator constants, one optional table per dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub blobs: Option<GaussianClusters>,
    pub unequal_variance: Option<GaussianClusters>,
    pub anisotropic: Option<GaussianClusters>,
    pub circles: Option<Circles>,
}

/// Generates a named dataset (see [`DATASET_NAMES`]), scaled to the unit square.
/// Returns `Ok(None)` for an unknown name.
pub fn generate(name: &str, seed: u64, config: &GeneratorConfig) -> Result<Option<Dataset>> {
    let pick = |over: &Option<GaussianClusters>, default: fn() -> GaussianClusters| {
        over.clone().unwrap_or_else(default)
    };
    let ds = match name {
        "blobs" => pick(&config.blobs, GaussianClusters::blobs).generate(seed)?,
        "unequal_variance" => {
            pick(&config.unequal_variance, GaussianClusters::unequal_variance).generate(seed)?
        }
        "anisotropic" => pick(&config.anisotropic, GaussianClusters::anisotropic).generate(seed)?,
        "circles" => config.circles.clone().unwrap_or_default().generate(seed)?,
        _ => return Ok(None),
    };
    Ok(Some(ds))
}

//! Radio map samples, residuals and feature construction.
//!
//! A [`Dataset`] is an ordered list of candidate points. Each carries the
//! simulated RSRP and, where it has been measured, the measured RSRP and the
//! residual `measured - simulated` (all in dB).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "x,y,z,rsrp_sim,rsrp_meas";

/// Local metric coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub position: Point3,
    pub gamma_sim: f64,
    gamma_meas: Option<f64>,
    residual: Option<f64>,
}

impl Sample {
    pub fn new(position: Point3, gamma_sim: f64, gamma_meas: Option<f64>) -> Self {
        Self {
            position,
            gamma_sim,
            gamma_meas,
            residual: gamma_meas.map(|g| g - gamma_sim),
        }
    }

    pub fn gamma_meas(&self) -> Option<f64> {
        self.gamma_meas
    }

    pub fn residual(&self) -> Option<f64> {
        self.residual
    }
}

/// Which quantities enter the regression features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// `[x, y, z]`; the regression target is the raw measured RSRP.
    PositionOnly,
    /// `[x, y, z, rsrp_sim]`; the regression target is the residual.
    PositionPlusSim,
}

impl FeatureMode {
    pub fn dim(self) -> usize {
        match self {
            FeatureMode::PositionOnly => 3,
            FeatureMode::PositionPlusSim => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::PositionOnly => "position_only",
            FeatureMode::PositionPlusSim => "position_plus_sim",
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "position_only" | "position" | "3d" => Ok(FeatureMode::PositionOnly),
            "position_plus_sim" | "sim" | "4d" => Ok(FeatureMode::PositionPlusSim),
            other => Err(Error::InvalidParameter(format!("unknown feature mode `{other}`"))),
        }
    }
}

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    dim: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("feature dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite feature value at row {}",
                bad / dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Features {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Features { dim: self.dim, data }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    pub feature_mode: FeatureMode,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, feature_mode: FeatureMode) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, s) in samples.iter().enumerate() {
            let finite = s.position.is_finite() && s.gamma_sim.is_finite() && s.gamma_meas.is_none_or(f64::is_finite);
            if !finite {
                return Err(Error::InvalidParameter(format!("sample {i} has non-finite values")));
            }
        }
        Ok(Self { samples, feature_mode })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_feature_mode(&self, feature_mode: FeatureMode) -> Dataset {
        Dataset {
            samples: self.samples.clone(),
            feature_mode,
        }
    }

    pub fn gamma_sim(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gamma_sim).collect()
    }

    /// Measured RSRP for every sample; fails on the first unmeasured one.
    pub fn gamma_meas(&self) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(index, s)| s.gamma_meas.ok_or(Error::MissingMeasurement { index }))
            .collect()
    }

    pub fn is_fully_measured(&self) -> bool {
        self.samples.iter().all(|s| s.gamma_meas.is_some())
    }

    /// Unstandardized features according to `self.feature_mode`.
    pub fn features(&self) -> Features {
        let dim = self.feature_mode.dim();
        let mut data = Vec::with_capacity(self.len() * dim);
        for s in &self.samples {
            data.extend_from_slice(&[s.position.x, s.position.y, s.position.z]);
            if self.feature_mode == FeatureMode::PositionPlusSim {
                data.push(s.gamma_sim);
            }
        }
        Features { dim, data }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 48);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let p = s.position;
            // `{}` on f64 prints the shortest text that parses back bit-exactly.
            let _ = write!(out, "{},{},{},{},", p.x, p.y, p.z, s.gamma_sim);
            if let Some(m) = s.gamma_meas {
                let _ = write!(out, "{m}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the `x,y,z,rsrp_sim,rsrp_meas` CSV format.
pub fn load_dataset(csv_text: &str, feature_mode: FeatureMode) -> Result<Dataset> {
    let mut lines = csv_text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i + 1, l),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing header".into(),
                })
            }
        }
    };
    let cols: Vec<&str> = header
        .1
        .trim()
        .trim_start_matches('\u{feff}')
        .split(',')
        .map(str::trim)
        .collect();
    if cols != ["x", "y", "z", "rsrp_sim", "rsrp_meas"] {
        return Err(Error::Parse {
            line: header.0,
            msg: format!("expected header `{CSV_HEADER}`, found `{}`", header.1.trim()),
        });
    }

    let mut samples = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() > 5 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut values = [None; 5];
        for (k, f) in fields.iter().enumerate() {
            if f.is_empty() {
                continue;
            }
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("non-numeric field `{f}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite field `{f}`"),
                });
            }
            values[k] = Some(v);
        }
        let (Some(x), Some(y), Some(z), Some(sim)) = (values[0], values[1], values[2], values[3]) else {
            return Err(Error::Parse {
                line,
                msg: "x, y, z and rsrp_sim must all be present".into(),
            });
        };
        samples.push(Sample::new(Point3::new(x, y, z), sim, values[4]));
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: header.0,
            msg: "no data rows".into(),
        });
    }
    Dataset::new(samples, feature_mode)
}

/// `gamma_meas - gamma_sim` per sample.
pub fn compute_residuals(dataset: &Dataset) -> Result<Vec<f64>> {
    dataset
        .samples
        .iter()
        .enumerate()
        .map(|(index, s)| s.residual.ok_or(Error::MissingMeasurement { index }))
        .collect()
}

/// Per-dimension z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(features: &Features) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = features.len() as f64;
        let d = features.dim();
        let mut mean = vec![0.0; d];
        for row in features.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in features.rows() {
            for k in 0..d {
                var[k] += (row[k] - mean[k]).powi(2);
            }
        }
        let std = var
            .iter()
            .zip(&mean)
            .map(|(v, m)| {
                let s = (v / n).sqrt();
                // degenerate dimension
                if s <= 1e-12 * (1.0 + m.abs()) {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, features: &Features) -> Result<Features> {
        self.check_dim(features)?;
        let d = self.dim();
        let data = features
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.mean[i % d]) / self.std[i % d])
            .collect();
        Features::new(d, data)
    }

    pub fn unscale(&self, features: &Features) -> Result<Features> {
        self.check_dim(features)?;
        let d = self.dim();
        let data = features
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.std[i % d] + self.mean[i % d])
            .collect();
        Features::new(d, data)
    }

    fn check_dim(&self, features: &Features) -> Result<()> {
        if features.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: features.dim(),
            });
        }
        Ok(())
    }
}

/// Fits a scaler over the dataset's candidate set.
pub fn fit_scaler(dataset: &Dataset) -> Result<FeatureScaler> {
    FeatureScaler::fit(&dataset.features())
}

/// Standardized features of the whole candidate set together with the scaler.
pub fn standardized_features(dataset: &Dataset) -> Result<(Features, FeatureScaler)> {
    let raw = dataset.features();
    let scaler = FeatureScaler::fit(&raw)?;
    let z = scaler.apply(&raw)?;
    Ok((z, scaler))
}

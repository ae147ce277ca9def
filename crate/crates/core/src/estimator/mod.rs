//! Per-coefficient estimation of the first quantization factors.

mod regularize;

pub use regularize::{reg_term, regularize, window_argmin, RegularizeOutcome};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::grid::CoeffGrid;
use crate::jpeg::{parse_jpeg, JpegError};
use crate::quant::QuantTable;
use crate::refdata::{min_distance, Kind, ReferenceDataset, DEFAULT_CANDIDATES};
use crate::stats::{fit_laplacian, is_degenerate, CoeffHistogram};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error(transparent)]
    Jpeg(#[from] JpegError),
    #[error("invalid estimation parameters: {0}")]
    Params(String),
    #[error("dataset does not fit the request: {0}")]
    DatasetMismatch(String),
    #[error("coefficient grid is empty")]
    EmptyGrid,
}

/// Smoothness penalty used when scoring candidate triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegVariant {
    /// `delta / 2`
    Reg1,
    /// `delta / (2 sqrt(c))`
    Reg2,
    /// `delta / (2 c)`
    #[default]
    Reg3,
}

impl std::str::FromStr for RegVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "reg1" | "1" => Ok(RegVariant::Reg1),
            "reg2" | "2" => Ok(RegVariant::Reg2),
            "reg3" | "3" => Ok(RegVariant::Reg3),
            _ => Err(format!(
                "unknown regularizer {s:?}; expected reg1, reg2 or reg3"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationParams {
    pub k: usize,
    pub q1_max: u32,
    pub n_candidates: usize,
    pub w: f64,
    pub reg_variant: RegVariant,
    pub regularize: bool,
}

impl Default for EstimationParams {
    fn default() -> Self {
        EstimationParams {
            k: 15,
            q1_max: 22,
            n_candidates: DEFAULT_CANDIDATES,
            w: 0.92,
            reg_variant: RegVariant::Reg3,
            regularize: true,
        }
    }
}

impl EstimationParams {
    pub fn validate(&self) -> Result<(), EstimateError> {
        if !(2..=64).contains(&self.k) {
            return Err(EstimateError::Params(format!(
                "k = {} outside 2..=64",
                self.k
            )));
        }
        if !(1..=255).contains(&self.q1_max) {
            return Err(EstimateError::Params(format!(
                "q1_max = {} outside 1..=255",
                self.q1_max
            )));
        }
        if self.n_candidates == 0 {
            return Err(EstimateError::Params(
                "n_candidates must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(EstimateError::Params(format!(
                "w = {} outside [0, 1]",
                self.w
            )));
        }
        Ok(())
    }

    /// Parameters as they apply to `ds`: checks compatibility.
    fn check_dataset(&self, ds: &ReferenceDataset) -> Result<(), EstimateError> {
        self.validate()?;
        if ds.k() < self.k {
            return Err(EstimateError::DatasetMismatch(format!(
                "dataset holds {} coefficients, {} requested",
                ds.k(),
                self.k
            )));
        }
        if ds.q1_max() < self.q1_max {
            return Err(EstimateError::DatasetMismatch(format!(
                "dataset covers q1 up to {}, {} requested",
                ds.q1_max(),
                self.q1_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// All samples of the coefficient fell into one bin.
    Degenerate,
    /// The second factor lies outside the dataset, or no candidate exists.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub status: RowStatus,
    /// Second-compression factor of this coefficient.
    pub q2: u8,
    /// `distances[j - 1]` is the best distance against sub-dataset `(j, q2)`;
    /// empty unless the row is OK. Infinite where a sub-dataset has no records.
    pub distances: Vec<f64>,
}

/// `k` rows of best chi-square distances, one column per candidate first factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub q1_max: u32,
    pub rows: Vec<DistanceRow>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit rows; `None` marks a degenerate row.
    pub fn from_rows(q1_max: u32, rows: Vec<Option<Vec<f64>>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|r| match r {
                Some(distances) => {
                    assert_eq!(
                        distances.len(),
                        q1_max as usize,
                        "row width must equal q1_max"
                    );
                    DistanceRow {
                        status: RowStatus::Ok,
                        q2: 0,
                        distances,
                    }
                }
                None => DistanceRow {
                    status: RowStatus::Degenerate,
                    q2: 0,
                    distances: Vec::new(),
                },
            })
            .collect();
        DistanceMatrix { q1_max, rows }
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// Distance of an OK row against candidate `j` (1-based).
    pub fn distance(&self, i: usize, j: u32) -> Option<f64> {
        let row = &self.rows[i];
        (row.status == RowStatus::Ok).then(|| row.distances[j as usize - 1])
    }
}

/// One position of the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimate {
    Value(u8),
    Degenerate,
    Unsupported,
}

impl Estimate {
    pub fn value(&self) -> Option<u8> {
        match self {
            Estimate::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn status(&self) -> RowStatus {
        match self {
            Estimate::Value(_) => RowStatus::Ok,
            Estimate::Degenerate => RowStatus::Degenerate,
            Estimate::Unsupported => RowStatus::Unsupported,
        }
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Estimate::Value(v) => s.serialize_u8(*v),
            Estimate::Degenerate => s.serialize_str("degenerate"),
            Estimate::Unsupported => s.serialize_str("unsupported"),
        }
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Estimate::Value(v) => write!(f, "{v}"),
            Estimate::Degenerate => f.write_str("degenerate"),
            Estimate::Unsupported => f.write_str("unsupported"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub estimates: Vec<Estimate>,
    pub raw: Vec<Estimate>,
    pub distances: DistanceMatrix,
    pub params: EstimationParams,
    /// Set when regularization was requested but fewer than three rows were usable.
    pub regularization_skipped: bool,
}

fn coefficient_row(
    h: &CoeffHistogram,
    zz: usize,
    q2: u8,
    ds: &ReferenceDataset,
    p: &EstimationParams,
) -> DistanceRow {
    let unsupported = DistanceRow {
        status: RowStatus::Unsupported,
        q2,
        distances: Vec::new(),
    };
    if q2 as u32 > ds.q1_max() {
        return unsupported;
    }
    let fit = fit_laplacian(h);
    let (kind, key) = if zz == 0 {
        (Kind::Dc, fit.mu)
    } else {
        (Kind::Ac, fit.beta)
    };
    let distances: Vec<f64> = (1..=p.q1_max)
        .map(|j| {
            let records = ds
                .query(j, q2 as u32, kind, key, p.n_candidates)
                .expect("checked range");
            min_distance(h, records).unwrap_or(f64::INFINITY)
        })
        .collect();
    if distances.iter().all(|d| d.is_infinite()) {
        return unsupported;
    }
    DistanceRow {
        status: RowStatus::Ok,
        q2,
        distances,
    }
}

/// Best distance of each of the first `k` coefficient histograms against every
/// sub-dataset `(j, q2_i)`.
pub fn distance_matrix(
    grid: &CoeffGrid,
    q2_table: &QuantTable,
    ds: &ReferenceDataset,
    p: &EstimationParams,
) -> Result<DistanceMatrix, EstimateError> {
    p.check_dataset(ds)?;
    if grid.is_empty() {
        return Err(EstimateError::EmptyGrid);
    }
    let rows = (0..p.k)
        .into_par_iter()
        .map(|zz| {
            let q2 = q2_table.at_zigzag(zz);
            let h = CoeffHistogram::from_values(grid.coefficient(zz)).expect("non-empty grid");
            if is_degenerate(&h) {
                DistanceRow {
                    status: RowStatus::Degenerate,
                    q2,
                    distances: Vec::new(),
                }
            } else {
                coefficient_row(&h, zz, q2, ds, p)
            }
        })
        .collect();
    Ok(DistanceMatrix {
        q1_max: p.q1_max,
        rows,
    })
}

/// Smallest `j` achieving the row minimum; flags pass through.
pub fn raw_estimates(d: &DistanceMatrix) -> Vec<Estimate> {
    d.rows
        .iter()
        .map(|row| match row.status {
            RowStatus::Ok => {
                let mut best = 0;
                for (j, &v) in row.distances.iter().enumerate() {
                    if v < row.distances[best] {
                        best = j;
                    }
                }
                Estimate::Value(best as u8 + 1)
            }
            RowStatus::Degenerate => Estimate::Degenerate,
            RowStatus::Unsupported => Estimate::Unsupported,
        })
        .collect()
}

/// Full estimation on an already decoded luminance grid.
pub fn estimate_grid(
    grid: &CoeffGrid,
    q2_table: &QuantTable,
    ds: &ReferenceDataset,
    p: &EstimationParams,
) -> Result<EstimationResult, EstimateError> {
    let distances = distance_matrix(grid, q2_table, ds, p)?;
    let raw = raw_estimates(&distances);
    let (estimates, skipped) = if p.regularize {
        match regularize(&distances, p) {
            RegularizeOutcome::Regularized(e) => (e, false),
            RegularizeOutcome::Skipped(e) => (e, true),
        }
    } else {
        (raw.clone(), false)
    };
    Ok(EstimationResult {
        estimates,
        raw,
        distances,
        params: *p,
        regularization_skipped: skipped,
    })
}

/// Estimates the first-compression factors of a JPEG file's luminance plane.
pub fn estimate(
    jpeg_bytes: &[u8],
    ds: &ReferenceDataset,
    p: &EstimationParams,
) -> Result<EstimationResult, EstimateError> {
    p.check_dataset(ds)?;
    let parsed = parse_jpeg(jpeg_bytes)?;
    estimate_grid(&parsed.luminance, parsed.luminance_table(), ds, p)
}

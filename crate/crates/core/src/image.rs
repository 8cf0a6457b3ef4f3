use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Default lower clamp for log-scaled intensities.
pub const DEFAULT_FLOOR_DB: f64 = -80.0;

/// Where a log image came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Speckled,
    GroundTruth,
    Predicted,
    Preprocessed,
}

impl Provenance {
    pub fn tag(self) -> u8 {
        match self {
            Provenance::Speckled => 0,
            Provenance::GroundTruth => 1,
            Provenance::Predicted => 2,
            Provenance::Preprocessed => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Provenance::Speckled,
            1 => Provenance::GroundTruth,
            2 => Provenance::Predicted,
            3 => Provenance::Preprocessed,
            _ => return None,
        })
    }
}

/// Log-scaled intensity image in dB, rows = depth, columns = lateral position.
#[derive(Debug, Clone, PartialEq)]
pub struct LogImage {
    values: Grid<f64>,
    provenance: Provenance,
}

impl LogImage {
    pub fn new(values: Grid<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "image must have at least one pixel".into(),
            });
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("log image"));
        }
        Ok(Self { values, provenance })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>, provenance: Provenance) -> Result<Self> {
        Self::new(Grid::from_vec(rows, cols, data)?, provenance)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn into_values(self) -> Grid<f64> {
        self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Inverse of [`log_scale`]: `10^(v/10)`.
    pub fn to_intensity(&self) -> Grid<f64> {
        self.values.map(db_to_intensity)
    }
}

#[inline]
pub fn db_to_intensity(v: f64) -> f64 {
    libm::pow(10.0, v / 10.0)
}

/// `10·log10(intensity)`, with values below `floor_db` clamped to it.
pub fn log_scale(intensity: &Grid<f64>, floor_db: f64, provenance: Provenance) -> Result<LogImage> {
    if !floor_db.is_finite() {
        return Err(Error::NonFinite("floor_db"));
    }
    let floor_linear = db_to_intensity(floor_db);
    let mut out = Vec::with_capacity(intensity.len());
    for (index, &v) in intensity.as_slice().iter().enumerate() {
        if v < 0.0 {
            return Err(Error::NegativeIntensity { index, value: v });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("intensity"));
        }
        out.push(if v <= floor_linear {
            floor_db
        } else {
            10.0 * libm::log10(v)
        });
    }
    LogImage::new(Grid::from_vec(intensity.rows(), intensity.cols(), out)?, provenance)
}

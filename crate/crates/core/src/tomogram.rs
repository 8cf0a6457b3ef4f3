use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Complex coherent field sampled on a pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTomogram {
    field: Grid<Complex64>,
}

impl ComplexTomogram {
    pub fn new(field: Grid<Complex64>) -> Result<Self> {
        if field.as_slice().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("complex tomogram"));
        }
        Ok(Self { field })
    }

    pub fn field(&self) -> &Grid<Complex64> {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.field.rows()
    }

    pub fn cols(&self) -> usize {
        self.field.cols()
    }

    /// Squared magnitude per pixel.
    pub fn intensity(&self) -> Grid<f64> {
        self.field.map(|z| z.norm_sqr())
    }
}

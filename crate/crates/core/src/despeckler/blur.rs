use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{LogImage, Provenance};
use crate::simulator::{filter_axis, Axis};

/// Gaussian low-pass used to turn despeckling into deblurring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurSpec {
    pub rows: usize,
    pub cols: usize,
    pub sigma: f64,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self {
            rows: 7,
            cols: 7,
            sigma: 1.0,
        }
    }
}

impl BlurSpec {
    pub fn new(rows: usize, cols: usize, sigma: f64) -> Result<Self> {
        if rows % 2 == 0 || cols % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "blur",
                reason: alloc::format!("kernel size must be odd, got {rows}x{cols}"),
            });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "blur",
                reason: alloc::format!("sigma must be positive, got {sigma}"),
            });
        }
        Ok(Self { rows, cols, sigma })
    }

    fn axis_kernel(&self, len: usize) -> Vec<f64> {
        let half = (len / 2) as f64;
        let mut k: Vec<f64> = (0..len)
            .map(|i| {
                let x = i as f64 - half;
                libm::exp(-x * x / (2.0 * self.sigma * self.sigma))
            })
            .collect();
        let sum: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= sum);
        k
    }

    /// The separable 2-D kernel, normalised to unit sum.
    pub fn kernel(&self) -> Grid<f64> {
        let kr = self.axis_kernel(self.rows);
        let kc = self.axis_kernel(self.cols);
        Grid::from_fn(self.rows, self.cols, |r, c| kr[r] * kc[c])
    }
}

/// 2-D Gaussian filter with reflective boundaries.
pub fn gaussian_blur(img: &LogImage, spec: &BlurSpec) -> LogImage {
    let axial = filter_axis(img.values(), &spec.axis_kernel(spec.rows), Axis::Axial, 1, 0);
    let both = filter_axis(&axial, &spec.axis_kernel(spec.cols), Axis::Lateral, 1, 0);
    LogImage::new(both, Provenance::Preprocessed).expect("convex combination of finite values")
}

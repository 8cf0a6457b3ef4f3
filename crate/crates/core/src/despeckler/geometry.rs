use alloc::format;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::LogImage;

/// Width `P` of the per-step output vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputWidth {
    /// One pixel per step (`P = 1`); the prediction is the last step.
    Single,
    /// A full patch row per step (`P = N_x`); overlapping outputs are averaged.
    Full,
}

/// Shape of the analysis patch: `steps` depth samples by `width` columns,
/// reaching `left` columns to the left and `right` to the right of the
/// predicted pixel, which sits on the last (deepest) row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGeometry {
    steps: usize,
    width: usize,
    left: usize,
    right: usize,
    output: OutputWidth,
}

impl Default for PatchGeometry {
    fn default() -> Self {
        Self {
            steps: 15,
            width: 15,
            left: 7,
            right: 7,
            output: OutputWidth::Single,
        }
    }
}

impl PatchGeometry {
    pub fn new(steps: usize, width: usize, left: usize, right: usize, output: OutputWidth) -> Result<Self> {
        if steps == 0 || width == 0 {
            return Err(Error::InvalidParameter {
                name: "geometry",
                reason: "patch must be non-empty".into(),
            });
        }
        if left + right + 1 != width {
            return Err(Error::InvalidParameter {
                name: "geometry",
                reason: format!("left ({left}) + right ({right}) must equal width - 1 ({})", width - 1),
            });
        }
        Ok(Self { steps, width, left, right, output })
    }

    /// Square patch centred laterally.
    pub fn centred(size: usize, output: OutputWidth) -> Result<Self> {
        if size % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "geometry",
                reason: format!("centred patch needs odd width, got {size}"),
            });
        }
        Self::new(size, size, size / 2, size / 2, output)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn left(&self) -> usize {
        self.left
    }
    pub fn right(&self) -> usize {
        self.right
    }
    pub fn output(&self) -> OutputWidth {
        self.output
    }

    /// `P`.
    pub fn output_width(&self) -> usize {
        match self.output {
            OutputWidth::Single => 1,
            OutputWidth::Full => self.width,
        }
    }

    pub fn patch_len(&self) -> usize {
        self.steps * self.width
    }

    pub fn with_output(mut self, output: OutputWidth) -> Self {
        self.output = output;
        self
    }

    /// Copies the analysis patch of pixel `(i, j)` into `out` (row-major,
    /// `steps × width`), replicating edge pixels for out-of-range indices.
    pub(crate) fn gather(&self, img: &Grid<f64>, i: usize, j: usize, out: &mut [f64]) {
        let (rows, cols) = img.shape();
        let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
        for k in 0..self.steps {
            let r = clamp(i as isize + k as isize - (self.steps as isize - 1), rows);
            let src = img.row(r);
            let dst = &mut out[k * self.width..(k + 1) * self.width];
            for (l, d) in dst.iter_mut().enumerate() {
                *d = src[clamp(j as isize + l as isize - self.left as isize, cols)];
            }
        }
    }
}

/// The `steps × width` analysis patch ending at pixel `(i, j)`.
pub fn extract_patch(img: &LogImage, i: usize, j: usize, g: &PatchGeometry) -> Grid<f64> {
    let mut out = Grid::zeros(g.steps(), g.width());
    g.gather(img.values(), i, j, out.as_mut_slice());
    out
}

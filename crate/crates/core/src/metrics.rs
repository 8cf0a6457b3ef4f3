//! Image quality scores: PSNR, SSIM, speckle contrast and high-frequency
//! energy ratio.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::LogImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 1e-4;
pub const SSIM_C2: f64 = 9e-4;
/// Minimum pixel count of a contrast region.
pub const MIN_REGION_PIXELS: usize = 100;
/// Spatial frequency, in cycles per pixel, above which power counts as high
/// frequency (half the Nyquist limit).
pub const HF_CUTOFF: f64 = 0.25;

fn reference_range(reference: &Grid<f64>) -> Result<(f64, f64)> {
    let (lo, hi) = reference.min_max();
    if !(hi > lo) {
        return Err(Error::DegenerateReference);
    }
    Ok((lo, hi))
}

/// PSNR in dB after mapping both images to `[0, 1]` with the reference's
/// range. Identical images give `f64::INFINITY`.
pub fn psnr(x: &LogImage, reference: &LogImage) -> Result<f64> {
    x.values().same_shape(reference.values())?;
    let (lo, hi) = reference_range(reference.values())?;
    let span = hi - lo;
    let mse = x
        .values()
        .as_slice()
        .iter()
        .zip(reference.values().as_slice())
        .map(|(a, b)| {
            let d = (a - b) / span;
            d * d
        })
        .sum::<f64>()
        / x.values().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * libm::log10(mse))
}

/// Mean SSIM after mapping both images to `[0, 1]` with the reference's
/// range.
pub fn ssim(x: &LogImage, reference: &LogImage) -> Result<f64> {
    x.values().same_shape(reference.values())?;
    let (lo, hi) = reference_range(reference.values())?;
    let map = |v: f64| (v - lo) / (hi - lo);
    ssim_normalized(&x.values().map(map), &reference.values().map(map))
}

fn gaussian_window() -> Vec<f64> {
    let h = (SSIM_WINDOW / 2) as f64;
    let mut w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - h;
            libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable filtering over the valid region only.
fn valid_filter(g: &Grid<f64>, w: &[f64]) -> Grid<f64> {
    let n = w.len();
    let (rows, cols) = g.shape();
    let (or, oc) = (rows + 1 - n, cols + 1 - n);
    let horiz = Grid::from_fn(rows, oc, |r, c| w.iter().enumerate().map(|(k, wk)| wk * g.get(r, c + k)).sum::<f64>());
    Grid::from_fn(or, oc, |r, c| w.iter().enumerate().map(|(k, wk)| wk * horiz.get(r + k, c)).sum::<f64>())
}

/// Mean SSIM of two images already on a unit dynamic range, using an 11×11
/// Gaussian window (σ = 1.5) over the valid region.
pub fn ssim_normalized(x: &Grid<f64>, y: &Grid<f64>) -> Result<f64> {
    x.same_shape(y)?;
    let (rows, cols) = x.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            rows,
            cols,
            patch_rows: SSIM_WINDOW,
            patch_cols: SSIM_WINDOW,
        });
    }
    let w = gaussian_window();
    let prod = |a: &Grid<f64>, b: &Grid<f64>| {
        Grid::from_vec(rows, cols, a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p * q).collect())
            .expect("same shape")
    };
    let mx = valid_filter(x, &w);
    let my = valid_filter(y, &w);
    let sxx = valid_filter(&prod(x, x), &w);
    let syy = valid_filter(&prod(y, y), &w);
    let sxy = valid_filter(&prod(x, y), &w);
    let n = mx.len();
    let mut total = 0.0;
    for k in 0..n {
        let (a, b) = (mx.as_slice()[k], my.as_slice()[k]);
        let vx = sxx.as_slice()[k] - a * a;
        let vy = syy.as_slice()[k] - b * b;
        let cxy = sxy.as_slice()[k] - a * b;
        let num = (2.0 * a * b + SSIM_C1) * (2.0 * cxy + SSIM_C2);
        let den = (a * a + b * b + SSIM_C1) * (vx + vy + SSIM_C2);
        total += num / den;
    }
    Ok(total / n as f64)
}

/// Rectangular pixel region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Region {
    pub fn new(row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self { row0, col0, rows, cols }
    }

    pub fn whole(rows: usize, cols: usize) -> Self {
        Self::new(0, 0, rows, cols)
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        if self.row0 + self.rows > shape.0 || self.col0 + self.cols > shape.1 {
            return Err(Error::RegionOutOfBounds);
        }
        if self.pixels() < MIN_REGION_PIXELS {
            return Err(Error::RegionTooSmall {
                pixels: self.pixels(),
                min: MIN_REGION_PIXELS,
            });
        }
        Ok(())
    }

    pub(crate) fn values<'a>(&'a self, g: &'a Grid<f64>) -> impl Iterator<Item = f64> + 'a {
        (self.row0..self.row0 + self.rows).flat_map(move |r| g.row(r)[self.col0..self.col0 + self.cols].iter().copied())
    }
}

/// `std / mean` of linear intensity inside `region`.
pub fn speckle_contrast(img: &LogImage, region: Region) -> Result<f64> {
    region.check(img.shape())?;
    let lin = img.to_intensity();
    let v: Vec<f64> = region.values(&lin).collect();
    let m = crate::stats::mean(&v);
    Ok(crate::stats::std_dev(&v) / m)
}

/// Power of the 2-D DFT of `g` at frequencies with `|f| > HF_CUTOFF` on
/// either axis.
fn hf_power(g: &Grid<f64>) -> f64 {
    let (rows, cols) = g.shape();
    let twiddles = |n: usize| -> Vec<Complex64> {
        (0..n)
            .map(|k| Complex64::from_polar(1.0, -2.0 * core::f64::consts::PI * k as f64 / n as f64))
            .collect()
    };
    let (tr, tc) = (twiddles(rows), twiddles(cols));
    // Row transforms.
    let mut rowf = vec![Complex64::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        let src = g.row(r);
        for k in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &v) in src.iter().enumerate() {
                acc += tc[(k * n) % cols] * v;
            }
            rowf[r * cols + k] = acc;
        }
    }
    let freq = |k: usize, n: usize| {
        let k = if k > n / 2 { n - k } else { k };
        k as f64 / n as f64
    };
    let mut power = 0.0;
    for kc in 0..cols {
        let high_c = freq(kc, cols) > HF_CUTOFF;
        for kr in 0..rows {
            if !(high_c || freq(kr, rows) > HF_CUTOFF) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                acc += tr[(kr * r) % rows] * rowf[r * cols + kc];
            }
            power += acc.norm_sqr();
        }
    }
    power
}

/// High-frequency spectral power of `x` divided by that of `reference`,
/// both taken on the dB values.
pub fn hf_energy_ratio(x: &LogImage, reference: &LogImage) -> Result<f64> {
    x.values().same_shape(reference.values())?;
    let r = hf_power(reference.values());
    if !(r > 0.0) {
        return Err(Error::DegenerateReference);
    }
    Ok(hf_power(x.values()) / r)
}

/// One row of an evaluation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub contrast: Option<f64>,
    pub hf_ratio: Option<f64>,
}

impl MetricReport {
    /// PSNR, SSIM and high-frequency ratio against `reference`, plus speckle
    /// contrast of `x` when a region is given.
    pub fn compute(x: &LogImage, reference: &LogImage, region: Option<Region>) -> Result<Self> {
        let contrast = region.map(|r| speckle_contrast(x, r)).transpose()?;
        Ok(Self {
            psnr_db: psnr(x, reference)?,
            ssim: ssim(x, reference)?,
            contrast,
            hf_ratio: Some(hf_energy_ratio(x, reference)?),
        })
    }
}

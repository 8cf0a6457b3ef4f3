use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::LogImage;
use crate::simulator::Axis;

/// Zero crossings of the windowed sinc on each side of its centre.
pub const ZERO_CROSSINGS: usize = 8;
pub const KAISER_BETA: f64 = 6.0;

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = core::f64::consts::PI * x;
        libm::sin(px) / px
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_factors(up: usize, down: usize) -> Result<()> {
    if up == 0 || down == 0 {
        return Err(Error::InvalidParameter {
            name: "resample",
            reason: format!("factors must be at least 1, got {up}/{down}"),
        });
    }
    if gcd(up, down) != 1 {
        return Err(Error::InvalidParameter {
            name: "resample",
            reason: format!("factors {up}/{down} are not coprime"),
        });
    }
    Ok(())
}

/// Rational resampling of one signal. Output sample `m` sits at input
/// position `(m + ½)·down/up − ½` so pixel footprints stay aligned.
fn resample_line(src: &[f64], up: usize, down: usize, out: &mut Vec<f64>) {
    let n = src.len();
    let len = (n * up).div_ceil(down);
    let fc = (up as f64 / down as f64).min(1.0);
    let half = ZERO_CROSSINGS as f64 / fc;
    let norm = bessel_i0(KAISER_BETA);
    out.clear();
    for m in 0..len {
        let t = (m as f64 + 0.5) * down as f64 / up as f64 - 0.5;
        let lo = libm::ceil(t - half) as isize;
        let hi = libm::floor(t + half) as isize;
        let (mut acc, mut wsum) = (0.0, 0.0);
        for k in lo..=hi {
            let tau = t - k as f64;
            let r = tau / half;
            if r.abs() >= 1.0 {
                continue;
            }
            let w = fc * sinc(fc * tau) * bessel_i0(KAISER_BETA * libm::sqrt(1.0 - r * r)) / norm;
            acc += w * src[crate::simulator::conv::reflect(k, n)];
            wsum += w;
        }
        out.push(acc / wsum);
    }
}

/// Resamples `g` by `up / down` along `axis` with a Kaiser-windowed sinc
/// low-pass at `min(π/up, π/down)` and reflective boundaries. The output has
/// `ceil(n·up/down)` samples along that axis. Weights are renormalised per
/// output sample, so constants pass through exactly.
pub fn resample_grid(g: &Grid<f64>, up: usize, down: usize, axis: Axis) -> Result<Grid<f64>> {
    check_factors(up, down)?;
    if up == 1 && down == 1 {
        return Ok(g.clone());
    }
    let (rows, cols) = g.shape();
    let mut line = Vec::new();
    match axis {
        Axis::Lateral => {
            let mut data = Vec::new();
            for r in 0..rows {
                resample_line(g.row(r), up, down, &mut line);
                data.extend_from_slice(&line);
            }
            let out_cols = data.len() / rows;
            Grid::from_vec(rows, out_cols, data)
        }
        Axis::Axial => {
            let out_rows = (rows * up).div_ceil(down);
            let mut out = Grid::zeros(out_rows, cols);
            let mut col = Vec::with_capacity(rows);
            for c in 0..cols {
                col.clear();
                col.extend((0..rows).map(|r| g.get(r, c)));
                resample_line(&col, up, down, &mut line);
                for (r, &v) in line.iter().enumerate() {
                    out[(r, c)] = v;
                }
            }
            Ok(out)
        }
    }
}

/// Rational resampling along columns (lateral direction). `up = down = 1`
/// returns the image unchanged; other non-coprime pairs are rejected.
pub fn resample_lateral(img: &LogImage, up: u32, down: u32) -> Result<LogImage> {
    let g = resample_grid(img.values(), up as usize, down as usize, Axis::Lateral)?;
    LogImage::new(g, img.provenance())
}

/// Axial analogue of [`resample_lateral`].
pub fn resample_axial(img: &LogImage, up: u32, down: u32) -> Result<LogImage> {
    let g = resample_grid(img.values(), up as usize, down as usize, Axis::Axial)?;
    LogImage::new(g, img.provenance())
}

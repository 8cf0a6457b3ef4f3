use core::ops::{Add, Mul};

use num_complex::Complex64;

use crate::grid::Grid;

/// Pixel types that can be filtered by a real kernel.
pub trait Sample: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {}

impl Sample for f64 {}
impl Sample for Complex64 {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along columns (depth).
    Axial,
    /// Along rows (lateral position).
    Lateral,
}

/// Half-sample symmetric reflection of `i` into `0..n` (`d c b a | a b c d`).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut k = i.rem_euclid(2 * n);
    if k >= n {
        k = 2 * n - 1 - k;
    }
    k as usize
}

/// Convolves `src` along `axis` with a centred odd-length `kernel`, using
/// reflective boundaries, and keeps the output samples at
/// `offset + k * step`. With `step = 1, offset = 0` this is a same-size
/// filter; with `step = q, offset = q / 2` it filters and decimates in one
/// pass.
pub fn filter_axis<T: Sample>(
    src: &Grid<T>,
    kernel: &[f64],
    axis: Axis,
    step: usize,
    offset: usize,
) -> Grid<T> {
    assert!(kernel.len() % 2 == 1, "kernel length must be odd");
    assert!(step >= 1);
    let half = (kernel.len() / 2) as isize;
    let (rows, cols) = src.shape();
    match axis {
        Axis::Axial => {
            let out_rows = rows.saturating_sub(offset).div_ceil(step);
            let mut out = Grid::filled(out_rows, cols, T::default());
            for k in 0..out_rows {
                let centre = (offset + k * step) as isize;
                let dst = out.row_mut(k);
                for (j, &w) in kernel.iter().enumerate() {
                    let r = reflect(centre + half - j as isize, rows);
                    for (d, &s) in dst.iter_mut().zip(src.row(r)) {
                        *d = *d + s * w;
                    }
                }
            }
            out
        }
        Axis::Lateral => {
            let out_cols = cols.saturating_sub(offset).div_ceil(step);
            let mut out = Grid::filled(rows, out_cols, T::default());
            let mut taps: alloc::vec::Vec<usize> = alloc::vec::Vec::with_capacity(kernel.len());
            for k in 0..out_cols {
                let centre = (offset + k * step) as isize;
                taps.clear();
                taps.extend((0..kernel.len()).map(|j| reflect(centre + half - j as isize, cols)));
                for r in 0..rows {
                    let line = src.row(r);
                    let mut acc = T::default();
                    for (&c, &w) in taps.iter().zip(kernel) {
                        acc = acc + line[c] * w;
                    }
                    out[(r, k)] = acc;
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_is_half_sample_symmetric() {
        let idx: alloc::vec::Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, [2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect(-9, 4), 0);
        assert_eq!(reflect(-6, 4), 2);
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let mut g = Grid::zeros(1, 9);
        g[(0, 4)] = 1.0;
        let k = [0.1, 0.2, 0.4, 0.2, 0.1];
        let out = filter_axis(&g, &k, Axis::Lateral, 1, 0);
        assert_eq!(&out.as_slice()[2..7], &k);
        let gt = Grid::from_fn(9, 1, |r, _| g.get(0, r));
        let out = filter_axis(&gt, &k, Axis::Axial, 1, 0);
        assert_eq!(&out.as_slice()[2..7], &k);
    }

    #[test]
    fn orientation_is_convolution_not_correlation() {
        let mut g = Grid::zeros(1, 7);
        g[(0, 3)] = 1.0;
        let k = [1.0, 2.0, 3.0];
        let out = filter_axis(&g, &k, Axis::Lateral, 1, 0);
        assert_eq!(&out.as_slice()[2..5], &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn decimation_picks_block_centres() {
        let g = Grid::from_fn(8, 8, |r, c| (r * 8 + c) as f64);
        let out = filter_axis(&g, &[1.0], Axis::Lateral, 4, 2);
        assert_eq!(out.shape(), (8, 2));
        assert_eq!(out.row(1), &[10.0, 14.0]);
        let out = filter_axis(&g, &[1.0], Axis::Axial, 4, 2);
        assert_eq!(out.shape(), (2, 8));
        assert_eq!(out.get(1, 0), 48.0);
    }
}

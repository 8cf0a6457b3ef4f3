use alloc::vec::Vec;

use super::geometry::OutputWidth;
use super::model::{forward_batch, Emit, RnnDespeckler, Unrolled};
use super::train::network_input;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{LogImage, Provenance};

const CHUNK: usize = 256;

/// Slides the analysis patch over every pixel of `img` and returns the
/// despeckled image in dB.
///
/// With `P = 1` each pixel receives its own patch's prediction. With
/// `P = N_x` every patch predicts its full `L_t × N_x` footprint and each
/// pixel is the mean of all estimates that cover it.
pub fn denoise(model: &RnnDespeckler, img: &LogImage) -> Result<LogImage> {
    let g = *model.geometry();
    let (rows, cols) = img.shape();
    if rows < g.steps() || cols < g.width() {
        return Err(Error::ImageTooSmall {
            rows,
            cols,
            patch_rows: g.steps(),
            patch_cols: g.width(),
        });
    }
    let input = network_input(img, model.preprocess());
    let norm = model.normalization();
    let x = norm.normalize_grid(input.values());
    let emit = Emit::for_geometry(&g);
    let per = emit.steps(g.steps()) * g.output_width();
    let total = rows * cols;
    let starts: Vec<usize> = (0..total).step_by(CHUNK).collect();

    let run = |start: usize| -> Vec<f64> {
        let end = (start + CHUNK).min(total);
        let pl = g.patch_len();
        let mut inputs = alloc::vec![0.0; (end - start) * pl];
        for (b, p) in (start..end).enumerate() {
            g.gather(&x, p / cols, p % cols, &mut inputs[b * pl..(b + 1) * pl]);
        }
        let mut ws = Unrolled::new();
        let mut out = Vec::new();
        forward_batch(model.weights(), g.steps(), &inputs, end - start, emit, &mut ws, &mut out);
        out
    };

    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        starts.par_iter().map(|&s| run(s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<f64>> = starts.iter().map(|&s| run(s)).collect();

    let pred = match g.output() {
        OutputWidth::Single => {
            let flat: Vec<f64> = chunks.into_iter().flatten().collect();
            Grid::from_vec(rows, cols, flat)?
        }
        OutputWidth::Full => {
            let mut sum = Grid::zeros(rows, cols);
            let mut count = Grid::zeros(rows, cols);
            let (steps, width, left) = (g.steps() as isize, g.width(), g.left() as isize);
            for (start, out) in starts.iter().zip(&chunks) {
                for (b, est) in out.chunks_exact(per).enumerate() {
                    let p = start + b;
                    let (i, j) = ((p / cols) as isize, (p % cols) as isize);
                    for (k, row) in est.chunks_exact(width).enumerate() {
                        let r = i + k as isize - (steps - 1);
                        if r < 0 {
                            continue;
                        }
                        let r = r as usize;
                        for (l, &v) in row.iter().enumerate() {
                            let c = j + l as isize - left;
                            if c < 0 || c as usize >= cols {
                                continue;
                            }
                            sum[(r, c as usize)] += v;
                            count[(r, c as usize)] += 1.0;
                        }
                    }
                }
            }
            Grid::from_fn(rows, cols, |r, c| sum[(r, c)] / count[(r, c)])
        }
    };
    LogImage::new(pred.map(|v| norm.denormalize(v)), Provenance::Predicted)
}

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::LogImage;
use crate::simulator::{filter_axis, gaussian_amplitude_kernel, incoherent_intensity, make_phantom, Axis, PhantomKind};
use crate::spec::AcquisitionSpec;

/// Multiple of the fitted σ spanned by the 10-90 % rise of a Gaussian edge.
const RISE_PER_SIGMA: f64 = 2.0 * 1.281_551_565_544_600_5;

fn phi(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// Least-squares plateaus for a fixed edge shape; returns the residual sum
/// of squares.
fn fit_levels(profile: &[f64], x0: f64, sigma: f64) -> f64 {
    let (mut s1, mut sb, mut sbb, mut sy, mut sby) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &y) in profile.iter().enumerate() {
        let b = phi((i as f64 - x0) / sigma);
        s1 += 1.0;
        sb += b;
        sbb += b * b;
        sy += y;
        sby += b * y;
    }
    // Model y = lo + (hi - lo)·b; solve the 2×2 normal equations.
    let det = s1 * sbb - sb * sb;
    if det.abs() < 1e-300 {
        return f64::INFINITY;
    }
    let lo = (sbb * sy - sb * sby) / det;
    let step = (s1 * sby - sb * sy) / det;
    profile
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let r = y - lo - step * phi((i as f64 - x0) / sigma);
            r * r
        })
        .sum()
}

/// 10-90 % rise distance, in samples, of a step profile. The profile is fitted
/// by least squares with `lo + (hi − lo)·Φ((x − x0)/σ)`, which is robust to
/// residual noise on the plateaus, and the width of the fit is returned.
pub(crate) fn profile_edge_width(profile: &[f64]) -> Result<f64> {
    let n = profile.len();
    if n < 5 {
        return Err(Error::EdgeNotFound("profile shorter than 5 samples"));
    }
    let (lo, hi) = profile.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 1e-9 * lo.abs().max(hi.abs())) {
        return Err(Error::EdgeNotFound("profile is flat"));
    }
    let nf = n as f64;
    let sigma_at = |k: usize, steps: usize, lo: f64, hi: f64| lo * libm::pow(hi / lo, k as f64 / steps as f64);
    let mut best = (f64::INFINITY, nf / 2.0, 1.0);
    for xi in 0..=4 * n {
        let x0 = xi as f64 / 4.0;
        for k in 0..=48 {
            let sigma = sigma_at(k, 48, 0.1, nf / 3.0);
            let sse = fit_levels(profile, x0, sigma);
            if sse < best.0 {
                best = (sse, x0, sigma);
            }
        }
    }
    // Local refinement around the coarse optimum.
    let mut span = (0.25, best.2 * 0.1);
    for _ in 0..30 {
        let (_, x0, sigma) = best;
        for dx in [-1.0, 0.0, 1.0] {
            for ds in [-1.0, 0.0, 1.0] {
                let (x, s) = (x0 + dx * span.0, (sigma + ds * span.1).max(1e-3));
                let sse = fit_levels(profile, x, s);
                if sse < best.0 {
                    best = (sse, x, s);
                }
            }
        }
        span = (span.0 * 0.7, span.1 * 0.7);
    }
    let (_, x0, sigma) = best;
    if x0 <= 0.0 || x0 >= nf - 1.0 {
        return Err(Error::EdgeNotFound("fitted edge lies outside the profile"));
    }
    Ok(RISE_PER_SIGMA * sigma)
}

/// Lateral 10-90 % edge-response width, in pixels, of a B-scan containing a
/// single vertical edge. Rows are averaged in linear intensity and the outer
/// eighth of columns on each side is ignored to keep boundary effects out of
/// the fit.
pub fn edge_width(img: &LogImage) -> Result<f64> {
    let lin = img.to_intensity();
    let (rows, cols) = lin.shape();
    let margin = cols / 8;
    let profile: Vec<f64> = (margin..cols - margin)
        .map(|c| (0..rows).map(|r| lin.get(r, c)).sum::<f64>() / rows as f64)
        .collect();
    profile_edge_width(&profile)
}

/// Convolves linear intensity along rows with the intensity profile of a
/// Gaussian beam of the given waist, normalised to unit sum.
pub fn lateral_gaussian_blur(intensity: &Grid<f64>, waist: f64, spacing: f64) -> Grid<f64> {
    let kernel: Vec<f64> = gaussian_amplitude_kernel(waist, spacing).iter().map(|a| a * a).collect();
    filter_axis(intensity, &kernel, Axis::Lateral, 1, 0)
}

/// Edge widths for rendering at `w1` then blurring with `w2`, versus
/// rendering directly at `sqrt(w1² + w2²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionReport {
    pub w1: f64,
    pub w2: f64,
    pub composed_width: f64,
    pub direct_width: f64,
}

impl CompositionReport {
    pub fn relative_error(&self) -> f64 {
        (self.composed_width - self.direct_width).abs() / self.direct_width
    }
}

/// Speckle-free edge phantom of `rows × cols` sensor pixels rendered with
/// `spec` at lateral waists `w1` and `sqrt(w1² + w2²)`, the former blurred
/// afterwards by a Gaussian beam of waist `w2`.
pub fn gaussian_composition(
    spec: &AcquisitionSpec,
    w1: f64,
    w2: f64,
    rows: usize,
    cols: usize,
    oversample: usize,
) -> Result<CompositionReport> {
    let edge = make_phantom(PhantomKind::EdgeTarget { left: 0.1, right: 1.0 }, rows, cols, oversample, crate::Seed(0))?;
    let profile = |g: &Grid<f64>| -> Vec<f64> {
        (0..g.cols()).map(|c| (0..g.rows()).map(|r| g.get(r, c)).sum::<f64>() / g.rows() as f64).collect()
    };
    let first = incoherent_intensity(&edge, &spec.with_lateral_waist(w1)?)?;
    let blurred = lateral_gaussian_blur(&first, w2, spec.lateral_sampling());
    let direct = incoherent_intensity(&edge, &spec.with_lateral_waist(libm::sqrt(w1 * w1 + w2 * w2))?)?;
    Ok(CompositionReport {
        w1,
        w2,
        composed_width: profile_edge_width(&profile(&blurred))?,
        direct_width: profile_edge_width(&profile(&direct))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Provenance;

    fn erf_profile(n: usize, sigma: f64) -> Vec<f64> {
        let c = n as f64 / 2.0;
        (0..n).map(|i| 0.5 * (1.0 + libm::erf((i as f64 - c) / (sigma * core::f64::consts::SQRT_2)))).collect()
    }

    #[test]
    fn width_of_gaussian_edge() {
        // 10-90 % of an erf edge spans 2·1.28155·σ.
        for sigma in [1.5, 3.0, 6.0] {
            let w = profile_edge_width(&erf_profile(200, sigma)).unwrap();
            let want = 2.0 * 1.281_551_565_545 * sigma;
            assert!((w - want).abs() / want < 0.015, "{sigma}: {w} vs {want}");
        }
    }

    #[test]
    fn falling_edges_and_failures() {
        let mut p = erf_profile(100, 2.0);
        let up = profile_edge_width(&p).unwrap();
        p.reverse();
        assert!((profile_edge_width(&p).unwrap() - up).abs() < 1e-9);
        assert!(profile_edge_width(&[1.0; 20]).is_err());
        assert!(profile_edge_width(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn image_edge_width_averages_rows() {
        let p = erf_profile(60, 2.5);
        let g = Grid::from_fn(8, 60, |_, c| crate::image::log_scale(&Grid::filled(1, 1, 0.1 + p[c]), -80.0, Provenance::GroundTruth).unwrap().values().get(0, 0));
        let w = edge_width(&LogImage::new(g, Provenance::GroundTruth).unwrap()).unwrap();
        assert!((w - 2.0 * 1.2816 * 2.5).abs() < 0.1, "{w}");
    }

    #[test]
    fn gaussian_widths_compose_in_quadrature() {
        let spec = AcquisitionSpec::preset("retina").unwrap();
        let r = gaussian_composition(&spec, 36.0, 27.0, 8, 64, 4).unwrap();
        assert!(r.relative_error() < 0.05, "{r:?}");
    }
}

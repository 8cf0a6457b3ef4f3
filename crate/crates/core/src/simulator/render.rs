use alloc::vec::Vec;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::conv::{filter_axis, Axis};
use super::phantom::Phantom;
use super::psf::build_psf;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{log_scale, LogImage, Provenance, DEFAULT_FLOOR_DB};
use crate::seed::Seed;
use crate::spec::AcquisitionSpec;
use crate::tomogram::ComplexTomogram;

/// Default oversampling of the scatterer grid per axis.
pub const DEFAULT_OVERSAMPLE: usize = 4;

const SCATTER_TAG: u64 = 0x5CA7;

/// Matched speckled / speckle-free rendering of one phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPair {
    pub speckled: LogImage,
    pub ground_truth: LogImage,
    pub spec: AcquisitionSpec,
    pub seed: Seed,
}

/// Circular complex Gaussian scatterers with per-pixel variance equal to the
/// phantom's mean reflectivity. Column `c` draws from stream `c` of the seed,
/// so the field does not depend on traversal order.
pub fn scatterer_field(phantom: &Phantom, seed: Seed) -> ComplexTomogram {
    let mu = phantom.reflectivity();
    let (rows, cols) = mu.shape();
    let root = seed.derive(SCATTER_TAG);
    let mut field = Grid::filled(rows, cols, Complex64::new(0.0, 0.0));
    for c in 0..cols {
        let mut rng = root.stream_rng(c as u64);
        for r in 0..rows {
            let scale = libm::sqrt(mu.get(r, c) / 2.0);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            field[(r, c)] = Complex64::new(re * scale, im * scale);
        }
    }
    ComplexTomogram::new(field).expect("finite scatterers")
}

fn decimation(phantom: &Phantom) -> (usize, usize) {
    let q = phantom.oversample();
    (q, q / 2)
}

/// Pre-log speckled intensity `|f ∗ α|²` on the sensor grid.
pub fn coherent_intensity(phantom: &Phantom, spec: &AcquisitionSpec, seed: Seed) -> Result<Grid<f64>> {
    let (q, offset) = decimation(phantom);
    let psf = build_psf(spec, q as f64)?;
    let field = scatterer_field(phantom, seed);
    let axial = filter_axis(field.field(), psf.axial(), Axis::Axial, q, offset);
    let both = filter_axis(&axial, psf.lateral(), Axis::Lateral, q, offset);
    Ok(both.map(|z| z.norm_sqr()))
}

/// Pre-log speckle-free intensity `|f|² ∗ |α|²` on the sensor grid. This is
/// the expectation of [`coherent_intensity`] over scatterer realisations, so
/// both share the same mean level by construction.
pub fn incoherent_intensity(phantom: &Phantom, spec: &AcquisitionSpec) -> Result<Grid<f64>> {
    let (q, offset) = decimation(phantom);
    let psf = build_psf(spec, q as f64)?;
    let axial = filter_axis(phantom.reflectivity(), &psf.axial_intensity(), Axis::Axial, q, offset);
    Ok(filter_axis(&axial, &psf.lateral_intensity(), Axis::Lateral, q, offset))
}

pub fn render_pair(phantom: &Phantom, spec: &AcquisitionSpec, seed: Seed) -> Result<SimulatedPair> {
    let speckled = coherent_intensity(phantom, spec, seed)?;
    let truth = incoherent_intensity(phantom, spec)?;
    speckled.same_shape(&truth)?;
    Ok(SimulatedPair {
        speckled: log_scale(&speckled, DEFAULT_FLOOR_DB, Provenance::Speckled)?,
        ground_truth: log_scale(&truth, DEFAULT_FLOOR_DB, Provenance::GroundTruth)?,
        spec: spec.clone(),
        seed,
    })
}

/// Mean of `n` independent coherent renderings, pre-log. Realisation `k` uses
/// `seed.derive(k)`.
pub fn compound_intensity(phantom: &Phantom, spec: &AcquisitionSpec, n: usize, seed: Seed) -> Result<Grid<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n_realizations",
            reason: "must be at least 1".into(),
        });
    }
    let mut acc: Option<Vec<f64>> = None;
    let mut shape = (0, 0);
    for k in 0..n {
        let frame = coherent_intensity(phantom, spec, seed.derive(k as u64))?;
        shape = frame.shape();
        match acc.as_mut() {
            None => acc = Some(frame.into_vec()),
            Some(sum) => sum.iter_mut().zip(frame.as_slice()).for_each(|(s, v)| *s += v),
        }
    }
    let mut sum = acc.expect("n >= 1");
    let inv = 1.0 / n as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    Grid::from_vec(shape.0, shape.1, sum)
}

pub fn angular_compound(phantom: &Phantom, spec: &AcquisitionSpec, n: usize, seed: Seed) -> Result<LogImage> {
    let avg = compound_intensity(phantom, spec, n, seed)?;
    log_scale(&avg, DEFAULT_FLOOR_DB, Provenance::GroundTruth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{make_phantom, PhantomKind};

    fn retina() -> AcquisitionSpec {
        AcquisitionSpec::preset("retina").unwrap()
    }

    #[test]
    fn pair_shapes_and_determinism() {
        let p = make_phantom(PhantomKind::Layered, 24, 32, 4, Seed(1)).unwrap();
        let a = render_pair(&p, &retina(), Seed(9)).unwrap();
        let b = render_pair(&p, &retina(), Seed(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.speckled.shape(), (24, 32));
        assert_eq!(a.ground_truth.shape(), (24, 32));
        let c = render_pair(&p, &retina(), Seed(10)).unwrap();
        assert_ne!(a.speckled, c.speckled);
        assert_eq!(a.ground_truth, c.ground_truth);
    }

    #[test]
    fn constant_truth_equals_level() {
        let p = make_phantom(PhantomKind::Constant { level: 0.5 }, 16, 16, 4, Seed(0)).unwrap();
        let truth = incoherent_intensity(&p, &retina()).unwrap();
        assert!(truth.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn single_realisation_compound_matches_pair() {
        let p = make_phantom(PhantomKind::Layered, 16, 16, 4, Seed(3)).unwrap();
        let compound = angular_compound(&p, &retina(), 1, Seed(4)).unwrap();
        let pair = render_pair(&p, &retina(), Seed(4).derive(0)).unwrap();
        assert_eq!(compound.values(), pair.speckled.values());
        assert!(compound_intensity(&p, &retina(), 0, Seed(4)).is_err());
    }
}

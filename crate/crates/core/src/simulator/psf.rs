use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::spec::AcquisitionSpec;

/// Lateral kernels are truncated where the amplitude drops below this
/// fraction of the peak.
pub const PSF_TRUNCATION: f64 = 1e-3;

/// Separable amplitude PSF: `α[m, n] = axial[m] · lateral[n]`.
///
/// Both kernels are centred, odd-length and energy-normalised (sum of squares
/// equals one), so the 2-D PSF has unit energy as well.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf2D {
    axial: Vec<f64>,
    lateral: Vec<f64>,
}

impl Psf2D {
    pub fn axial(&self) -> &[f64] {
        &self.axial
    }

    pub fn lateral(&self) -> &[f64] {
        &self.lateral
    }

    pub fn axial_support(&self) -> usize {
        self.axial.len()
    }

    pub fn lateral_support(&self) -> usize {
        self.lateral.len()
    }

    /// `|α_z|²`, which sums to one.
    pub fn axial_intensity(&self) -> Vec<f64> {
        self.axial.iter().map(|a| a * a).collect()
    }

    /// `|α_x|²`, which sums to one.
    pub fn lateral_intensity(&self) -> Vec<f64> {
        self.lateral.iter().map(|a| a * a).collect()
    }

    /// Value of the 2-D PSF at kernel offsets `(m, n)` from the top-left tap.
    pub fn value(&self, m: usize, n: usize) -> f64 {
        self.axial[m] * self.lateral[n]
    }
}

/// Builds the amplitude PSF for `spec`, sampled at `grid_scale` samples per
/// sensor pixel (1 for the sensor grid, q for a q-times oversampled grid).
pub fn build_psf(spec: &AcquisitionSpec, grid_scale: f64) -> Result<Psf2D> {
    if !(grid_scale.is_finite() && grid_scale > 0.0) {
        return Err(Error::InvalidParameter {
            name: "grid_scale",
            reason: alloc::format!("must be positive, got {grid_scale}"),
        });
    }
    let lateral = gaussian_amplitude_kernel(
        spec.lateral_waist(),
        spec.lateral_sampling() / grid_scale,
    );
    let axial = hanning_axial_kernel(spec.spectral_points(), spec.fft_points(), 1.0 / grid_scale);
    Ok(Psf2D { axial, lateral })
}

/// Samples `exp(-2x²/waist²)` at `spacing`, truncated at [`PSF_TRUNCATION`]
/// of the peak, energy-normalised.
pub fn gaussian_amplitude_kernel(waist: f64, spacing: f64) -> Vec<f64> {
    let amplitude = |k: usize| {
        let x = k as f64 * spacing;
        libm::exp(-2.0 * x * x / (waist * waist))
    };
    let mut half = 0;
    while amplitude(half + 1) >= PSF_TRUNCATION {
        half += 1;
    }
    let taps: Vec<f64> = (0..=2 * half)
        .map(|i| amplitude((i as isize - half as isize).unsigned_abs()))
        .collect();
    energy_normalise(taps)
}

/// Axial amplitude PSF: magnitude of the DFT of an `spectral_points`-long
/// Hanning window zero-padded to `fft_points`, sampled every `step_bins` FFT
/// bins (one bin is one axial pixel) and cropped to the main lobe.
pub fn hanning_axial_kernel(spectral_points: usize, fft_points: usize, step_bins: f64) -> Vec<f64> {
    let n = spectral_points;
    let centre = (n as f64 - 1.0) / 2.0;
    let window: Vec<f64> = (0..n)
        .map(|k| 0.5 * (1.0 - libm::cos(2.0 * core::f64::consts::PI * k as f64 / (n as f64 - 1.0))))
        .collect();
    // The window is symmetric about `centre`, so its centred transform is real
    // and changes sign at every null; the main lobe is the positive run.
    let response = |bins: f64| -> f64 {
        let omega = 2.0 * core::f64::consts::PI * bins / fft_points as f64;
        window
            .iter()
            .enumerate()
            .map(|(k, &w)| w * libm::cos(omega * (k as f64 - centre)))
            .sum()
    };
    let mut lobe = Vec::new();
    let mut k = 0usize;
    loop {
        let v = response(k as f64 * step_bins);
        if v <= 0.0 || (k > 0 && v >= *lobe.last().unwrap()) {
            break;
        }
        lobe.push(v);
        k += 1;
    }
    let half = lobe.len() - 1;
    let taps: Vec<f64> = (0..=2 * half)
        .map(|i| lobe[(i as isize - half as isize).unsigned_abs()])
        .collect();
    energy_normalise(taps)
}

fn energy_normalise(mut taps: Vec<f64>) -> Vec<f64> {
    let norm = libm::sqrt(taps.iter().map(|t| t * t).sum::<f64>());
    for t in &mut taps {
        *t /= norm;
    }
    taps
}

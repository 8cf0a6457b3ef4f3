//! Acquisition-system descriptions and the sampling-resolution ratio.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Physical parameters of an OCT acquisition system.
///
/// Lengths are in micrometres; sampling spaces are micrometres per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionSpec {
    name: String,
    axial_sampling: f64,
    lateral_sampling: f64,
    axial_psf_width: f64,
    lateral_waist: f64,
    spectral_points: usize,
    fft_points: usize,
}

impl AcquisitionSpec {
    pub fn new(
        name: impl Into<String>,
        axial_sampling: f64,
        lateral_sampling: f64,
        axial_psf_width: f64,
        lateral_waist: f64,
        spectral_points: usize,
        fft_points: usize,
    ) -> Result<Self> {
        let lengths = [
            ("axial_sampling", axial_sampling),
            ("lateral_sampling", lateral_sampling),
            ("axial_psf_width", axial_psf_width),
            ("lateral_waist", lateral_waist),
        ];
        for (label, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSpec(format!("{label} must be positive, got {v}")));
            }
        }
        if spectral_points < 2 {
            return Err(Error::InvalidSpec(format!(
                "spectral_points must be at least 2, got {spectral_points}"
            )));
        }
        if spectral_points > fft_points {
            return Err(Error::InvalidSpec(format!(
                "spectral_points ({spectral_points}) exceeds fft_points ({fft_points})"
            )));
        }
        Ok(Self {
            name: name.into(),
            axial_sampling,
            lateral_sampling,
            axial_psf_width,
            lateral_waist,
            spectral_points,
            fft_points,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    /// δz, µm per pixel.
    pub fn axial_sampling(&self) -> f64 {
        self.axial_sampling
    }
    /// δx, µm per pixel.
    pub fn lateral_sampling(&self) -> f64 {
        self.lateral_sampling
    }
    /// ω_z, µm.
    pub fn axial_psf_width(&self) -> f64 {
        self.axial_psf_width
    }
    /// ω_x (Gaussian waist), µm.
    pub fn lateral_waist(&self) -> f64 {
        self.lateral_waist
    }
    /// N_H.
    pub fn spectral_points(&self) -> usize {
        self.spectral_points
    }
    /// N_FFT.
    pub fn fft_points(&self) -> usize {
        self.fft_points
    }

    /// Same system with a different lateral waist.
    pub fn with_lateral_waist(&self, waist: f64) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.axial_sampling,
            self.lateral_sampling,
            self.axial_psf_width,
            waist,
            self.spectral_points,
            self.fft_points,
        )
    }

    /// Same optics sampled with different pixel spacings.
    pub fn with_sampling(&self, axial: f64, lateral: f64) -> Result<Self> {
        Self::new(
            self.name.clone(),
            axial,
            lateral,
            self.axial_psf_width,
            self.lateral_waist,
            self.spectral_points,
            self.fft_points,
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn ratio(&self) -> SamplingResolutionRatio {
        compute_ratio(self)
    }

    pub fn preset(name: &str) -> Option<Self> {
        presets().into_iter().find(|p| p.name == name)
    }
}

/// PSF width over sampling space, in whole pixels, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplingResolutionRatio {
    pub axial: u32,
    pub lateral: u32,
}

/// Rounds half away from zero and clamps to at least one pixel.
pub fn compute_ratio(spec: &AcquisitionSpec) -> SamplingResolutionRatio {
    let to_pixels = |width: f64, sampling: f64| -> u32 {
        let p = libm::round(width / sampling);
        if p < 1.0 {
            1
        } else {
            p as u32
        }
    };
    SamplingResolutionRatio {
        axial: to_pixels(spec.axial_psf_width, spec.axial_sampling),
        lateral: to_pixels(spec.lateral_waist, spec.lateral_sampling),
    }
}

/// Axial PSF width assigned to the canned systems, in pixels. Every canned
/// system resolves three axial pixels.
const PRESET_AXIAL_PIXELS: f64 = 3.0;

struct PresetRow {
    name: &'static str,
    dz: f64,
    spectral: usize,
    fft: usize,
    dx: f64,
    waist: f64,
}

const PRESET_ROWS: [PresetRow; 6] = [
    PresetRow { name: "chicken_blueberry", dz: 6.0, spectral: 1600, fft: 2048, dx: 3.06, waist: 8.28 },
    PresetRow { name: "chicken_skin", dz: 4.78, spectral: 844, fft: 1024, dx: 2.5, waist: 4.14 },
    PresetRow { name: "cucumber", dz: 4.78, spectral: 844, fft: 1024, dx: 8.0, waist: 8.28 },
    PresetRow { name: "retina", dz: 3.75, spectral: 1024, fft: 2048, dx: 9.0, waist: 18.0 },
    PresetRow { name: "cardiovascular_i", dz: 4.84, spectral: 768, fft: 1024, dx: 12.2, waist: 30.0 },
    PresetRow { name: "cardiovascular_ii", dz: 4.43, spectral: 800, fft: 1024, dx: 24.4, waist: 30.0 },
];

/// The six canned acquisition systems.
pub fn presets() -> Vec<AcquisitionSpec> {
    PRESET_ROWS
        .iter()
        .map(|r| {
            AcquisitionSpec::new(
                r.name.to_string(),
                r.dz,
                r.dx,
                PRESET_AXIAL_PIXELS * r.dz,
                r.waist,
                r.spectral,
                r.fft,
            )
            .expect("preset table is valid")
        })
        .collect()
}

pub fn preset_names() -> Vec<&'static str> {
    PRESET_ROWS.iter().map(|r| r.name).collect()
}

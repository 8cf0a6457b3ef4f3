//! Forward model: reflectivity phantoms, separable PSFs and coherent /
//! incoherent rendering of matched speckled and speckle-free B-scans.

pub(crate) mod conv;
mod phantom;
mod psf;
mod render;

pub use conv::{filter_axis, Axis, Sample};
pub use phantom::{make_phantom, Phantom, PhantomKind};
pub use psf::{build_psf, gaussian_amplitude_kernel, hanning_axial_kernel, Psf2D, PSF_TRUNCATION};
pub use render::{
    angular_compound, coherent_intensity, compound_intensity, incoherent_intensity, render_pair,
    scatterer_field, SimulatedPair, DEFAULT_OVERSAMPLE,
};

//! Coherent speckle simulation, patch-based recurrent despeckling and
//! resolution-aware domain transfer for OCT B-scans.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature only switches on
//! runtime CPU feature detection inside the matrix kernels; `parallel` adds
//! rayon-backed inference.
//!
//! Image convention throughout: row-major, row index = axial depth (A-line
//! direction), column index = lateral position.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod despeckler;
pub mod domain;
pub mod error;
pub mod grid;
pub mod image;
pub mod metrics;
pub mod seed;
pub mod simulator;
pub mod spec;
pub mod stats;
pub mod tomogram;

mod linalg;

pub use error::{Error, Result};
pub use grid::Grid;
pub use image::{log_scale, LogImage, Provenance, DEFAULT_FLOOR_DB};
pub use seed::Seed;
pub use spec::{compute_ratio, AcquisitionSpec, SamplingResolutionRatio};
pub use tomogram::ComplexTomogram;

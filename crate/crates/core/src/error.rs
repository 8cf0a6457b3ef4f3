use alloc::string::String;

/// Errors produced by the simulation, training and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid acquisition spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("negative intensity {value} at flat index {index}")]
    NegativeIntensity { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("image {rows}x{cols} is smaller than the {patch_rows}x{patch_cols} analysis patch")]
    ImageTooSmall {
        rows: usize,
        cols: usize,
        patch_rows: usize,
        patch_cols: usize,
    },

    #[error("region of {pixels} pixels is too small (need at least {min})")]
    RegionTooSmall { pixels: usize, min: usize },

    #[error("region exceeds image bounds")]
    RegionOutOfBounds,

    #[error("reference image is constant; its dynamic range is zero")]
    DegenerateReference,

    #[error("training diverged in {stage} stage at epoch {epoch}: {reason}")]
    Diverged {
        stage: &'static str,
        epoch: usize,
        reason: String,
    },

    #[error("edge response could not be located: {0}")]
    EdgeNotFound(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

//! File formats, run configuration and the command-line driver around
//! [`octdenoise_core`].

mod bytes;

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod image_io;
pub mod report;
pub mod run;

pub use checkpoint::{decode_model, encode_model, load_model, save_model};
pub use config::RunConfig;
pub use error::{IoError, Result};
pub use image_io::{decode_image, encode_image, load_image, save_image, ImageFormat};
pub use octdenoise_core as core;

//! Patch-based recurrent despeckler: analysis patches, the ReLU RNN with a
//! fully connected head, backpropagation through time, content and
//! adversarial training, and sliding-window inference.

mod blur;
mod denoise;
mod gan;
mod geometry;
mod model;
mod optim;
mod train;

pub use blur::{gaussian_blur, BlurSpec};
pub use denoise::denoise;
pub use gan::{
    discriminator_gradients, generator_loss_gradients, train_adversarial, Discriminator,
    DEFAULT_DISCRIMINATOR_HIDDEN, LEAKY_SLOPE,
};
pub use geometry::{extract_patch, OutputWidth, PatchGeometry};
pub use model::{bptt_gradients, Normalization, RnnDespeckler, RnnWeights, Tensor, Variant};
pub use optim::OptimizerKind;
pub use train::{
    continue_content, train_content, train_variant, EpochStats, Stage, TrainPlan, Trained,
};

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::blur::{gaussian_blur, BlurSpec};
use super::gan::{train_adversarial, DEFAULT_DISCRIMINATOR_HIDDEN};
use super::geometry::{OutputWidth, PatchGeometry};
use super::model::{backward_batch, forward_batch, Emit, Normalization, RnnDespeckler, RnnWeights, Unrolled, Variant};
use super::optim::{Optimizer, OptimizerKind};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::LogImage;
use crate::seed::Seed;

pub(crate) const INIT_TAG: u64 = 0x1217;
pub(crate) const SHUFFLE_TAG: u64 = 0x5AFF;

/// Optimisation schedule for both training stages.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPlan {
    pub content_epochs: usize,
    pub adv_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the adversarial term in the generator loss.
    pub lambda_adv: f64,
    pub optimizer: OptimizerKind,
    pub seed: Seed,
    /// Recurrent state size `n_n`.
    pub hidden_units: usize,
    pub discriminator_hidden: usize,
    /// Sampling step of training instances along both axes; 1 uses every pixel.
    pub stride: usize,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            content_epochs: 8,
            adv_epochs: 20,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda_adv: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: Seed(0),
            hidden_units: 1000,
            discriminator_hidden: DEFAULT_DISCRIMINATOR_HIDDEN,
            stride: 1,
        }
    }
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("content_epochs", self.content_epochs),
            ("adv_epochs", self.adv_epochs),
            ("batch_size", self.batch_size),
            ("hidden_units", self.hidden_units),
            ("discriminator_hidden", self.discriminator_hidden),
            ("stride", self.stride),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive".into(),
                });
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: format!("must be positive, got {}", self.learning_rate),
            });
        }
        if !(self.lambda_adv.is_finite() && self.lambda_adv >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda_adv",
                reason: format!("must be non-negative, got {}", self.lambda_adv),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Content,
    Adversarial,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Content => "content",
            Stage::Adversarial => "adversarial",
        }
    }
}

/// Per-epoch training record. `mse` is the mean of the batch MSEs over the
/// epoch, on the normalised scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub stage: Stage,
    pub epoch: usize,
    pub mse: f64,
    pub generator_adv: Option<f64>,
    pub discriminator: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: RnnDespeckler,
    pub history: Vec<EpochStats>,
}

/// Normalised network input, normalised target and the instance coordinates
/// of one training pair.
pub(crate) struct InstanceSet {
    pub input: Grid<f64>,
    pub target: Grid<f64>,
    pub coords: Vec<(usize, usize)>,
    pub geometry: PatchGeometry,
}

impl InstanceSet {
    pub fn for_model(model: &RnnDespeckler, speckled: &LogImage, truth: &LogImage, stride: usize) -> Result<Self> {
        speckled.values().same_shape(truth.values())?;
        let input = network_input(speckled, model.preprocess());
        let n = model.normalization();
        let (rows, cols) = speckled.shape();
        let coords = (0..rows)
            .step_by(stride)
            .flat_map(|i| (0..cols).step_by(stride).map(move |j| (i, j)))
            .collect();
        Ok(Self {
            input: n.normalize_grid(input.values()),
            target: n.normalize_grid(truth.values()),
            coords,
            geometry: *model.geometry(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn target_len(&self) -> usize {
        match self.geometry.output() {
            OutputWidth::Single => 1,
            OutputWidth::Full => self.geometry.patch_len(),
        }
    }

    pub fn fill(&self, idx: &[usize], inputs: &mut Vec<f64>, targets: &mut Vec<f64>) {
        let pl = self.geometry.patch_len();
        let tl = self.target_len();
        inputs.resize(idx.len() * pl, 0.0);
        targets.resize(idx.len() * tl, 0.0);
        for (b, &k) in idx.iter().enumerate() {
            let (i, j) = self.coords[k];
            self.geometry.gather(&self.input, i, j, &mut inputs[b * pl..(b + 1) * pl]);
            match self.geometry.output() {
                OutputWidth::Single => targets[b] = self.target.get(i, j),
                OutputWidth::Full => self.geometry.gather(&self.target, i, j, &mut targets[b * tl..(b + 1) * tl]),
            }
        }
    }
}

pub(crate) fn network_input(img: &LogImage, preprocess: Option<&BlurSpec>) -> LogImage {
    match preprocess {
        Some(spec) => gaussian_blur(img, spec),
        None => img.clone(),
    }
}

/// Reusable buffers for batched content-loss evaluation.
pub(crate) struct Scratch {
    pub ws: Unrolled,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub out: Vec<f64>,
    pub d_out: Vec<f64>,
}

impl Scratch {
    pub fn new() -> Self {
        Self {
            ws: Unrolled::new(),
            inputs: Vec::new(),
            targets: Vec::new(),
            out: Vec::new(),
            d_out: Vec::new(),
        }
    }
}

/// Forward pass plus the MSE gradient with respect to the outputs. Leaves the
/// activations in `s.ws` and the output gradient in `s.d_out`; returns the
/// batch MSE.
pub(crate) fn content_forward(w: &RnnWeights, set: &InstanceSet, idx: &[usize], s: &mut Scratch) -> f64 {
    set.fill(idx, &mut s.inputs, &mut s.targets);
    let emit = Emit::for_geometry(&set.geometry);
    forward_batch(w, set.geometry.steps(), &s.inputs, idx.len(), emit, &mut s.ws, &mut s.out);
    let n = s.out.len() as f64;
    s.d_out.clear();
    let mut sse = 0.0;
    for (p, t) in s.out.iter().zip(&s.targets) {
        let r = p - t;
        sse += r * r;
        s.d_out.push(2.0 * r / n);
    }
    sse / n
}

pub(crate) fn content_backward(w: &RnnWeights, set: &InstanceSet, batch: usize, s: &Scratch, grads: &mut RnnWeights) {
    grads.as_mut_slice().iter_mut().for_each(|g| *g = 0.0);
    let emit = Emit::for_geometry(&set.geometry);
    backward_batch(w, set.geometry.steps(), &s.inputs, batch, emit, &s.ws, &s.d_out, grads);
}

/// Mean squared error of `w` over every instance of `set`.
pub(crate) fn evaluate_mse(w: &RnnWeights, set: &InstanceSet, batch: usize) -> f64 {
    let mut s = Scratch::new();
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut sum = 0.0;
    for chunk in idx.chunks(batch) {
        sum += content_forward(w, set, chunk, &mut s) * chunk.len() as f64;
    }
    sum / set.len() as f64
}

pub(crate) fn check_finite(stage: Stage, epoch: usize, value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged {
            stage: stage.name(),
            epoch,
            reason: format!("{what} became non-finite ({value})"),
        })
    }
}

fn fit_content(
    mut model: RnnDespeckler,
    set: &InstanceSet,
    plan: &TrainPlan,
    epochs: usize,
) -> Result<Trained> {
    let mut rng = plan.seed.derive(SHUFFLE_TAG).rng();
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut opt = Optimizer::new(plan.optimizer, plan.learning_rate, model.weights().as_slice().len());
    let w0 = model.weights();
    let mut grads = RnnWeights::zeros(w0.input(), w0.hidden(), w0.output());
    let mut s = Scratch::new();
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in order.chunks(plan.batch_size) {
            let mse = content_forward(model.weights(), set, chunk, &mut s);
            check_finite(Stage::Content, epoch, mse, "training loss")?;
            sum += mse * chunk.len() as f64;
            content_backward(model.weights(), set, chunk.len(), &s, &mut grads);
            opt.step(model.weights_mut().as_mut_slice(), grads.as_slice());
        }
        history.push(EpochStats {
            stage: Stage::Content,
            epoch,
            mse: sum / set.len() as f64,
            generator_adv: None,
            discriminator: None,
        });
    }
    Ok(Trained { model, history })
}

/// Content-loss training from scratch on one speckled / ground-truth pair.
///
/// The variant fixes the output width (`P = 1` for `rnn_oct` and `drnn`,
/// `P = N_x` otherwise) and, for `drnn`, a 7×7 σ=1 input blur. Both images
/// are mapped to `[0, 1]` with their joint dB range, which is stored in the
/// model. For `rnn_gan` this returns the content-stage generator; see
/// [`train_variant`] for the full two-stage run.
pub fn train_content(
    speckled: &LogImage,
    truth: &LogImage,
    geometry: PatchGeometry,
    plan: &TrainPlan,
    variant: Variant,
) -> Result<Trained> {
    plan.validate()?;
    speckled.values().same_shape(truth.values())?;
    let geometry = geometry.with_output(variant.output());
    let preprocess = match variant {
        Variant::Drnn => Some(BlurSpec::default()),
        _ => None,
    };
    let input = network_input(speckled, preprocess.as_ref());
    let normalization = Normalization::spanning(&[input.values(), truth.values()])?;
    let mut rng = plan.seed.derive(INIT_TAG).rng();
    let weights = RnnWeights::uniform(geometry.width(), plan.hidden_units, geometry.output_width(), &mut rng);
    let model = RnnDespeckler::new(weights, geometry, normalization, variant, preprocess)?;
    let set = InstanceSet::for_model(&model, speckled, truth, plan.stride)?;
    fit_content(model, &set, plan, plan.content_epochs)
}

/// Further content-loss epochs on an existing model, with a fresh optimiser
/// state and the plan's shuffling stream.
pub fn continue_content(
    model: &RnnDespeckler,
    speckled: &LogImage,
    truth: &LogImage,
    plan: &TrainPlan,
    epochs: usize,
) -> Result<Trained> {
    plan.validate()?;
    let set = InstanceSet::for_model(model, speckled, truth, plan.stride)?;
    fit_content(model.clone(), &set, plan, epochs)
}

/// Content training followed, for `rnn_gan`, by the adversarial stage.
pub fn train_variant(
    speckled: &LogImage,
    truth: &LogImage,
    geometry: PatchGeometry,
    plan: &TrainPlan,
    variant: Variant,
) -> Result<Trained> {
    let content = train_content(speckled, truth, geometry, plan, variant)?;
    if variant != Variant::RnnGan {
        return Ok(content);
    }
    let mut adv = train_adversarial(&content.model, speckled, truth, plan)?;
    let mut history = content.history;
    history.append(&mut adv.history);
    Ok(Trained {
        model: adv.model,
        history,
    })
}

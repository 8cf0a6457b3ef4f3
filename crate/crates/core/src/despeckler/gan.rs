use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::geometry::OutputWidth;
use super::model::{backward_batch, forward_batch, Emit, RnnDespeckler, RnnWeights, Tensor, Unrolled, Variant};
use super::optim::Optimizer;
use super::train::{
    check_finite, content_backward, content_forward, evaluate_mse, EpochStats, InstanceSet, Scratch, Stage,
    TrainPlan, Trained, SHUFFLE_TAG,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::LogImage;
use crate::linalg::{add_col_sums, gemm, View};

pub const DEFAULT_DISCRIMINATOR_HIDDEN: usize = 256;
/// Negative-side slope of the hidden activation.
pub const LEAKY_SLOPE: f64 = 0.2;

const DISC_INIT_TAG: u64 = 0xD15C;
/// Stage-entry multiple of the content MSE above which adversarial training
/// is abandoned.
const DIVERGENCE_FACTOR: f64 = 4.0;

/// Two dense layers, `L_t·N_x → h → 1`, with a leaky ReLU in between. The
/// output is a logit; [`Discriminator::probability`] applies the sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    input: usize,
    hidden: usize,
    data: Vec<f64>,
}

struct DiscParts<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: f64,
}

struct DiscPartsMut<'a> {
    w1: &'a mut [f64],
    b1: &'a mut [f64],
    w2: &'a mut [f64],
    b2: &'a mut f64,
}

impl Discriminator {
    pub const TENSOR_NAMES: [&'static str; 4] = ["d_w1", "d_b1", "d_w2", "d_b2"];

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            data: vec![0.0; input * hidden + 2 * hidden + 1],
        }
    }

    /// Uniform in `±sqrt(1 / fan_in)` per layer.
    pub fn uniform(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut d = Self::zeros(input, hidden);
        let b1 = libm::sqrt(1.0 / input as f64);
        let b2 = libm::sqrt(1.0 / hidden as f64);
        let split = input * hidden + hidden;
        for (k, v) in d.data.iter_mut().enumerate() {
            let bound = if k < split { b1 } else { b2 };
            *v = rng.random_range(-bound..bound);
        }
        d
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn parts(&self) -> DiscParts<'_> {
        let (i, h) = (self.input, self.hidden);
        let (w1, rest) = self.data.split_at(i * h);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        DiscParts { w1, b1, w2, b2: b2[0] }
    }

    fn parts_mut(&mut self) -> DiscPartsMut<'_> {
        let (i, h) = (self.input, self.hidden);
        let (w1, rest) = self.data.split_at_mut(i * h);
        let (b1, rest) = rest.split_at_mut(h);
        let (w2, b2) = rest.split_at_mut(h);
        DiscPartsMut { w1, b1, w2, b2: &mut b2[0] }
    }

    pub fn tensors(&self) -> [Tensor<'_>; 4] {
        let (i, h) = (self.input, self.hidden);
        let s = self.data.as_slice();
        let (w1, rest) = s.split_at(i * h);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        [
            Tensor { name: "d_w1", dims: [i, h], data: w1 },
            Tensor { name: "d_b1", dims: [h, 1], data: b1 },
            Tensor { name: "d_w2", dims: [h, 1], data: w2 },
            Tensor { name: "d_b2", dims: [1, 1], data: b2 },
        ]
    }

    /// Rebuilds a discriminator from tensors in [`Self::TENSOR_NAMES`] order.
    pub fn from_tensors(input: usize, hidden: usize, tensors: &[&[f64]]) -> Result<Self> {
        let sizes = [input * hidden, hidden, hidden, 1];
        if tensors.len() != 4 || tensors.iter().zip(sizes).any(|(t, n)| t.len() != n) {
            return Err(Error::InvalidParameter {
                name: "tensors",
                reason: "discriminator tensor sizes do not match the declared shape".into(),
            });
        }
        let data: Vec<f64> = tensors.iter().flat_map(|t| t.iter().copied()).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("discriminator weights"));
        }
        Ok(Self { input, hidden, data })
    }

    fn check(&self, patch: &Grid<f64>) -> Result<()> {
        if patch.len() != self.input {
            return Err(Error::DimensionMismatch {
                expected: (self.input, 1),
                found: patch.shape(),
            });
        }
        Ok(())
    }

    /// Pre-sigmoid score of one patch (flattened row-major).
    pub fn logit(&self, patch: &Grid<f64>) -> Result<f64> {
        self.check(patch)?;
        let mut ws = DiscScratch::default();
        Ok(self.forward_batch(patch.as_slice(), 1, &mut ws)[0])
    }

    /// Probability that `patch` is a ground-truth patch.
    pub fn probability(&self, patch: &Grid<f64>) -> Result<f64> {
        self.logit(patch).map(sigmoid)
    }

    fn forward_batch<'w>(&self, x: &[f64], batch: usize, ws: &'w mut DiscScratch) -> &'w [f64] {
        let (ni, nh) = (self.input, self.hidden);
        let p = self.parts();
        ws.pre.clear();
        for _ in 0..batch {
            ws.pre.extend_from_slice(p.b1);
        }
        gemm(1.0, View::new(x, batch, ni), View::new(p.w1, ni, nh), 1.0, &mut ws.pre, nh);
        ws.act.clear();
        ws.act.extend(ws.pre.iter().map(|&z| leaky(z)));
        ws.logits.clear();
        ws.logits.resize(batch, p.b2);
        gemm(1.0, View::new(&ws.act, batch, nh), View::new(p.w2, nh, 1), 1.0, &mut ws.logits, 1);
        &ws.logits
    }

    /// Accumulates parameter gradients for upstream logit gradients `d_l`
    /// into `grads` and, if given, writes the input gradient to `d_x`.
    fn backward_batch(
        &self,
        x: &[f64],
        d_l: &[f64],
        ws: &DiscScratch,
        grads: Option<&mut Discriminator>,
        d_x: Option<&mut [f64]>,
    ) {
        let (ni, nh) = (self.input, self.hidden);
        let batch = d_l.len();
        let p = self.parts();
        let mut d_pre = vec![0.0; batch * nh];
        for b in 0..batch {
            for k in 0..nh {
                let z = ws.pre[b * nh + k];
                d_pre[b * nh + k] = d_l[b] * p.w2[k] * leaky_grad(z);
            }
        }
        if let Some(g) = grads {
            let g = g.parts_mut();
            gemm(1.0, View::new(&ws.act, batch, nh).t(), View::new(d_l, batch, 1), 1.0, g.w2, 1);
            *g.b2 += d_l.iter().sum::<f64>();
            gemm(1.0, View::new(x, batch, ni).t(), View::new(&d_pre, batch, nh), 1.0, g.w1, nh);
            add_col_sums(g.b1, &d_pre, batch, nh, nh);
        }
        if let Some(d_x) = d_x {
            gemm(1.0, View::new(&d_pre, batch, nh), View::new(p.w1, ni, nh).t(), 0.0, d_x, ni);
        }
    }
}

#[derive(Default)]
struct DiscScratch {
    pre: Vec<f64>,
    act: Vec<f64>,
    logits: Vec<f64>,
}

fn leaky(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn leaky_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy `softplus(−D(real)) + softplus(D(fake))` for one
/// real/fake pair and its gradient with respect to every discriminator
/// parameter.
pub fn discriminator_gradients(disc: &Discriminator, real: &Grid<f64>, fake: &Grid<f64>) -> Result<(f64, Discriminator)> {
    disc.check(real)?;
    disc.check(fake)?;
    let mut grads = Discriminator::zeros(disc.input, disc.hidden);
    let mut ws = DiscScratch::default();
    let lr = disc.forward_batch(real.as_slice(), 1, &mut ws)[0];
    disc.backward_batch(real.as_slice(), &[-sigmoid(-lr)], &ws, Some(&mut grads), None);
    let lf = disc.forward_batch(fake.as_slice(), 1, &mut ws)[0];
    disc.backward_batch(fake.as_slice(), &[sigmoid(lf)], &ws, Some(&mut grads), None);
    Ok((softplus(-lr) + softplus(lf), grads))
}

/// Generator objective `½‖x − target‖² + λ·softplus(−D(x))` for one patch,
/// where `x` is the model's full `L_t × N_x` output, and its gradient with
/// respect to the generator weights.
pub fn generator_loss_gradients(
    model: &RnnDespeckler,
    disc: &Discriminator,
    patch: &Grid<f64>,
    target: &Grid<f64>,
    lambda: f64,
) -> Result<(f64, RnnWeights)> {
    let g = *model.geometry();
    if g.output() != OutputWidth::Full {
        return Err(Error::InvalidParameter {
            name: "geometry",
            reason: "adversarial loss needs full-width output".into(),
        });
    }
    let fake = model.forward(patch)?;
    if target.shape() != fake.shape() {
        return Err(Error::DimensionMismatch {
            expected: fake.shape(),
            found: target.shape(),
        });
    }
    disc.check(&fake)?;
    let mut ws = DiscScratch::default();
    let l = disc.forward_batch(fake.as_slice(), 1, &mut ws)[0];
    let mut d_out: Vec<f64> = fake.as_slice().iter().zip(target.as_slice()).map(|(p, t)| p - t).collect();
    let mse = 0.5 * d_out.iter().map(|r| r * r).sum::<f64>();
    let mut d_x = vec![0.0; fake.len()];
    disc.backward_batch(fake.as_slice(), &[-lambda * sigmoid(-l)], &ws, None, Some(&mut d_x));
    for (d, x) in d_out.iter_mut().zip(&d_x) {
        *d += x;
    }
    let w = model.weights();
    let mut grads = RnnWeights::zeros(w.input(), w.hidden(), w.output());
    let mut un = Unrolled::new();
    let mut out = Vec::new();
    forward_batch(w, g.steps(), patch.as_slice(), 1, Emit::All, &mut un, &mut out);
    backward_batch(w, g.steps(), patch.as_slice(), 1, Emit::All, &un, &d_out, &mut grads);
    Ok((mse + lambda * softplus(-l), grads))
}

/// Second training stage: alternating discriminator and generator updates
/// starting from a content-trained full-width model.
///
/// Each batch first updates the discriminator on ground-truth versus
/// generated patches, then the generator on `L_MSE + λ·L_ADV` scored by the
/// updated discriminator. Shuffling uses the same stream as
/// [`continue_content`](super::continue_content), so `λ = 0` reproduces it
/// exactly.
pub fn train_adversarial(
    model: &RnnDespeckler,
    speckled: &LogImage,
    truth: &LogImage,
    plan: &TrainPlan,
) -> Result<Trained> {
    plan.validate()?;
    let g = *model.geometry();
    if g.output() != OutputWidth::Full {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: "adversarial training needs a full-width (P = N_x) generator".into(),
        });
    }
    let set = InstanceSet::for_model(model, speckled, truth, plan.stride)?;
    let mut model = model.clone().with_variant(Variant::RnnGan);
    let patch_len = g.patch_len();
    let mut disc = match model.discriminator() {
        Some(d) if d.input == patch_len => d.clone(),
        _ => Discriminator::uniform(patch_len, plan.discriminator_hidden, &mut plan.seed.derive(DISC_INIT_TAG).rng()),
    };
    let entry = evaluate_mse(model.weights(), &set, plan.batch_size);
    check_finite(Stage::Adversarial, 0, entry, "stage-entry MSE")?;

    let mut rng = plan.seed.derive(SHUFFLE_TAG).rng();
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut g_opt = Optimizer::new(plan.optimizer, plan.learning_rate, model.weights().as_slice().len());
    let mut d_opt = Optimizer::new(plan.optimizer, plan.learning_rate, disc.data.len());
    let w0 = model.weights();
    let mut g_grads = RnnWeights::zeros(w0.input(), w0.hidden(), w0.output());
    let mut d_grads = Discriminator::zeros(disc.input, disc.hidden);
    let mut s = Scratch::new();
    let mut dws = DiscScratch::default();
    let mut d_x = Vec::new();
    let mut history = Vec::with_capacity(plan.adv_epochs);

    for epoch in 0..plan.adv_epochs {
        order.shuffle(&mut rng);
        let (mut mse_sum, mut adv_sum, mut disc_sum) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(plan.batch_size) {
            let batch = chunk.len();
            let bf = batch as f64;
            let mse = content_forward(model.weights(), &set, chunk, &mut s);
            check_finite(Stage::Adversarial, epoch, mse, "content loss")?;

            // Discriminator step on real targets versus detached generator output.
            d_grads.data.iter_mut().for_each(|v| *v = 0.0);
            let lr: Vec<f64> = disc.forward_batch(&s.targets, batch, &mut dws).to_vec();
            let d_real: Vec<f64> = lr.iter().map(|&l| -sigmoid(-l) / bf).collect();
            disc.backward_batch(&s.targets, &d_real, &dws, Some(&mut d_grads), None);
            let lf: Vec<f64> = disc.forward_batch(&s.out, batch, &mut dws).to_vec();
            let d_fake: Vec<f64> = lf.iter().map(|&l| sigmoid(l) / bf).collect();
            disc.backward_batch(&s.out, &d_fake, &dws, Some(&mut d_grads), None);
            let d_loss = lr.iter().map(|&l| softplus(-l)).sum::<f64>() / bf + lf.iter().map(|&l| softplus(l)).sum::<f64>() / bf;
            check_finite(Stage::Adversarial, epoch, d_loss, "discriminator loss")?;
            d_opt.step(&mut disc.data, &d_grads.data);

            // Generator step against the updated discriminator.
            let lf: Vec<f64> = disc.forward_batch(&s.out, batch, &mut dws).to_vec();
            let adv = lf.iter().map(|&l| softplus(-l)).sum::<f64>() / bf;
            if plan.lambda_adv > 0.0 {
                let d_l: Vec<f64> = lf.iter().map(|&l| -plan.lambda_adv * sigmoid(-l) / bf).collect();
                d_x.resize(s.out.len(), 0.0);
                disc.backward_batch(&s.out, &d_l, &dws, None, Some(&mut d_x));
                for (d, x) in s.d_out.iter_mut().zip(&d_x) {
                    *d += x;
                }
            }
            content_backward(model.weights(), &set, batch, &s, &mut g_grads);
            g_opt.step(model.weights_mut().as_mut_slice(), g_grads.as_slice());

            mse_sum += mse * bf;
            adv_sum += adv * bf;
            disc_sum += d_loss * bf;
        }
        let n = set.len() as f64;
        let mse = mse_sum / n;
        if mse > DIVERGENCE_FACTOR * entry {
            return Err(Error::Diverged {
                stage: Stage::Adversarial.name(),
                epoch,
                reason: format!("content MSE {mse:.3e} exceeds {DIVERGENCE_FACTOR}x the stage-entry value {entry:.3e}"),
            });
        }
        history.push(EpochStats {
            stage: Stage::Adversarial,
            epoch,
            mse,
            generator_adv: Some(adv_sum / n),
            discriminator: Some(disc_sum / n),
        });
    }
    if !model.weights().is_finite() {
        return Err(Error::NonFinite("generator weights"));
    }
    let model = model.with_discriminator(Some(disc));
    Ok(Trained { model, history })
}

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::blur::BlurSpec;
use super::gan::Discriminator;
use super::geometry::{OutputWidth, PatchGeometry};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{add_col_sums, gemm, View};

/// Which flavour of the despeckler a model implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Plain patch-to-pixel RNN.
    RnnOct,
    /// Same network fed with a low-pass filtered input (deblurring form).
    Drnn,
    /// Patch-to-patch RNN whose overlapping outputs are averaged.
    RnnAvg,
    /// Patch-to-patch RNN refined with an adversarial stage.
    RnnGan,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::RnnOct, Variant::Drnn, Variant::RnnAvg, Variant::RnnGan];

    pub fn name(self) -> &'static str {
        match self {
            Variant::RnnOct => "rnn_oct",
            Variant::Drnn => "drnn",
            Variant::RnnAvg => "rnn_avg",
            Variant::RnnGan => "rnn_gan",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn output(self) -> OutputWidth {
        match self {
            Variant::RnnOct | Variant::Drnn => OutputWidth::Single,
            Variant::RnnAvg | Variant::RnnGan => OutputWidth::Full,
        }
    }
}

/// Affine map from dB to the network's `[0, 1]` working range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    min_db: f64,
    max_db: f64,
}

impl Normalization {
    pub fn new(min_db: f64, max_db: f64) -> Result<Self> {
        if !(min_db.is_finite() && max_db.is_finite()) {
            return Err(Error::NonFinite("normalization range"));
        }
        if max_db <= min_db {
            return Err(Error::InvalidParameter {
                name: "normalization",
                reason: alloc::format!("max_db ({max_db}) must exceed min_db ({min_db})"),
            });
        }
        Ok(Self { min_db, max_db })
    }

    /// Joint range of the given images. A constant range is widened by
    /// ±0.5 dB so the map stays invertible.
    pub fn spanning(images: &[&Grid<f64>]) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for g in images {
            let (a, b) = g.min_max();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self::new(lo, hi)
    }

    pub fn min_db(&self) -> f64 {
        self.min_db
    }

    pub fn max_db(&self) -> f64 {
        self.max_db
    }

    #[inline]
    pub fn normalize(&self, db: f64) -> f64 {
        (db - self.min_db) / (self.max_db - self.min_db)
    }

    #[inline]
    pub fn denormalize(&self, v: f64) -> f64 {
        v * (self.max_db - self.min_db) + self.min_db
    }

    pub fn normalize_grid(&self, g: &Grid<f64>) -> Grid<f64> {
        g.map(|v| self.normalize(v))
    }
}

/// Named view of one weight tensor.
#[derive(Debug, Clone, Copy)]
pub struct Tensor<'a> {
    pub name: &'static str,
    pub dims: [usize; 2],
    pub data: &'a [f64],
}

/// Trainable parameters of the recurrent network, stored contiguously in the
/// order `w_zy (N_x × n_n)`, `w_zz (n_n × n_n)`, `b (n_n)`, `w_fc (n_n × P)`,
/// `b_fc (P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnWeights {
    input: usize,
    hidden: usize,
    output: usize,
    data: Vec<f64>,
}

pub(crate) struct Parts<'a> {
    pub w_zy: &'a [f64],
    pub w_zz: &'a [f64],
    pub b: &'a [f64],
    pub w_fc: &'a [f64],
    pub b_fc: &'a [f64],
}

pub(crate) struct PartsMut<'a> {
    pub w_zy: &'a mut [f64],
    pub w_zz: &'a mut [f64],
    pub b: &'a mut [f64],
    pub w_fc: &'a mut [f64],
    pub b_fc: &'a mut [f64],
}

impl RnnWeights {
    pub const TENSOR_NAMES: [&'static str; 5] = ["w_zy", "w_zz", "b", "w_fc", "b_fc"];

    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        let len = input * hidden + hidden * hidden + hidden + hidden * output + output;
        Self {
            input,
            hidden,
            output,
            data: vec![0.0; len],
        }
    }

    /// Uniform in `±sqrt(1 / fan_in)` per tensor.
    pub fn uniform(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Self {
        let mut w = Self::zeros(input, hidden, output);
        let p = w.parts_mut();
        let fill = |s: &mut [f64], fan_in: usize, rng: &mut dyn rand::RngCore| {
            let bound = libm::sqrt(1.0 / fan_in as f64);
            for v in s {
                *v = rng.random_range(-bound..bound);
            }
        };
        fill(p.w_zy, input, rng);
        fill(p.w_zz, hidden, rng);
        fill(p.b, hidden, rng);
        fill(p.w_fc, hidden, rng);
        fill(p.b_fc, hidden, rng);
        w
    }

    pub fn input(&self) -> usize {
        self.input
    }
    pub fn hidden(&self) -> usize {
        self.hidden
    }
    pub fn output(&self) -> usize {
        self.output
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn splits(&self) -> [usize; 5] {
        let (i, h, o) = (self.input, self.hidden, self.output);
        [i * h, h * h, h, h * o, o]
    }

    pub(crate) fn parts(&self) -> Parts<'_> {
        let [a, b, c, d, _] = self.splits();
        let (w_zy, rest) = self.data.split_at(a);
        let (w_zz, rest) = rest.split_at(b);
        let (bias, rest) = rest.split_at(c);
        let (w_fc, b_fc) = rest.split_at(d);
        Parts { w_zy, w_zz, b: bias, w_fc, b_fc }
    }

    pub(crate) fn parts_mut(&mut self) -> PartsMut<'_> {
        let [a, b, c, d, _] = self.splits();
        let (w_zy, rest) = self.data.split_at_mut(a);
        let (w_zz, rest) = rest.split_at_mut(b);
        let (bias, rest) = rest.split_at_mut(c);
        let (w_fc, b_fc) = rest.split_at_mut(d);
        PartsMut { w_zy, w_zz, b: bias, w_fc, b_fc }
    }

    pub fn tensors(&self) -> [Tensor<'_>; 5] {
        let (i, h, o) = (self.input, self.hidden, self.output);
        let p = self.parts();
        [
            Tensor { name: "w_zy", dims: [i, h], data: p.w_zy },
            Tensor { name: "w_zz", dims: [h, h], data: p.w_zz },
            Tensor { name: "b", dims: [h, 1], data: p.b },
            Tensor { name: "w_fc", dims: [h, o], data: p.w_fc },
            Tensor { name: "b_fc", dims: [o, 1], data: p.b_fc },
        ]
    }

    /// Rebuilds weights from tensors in [`Self::TENSOR_NAMES`] order.
    pub fn from_tensors(input: usize, hidden: usize, output: usize, tensors: &[&[f64]]) -> Result<Self> {
        let mut w = Self::zeros(input, hidden, output);
        let splits = w.splits();
        if tensors.len() != 5 || tensors.iter().zip(splits).any(|(t, n)| t.len() != n) {
            return Err(Error::InvalidParameter {
                name: "tensors",
                reason: "tensor sizes do not match the declared shape".into(),
            });
        }
        w.data.clear();
        for t in tensors {
            w.data.extend_from_slice(t);
        }
        if w.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        Ok(w)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Whether the head is evaluated at every step or only the last one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Emit {
    Last,
    All,
}

impl Emit {
    pub fn for_geometry(g: &PatchGeometry) -> Self {
        match g.output() {
            OutputWidth::Single => Emit::Last,
            OutputWidth::Full => Emit::All,
        }
    }

    pub fn steps(self, steps: usize) -> usize {
        match self {
            Emit::Last => 1,
            Emit::All => steps,
        }
    }
}

/// Unrolled activations of one batch, kept for the backward pass.
pub(crate) struct Unrolled {
    batch: usize,
    steps: usize,
    hidden: usize,
    pre: Vec<f64>,
    act: Vec<f64>,
}

impl Unrolled {
    pub fn new() -> Self {
        Self {
            batch: 0,
            steps: 0,
            hidden: 0,
            pre: Vec::new(),
            act: Vec::new(),
        }
    }

    fn resize(&mut self, batch: usize, steps: usize, hidden: usize) {
        self.batch = batch;
        self.steps = steps;
        self.hidden = hidden;
        let n = batch * steps * hidden;
        self.pre.resize(n, 0.0);
        self.act.resize(n, 0.0);
    }

    fn block(&self, t: usize) -> core::ops::Range<usize> {
        let n = self.batch * self.hidden;
        t * n..(t + 1) * n
    }
}

/// Batched forward pass.
///
/// `inputs` holds `batch` patches of `steps × N_x`. `out` receives
/// `batch × emitted_steps × P` values.
pub(crate) fn forward_batch(
    w: &RnnWeights,
    steps: usize,
    inputs: &[f64],
    batch: usize,
    emit: Emit,
    ws: &mut Unrolled,
    out: &mut Vec<f64>,
) {
    let (nx, nh, np) = (w.input, w.hidden, w.output);
    let p = w.parts();
    let patch = steps * nx;
    debug_assert_eq!(inputs.len(), batch * patch);
    ws.resize(batch, steps, nh);
    for t in 0..steps {
        let cur = ws.block(t);
        {
            let pre = &mut ws.pre[cur.clone()];
            for row in pre.chunks_exact_mut(nh) {
                row.copy_from_slice(p.b);
            }
            let y_t = View::strided(&inputs[t * nx..], batch, nx, patch);
            gemm(1.0, y_t, View::new(p.w_zy, nx, nh), 1.0, pre, nh);
        }
        if t > 0 {
            let prev = ws.block(t - 1);
            gemm(
                1.0,
                View::new(&ws.act[prev], batch, nh),
                View::new(p.w_zz, nh, nh),
                1.0,
                &mut ws.pre[cur.clone()],
                nh,
            );
        }
        for (a, &z) in ws.act[cur.clone()].iter_mut().zip(&ws.pre[cur]) {
            *a = if z > 0.0 { z } else { 0.0 };
        }
    }
    let emitted = emit.steps(steps);
    out.clear();
    out.resize(batch * emitted * np, 0.0);
    for e in 0..emitted {
        let t = steps - emitted + e;
        let stride = emitted * np;
        let dst = &mut out[e * np..];
        for b in 0..batch {
            dst[b * stride..b * stride + np].copy_from_slice(p.b_fc);
        }
        gemm(
            1.0,
            View::new(&ws.act[ws.block(t)], batch, nh),
            View::new(p.w_fc, nh, np),
            1.0,
            dst,
            stride,
        );
    }
}

/// Batched backward pass; accumulates into `grads`.
///
/// `d_out` has the layout of the forward output and holds the loss gradient
/// with respect to each emitted value.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_batch(
    w: &RnnWeights,
    steps: usize,
    inputs: &[f64],
    batch: usize,
    emit: Emit,
    ws: &Unrolled,
    d_out: &[f64],
    grads: &mut RnnWeights,
) {
    let (nx, nh, np) = (w.input, w.hidden, w.output);
    let p = w.parts();
    let g = grads.parts_mut();
    let patch = steps * nx;
    let emitted = emit.steps(steps);
    let stride = emitted * np;
    let mut d_act = vec![0.0; batch * nh];
    let mut d_pre_next = vec![0.0; batch * nh];
    let mut d_pre = vec![0.0; batch * nh];
    for t in (0..steps).rev() {
        let head_step = (t + emitted).checked_sub(steps);
        d_act.iter_mut().for_each(|v| *v = 0.0);
        let act_t = &ws.act[ws.block(t)];
        if let Some(e) = head_step {
            let d_x = View::strided(&d_out[e * np..], batch, np, stride);
            gemm(1.0, d_x, View::new(p.w_fc, nh, np).t(), 1.0, &mut d_act, nh);
            gemm(1.0, View::new(act_t, batch, nh).t(), d_x, 1.0, g.w_fc, np);
            add_col_sums(g.b_fc, &d_out[e * np..], batch, np, stride);
        }
        if t + 1 < steps {
            gemm(
                1.0,
                View::new(&d_pre_next, batch, nh),
                View::new(p.w_zz, nh, nh).t(),
                1.0,
                &mut d_act,
                nh,
            );
        }
        for ((d, &a), &z) in d_pre.iter_mut().zip(&d_act).zip(&ws.pre[ws.block(t)]) {
            *d = if z > 0.0 { a } else { 0.0 };
        }
        let y_t = View::strided(&inputs[t * nx..], batch, nx, patch);
        gemm(1.0, y_t.t(), View::new(&d_pre, batch, nh), 1.0, g.w_zy, nh);
        if t > 0 {
            gemm(
                1.0,
                View::new(&ws.act[ws.block(t - 1)], batch, nh).t(),
                View::new(&d_pre, batch, nh),
                1.0,
                g.w_zz,
                nh,
            );
        }
        add_col_sums(g.b, &d_pre, batch, nh, nh);
        core::mem::swap(&mut d_pre, &mut d_pre_next);
    }
}

/// Trained predictor plus everything inference needs: patch geometry,
/// normalisation map, variant tag, optional preprocessing blur and, for the
/// adversarial variant, its discriminator.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnDespeckler {
    weights: RnnWeights,
    geometry: PatchGeometry,
    normalization: Normalization,
    variant: Variant,
    preprocess: Option<BlurSpec>,
    discriminator: Option<Discriminator>,
}

impl RnnDespeckler {
    pub fn new(
        weights: RnnWeights,
        geometry: PatchGeometry,
        normalization: Normalization,
        variant: Variant,
        preprocess: Option<BlurSpec>,
    ) -> Result<Self> {
        if weights.input != geometry.width() || weights.output != geometry.output_width() {
            return Err(Error::DimensionMismatch {
                expected: (geometry.width(), geometry.output_width()),
                found: (weights.input, weights.output),
            });
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite("weights"));
        }
        Ok(Self {
            weights,
            geometry,
            normalization,
            variant,
            preprocess,
            discriminator: None,
        })
    }

    pub fn with_discriminator(mut self, d: Option<Discriminator>) -> Self {
        self.discriminator = d;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn weights(&self) -> &RnnWeights {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut RnnWeights {
        &mut self.weights
    }

    pub fn geometry(&self) -> &PatchGeometry {
        &self.geometry
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn preprocess(&self) -> Option<&BlurSpec> {
        self.preprocess.as_ref()
    }

    pub fn discriminator(&self) -> Option<&Discriminator> {
        self.discriminator.as_ref()
    }

    pub fn hidden(&self) -> usize {
        self.weights.hidden
    }

    fn check_patch(&self, patch: &Grid<f64>) -> Result<()> {
        let want = (self.geometry.steps(), self.geometry.width());
        if patch.shape() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                found: patch.shape(),
            });
        }
        Ok(())
    }

    /// Output of every step for one normalised patch, `steps × P`.
    pub fn forward(&self, patch: &Grid<f64>) -> Result<Grid<f64>> {
        self.check_patch(patch)?;
        let mut ws = Unrolled::new();
        let mut out = Vec::new();
        forward_batch(&self.weights, self.geometry.steps(), patch.as_slice(), 1, Emit::All, &mut ws, &mut out);
        Grid::from_vec(self.geometry.steps(), self.geometry.output_width(), out)
    }

    /// The model's estimate for one patch: the last step's output (`1 × P`).
    pub fn predict(&self, patch: &Grid<f64>) -> Result<Grid<f64>> {
        self.check_patch(patch)?;
        let mut ws = Unrolled::new();
        let mut out = Vec::new();
        forward_batch(&self.weights, self.geometry.steps(), patch.as_slice(), 1, Emit::Last, &mut ws, &mut out);
        Grid::from_vec(1, self.geometry.output_width(), out)
    }
}

/// Exact gradient of `½‖prediction − target‖²` for one patch.
///
/// For `P = 1` the prediction is the last step's output and `target` is
/// `1 × 1`; for `P = N_x` every step is predicted and `target` is
/// `steps × N_x`. Returns the loss and the gradients.
pub fn bptt_gradients(model: &RnnDespeckler, patch: &Grid<f64>, target: &Grid<f64>) -> Result<(f64, RnnWeights)> {
    model.check_patch(patch)?;
    let g = model.geometry;
    let emit = Emit::for_geometry(&g);
    let want = (emit.steps(g.steps()), g.output_width());
    if target.shape() != want {
        return Err(Error::DimensionMismatch {
            expected: want,
            found: target.shape(),
        });
    }
    let w = &model.weights;
    let mut ws = Unrolled::new();
    let mut out = Vec::new();
    forward_batch(w, g.steps(), patch.as_slice(), 1, emit, &mut ws, &mut out);
    let residual: Vec<f64> = out.iter().zip(target.as_slice()).map(|(p, t)| p - t).collect();
    let loss = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();
    let mut grads = RnnWeights::zeros(w.input, w.hidden, w.output);
    backward_batch(w, g.steps(), patch.as_slice(), 1, emit, &ws, &residual, &mut grads);
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;

    fn model(hidden: usize, output: OutputWidth, seed: u64) -> RnnDespeckler {
        let g = PatchGeometry::centred(5, output).unwrap();
        let mut rng = Seed(seed).rng();
        let w = RnnWeights::uniform(5, hidden, g.output_width(), &mut rng);
        RnnDespeckler::new(w, g, Normalization::new(-40.0, 0.0).unwrap(), Variant::RnnOct, None).unwrap()
    }

    fn patch(seed: u64) -> Grid<f64> {
        let mut rng = Seed(seed).rng();
        Grid::from_fn(5, 5, |_, _| rng.random_range(0.0..1.0))
    }

    #[test]
    fn zero_weights_emit_head_bias() {
        let mut m = model(4, OutputWidth::Full, 1);
        m.weights_mut().as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        m.weights_mut().parts_mut().b_fc.iter_mut().for_each(|v| *v = 0.37);
        let out = m.forward(&patch(2)).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.37));
    }

    #[test]
    fn dead_relu_emits_head_bias() {
        let g = PatchGeometry::centred(5, OutputWidth::Single).unwrap();
        let mut w = RnnWeights::zeros(5, 1, 1);
        {
            let p = w.parts_mut();
            p.w_zy.iter_mut().for_each(|v| *v = 1.0);
            p.w_fc[0] = 3.0;
            p.b_fc[0] = -0.25;
        }
        let m = RnnDespeckler::new(w, g, Normalization::new(0.0, 1.0).unwrap(), Variant::RnnOct, None).unwrap();
        let negative = Grid::from_fn(5, 5, |r, c| -1.0 - (r + c) as f64);
        let out = m.forward(&negative).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == -0.25));
    }

    #[test]
    fn forward_is_deterministic() {
        let m = model(8, OutputWidth::Single, 3);
        let p = patch(4);
        assert_eq!(m.forward(&p).unwrap(), m.forward(&p).unwrap());
        let last = m.forward(&p).unwrap().get(4, 0);
        assert_eq!(m.predict(&p).unwrap().get(0, 0), last);
    }

    #[test]
    fn batched_forward_matches_single() {
        let m = model(6, OutputWidth::Full, 5);
        let patches: Vec<Grid<f64>> = (0..3).map(|s| patch(10 + s)).collect();
        let flat: Vec<f64> = patches.iter().flat_map(|p| p.as_slice().to_vec()).collect();
        let mut ws = Unrolled::new();
        let mut out = Vec::new();
        forward_batch(m.weights(), 5, &flat, 3, Emit::All, &mut ws, &mut out);
        for (b, p) in patches.iter().enumerate() {
            let single = m.forward(p).unwrap();
            for (a, s) in out[b * 25..(b + 1) * 25].iter().zip(single.as_slice()) {
                assert!((a - s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let m = model(8, OutputWidth::Single, 6);
        let p = patch(7);
        let target = m.predict(&p).unwrap();
        let (loss, g) = bptt_gradients(&m, &p, &target).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_is_linear_in_residual() {
        let m = model(8, OutputWidth::Single, 8);
        let p = patch(9);
        let pred = m.predict(&p).unwrap().get(0, 0);
        let t1 = Grid::filled(1, 1, pred - 0.3);
        let t2 = Grid::filled(1, 1, pred - 0.6);
        let (_, g1) = bptt_gradients(&m, &p, &t1).unwrap();
        let (_, g2) = bptt_gradients(&m, &p, &t2).unwrap();
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_mismatched_patch() {
        let m = model(4, OutputWidth::Single, 1);
        assert!(m.forward(&Grid::zeros(4, 5)).is_err());
        assert!(bptt_gradients(&m, &patch(1), &Grid::zeros(5, 5)).is_err());
    }

    #[test]
    fn normalization_roundtrip_and_degenerate_range() {
        let n = Normalization::new(-37.5, 4.25).unwrap();
        for v in [-37.5, -10.0, 0.0, 4.25] {
            assert!((n.denormalize(n.normalize(v)) - v).abs() < 1e-12);
        }
        assert!(Normalization::new(1.0, 1.0).is_err());
        let c = Grid::filled(2, 2, -3.0);
        let n = Normalization::spanning(&[&c]).unwrap();
        assert_eq!(n.normalize(-3.0), 0.5);
    }
}

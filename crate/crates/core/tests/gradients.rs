//! Finite-difference checks of every analytic gradient.

use octdenoise_core::despeckler::{
    bptt_gradients, discriminator_gradients, generator_loss_gradients, Discriminator, Normalization, OutputWidth,
    PatchGeometry, RnnDespeckler, RnnWeights, Variant,
};
use octdenoise_core::{Grid, Seed};
use rand::Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn random_grid(rows: usize, cols: usize, rng: &mut impl Rng) -> Grid<f64> {
    Grid::from_fn(rows, cols, |_, _| rng.random_range(0.0..1.0))
}

fn model(hidden: usize, output: OutputWidth, seed: u64) -> RnnDespeckler {
    let g = PatchGeometry::centred(5, output).unwrap();
    let mut rng = Seed(seed).rng();
    let w = RnnWeights::uniform(5, hidden, g.output_width(), &mut rng);
    RnnDespeckler::new(w, g, Normalization::new(-40.0, 0.0).unwrap(), Variant::RnnAvg, None).unwrap()
}

fn check_rnn(output: OutputWidth, seed: u64) -> f64 {
    let mut rng = Seed(seed ^ 0xABC).rng();
    let m = model(1 + (seed as usize % 8), output, seed);
    let g = *m.geometry();
    let patch = random_grid(5, 5, &mut rng);
    let target_rows = if output == OutputWidth::Single { 1 } else { 5 };
    let target = random_grid(target_rows, g.output_width(), &mut rng);
    let (_, grads) = bptt_gradients(&m, &patch, &target).unwrap();
    let mut worst = 0.0f64;
    for k in 0..grads.as_slice().len() {
        let eval = |delta: f64| {
            let mut p = m.clone();
            p.weights_mut().as_mut_slice()[k] += delta;
            bptt_gradients(&p, &patch, &target).unwrap().0
        };
        let numeric = (eval(STEP) - eval(-STEP)) / (2.0 * STEP);
        let e = rel_err(grads.as_slice()[k], numeric);
        if e > TOL {
            eprintln!("entry {k}: {} vs {numeric}", grads.as_slice()[k]);
        }
        worst = worst.max(e);
    }
    worst
}

#[test]
fn bptt_matches_finite_differences_single_output() {
    for seed in 0..20 {
        let e = check_rnn(OutputWidth::Single, seed);
        assert!(e < TOL, "seed {seed}: {e}");
    }
}

#[test]
fn bptt_matches_finite_differences_full_output() {
    for seed in 0..20 {
        let e = check_rnn(OutputWidth::Full, seed);
        assert!(e < TOL, "seed {seed}: {e}");
    }
}

#[test]
fn discriminator_matches_finite_differences() {
    for seed in 0..20 {
        let mut rng = Seed(seed).rng();
        let d = Discriminator::uniform(25, 1 + seed as usize % 8, &mut rng);
        let (real, fake) = (random_grid(5, 5, &mut rng), random_grid(5, 5, &mut rng));
        let (_, grads) = discriminator_gradients(&d, &real, &fake).unwrap();
        for k in 0..grads.as_slice().len() {
            let eval = |delta: f64| {
                let mut p = d.clone();
                p.as_mut_slice()[k] += delta;
                discriminator_gradients(&p, &real, &fake).unwrap().0
            };
            let numeric = (eval(STEP) - eval(-STEP)) / (2.0 * STEP);
            let e = rel_err(grads.as_slice()[k], numeric);
            assert!(e < TOL, "seed {seed} entry {k}: {e}");
        }
    }
}

#[test]
fn generator_loss_matches_finite_differences() {
    for seed in 0..20 {
        let m = model(1 + seed as usize % 8, OutputWidth::Full, seed + 100);
        let mut rng = Seed(seed + 200).rng();
        let d = Discriminator::uniform(25, 6, &mut rng);
        let (patch, target) = (random_grid(5, 5, &mut rng), random_grid(5, 5, &mut rng));
        let (_, grads) = generator_loss_gradients(&m, &d, &patch, &target, 1.0).unwrap();
        for k in 0..grads.as_slice().len() {
            let eval = |delta: f64| {
                let mut p = m.clone();
                p.weights_mut().as_mut_slice()[k] += delta;
                generator_loss_gradients(&p, &d, &patch, &target, 1.0).unwrap().0
            };
            let numeric = (eval(STEP) - eval(-STEP)) / (2.0 * STEP);
            let e = rel_err(grads.as_slice()[k], numeric);
            assert!(e < TOL, "seed {seed} entry {k}: {e}");
        }
    }
}

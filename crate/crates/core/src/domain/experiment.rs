use alloc::vec::Vec;

use super::adapt::{plan_adaptation_with, Direction, DomainPair, FactorRule, Remedy};
use super::resolution::edge_width;
use crate::despeckler::{denoise, train_variant, PatchGeometry, RnnDespeckler, TrainPlan, Variant};
use crate::error::{Error, Result};
use crate::image::LogImage;
use crate::metrics::{psnr, ssim};
use crate::seed::Seed;
use crate::simulator::{make_phantom, render_pair, PhantomKind, SimulatedPair, DEFAULT_OVERSAMPLE};
use crate::spec::AcquisitionSpec;

const TRAIN_PHANTOM: u64 = 1;
const TRAIN_SPECKLE: u64 = 2;
const TEST_PHANTOM: u64 = 3;
const TEST_SPECKLE: u64 = 4;
const EDGE_SPECKLE: u64 = 5;

/// Inputs of the resolution-transfer experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: AcquisitionSpec,
    pub target: AcquisitionSpec,
    /// Phantom family for the training and test pairs.
    pub phantom: PhantomKind,
    /// Sensor size of every rendered image.
    pub rows: usize,
    pub cols: usize,
    pub oversample: usize,
    pub geometry: PatchGeometry,
    pub variant: Variant,
    pub plan: TrainPlan,
    pub direction: Direction,
    pub rule: FactorRule,
    pub seed: Seed,
}

impl ExperimentConfig {
    pub fn new(source: AcquisitionSpec, target: AcquisitionSpec) -> Self {
        Self {
            source,
            target,
            phantom: PhantomKind::Layered,
            rows: 64,
            cols: 64,
            oversample: DEFAULT_OVERSAMPLE,
            geometry: PatchGeometry::default(),
            variant: Variant::RnnOct,
            plan: TrainPlan::default(),
            direction: Direction::TargetToSource,
            rule: FactorRule::IntegerRatio,
            seed: Seed(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    /// Source-trained model applied to target images as they are.
    Unadapted,
    /// Source-trained pipeline with the resampling remedy.
    Remedied,
    /// Model trained on the target system itself.
    Control,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Unadapted => "unadapted",
            Arm::Remedied => "remedied",
            Arm::Control => "control",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmReport {
    pub arm: Arm,
    pub psnr_db: f64,
    pub ssim: f64,
    /// Lateral edge-response width of the despeckled edge image, in target
    /// pixels.
    pub edge_width: f64,
    pub output: LogImage,
    pub edge_output: LogImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub pair: DomainPair,
    pub input_psnr_db: f64,
    pub input_ssim: f64,
    /// Edge width of the speckle-free target edge image.
    pub truth_edge_width: f64,
    pub arms: Vec<ArmReport>,
}

impl ExperimentReport {
    pub fn arm(&self, arm: Arm) -> &ArmReport {
        self.arms.iter().find(|a| a.arm == arm).expect("every arm is reported")
    }
}

fn render(cfg: &ExperimentConfig, kind: PhantomKind, spec: &AcquisitionSpec, phantom_tag: u64, speckle_tag: u64) -> Result<SimulatedPair> {
    let phantom = make_phantom(kind, cfg.rows, cfg.cols, cfg.oversample, cfg.seed.derive(phantom_tag))?;
    render_pair(&phantom, spec, cfg.seed.derive(speckle_tag))
}

fn train(cfg: &ExperimentConfig, speckled: &LogImage, truth: &LogImage) -> Result<RnnDespeckler> {
    Ok(train_variant(speckled, truth, cfg.geometry, &cfg.plan, cfg.variant)?.model)
}

/// Trains on a synthetic source pair and evaluates on synthetic target
/// images three ways: without adaptation, with the resampling remedy, and
/// against a control trained on the target system. Lateral resolution is
/// the edge width of each arm's output on an edge phantom.
pub fn theorem3_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let pair = plan_adaptation_with(&cfg.source, &cfg.target, cfg.direction, cfg.rule)?;
    if cfg.source.ratio() == cfg.target.ratio() {
        return Err(Error::InvalidSpec("source and target share both sampling-resolution ratios".into()));
    }
    let edge_kind = PhantomKind::EdgeTarget { left: 0.1, right: 1.0 };
    let source_train = render(cfg, cfg.phantom, &cfg.source, TRAIN_PHANTOM, TRAIN_SPECKLE)?;
    let target_train = render(cfg, cfg.phantom, &cfg.target, TRAIN_PHANTOM, TRAIN_SPECKLE)?;
    let test = render(cfg, cfg.phantom, &cfg.target, TEST_PHANTOM, TEST_SPECKLE)?;
    let edge = render(cfg, edge_kind, &cfg.target, TEST_PHANTOM, EDGE_SPECKLE)?;
    let truth = &test.ground_truth;

    let source_model = train(cfg, &source_train.speckled, &source_train.ground_truth)?;
    let control_model = train(cfg, &target_train.speckled, &target_train.ground_truth)?;

    let mut arms = Vec::with_capacity(3);
    let mut push = |arm: Arm, output: LogImage, edge_output: LogImage| -> Result<()> {
        arms.push(ArmReport {
            arm,
            psnr_db: psnr(&output, truth)?,
            ssim: ssim(&output, truth)?,
            edge_width: edge_width(&edge_output)?,
            output,
            edge_output,
        });
        Ok(())
    };

    let unadapted = denoise(&source_model, &test.speckled)?;
    let unadapted_edge = denoise(&source_model, &edge.speckled)?;
    push(Arm::Unadapted, unadapted.clone(), unadapted_edge.clone())?;

    match pair.remedy {
        Remedy::None => push(Arm::Remedied, unadapted, unadapted_edge)?,
        Remedy::ResampleTargetToSource => {
            let run = |img: &LogImage| -> Result<LogImage> {
                let on_source = pair.apply(img)?;
                let out = denoise(&source_model, &on_source)?;
                pair.undo(&out, img.shape())
            };
            push(Arm::Remedied, run(&test.speckled)?, run(&edge.speckled)?)?;
        }
        Remedy::ResampleSourceToTarget => {
            let speckled = pair.apply(&source_train.speckled)?;
            let gt = pair.apply(&source_train.ground_truth)?;
            let model = train(cfg, &speckled, &gt)?;
            push(Arm::Remedied, denoise(&model, &test.speckled)?, denoise(&model, &edge.speckled)?)?;
        }
    }

    push(Arm::Control, denoise(&control_model, &test.speckled)?, denoise(&control_model, &edge.speckled)?)?;

    Ok(ExperimentReport {
        input_psnr_db: psnr(&test.speckled, truth)?,
        input_ssim: ssim(&test.speckled, truth)?,
        truth_edge_width: edge_width(&edge.ground_truth)?,
        pair,
        arms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::despeckler::OutputWidth;

    #[test]
    fn small_run_reports_three_arms() {
        let source = AcquisitionSpec::preset("retina").unwrap();
        let target = AcquisitionSpec::preset("chicken_blueberry").unwrap();
        let mut cfg = ExperimentConfig::new(source, target);
        cfg.rows = 24;
        cfg.cols = 32;
        cfg.geometry = PatchGeometry::centred(5, OutputWidth::Single).unwrap();
        cfg.plan = TrainPlan {
            hidden_units: 8,
            content_epochs: 1,
            ..TrainPlan::default()
        };
        let r = theorem3_experiment(&cfg).unwrap();
        assert_eq!(r.arms.len(), 3);
        assert_eq!(r.pair.remedy, Remedy::ResampleTargetToSource);
        for a in &r.arms {
            assert_eq!(a.output.shape(), (24, 32));
            assert!(a.psnr_db.is_finite() && a.edge_width > 0.0);
        }
        assert!(theorem3_experiment(&ExperimentConfig::new(cfg.source.clone(), cfg.source.clone())).is_err());
    }
}

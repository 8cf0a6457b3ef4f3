//! Command implementations. Each one writes its artifacts under the run
//! directory `cfg.out` together with the resolved configuration and the code
//! version, so the directory alone is enough to repeat the run.

use std::path::{Path, PathBuf};

use log::info;

use octdenoise_core::despeckler::{denoise, train_adversarial, train_content, RnnDespeckler, Trained, Variant};
use octdenoise_core::domain::{gaussian_composition, plan_adaptation_with, theorem3_experiment, ExperimentConfig};
use octdenoise_core::metrics::{MetricReport, Region};
use octdenoise_core::simulator::{make_phantom, render_pair, SimulatedPair};
use octdenoise_core::spec::presets;
use octdenoise_core::LogImage;

use crate::checkpoint::save_model;
use crate::config::RunConfig;
use crate::error::{at, IoError, Result};
use crate::image_io::{load_image, save_image, ImageFormat};
use crate::report::{arm_rows, write_csv, CompositionRow, LossRow, MetricRow};

pub const PHANTOM_TAG: u64 = 1;
pub const SPECKLE_TAG: u64 = 2;

pub const VERSION: &str = concat!("octdenoise ", env!("CARGO_PKG_VERSION"));

pub const CONFIG_FILE: &str = "config.toml";
pub const VERSION_FILE: &str = "VERSION";
pub const SPECKLED_FILE: &str = "speckled.octf";
pub const TRUTH_FILE: &str = "ground_truth.octf";
pub const MODEL_FILE: &str = "model.octm";
pub const LOSS_FILE: &str = "loss_history.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const DENOISED_FILE: &str = "denoised.octf";
pub const THEOREM3_FILE: &str = "theorem3.csv";
pub const COMPOSITION_FILE: &str = "composition.csv";

/// Creates the run directory and records the resolved config and version.
/// Returns the resolved config, which callers should use from here on.
pub fn prepare(cfg: &RunConfig) -> Result<RunConfig> {
    let resolved = cfg.resolved()?;
    eprintln!("# resolved configuration\n{}", resolved.to_toml());
    std::fs::create_dir_all(&resolved.out).map_err(at(&resolved.out))?;
    write_text(&resolved.out.join(CONFIG_FILE), &resolved.to_toml())?;
    write_text(&resolved.out.join(VERSION_FILE), &format!("{VERSION}\n"))?;
    Ok(resolved)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(at(path))
}

/// Renders the configured phantom with the source system.
pub fn simulate_pair(cfg: &RunConfig) -> Result<SimulatedPair> {
    let spec = cfg.source.build()?;
    let p = &cfg.phantom;
    let phantom = make_phantom(p.kind()?, p.rows, p.cols, p.oversample, cfg.seed().derive(PHANTOM_TAG))?;
    Ok(render_pair(&phantom, &spec, cfg.seed().derive(SPECKLE_TAG))?)
}

pub fn simulate(cfg: &RunConfig, gray: bool) -> Result<Vec<PathBuf>> {
    let pair = simulate_pair(cfg)?;
    let mut written = vec![cfg.out.join(SPECKLED_FILE), cfg.out.join(TRUTH_FILE)];
    save_image(&written[0], &pair.speckled, ImageFormat::FloatRaster)?;
    save_image(&written[1], &pair.ground_truth, ImageFormat::FloatRaster)?;
    if gray {
        for (name, img) in [("speckled.g16", &pair.speckled), ("ground_truth.g16", &pair.ground_truth)] {
            let path = cfg.out.join(name);
            save_image(&path, img, ImageFormat::Gray16)?;
            written.push(path);
        }
    }
    info!(
        "simulated {}x{} {} pair with {} (seed {})",
        pair.speckled.rows(),
        pair.speckled.cols(),
        cfg.phantom.kind,
        pair.spec.name(),
        cfg.seed
    );
    Ok(written)
}

/// Content stage, then for `rnn_gan` the adversarial stage with its own plan.
pub fn fit(cfg: &RunConfig, speckled: &LogImage, truth: &LogImage) -> Result<Trained> {
    let variant = cfg.variant()?;
    let geometry = cfg.geometry.build()?;
    let plan = cfg.train.plan(cfg.seed())?;
    let content = train_content(speckled, truth, geometry, &plan, variant)?;
    for s in &content.history {
        info!("content epoch {:>3}  mse {:.6}", s.epoch, s.mse);
    }
    if variant != Variant::RnnGan {
        return Ok(content);
    }
    let adv = train_adversarial(&content.model, speckled, truth, &cfg.train.adversarial_plan(cfg.seed())?)?;
    for s in &adv.history {
        info!(
            "adversarial epoch {:>3}  mse {:.6}  g_adv {:.4}  d {:.4}",
            s.epoch,
            s.mse,
            s.generator_adv.unwrap_or(f64::NAN),
            s.discriminator.unwrap_or(f64::NAN)
        );
    }
    let mut history = content.history;
    history.extend(adv.history);
    Ok(Trained {
        model: adv.model,
        history,
    })
}

/// Trains on the given pair, or on a freshly simulated one.
pub fn train(cfg: &RunConfig, pair: Option<(&Path, &Path)>) -> Result<RnnDespeckler> {
    let (speckled, truth) = match pair {
        Some((s, t)) => (load_image(s)?, load_image(t)?),
        None => {
            let p = simulate_pair(cfg)?;
            (p.speckled, p.ground_truth)
        }
    };
    let started = std::time::Instant::now();
    let trained = fit(cfg, &speckled, &truth)?;
    info!("trained {} in {:.1} s", cfg.variant, started.elapsed().as_secs_f64());
    save_model(&cfg.out.join(MODEL_FILE), &trained.model)?;
    let rows: Vec<LossRow> = trained.history.iter().map(LossRow::from).collect();
    write_csv(&cfg.out.join(LOSS_FILE), &rows)?;
    Ok(trained.model)
}

pub fn parse_region(text: &str) -> Result<Region> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| IoError::Config(format!("region `{text}`: {e}")))?;
    match parts[..] {
        [r0, c0, rows, cols] => Ok(Region::new(r0, c0, rows, cols)),
        _ => Err(IoError::Config(format!("region `{text}` must be row0,col0,rows,cols"))),
    }
}

/// Denoises `input`; with a reference, also scores input and output.
pub fn denoise_file(
    cfg: &RunConfig,
    model: &RnnDespeckler,
    input: &Path,
    reference: Option<&Path>,
    region: Option<Region>,
) -> Result<(PathBuf, Option<(MetricReport, MetricReport)>)> {
    let img = load_image(input)?;
    let out = denoise(model, &img)?;
    let path = cfg.out.join(DENOISED_FILE);
    save_image(&path, &out, ImageFormat::FloatRaster)?;
    let Some(reference) = reference else {
        return Ok((path, None));
    };
    let truth = load_image(reference)?;
    let before = MetricReport::compute(&img, &truth, region)?;
    let after = MetricReport::compute(&out, &truth, region)?;
    info!(
        "psnr {:.2} -> {:.2} dB (gain {:+.2} dB), ssim {:.3} -> {:.3}",
        before.psnr_db,
        after.psnr_db,
        after.psnr_db - before.psnr_db,
        before.ssim,
        after.ssim
    );
    let id = input.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string();
    write_csv(
        &cfg.out.join(METRICS_FILE),
        &[
            MetricRow::new(&id, "speckled", &before),
            MetricRow::new(&id, model.variant().name(), &after),
        ],
    )?;
    Ok((path, Some((before, after))))
}

/// Resamples each input by the source/target pair's factors.
pub fn adapt(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let source = cfg.source.build()?;
    let target = cfg.target_spec()?;
    let pair = plan_adaptation_with(&source, &target, cfg.direction()?, cfg.experiment.rule()?)?;
    info!(
        "{} -> {}: remedy {}, lateral x{}, axial x{}",
        source.name(),
        target.name(),
        pair.remedy.name(),
        pair.lateral_factor,
        pair.axial_factor
    );
    let mut written = Vec::new();
    for input in inputs {
        let img = load_image(input)?;
        let out = pair.apply(&img)?;
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let path = cfg.out.join(format!("{stem}_adapted.octf"));
        save_image(&path, &out, ImageFormat::FloatRaster)?;
        info!("{} {:?} -> {:?}", input.display(), img.shape(), out.shape());
        written.push(path);
    }
    Ok(written)
}

pub fn evaluate(cfg: &RunConfig, reference: &Path, images: &[PathBuf], region: Option<Region>) -> Result<PathBuf> {
    let truth = load_image(reference)?;
    let mut rows = Vec::with_capacity(images.len());
    for p in images {
        let img = load_image(p)?;
        let m = MetricReport::compute(&img, &truth, region)?;
        let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        info!("{id}: psnr {:.2} dB, ssim {:.4}", m.psnr_db, m.ssim);
        rows.push(MetricRow::new(id, format!("{:?}", img.provenance()).to_lowercase(), &m));
    }
    let path = cfg.out.join(METRICS_FILE);
    write_csv(&path, &rows)?;
    Ok(path)
}

pub fn experiment_config(cfg: &RunConfig) -> Result<ExperimentConfig> {
    let mut e = ExperimentConfig::new(cfg.source.build()?, cfg.target_spec()?);
    e.phantom = cfg.phantom.kind()?;
    e.rows = cfg.phantom.rows;
    e.cols = cfg.phantom.cols;
    e.oversample = cfg.phantom.oversample;
    e.geometry = cfg.geometry.build()?;
    e.variant = cfg.variant()?;
    e.plan = cfg.train.plan(cfg.seed())?;
    e.direction = cfg.direction()?;
    e.rule = cfg.experiment.rule()?;
    e.seed = cfg.seed();
    Ok(e)
}

pub fn theorem3(cfg: &RunConfig) -> Result<PathBuf> {
    let report = theorem3_experiment(&experiment_config(cfg)?)?;
    info!(
        "input psnr {:.2} dB, truth edge width {:.2} px",
        report.input_psnr_db, report.truth_edge_width
    );
    for a in &report.arms {
        info!(
            "{:<10} psnr {:.2} dB  ssim {:.3}  edge width {:.2} px",
            a.arm.name(),
            a.psnr_db,
            a.ssim,
            a.edge_width
        );
        save_image(&cfg.out.join(format!("{}.octf", a.arm.name())), &a.output, ImageFormat::FloatRaster)?;
    }
    let path = cfg.out.join(THEOREM3_FILE);
    write_csv(&path, &arm_rows(&report))?;
    Ok(path)
}

pub fn composition(cfg: &RunConfig) -> Result<PathBuf> {
    let spec = cfg.source.build()?;
    let (w1, w2) = (cfg.experiment.w1, cfg.experiment.w2);
    let r = gaussian_composition(&spec, w1, w2, cfg.phantom.rows, cfg.phantom.cols, cfg.phantom.oversample)?;
    info!(
        "w1 {w1} + w2 {w2}: composed {:.3} px, direct {:.3} px, error {:.2}%",
        r.composed_width,
        r.direct_width,
        100.0 * r.relative_error()
    );
    let path = cfg.out.join(COMPOSITION_FILE);
    write_csv(&path, &[CompositionRow::from(&r)])?;
    Ok(path)
}

/// The preset table: name, δz, δx, ω_x, p_z, p_x.
pub fn preset_table() -> String {
    let mut s = format!(
        "{:<20} {:>8} {:>8} {:>8} {:>4} {:>4}\n",
        "name", "dz_um", "dx_um", "wx_um", "p_z", "p_x"
    );
    for p in presets() {
        let r = p.ratio();
        s.push_str(&format!(
            "{:<20} {:>8.2} {:>8.2} {:>8.2} {:>4} {:>4}\n",
            p.name(),
            p.axial_sampling(),
            p.lateral_sampling(),
            p.lateral_waist(),
            r.axial,
            r.lateral
        ));
    }
    s
}

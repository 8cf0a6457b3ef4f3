//! CSV outputs.

use std::path::Path;

use serde::Serialize;

use octdenoise_core::despeckler::EpochStats;
use octdenoise_core::domain::{CompositionReport, ExperimentReport};
use octdenoise_core::metrics::MetricReport;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub image_id: String,
    pub method: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub contrast: Option<f64>,
    pub hf_ratio: Option<f64>,
}

impl MetricRow {
    pub fn new(image_id: impl Into<String>, method: impl Into<String>, m: &MetricReport) -> Self {
        Self {
            image_id: image_id.into(),
            method: method.into(),
            psnr_db: m.psnr_db,
            ssim: m.ssim,
            contrast: m.contrast,
            hf_ratio: m.hf_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRow {
    pub stage: &'static str,
    pub epoch: usize,
    pub mse: f64,
    pub generator_adv: Option<f64>,
    pub discriminator: Option<f64>,
}

impl From<&EpochStats> for LossRow {
    fn from(s: &EpochStats) -> Self {
        Self {
            stage: s.stage.name(),
            epoch: s.epoch,
            mse: s.mse,
            generator_adv: s.generator_adv,
            discriminator: s.discriminator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmRow {
    pub source: String,
    pub target: String,
    pub remedy: &'static str,
    pub lateral_factor: String,
    pub axial_factor: String,
    pub arm: &'static str,
    pub psnr_db: f64,
    pub ssim: f64,
    pub edge_width: f64,
    pub input_psnr_db: f64,
    pub truth_edge_width: f64,
}

pub fn arm_rows(r: &ExperimentReport) -> Vec<ArmRow> {
    r.arms
        .iter()
        .map(|a| ArmRow {
            source: r.pair.source.name().into(),
            target: r.pair.target.name().into(),
            remedy: r.pair.remedy.name(),
            lateral_factor: r.pair.lateral_factor.to_string(),
            axial_factor: r.pair.axial_factor.to_string(),
            arm: a.arm.name(),
            psnr_db: a.psnr_db,
            ssim: a.ssim,
            edge_width: a.edge_width,
            input_psnr_db: r.input_psnr_db,
            truth_edge_width: r.truth_edge_width,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRow {
    pub w1: f64,
    pub w2: f64,
    pub composed_width: f64,
    pub direct_width: f64,
    pub relative_error: f64,
}

impl From<&CompositionReport> for CompositionRow {
    fn from(c: &CompositionReport) -> Self {
        Self {
            w1: c.w1,
            w2: c.w2,
            composed_width: c.composed_width,
            direct_width: c.direct_width,
            relative_error: c.relative_error(),
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(crate::error::at(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_header_and_empty_options() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = MetricReport {
            psnr_db: 20.5,
            ssim: 0.75,
            contrast: None,
            hf_ratio: Some(1.25),
        };
        write_csv(&p, &[MetricRow::new("img0", "rnn_oct", &m)]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "image_id,method,psnr_db,ssim,contrast,hf_ratio\nimg0,rnn_oct,20.5,0.75,,1.25\n");
    }
}

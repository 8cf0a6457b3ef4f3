//! TOML run configuration.
//!
//! Every section and key is optional; missing keys take the defaults below
//! and [`RunConfig::resolved`] writes them back out in full. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use octdenoise_core::despeckler::{OptimizerKind, OutputWidth, PatchGeometry, TrainPlan, Variant};
use octdenoise_core::domain::{Direction, FactorRule, Remedy};
use octdenoise_core::simulator::{PhantomKind, DEFAULT_OVERSAMPLE};
use octdenoise_core::spec::preset_names;
use octdenoise_core::{AcquisitionSpec, Seed};

use crate::error::{at, IoError, Result};

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub variant: String,
    pub remedy: String,
    pub source: SpecConfig,
    pub target: Option<SpecConfig>,
    pub phantom: PhantomConfig,
    pub geometry: GeometryConfig,
    pub train: TrainConfig,
    pub experiment: ExperimentSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("run"),
            variant: Variant::RnnOct.name().into(),
            remedy: Remedy::None.name().into(),
            source: SpecConfig::preset("retina"),
            target: None,
            phantom: PhantomConfig::default(),
            geometry: GeometryConfig::default(),
            train: TrainConfig::default(),
            experiment: ExperimentSection::default(),
        }
    }
}

/// An acquisition system: a named preset, optionally with fields replaced,
/// or a fully custom system when `preset` is absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecConfig {
    pub preset: Option<String>,
    pub name: Option<String>,
    /// δz, µm per pixel.
    pub axial_sampling: Option<f64>,
    /// δx, µm per pixel.
    pub lateral_sampling: Option<f64>,
    /// ω_z, µm.
    pub axial_psf_width: Option<f64>,
    /// ω_x, µm.
    pub lateral_waist: Option<f64>,
    pub spectral_points: Option<usize>,
    pub fft_points: Option<usize>,
}

impl SpecConfig {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<AcquisitionSpec> {
        let base = match &self.preset {
            Some(p) => Some(AcquisitionSpec::preset(p).ok_or_else(|| {
                bad(format!("unknown preset `{p}` (known: {})", preset_names().join(", ")))
            })?),
            None => None,
        };
        let pick_f = |v: Option<f64>, from: Option<f64>, key: &str| {
            v.or(from).ok_or_else(|| bad(format!("custom spec needs `{key}`")))
        };
        let pick_u = |v: Option<usize>, from: Option<usize>, key: &str| {
            v.or(from).ok_or_else(|| bad(format!("custom spec needs `{key}`")))
        };
        let b = base.as_ref();
        let spec = AcquisitionSpec::new(
            self.name
                .clone()
                .or_else(|| b.map(|s| s.name().to_string()))
                .unwrap_or_else(|| "custom".into()),
            pick_f(self.axial_sampling, b.map(|s| s.axial_sampling()), "axial_sampling")?,
            pick_f(self.lateral_sampling, b.map(|s| s.lateral_sampling()), "lateral_sampling")?,
            pick_f(self.axial_psf_width, b.map(|s| s.axial_psf_width()), "axial_psf_width")?,
            pick_f(self.lateral_waist, b.map(|s| s.lateral_waist()), "lateral_waist")?,
            pick_u(self.spectral_points, b.map(|s| s.spectral_points()), "spectral_points")?,
            pick_u(self.fft_points, b.map(|s| s.fft_points()), "fft_points")?,
        )?;
        Ok(spec)
    }

    fn resolved(&self) -> Result<Self> {
        let s = self.build()?;
        Ok(Self {
            preset: self.preset.clone(),
            name: Some(s.name().to_string()),
            axial_sampling: Some(s.axial_sampling()),
            lateral_sampling: Some(s.lateral_sampling()),
            axial_psf_width: Some(s.axial_psf_width()),
            lateral_waist: Some(s.lateral_waist()),
            spectral_points: Some(s.spectral_points()),
            fft_points: Some(s.fft_points()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    /// `constant`, `edge`, `layered` or `inclusions`.
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub oversample: usize,
    /// Reflectivity of a constant phantom.
    pub level: f64,
    /// Left and right reflectivities of an edge phantom.
    pub left: f64,
    pub right: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            kind: "layered".into(),
            rows: 64,
            cols: 64,
            oversample: DEFAULT_OVERSAMPLE,
            level: 0.3,
            left: 0.1,
            right: 1.0,
        }
    }
}

impl PhantomConfig {
    pub fn kind(&self) -> Result<PhantomKind> {
        Ok(match self.kind.as_str() {
            "constant" => PhantomKind::Constant { level: self.level },
            "edge" => PhantomKind::EdgeTarget {
                left: self.left,
                right: self.right,
            },
            "layered" => PhantomKind::Layered,
            "inclusions" => PhantomKind::Inclusions,
            other => return Err(bad(format!("unknown phantom kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// L_t.
    pub steps: usize,
    /// N_x.
    pub width: usize,
    /// Columns left of the predicted pixel; the rest lie to the right.
    pub left: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = PatchGeometry::default();
        Self {
            steps: g.steps(),
            width: g.width(),
            left: g.left(),
        }
    }
}

impl GeometryConfig {
    pub fn build(&self) -> Result<PatchGeometry> {
        if self.left >= self.width {
            return Err(bad(format!("geometry.left ({}) must be below width ({})", self.left, self.width)));
        }
        Ok(PatchGeometry::new(
            self.steps,
            self.width,
            self.left,
            self.width - 1 - self.left,
            OutputWidth::Single,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub content_epochs: usize,
    pub adv_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate of the adversarial stage; defaults to `learning_rate`.
    pub adv_learning_rate: Option<f64>,
    pub lambda_adv: f64,
    /// `adam` or `sgd`.
    pub optimizer: String,
    pub hidden_units: usize,
    pub discriminator_hidden: usize,
    pub stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let p = TrainPlan::default();
        Self {
            content_epochs: p.content_epochs,
            adv_epochs: p.adv_epochs,
            batch_size: p.batch_size,
            learning_rate: p.learning_rate,
            adv_learning_rate: None,
            lambda_adv: p.lambda_adv,
            optimizer: p.optimizer.name().into(),
            hidden_units: p.hidden_units,
            discriminator_hidden: p.discriminator_hidden,
            stride: p.stride,
        }
    }
}

impl TrainConfig {
    pub fn plan(&self, seed: Seed) -> Result<TrainPlan> {
        let plan = TrainPlan {
            content_epochs: self.content_epochs,
            adv_epochs: self.adv_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            lambda_adv: self.lambda_adv,
            optimizer: OptimizerKind::from_name(&self.optimizer)
                .ok_or_else(|| bad(format!("unknown optimizer `{}` (adam, sgd)", self.optimizer)))?,
            seed,
            hidden_units: self.hidden_units,
            discriminator_hidden: self.discriminator_hidden,
            stride: self.stride,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan for the adversarial stage.
    pub fn adversarial_plan(&self, seed: Seed) -> Result<TrainPlan> {
        let mut plan = self.plan(seed)?;
        if let Some(lr) = self.adv_learning_rate {
            plan.learning_rate = lr;
            plan.validate()?;
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// `target_to_source` or `source_to_target`; used when `remedy` is `none`.
    pub direction: String,
    /// `integer` or `physical`.
    pub factor_rule: String,
    /// Largest numerator or denominator under the physical rule.
    pub max_term: u32,
    /// Lateral waists of the composition check, µm.
    pub w1: f64,
    pub w2: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            direction: Remedy::ResampleTargetToSource.name().into(),
            factor_rule: "integer".into(),
            max_term: 8,
            w1: 36.0,
            w2: 27.0,
        }
    }
}

impl ExperimentSection {
    pub fn rule(&self) -> Result<FactorRule> {
        match self.factor_rule.as_str() {
            "integer" => Ok(FactorRule::IntegerRatio),
            "physical" => Ok(FactorRule::Physical { max_term: self.max_term }),
            other => Err(bad(format!("unknown factor_rule `{other}` (integer, physical)"))),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(at(path))?)
    }

    pub fn seed(&self) -> Seed {
        Seed(self.seed)
    }

    pub fn variant(&self) -> Result<Variant> {
        Variant::from_name(&self.variant).ok_or_else(|| {
            bad(format!("unknown variant `{}` (rnn_oct, drnn, rnn_avg, rnn_gan)", self.variant))
        })
    }

    pub fn remedy(&self) -> Result<Remedy> {
        Remedy::from_name(&self.remedy).ok_or_else(|| {
            bad(format!("unknown remedy `{}` (none, target_to_source, source_to_target)", self.remedy))
        })
    }

    /// The remedy direction, or the experiment section's direction when the
    /// remedy is `none`.
    pub fn direction(&self) -> Result<Direction> {
        if let Some(d) = self.remedy()?.direction() {
            return Ok(d);
        }
        Remedy::from_name(&self.experiment.direction)
            .and_then(Remedy::direction)
            .ok_or_else(|| bad(format!("unknown direction `{}`", self.experiment.direction)))
    }

    pub fn target_spec(&self) -> Result<AcquisitionSpec> {
        self.target
            .as_ref()
            .ok_or_else(|| bad("this command needs a [target] section or --target"))?
            .build()
    }

    /// Checks every field and returns the configuration with all defaults and
    /// preset values written out.
    pub fn resolved(&self) -> Result<Self> {
        self.variant()?;
        self.direction()?;
        self.phantom.kind()?;
        self.geometry.build()?;
        self.train.adversarial_plan(self.seed())?;
        self.experiment.rule()?;
        if self.phantom.rows == 0 || self.phantom.cols == 0 || self.phantom.oversample == 0 {
            return Err(bad("phantom rows, cols and oversample must be positive"));
        }
        Ok(Self {
            source: self.source.resolved()?,
            target: self.target.as_ref().map(SpecConfig::resolved).transpose()?,
            ..self.clone()
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

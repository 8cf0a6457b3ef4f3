//! Domain shift between acquisition systems: comparing sampling-resolution
//! ratios, rational resampling remedies, resolution estimation and the
//! resolution-transfer experiment.

mod adapt;
mod experiment;
mod resample;
mod resolution;

pub use adapt::{plan_adaptation, plan_adaptation_with, Direction, DomainPair, FactorRule, Rational, Remedy};
pub use experiment::{theorem3_experiment, Arm, ArmReport, ExperimentConfig, ExperimentReport};
pub use resample::{resample_axial, resample_grid, resample_lateral, KAISER_BETA, ZERO_CROSSINGS};
pub use resolution::{edge_width, gaussian_composition, lateral_gaussian_blur, CompositionReport};

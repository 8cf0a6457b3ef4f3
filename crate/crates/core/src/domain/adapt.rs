use alloc::format;

use crate::error::{Error, Result};
use crate::image::LogImage;
use crate::spec::{AcquisitionSpec, SamplingResolutionRatio};

use super::resample::{resample_axial, resample_lateral};

/// Positive reduced fraction `num / den`, used as a resampling factor:
/// output samples per input sample, i.e. interpolate by `num` and decimate
/// by `den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u32,
    den: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidParameter {
                name: "rational",
                reason: format!("{num}/{den} is not positive"),
            });
        }
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn inverse(self) -> Self {
        Self { num: self.den, den: self.num }
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }

    /// Closest fraction to `x > 0` with numerator and denominator at most
    /// `max_term`. Ties go to the smaller denominator.
    pub fn approximate(x: f64, max_term: u32) -> Result<Self> {
        if !(x.is_finite() && x > 0.0) || max_term == 0 {
            return Err(Error::InvalidParameter {
                name: "rational",
                reason: format!("cannot approximate {x} with terms up to {max_term}"),
            });
        }
        let mut best = (f64::INFINITY, Rational::ONE);
        for den in 1..=max_term {
            let num = libm::round(x * den as f64).clamp(1.0, max_term as f64) as u32;
            let err = (num as f64 / den as f64 - x).abs();
            if err < best.0 - 1e-12 {
                best = (err, Rational::new(num, den)?);
            }
        }
        Ok(best.1)
    }
}

impl core::fmt::Display for Rational {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Which image a remedy resamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Bring target images onto the source system's ratios before inference.
    TargetToSource,
    /// Bring source (training) images onto the target system's ratios.
    SourceToTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Remedy {
    None,
    ResampleTargetToSource,
    ResampleSourceToTarget,
}

impl Remedy {
    pub fn name(self) -> &'static str {
        match self {
            Remedy::None => "none",
            Remedy::ResampleTargetToSource => "target_to_source",
            Remedy::ResampleSourceToTarget => "source_to_target",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(Remedy::None),
            "target_to_source" => Some(Remedy::ResampleTargetToSource),
            "source_to_target" => Some(Remedy::ResampleSourceToTarget),
            _ => None,
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Remedy::None => None,
            Remedy::ResampleTargetToSource => Some(Direction::TargetToSource),
            Remedy::ResampleSourceToTarget => Some(Direction::SourceToTarget),
        }
    }
}

/// How per-axis factors are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorRule {
    /// Reduced ratio of the integer sampling-resolution ratios.
    IntegerRatio,
    /// Ratio of the unrounded `ω / δ` values, approximated by a fraction with
    /// terms up to the given bound.
    Physical { max_term: u32 },
}

/// Source and target systems with the remedy that aligns their ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPair {
    pub source: AcquisitionSpec,
    pub target: AcquisitionSpec,
    pub source_ratio: SamplingResolutionRatio,
    pub target_ratio: SamplingResolutionRatio,
    pub remedy: Remedy,
    /// Resampling factor applied to the resampled image along columns.
    pub lateral_factor: Rational,
    pub axial_factor: Rational,
}

impl DomainPair {
    /// Resamples `img` by this pair's factors (lateral first, then axial).
    pub fn apply(&self, img: &LogImage) -> Result<LogImage> {
        apply_factors(img, self.lateral_factor, self.axial_factor)
    }

    /// Maps an image produced on the resampled grid back with the inverse
    /// factors, cropped or edge-extended to `shape`.
    pub fn undo(&self, img: &LogImage, shape: (usize, usize)) -> Result<LogImage> {
        let back = apply_factors(img, self.lateral_factor.inverse(), self.axial_factor.inverse())?;
        let (rows, cols) = shape;
        let g = back.values();
        let fitted = crate::grid::Grid::from_fn(rows, cols, |r, c| g.get(r.min(g.rows() - 1), c.min(g.cols() - 1)));
        LogImage::new(fitted, img.provenance())
    }
}

fn apply_factors(img: &LogImage, lateral: Rational, axial: Rational) -> Result<LogImage> {
    let lat = resample_lateral(img, lateral.num, lateral.den)?;
    resample_axial(&lat, axial.num, axial.den)
}

/// [`plan_adaptation_with`] under the integer-ratio rule.
pub fn plan_adaptation(source: &AcquisitionSpec, target: &AcquisitionSpec, direction: Direction) -> DomainPair {
    plan_adaptation_with(source, target, direction, FactorRule::IntegerRatio).expect("integer ratios are positive")
}

/// Compares the two systems' ratios and, when they differ, chooses per-axis
/// factors that give the resampled image the other system's ratio. A factor
/// `f` applied to an image with ratio `p` yields ratio `p·f`.
pub fn plan_adaptation_with(
    source: &AcquisitionSpec,
    target: &AcquisitionSpec,
    direction: Direction,
    rule: FactorRule,
) -> Result<DomainPair> {
    let (rs, rt) = (source.ratio(), target.ratio());
    let (from, to) = match direction {
        Direction::TargetToSource => (target, source),
        Direction::SourceToTarget => (source, target),
    };
    let (lateral, axial) = match rule {
        FactorRule::IntegerRatio => {
            let (rf, rto) = (from.ratio(), to.ratio());
            (Rational::new(rto.lateral, rf.lateral)?, Rational::new(rto.axial, rf.axial)?)
        }
        FactorRule::Physical { max_term } => {
            let lat = (to.lateral_waist() / to.lateral_sampling()) / (from.lateral_waist() / from.lateral_sampling());
            let ax = (to.axial_psf_width() / to.axial_sampling()) / (from.axial_psf_width() / from.axial_sampling());
            (Rational::approximate(lat, max_term)?, Rational::approximate(ax, max_term)?)
        }
    };
    let matched = match rule {
        FactorRule::IntegerRatio => rs == rt,
        FactorRule::Physical { .. } => lateral.is_one() && axial.is_one(),
    };
    let (remedy, lateral_factor, axial_factor) = if matched {
        (Remedy::None, Rational::ONE, Rational::ONE)
    } else {
        let remedy = match direction {
            Direction::TargetToSource => Remedy::ResampleTargetToSource,
            Direction::SourceToTarget => Remedy::ResampleSourceToTarget,
        };
        (remedy, lateral, axial)
    };
    Ok(DomainPair {
        source: source.clone(),
        target: target.clone(),
        source_ratio: rs,
        target_ratio: rt,
        remedy,
        lateral_factor,
        axial_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str) -> AcquisitionSpec {
        AcquisitionSpec::preset(name).unwrap()
    }

    #[test]
    fn identical_domains_need_nothing() {
        let d = plan_adaptation(&p("retina"), &p("retina"), Direction::TargetToSource);
        assert_eq!(d.remedy, Remedy::None);
        assert!(d.lateral_factor.is_one() && d.axial_factor.is_one());
    }

    #[test]
    fn retina_to_blueberry_decimates_target_by_three_halves() {
        let d = plan_adaptation(&p("retina"), &p("chicken_blueberry"), Direction::TargetToSource);
        assert_eq!(d.source_ratio.lateral, 2);
        assert_eq!(d.target_ratio.lateral, 3);
        assert_eq!(d.remedy, Remedy::ResampleTargetToSource);
        assert_eq!(d.lateral_factor, Rational::new(2, 3).unwrap());
        assert!(d.axial_factor.is_one());
    }

    #[test]
    fn blueberry_to_cucumber() {
        let (s, t) = (p("chicken_blueberry"), p("cucumber"));
        let d = plan_adaptation(&s, &t, Direction::SourceToTarget);
        assert_eq!(d.lateral_factor, Rational::new(1, 3).unwrap());
        let d = plan_adaptation_with(&s, &t, Direction::SourceToTarget, FactorRule::Physical { max_term: 8 }).unwrap();
        assert_eq!(d.lateral_factor, Rational::new(3, 8).unwrap());
    }

    #[test]
    fn swapping_domains_inverts_factors() {
        let names = ["chicken_blueberry", "chicken_skin", "cucumber", "retina", "cardiovascular_i", "cardiovascular_ii"];
        for a in names {
            for b in names {
                for dir in [Direction::TargetToSource, Direction::SourceToTarget] {
                    let ab = plan_adaptation(&p(a), &p(b), dir);
                    let ba = plan_adaptation(&p(b), &p(a), dir);
                    assert_eq!(ab.lateral_factor.inverse(), ba.lateral_factor);
                    assert_eq!(ab.axial_factor.inverse(), ba.axial_factor);
                    assert_eq!(ab.remedy == Remedy::None, ba.remedy == Remedy::None);
                }
            }
        }
    }

    #[test]
    fn rational_basics() {
        assert_eq!(Rational::new(6, 4).unwrap(), Rational::new(3, 2).unwrap());
        assert!(Rational::new(0, 3).is_err());
        assert_eq!(Rational::approximate(2.614, 8).unwrap(), Rational::new(8, 3).unwrap());
        assert_eq!(Rational::approximate(1.0, 8).unwrap(), Rational::ONE);
        assert_eq!(Rational::new(8, 3).unwrap().to_string(), "8/3");
    }
}

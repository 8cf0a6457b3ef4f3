use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::seed::Seed;

/// Recipe for a synthetic reflectivity map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomKind {
    /// Uniform mean reflectivity.
    Constant { level: f64 },
    /// Left half at `left`, right half at `right`; the boundary is vertical
    /// and sits exactly at the lateral centre.
    EdgeTarget { left: f64, right: f64 },
    /// Horizontal bands with undulating interfaces.
    Layered,
    /// Layered background with elliptical inclusions of contrasting
    /// reflectivity.
    Inclusions,
}

/// Mean-reflectivity map on a grid oversampled `q` times per axis relative to
/// the sensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    reflectivity: Grid<f64>,
    oversample: usize,
    description: String,
}

impl Phantom {
    pub fn new(reflectivity: Grid<f64>, oversample: usize, description: impl Into<String>) -> Result<Self> {
        if oversample < 2 {
            return Err(Error::InvalidParameter {
                name: "oversample",
                reason: format!("must be at least 2, got {oversample}"),
            });
        }
        let (rows, cols) = reflectivity.shape();
        if rows == 0 || cols == 0 || rows % oversample != 0 || cols % oversample != 0 {
            return Err(Error::InvalidParameter {
                name: "reflectivity",
                reason: format!("{rows}x{cols} fine grid is not a non-empty multiple of q={oversample}"),
            });
        }
        let vals = reflectivity.as_slice();
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter {
                name: "reflectivity",
                reason: "entries must be finite and non-negative".into(),
            });
        }
        if !vals.iter().any(|v| *v > 0.0) {
            return Err(Error::InvalidParameter {
                name: "reflectivity",
                reason: "at least one entry must be positive".into(),
            });
        }
        Ok(Self {
            reflectivity,
            oversample,
            description: description.into(),
        })
    }

    pub fn reflectivity(&self) -> &Grid<f64> {
        &self.reflectivity
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Shape of the sensor grid this phantom renders to.
    pub fn sensor_shape(&self) -> (usize, usize) {
        (
            self.reflectivity.rows() / self.oversample,
            self.reflectivity.cols() / self.oversample,
        )
    }
}

struct Interface {
    depth: f64,
    amplitude: f64,
    period: f64,
    phase: f64,
}

impl Interface {
    fn at(&self, x: f64) -> f64 {
        self.depth + self.amplitude * libm::sin(2.0 * core::f64::consts::PI * x / self.period + self.phase)
    }
}

struct Ellipse {
    row: f64,
    col: f64,
    semi_axial: f64,
    semi_lateral: f64,
    gain: f64,
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    libm::exp(rng.random_range(libm::log(lo)..libm::log(hi)))
}

/// Builds a `rows × cols` (sensor pixels) phantom on a `q`-times oversampled
/// grid. Geometry is defined in continuous sensor-pixel coordinates so the
/// same recipe renders consistently at any `q`.
pub fn make_phantom(kind: PhantomKind, rows: usize, cols: usize, q: usize, seed: Seed) -> Result<Phantom> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter {
            name: "rows/cols",
            reason: "phantom must have at least one sensor pixel".into(),
        });
    }
    let (fr, fc) = (rows * q, cols * q);
    let coord = |i: usize| (i as f64 + 0.5) / q as f64;
    let (grid, description) = match kind {
        PhantomKind::Constant { level } => (Grid::filled(fr, fc, level), format!("constant {level}")),
        PhantomKind::EdgeTarget { left, right } => {
            let boundary = cols as f64 / 2.0;
            (
                Grid::from_fn(fr, fc, |_, c| if coord(c) < boundary { left } else { right }),
                format!("edge {left}/{right}"),
            )
        }
        PhantomKind::Layered => (layered(rows, cols, q, seed), String::from("layered")),
        PhantomKind::Inclusions => {
            let mut grid = layered(rows, cols, q, seed);
            let ellipses = inclusions(rows, cols, seed);
            for r in 0..fr {
                for c in 0..fc {
                    let (y, x) = (coord(r), coord(c));
                    for e in &ellipses {
                        let dy = (y - e.row) / e.semi_axial;
                        let dx = (x - e.col) / e.semi_lateral;
                        if dy * dy + dx * dx <= 1.0 {
                            grid[(r, c)] = (grid[(r, c)] * e.gain).clamp(1e-3, 2.0);
                        }
                    }
                }
            }
            (grid, String::from("inclusions"))
        }
    };
    Phantom::new(grid, q, description)
}

fn layered(rows: usize, cols: usize, q: usize, seed: Seed) -> Grid<f64> {
    let mut rng = seed.derive(0x1A7E).rng();
    let n_interfaces = rng.random_range(4..=7usize);
    let (top, bottom) = (0.08 * rows as f64, 0.95 * rows as f64);
    let spacing = (bottom - top) / n_interfaces as f64;
    let interfaces: Vec<Interface> = (0..n_interfaces)
        .map(|k| Interface {
            depth: top + spacing * (k as f64 + rng.random_range(0.2..0.8)),
            amplitude: rng.random_range(0.5..(0.25 * spacing).max(0.6)),
            period: rng.random_range(0.5..2.0) * cols as f64,
            phase: rng.random_range(0.0..2.0 * core::f64::consts::PI),
        })
        .collect();
    let levels: Vec<f64> = (0..=n_interfaces).map(|_| log_uniform(&mut rng, 0.02, 1.0)).collect();
    let coord = |i: usize| (i as f64 + 0.5) / q as f64;
    Grid::from_fn(rows * q, cols * q, |r, c| {
        let (y, x) = (coord(r), coord(c));
        let band = interfaces.iter().filter(|i| y >= i.at(x)).count();
        levels[band]
    })
}

fn inclusions(rows: usize, cols: usize, seed: Seed) -> Vec<Ellipse> {
    let mut rng = seed.derive(0xE11).rng();
    let count = 3 + rows * cols / 300;
    (0..count)
        .map(|_| {
            let brighter = rng.random_bool(0.5);
            Ellipse {
                row: rng.random_range(0.0..rows as f64),
                col: rng.random_range(0.0..cols as f64),
                semi_axial: rng.random_range(1.0..4.0),
                semi_lateral: rng.random_range(1.0..5.0),
                gain: if brighter {
                    rng.random_range(2.5..6.0)
                } else {
                    rng.random_range(0.12..0.4)
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fills_fine_grid() {
        let p = make_phantom(PhantomKind::Constant { level: 1.0 }, 64, 64, 4, Seed(0)).unwrap();
        assert_eq!(p.reflectivity().shape(), (256, 256));
        assert!(p.reflectivity().as_slice().iter().all(|&v| v == 1.0));
        assert_eq!(p.sensor_shape(), (64, 64));
    }

    #[test]
    fn edge_target_halves() {
        let p = make_phantom(PhantomKind::EdgeTarget { left: 1.0, right: 0.1 }, 8, 10, 4, Seed(0)).unwrap();
        let g = p.reflectivity();
        for r in 0..g.rows() {
            for c in 0..g.cols() {
                let expect = if c < 20 { 1.0 } else { 0.1 };
                assert_eq!(g.get(r, c), expect);
            }
        }
    }

    #[test]
    fn layered_is_deterministic_and_seed_dependent() {
        let a = make_phantom(PhantomKind::Layered, 32, 48, 4, Seed(5)).unwrap();
        let b = make_phantom(PhantomKind::Layered, 32, 48, 4, Seed(5)).unwrap();
        let c = make_phantom(PhantomKind::Layered, 32, 48, 4, Seed(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let (lo, hi) = a.reflectivity().min_max();
        assert!(lo > 0.0 && hi <= 1.0 && hi > lo);
    }

    #[test]
    fn inclusions_differ_from_background() {
        let base = make_phantom(PhantomKind::Layered, 32, 48, 4, Seed(5)).unwrap();
        let inc = make_phantom(PhantomKind::Inclusions, 32, 48, 4, Seed(5)).unwrap();
        let changed = base
            .reflectivity()
            .as_slice()
            .iter()
            .zip(inc.reflectivity().as_slice())
            .filter(|(a, b)| a != b)
            .count();
        assert!(changed > 100);
        assert!(inc.reflectivity().as_slice().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn rejects_invalid_phantoms() {
        assert!(make_phantom(PhantomKind::Constant { level: 1.0 }, 8, 8, 1, Seed(0)).is_err());
        assert!(make_phantom(PhantomKind::Constant { level: 0.0 }, 8, 8, 4, Seed(0)).is_err());
        assert!(make_phantom(PhantomKind::Constant { level: -1.0 }, 8, 8, 4, Seed(0)).is_err());
        assert!(Phantom::new(Grid::filled(9, 8, 1.0), 4, "odd").is_err());
    }
}

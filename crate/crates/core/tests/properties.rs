use proptest::prelude::*;

use octdenoise_core::domain::resample_grid;
use octdenoise_core::metrics::{psnr, ssim, ssim_normalized};
use octdenoise_core::simulator::Axis;
use octdenoise_core::{log_scale, AcquisitionSpec, Grid, LogImage, Provenance};

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn image(rows: usize, cols: usize, data: Vec<f64>) -> LogImage {
    LogImage::from_vec(rows, cols, data, Provenance::Predicted).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resampling_keeps_constants(up in 1usize..6, down in 1usize..6, level in -70.0f64..10.0, n in 8usize..40) {
        prop_assume!(gcd(up, down) == 1);
        let g = Grid::filled(6, n, level);
        let out = resample_grid(&g, up, down, Axis::Lateral).unwrap();
        prop_assert_eq!(out.cols(), (n * up).div_ceil(down));
        for &v in out.as_slice() {
            prop_assert!((v - level).abs() < 1e-9 * level.abs().max(1.0));
        }
    }

    #[test]
    fn ratio_is_scale_invariant(dz in 1.0f64..10.0, dx in 1.0f64..30.0, pz in 1.0f64..6.0, px in 1.0f64..6.0, k in 0.25f64..4.0) {
        let a = AcquisitionSpec::new("a", dz, dx, pz * dz + 0.1, px * dx + 0.1, 64, 128).unwrap();
        let b = AcquisitionSpec::new("b", k * dz, k * dx, k * (pz * dz + 0.1), k * (px * dx + 0.1), 64, 128).unwrap();
        let (ra, rb) = (a.ratio(), b.ratio());
        // Identical up to rounding at an exact half-pixel boundary.
        prop_assert!(ra.axial.abs_diff(rb.axial) <= 1 && ra.lateral.abs_diff(rb.lateral) <= 1);
        let frac = |w: f64, d: f64| ((w / d) - (w / d).floor() - 0.5).abs();
        if frac(pz * dz + 0.1, dz) > 1e-6 && frac(px * dx + 0.1, dx) > 1e-6 {
            prop_assert_eq!(ra, rb);
        }
    }

    #[test]
    fn ssim_symmetric_and_bounded(data in prop::collection::vec(0.0f64..1.0, 14 * 13), other in prop::collection::vec(0.0f64..1.0, 14 * 13)) {
        let (x, y) = (Grid::from_vec(14, 13, data.clone()).unwrap(), Grid::from_vec(14, 13, other).unwrap());
        let a = ssim_normalized(&x, &y).unwrap();
        let b = ssim_normalized(&y, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a));
        let (lo, hi) = x.min_max();
        prop_assume!(hi - lo > 1e-6);
        let img = image(14, 13, data);
        prop_assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_scale_roundtrip(data in prop::collection::vec(1e-6f64..1e3, 1..64)) {
        let n = data.len();
        let g = Grid::from_vec(1, n, data.clone()).unwrap();
        let img = log_scale(&g, -80.0, Provenance::Speckled).unwrap();
        for (a, b) in data.iter().zip(img.to_intensity().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn psnr_falls_as_error_grows(data in prop::collection::vec(-50.0f64..0.0, 64), noise in prop::collection::vec(-1.0f64..1.0, 64), s in 0.1f64..2.0) {
        let reference = image(8, 8, data.clone());
        prop_assume!(reference.values().min_max().1 - reference.values().min_max().0 > 1.0);
        prop_assume!(noise.iter().any(|v| v.abs() > 1e-3));
        let perturbed = |k: f64| image(8, 8, data.iter().zip(&noise).map(|(d, e)| d + k * e).collect());
        let near = psnr(&perturbed(s), &reference).unwrap();
        let far = psnr(&perturbed(2.0 * s), &reference).unwrap();
        prop_assert!((near - far - 20.0 * 2f64.log10()).abs() < 1e-9);
    }
}

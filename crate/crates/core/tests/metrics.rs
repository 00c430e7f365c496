mod common;

use proptest::prelude::*;

use vln_attack::metrics::{psnr, ssim, Psnr};
use vln_attack::tensor::{ImageShape, ImageTensor};

#[test]
fn constant_images_match_reference() {
    let shape = ImageShape::new(16, 13, 2);
    let a = ImageTensor::filled(shape, 0.25).unwrap();
    let b = ImageTensor::filled(shape, 0.75).unwrap();
    let got = ssim(&a, &b).unwrap();
    assert!((got - common::reference_ssim(&a, &b)).abs() < 1e-12);
    // Flat windows: only the luminance term survives.
    let (x, y, c1) = (0.25f64, 0.75f64, 1e-4f64);
    assert!((got - (2.0 * x * y + c1) / (x * x + y * y + c1)).abs() < 1e-12);
    assert_eq!(psnr(&a, &a).unwrap(), Psnr::Infinite);
}

#[test]
fn window_larger_than_image_is_an_error() {
    let img = ImageTensor::filled(ImageShape::new(10, 40, 1), 0.5).unwrap();
    assert!(ssim(&img, &img).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quality_metrics_are_symmetric_and_bounded(seed in any::<u64>()) {
        let shape = ImageShape::new(12, 14, 2);
        let mut r = common::rng(seed);
        let a = common::random_image(&mut r, shape);
        let b = common::random_image(&mut r, shape);
        let ab = ssim(&a, &b).unwrap();
        prop_assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= 1.0);
        prop_assert!((ab - common::reference_ssim(&a, &b)).abs() < 1e-9);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert!(psnr(&a, &b).unwrap().db().is_some_and(|v| v > 0.0));
    }
}

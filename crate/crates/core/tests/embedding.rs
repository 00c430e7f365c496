mod common;

use proptest::prelude::*;

use vln_attack::embedding::{
    align_to_embedding, alignment_loss, noise_response, AlignmentConfig, AlignmentStatus, Encoder,
    EncoderSpec, ToyEncoder,
};
use vln_attack::metrics::ssim;
use vln_attack::tensor::{ImageShape, ImageTensor};

fn golden_image(shape: ImageShape) -> ImageTensor {
    let px = (0..shape.len()).map(|k| ((k * 7919) % 1000) as f32 / 999.0).collect();
    ImageTensor::new(shape, px).unwrap()
}

#[test]
fn seed_42_embedding_is_frozen() {
    let shape = ImageShape::new(32, 32, 3);
    let enc = ToyEncoder::with_seed(42, shape).unwrap();
    let img = golden_image(shape);
    let e = enc.encode_image(&img).unwrap();
    let expected = [0.16391603495171525, -0.2202582917509418, 0.0802416768803959, -0.13137285330108778];
    for (got, want) in e.as_slice().iter().zip(expected) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    assert!((e.norm() - 2.364427602372106).abs() < 1e-12);

    let spec = enc.spec();
    let reference = common::reference_forward(enc.w1(), enc.w2(), spec.m, spec.h, &img.to_f64());
    for (a, b) in e.as_slice().iter().zip(&reference) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn noise_response_vanishes_and_grows_with_sigma() {
    let shape = ImageShape::new(16, 16, 3);
    let enc = ToyEncoder::with_seed(7, shape).unwrap();
    let img = common::random_image(&mut common::rng(5), shape);
    let tiny = noise_response(&enc, &img, 1e-9, 8, 1).unwrap();
    assert!(tiny < 1e-6, "{tiny}");
    let mut last = 0.0;
    for sigma in [1e-6, 1e-4, 1e-2] {
        let r = noise_response(&enc, &img, sigma, 8, 1).unwrap();
        assert!(r > last, "response {r} at sigma {sigma} not above {last}");
        last = r;
    }
    assert_eq!(noise_response(&enc, &img, 1e-3, 8, 9).unwrap(), noise_response(&enc, &img, 1e-3, 8, 9).unwrap());
    assert!(noise_response(&enc, &img, 0.0, 8, 1).is_err());
    assert!(noise_response(&enc, &img, 1e-3, 0, 1).is_err());
}

#[test]
fn alignment_reaches_a_foreign_embedding_imperceptibly() {
    let shape = ImageShape::new(32, 32, 3);
    let enc = ToyEncoder::with_seed(42, shape).unwrap();
    let mut r = common::rng(17);
    // Low-contrast images around mid grey, like rendered scenes.
    let soft = |r: &mut rand_chacha::ChaCha8Rng| {
        let raw = common::random_image(r, shape);
        let px: Vec<f32> = raw.as_slice().iter().map(|v| 0.4 + 0.2 * v).collect();
        ImageTensor::new(shape, px).unwrap()
    };
    let x0 = soft(&mut r);
    let target = enc.encode_image(&soft(&mut r)).unwrap();
    let out = align_to_embedding(&enc, &x0, &target, &AlignmentConfig::default()).unwrap();
    assert_eq!(out.trace.status, AlignmentStatus::Converged);
    assert!(out.trace.final_record.cosine >= 0.95);
    assert!(ssim(&x0, &out.image).unwrap() >= 0.9);
    assert!(out.trace.monotone_fraction() >= 0.95);
    let recomputed = alignment_loss(&enc, &out.image, &target).unwrap();
    assert!((recomputed - out.trace.final_record.loss).abs() < 1e-12);
}

fn small_encoder() -> ToyEncoder {
    let shape = ImageShape::new(4, 4, 2);
    ToyEncoder::new(EncoderSpec { seed: 1, m: 32, h: 12, n: 6 }, shape).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aligned_pixels_stay_in_range(
        px in prop::collection::vec(0.0f32..=1.0, 32),
        tx in prop::collection::vec(0.0f32..=1.0, 32),
        lr in 0.01f64..2.0,
    ) {
        let enc = small_encoder();
        let shape = enc.input_shape();
        let x0 = ImageTensor::new(shape, px).unwrap();
        let target = enc.encode_image(&ImageTensor::new(shape, tx).unwrap()).unwrap();
        let cfg = AlignmentConfig { learning_rate: lr, max_steps: 40, ..AlignmentConfig::default() };
        let out = align_to_embedding(&enc, &x0, &target, &cfg).unwrap();
        prop_assert!(out.image.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(out.trace.steps_taken <= 40);
    }

    #[test]
    fn embedding_of_pixels_matches_reference(px in prop::collection::vec(0.0f32..=1.0, 32)) {
        let enc = small_encoder();
        let img = ImageTensor::new(enc.input_shape(), px).unwrap();
        let got = enc.encode_image(&img).unwrap();
        let spec = enc.spec();
        let want = common::reference_forward(enc.w1(), enc.w2(), spec.m, spec.h, &img.to_f64());
        for (a, b) in got.as_slice().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

mod common;

use common::*;
use debris_edge::imaging::*;
use proptest::prelude::*;

#[test]
fn median_matches_sorting_oracle() {
    for seed in 0..100 {
        let img = random_image(16, 16, 1, seed);
        for k in [1, 3, 5] {
            assert_eq!(median_filter(&img, k).unwrap(), median_oracle(&img, k), "seed {seed} k {k}");
        }
    }
}

#[test]
fn otsu_matches_exhaustive_search() {
    for seed in 0..100 {
        let img = random_image(16, 16, 1, 1000 + seed);
        assert_eq!(otsu_threshold(&img).unwrap(), otsu_oracle(&img), "seed {seed}");
    }
    // Narrow histograms exercise empty bins and ties.
    for seed in 0..50 {
        let base = random_image(16, 16, 1, 5000 + seed);
        let img = Image::new(16, 16, 1, base.pixels().iter().map(|p| 100 + p % 7).collect()).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap(), otsu_oracle(&img), "narrow seed {seed}");
    }
}

#[test]
fn separable_gaussian_within_one_of_full_convolution() {
    for seed in 0..30 {
        let img = random_image(16, 16, 1, 9000 + seed);
        for sigma in [0.5, 1.0, 2.0] {
            let kernel = gaussian_kernel(sigma).unwrap();
            let fast = gaussian_blur(&img, sigma).unwrap();
            assert!(max_abs_diff(&fast, &gaussian_oracle(&img, &kernel)) <= 1, "seed {seed} sigma {sigma}");
        }
    }
}

proptest! {
    #[test]
    fn pnm_round_trip_is_identity(img in image_strategy(12, &[1, 3])) {
        let bytes = pnm_write(&img);
        let back = pnm_read(&bytes).unwrap();
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(pnm_write(&back), bytes);
    }

    #[test]
    fn involutions_and_idempotence(img in image_strategy(10, &[1, 3])) {
        prop_assert_eq!(negate(&negate(&img)), img.clone());
        let gray = to_grayscale(&img);
        prop_assert_eq!(to_grayscale(&gray), gray);
        if img.channels() == 3 {
            prop_assert_eq!(reorder_channels(&reorder_channels(&img).unwrap()).unwrap(), img);
        }
    }

    #[test]
    fn smoothing_stays_in_sample_range(img in image_strategy(10, &[1]), k in prop_oneof![Just(1usize), Just(3), Just(5)], sigma in 0.3f64..3.0) {
        let (lo, hi) = img.sample_range();
        let (mlo, mhi) = median_filter(&img, k).unwrap().sample_range();
        prop_assert!(mlo >= lo && mhi <= hi);
        let (glo, ghi) = gaussian_blur(&img, sigma).unwrap().sample_range();
        prop_assert!(glo as i32 >= lo as i32 - 1 && ghi as i32 <= hi as i32 + 1);
    }

    #[test]
    fn threshold_is_binary(img in image_strategy(10, &[1]), t in any::<u8>()) {
        for out in [threshold(&img, Threshold::Value(t)).unwrap(), threshold(&img, Threshold::Otsu).unwrap()] {
            prop_assert!(out.pixels().iter().all(|&p| p == 0 || p == 255));
        }
    }

    #[test]
    fn otsu_oracle_on_small_random_images(img in image_strategy(16, &[1])) {
        prop_assert_eq!(otsu_threshold(&img).unwrap(), otsu_oracle(&img));
    }

    #[test]
    fn resize_to_same_size_is_identity(img in image_strategy(10, &[1, 3])) {
        prop_assert_eq!(resize_bilinear(&img, img.width(), img.height()).unwrap(), img);
    }

    #[test]
    fn filters_keep_dimensions(img in image_strategy(9, &[1, 3]), alpha in 0.1f64..3.0, beta in -50.0f64..50.0) {
        let gray = to_grayscale(&img);
        let outputs = [
            negate(&img),
            gray.clone(),
            threshold(&gray, Threshold::Otsu).unwrap(),
            median_filter(&img, 3).unwrap(),
            gaussian_blur(&img, 1.0).unwrap(),
            adjust_contrast_brightness(&img, alpha, beta).unwrap(),
        ];
        for out in outputs {
            prop_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
        }
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in box_strategy(50, 30), b in box_strategy(50, 30)) {
        let (ab, ba) = (a.iou(&b), b.iou(&a));
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(a.iou(&a), 1.0);
    }

    #[test]
    fn object_normalization_has_requested_size(img in image_strategy(20, &[1, 3]), b in box_strategy(20, 15), frac in 0.2f64..1.0) {
        let out = object_scale_normalize(&img, &b, frac, 24, 16).unwrap();
        prop_assert_eq!((out.width(), out.height(), out.channels()), (24, 16, img.channels()));
    }
}

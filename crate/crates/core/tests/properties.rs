//! Property tests for the module contracts: partitions, conservation,
//! symmetry, equivariance, and codec round trips.

use proptest::prelude::*;

use marginalia_core::components::{estimate_character_metrics, label_components, Connectivity};
use marginalia_core::metrics::pearson_correlation;
use marginalia_core::profile::{
    detect_vertical_margins, project, smooth, strip_margins, Axis, MarginBox, ProjectionProfile,
};
use marginalia_core::raster::{
    binarize, clear_rect, load_image, save_binary_image, save_image, stamp_pixels, BinarizeMethod,
    BinaryImage, GrayImage, Rect,
};
use marginalia_core::recovery::{run_recovery, RecoveryParams};
use marginalia_core::Error;

fn arb_image(max: usize) -> impl Strategy<Value = BinaryImage> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        proptest::collection::vec(proptest::bool::weighted(0.35), w * h)
            .prop_map(move |px| BinaryImage::from_pixels(w, h, px).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn projection_sums_equal_ink_count(img in arb_image(24)) {
        let ink = img.ink_count() as u64;
        for axis in [Axis::Row, Axis::Column] {
            let profile = project(&img, axis);
            prop_assert_eq!(profile.values().iter().map(|&v| v as u64).sum::<u64>(), ink);
        }
    }

    #[test]
    fn smoothing_preserves_mass_within_edge_clamp(
        values in proptest::collection::vec(0u32..50, 3..64),
        window_pick in 0usize..8,
    ) {
        let n = values.len();
        let window = (2 * window_pick + 1).min(if n % 2 == 0 { n - 1 } else { n });
        let profile = ProjectionProfile::from_values(Axis::Column, values.clone(), (n, n));
        let smoothed = smooth(&profile, window).unwrap();
        let raw_sum: f64 = values.iter().map(|&v| v as f64).sum();
        let smooth_sum: f64 = smoothed.values().iter().sum();
        let max = values.iter().copied().max().unwrap_or(0) as f64;
        prop_assert!((smooth_sum - raw_sum).abs() <= window as f64 * max + 1e-6);
    }

    #[test]
    fn strip_margins_partitions_ink(img in arb_image(24)) {
        let r = Rect::new(
            img.width() / 4,
            (3 * img.width() / 4).max(img.width() / 4 + 1).min(img.width()),
            img.height() / 4,
            (3 * img.height() / 4).max(img.height() / 4 + 1).min(img.height()),
        );
        let bounds = MarginBox { left: r.left, right: r.right, top: r.top, bottom: r.bottom };
        let (body, margin) = strip_margins(&img, bounds).unwrap();
        for row in 0..img.height() {
            for col in 0..img.width() {
                let (b, m, o) = (body.get(row, col), margin.get(row, col), img.get(row, col));
                prop_assert!(!(b && m), "body and margin share ink at ({},{})", row, col);
                prop_assert_eq!(b || m, o, "union mismatch at ({},{})", row, col);
            }
        }
    }

    #[test]
    fn vertical_margin_detection_mirrors(
        values in proptest::collection::vec(0u32..40, 4..48),
        window_pick in 0usize..4,
    ) {
        let n = values.len();
        let window = (2 * window_pick + 1).min(if n % 2 == 0 { n - 1 } else { n });
        let profile = ProjectionProfile::from_values(Axis::Column, values.clone(), (n, 10));
        let mirrored_values: Vec<u32> = values.iter().rev().copied().collect();
        let mirrored = ProjectionProfile::from_values(Axis::Column, mirrored_values, (n, 10));
        let a = detect_vertical_margins(&smooth(&profile, window).unwrap());
        let b = detect_vertical_margins(&smooth(&mirrored, window).unwrap());
        match (a, b) {
            (Ok((left, right)), Ok((ml, mr))) => {
                prop_assert_eq!(ml, n - right);
                prop_assert_eq!(mr, n - left);
            }
            (Err(Error::MarginsNotFound { .. }), Err(Error::MarginsNotFound { .. })) => {}
            (a, b) => prop_assert!(false, "asymmetric outcomes: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn clear_then_stamp_reconstructs(img in arb_image(20), seed in 0u32..1000) {
        let _ = seed;
        let r = Rect::new(0, (img.width() / 2).max(1), 0, (img.height() / 2).max(1));
        let cleared = clear_rect(&img, r).unwrap();
        let removed: Vec<(usize, usize)> = img
            .ink_pixels()
            .filter(|&(row, col)| r.contains(row, col))
            .collect();
        prop_assert_eq!(stamp_pixels(&cleared, &removed).unwrap(), img);
    }

    #[test]
    fn labeling_is_translation_equivariant(img in arb_image(14), dx in 0usize..5, dy in 0usize..5) {
        let mut shifted = BinaryImage::blank(img.width() + dx, img.height() + dy).unwrap();
        for (row, col) in img.ink_pixels() {
            shifted.set(row + dy, col + dx, true);
        }
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let base = label_components(&img, conn);
            let moved = label_components(&shifted, conn);
            prop_assert_eq!(base.len(), moved.len());
            for (a, b) in base.iter().zip(&moved) {
                prop_assert_eq!(a.label, b.label);
                prop_assert_eq!(a.bbox.top + dy, b.bbox.top);
                prop_assert_eq!(a.bbox.left + dx, b.bbox.left);
                prop_assert_eq!(a.pixel_count, b.pixel_count);
                let translated: Vec<(usize, usize)> =
                    a.pixels.iter().map(|&(r, c)| (r + dy, c + dx)).collect();
                prop_assert_eq!(&translated, &b.pixels);
            }
        }
    }

    #[test]
    fn binarize_is_monotone_in_threshold(
        samples in proptest::collection::vec(0u8..=255, 1..128),
        t1 in 0u32..=255,
        t2 in 0u32..=255,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let w = samples.len();
        let gray = GrayImage::from_samples(w, 1, samples).unwrap();
        let a = binarize(&gray, BinarizeMethod::Fixed(lo)).unwrap();
        let b = binarize(&gray, BinarizeMethod::Fixed(hi)).unwrap();
        for col in 0..w {
            prop_assert!(!a.get(0, col) | b.get(0, col));
        }
    }

    #[test]
    fn correlation_is_bounded_and_symmetric(
        a in arb_image(12),
        bits in proptest::collection::vec(any::<bool>(), 144),
    ) {
        let b = BinaryImage::from_pixels(
            a.width(),
            a.height(),
            bits[..a.width() * a.height()].to_vec(),
        ).unwrap();
        match (pearson_correlation(&a, &b), pearson_correlation(&b, &a)) {
            (Ok(ab), Ok(ba)) => {
                prop_assert!(ab.abs() <= 1.0 + 1e-12);
                prop_assert!((ab - ba).abs() < 1e-12);
            }
            (Err(Error::UndefinedMetric(_)), Err(Error::UndefinedMetric(_))) => {}
            (x, y) => prop_assert!(false, "asymmetric outcomes: {:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn recovery_conserves_ink(img in arb_image(32)) {
        let (w, h) = (img.width(), img.height());
        prop_assume!(w >= 8 && h >= 8);
        let bounds = MarginBox { left: w / 4, right: 3 * w / 4, top: h / 4, bottom: 3 * h / 4 };
        let (body, margin) = strip_margins(&img, bounds).unwrap();
        let components = label_components(&body, Connectivity::Eight);
        prop_assume!(!components.is_empty());
        let metrics = estimate_character_metrics(&components).unwrap();
        let params = RecoveryParams::default();
        let outcome = run_recovery(&body, &margin, bounds, &metrics, &params).unwrap();
        // conservation
        prop_assert_eq!(
            outcome.body.ink_count() + outcome.margin.ink_count() + outcome.pruned_pixel_count(),
            body.ink_count() + margin.ink_count()
        );
        // margins only ever lose ink
        for (row, col) in outcome.margin.ink_pixels() {
            prop_assert!(margin.get(row, col));
        }
        // restored totals reconcile with the body ink delta
        let restored: usize = outcome.actions.iter().map(|a| a.pixels_restored).sum();
        prop_assert_eq!(outcome.body.ink_count(), body.ink_count() + restored);
        // bit-exact determinism
        let again = run_recovery(&body, &margin, bounds, &metrics, &params).unwrap();
        prop_assert_eq!(outcome.body, again.body);
        prop_assert_eq!(outcome.margin, again.margin);
        prop_assert_eq!(outcome.actions, again.actions);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn image_files_round_trip(img in arb_image(12), tag in 0u64..u64::MAX) {
        let dir = std::env::temp_dir().join(format!(
            "marginalia-props-{}-{}",
            std::process::id(),
            tag
        ));
        std::fs::create_dir_all(&dir).unwrap();

        // PGM P5: byte-exact on rewrite
        let pgm = dir.join("img.pgm");
        save_binary_image(&img, &pgm).unwrap();
        let loaded = load_image(&pgm).unwrap();
        let rebin = binarize(&loaded, BinarizeMethod::Fixed(128)).unwrap();
        prop_assert_eq!(&rebin, &img);
        let bytes_first = std::fs::read(&pgm).unwrap();
        let pgm2 = dir.join("img2.pgm");
        save_image(&loaded, &pgm2).unwrap();
        prop_assert_eq!(bytes_first, std::fs::read(&pgm2).unwrap());

        // PNG: lossless samples
        let png = dir.join("img.png");
        save_binary_image(&img, &png).unwrap();
        let loaded_png = load_image(&png).unwrap();
        prop_assert_eq!(loaded_png.samples(), loaded.samples());

        std::fs::remove_dir_all(&dir).ok();
    }
}

//! Fixture-driven checks that cut across modules.

use marginalia_core::metrics::{
    evaluate_document, pearson_correlation, GroundTruthImages, PipelineImages,
};
use marginalia_core::profile::{detect_margin_box, MarginBox, MaskMean};
use marginalia_core::raster::BinaryImage;
use marginalia_core::synthgen::{generate, AnnotationProfile, PageFeatures, PageSpec};

fn mirror_columns(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::blank(w, h).unwrap();
    for (row, col) in img.ink_pixels() {
        out.set(row, w - 1 - col, true);
    }
    out
}

#[test]
fn symmetric_page_detects_symmetric_vertical_margins() {
    let spec = PageSpec {
        width: 900,
        height: 1200,
        margins: MarginBox {
            left: 90,
            right: 810,
            top: 100,
            bottom: 1090,
        },
        char_size: 14,
        line_pitch: 32,
        seed: 31,
        annotation_profile: AnnotationProfile::None,
        features: PageFeatures::default(),
    };
    let gt = generate(&spec).unwrap();
    // make the content mirror-symmetric in columns
    let mirrored = mirror_columns(&gt.clean);
    let mut page = gt.clean.clone();
    for (row, col) in mirrored.ink_pixels() {
        page.set(row, col, true);
    }
    let scan = detect_margin_box(&page, MaskMean::All);
    let b = scan.margin_box;
    let center = (b.left + b.right) as f64 / 2.0;
    let page_center = page.width() as f64 / 2.0;
    assert!(
        (center - page_center).abs() <= 1.0,
        "band center {} vs page center {} (box {:?})",
        center,
        page_center,
        b
    );
}

/// Independent recount: every metric recomputed from explicit pixel loops.
#[test]
fn document_metrics_match_pixel_recount() {
    let spec = PageSpec {
        width: 400,
        height: 520,
        margins: MarginBox {
            left: 40,
            right: 360,
            top: 50,
            bottom: 470,
        },
        char_size: 12,
        line_pitch: 28,
        seed: 77,
        annotation_profile: AnnotationProfile::Light,
        features: PageFeatures {
            header: true,
            page_number: None,
            chopped_words: false,
        },
    };
    let gt = generate(&spec).unwrap();

    // fabricate an imperfect pipeline result: the body lost a pixel block,
    // the removed image misses part of the mask
    let mut final_body = gt.clean.clone();
    for row in 60..70 {
        for col in 60..70 {
            final_body.set(row, col, false);
        }
    }
    let mut removed = gt.annotation_mask.clone();
    let mut dropped = 0;
    for (row, col) in gt.annotation_mask.ink_pixels() {
        if (row + col) % 7 == 0 {
            removed.set(row, col, false);
            dropped += 1;
        }
    }
    assert!(dropped > 0);

    let metrics = evaluate_document(
        GroundTruthImages {
            clean: &gt.clean,
            annotation_mask: &gt.annotation_mask,
        },
        PipelineImages {
            final_body: &final_body,
            removed: &removed,
        },
    )
    .unwrap();

    // recount by explicit loops
    let count = |img: &BinaryImage| -> f64 {
        let mut n = 0u64;
        for row in 0..img.height() {
            for col in 0..img.width() {
                if img.get(row, col) {
                    n += 1;
                }
            }
        }
        n as f64
    };
    let a_mask = count(&gt.annotation_mask);
    let b_removed = count(&removed);
    let a_clean = count(&gt.clean);
    let b_body = count(&final_body);
    let expected_removal = 1.0 - (b_removed - a_mask).abs() / a_mask;
    let expected_recovery = 1.0 - (b_body - a_clean).abs() / a_clean;
    assert!((metrics.removal_accuracy.unwrap() - expected_removal).abs() < 1e-12);
    assert!((metrics.recovery_accuracy.unwrap() - expected_recovery).abs() < 1e-12);
    let expected_corr = pearson_correlation(&gt.clean, &final_body).unwrap();
    assert!((metrics.correlation.unwrap() - expected_corr).abs() < 1e-12);
    assert!(metrics.correlation.unwrap() < 1.0);
}

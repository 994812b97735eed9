//! One-document pipeline: load, binarize, denoise, deskew, margin
//! detection, one-stretch strip, recovery, reporting.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use marginalia_core::components::{estimate_character_metrics, label_components, Component};
use marginalia_core::preprocess::{deskew, estimate_skew, remove_border_noise};
use marginalia_core::profile::{detect_margin_box, strip_margins, MarginScan};
use marginalia_core::raster::{binarize, load_image, stamp_pixels, BinaryImage};
use marginalia_core::recovery::run_recovery;
use marginalia_core::Error as CoreError;

use crate::config::PipelineConfig;
use crate::report::{CleanReport, InkCounts, SkewReport, SmoothingWindows, REPORT_SCHEMA};

/// Everything `clean` produces for one document, before any file is written.
pub struct CleanOutcome {
    pub report: CleanReport,
    /// Page after binarization, border denoise, and deskew; the baseline
    /// that `cleaned` and `removed` partition exactly.
    pub preprocessed: BinaryImage,
    pub cleaned: BinaryImage,
    pub removed: BinaryImage,
    pub scan: MarginScan,
    pub body_components: Vec<Component>,
}

/// Runs the full pipeline on one file. Pure given (file bytes, config):
/// identical inputs produce identical outputs and reports (wall time aside).
pub fn clean_document(input: &Path, config: &PipelineConfig) -> Result<CleanOutcome> {
    let started = Instant::now();
    let mut warnings = Vec::new();

    let gray = load_image(input).with_context(|| format!("loading {}", input.display()))?;
    let bin = binarize(&gray, config.binarize_method()?)?;

    let denoised = if config.denoise {
        remove_border_noise(&bin, config.band_fraction)?
    } else {
        bin
    };

    let mut page = denoised;
    let mut skew = None;
    if config.deskew {
        match estimate_skew(&page) {
            Ok(estimate) => {
                let applied = estimate.angle_degrees.abs() >= config.skew_min_correction;
                if applied {
                    page = deskew(&page, &estimate);
                }
                skew = Some(SkewReport {
                    estimated_degrees: estimate.angle_degrees,
                    confidence: estimate.confidence,
                    applied,
                });
            }
            Err(CoreError::DegenerateInput(reason)) => {
                warnings.push(format!("skew estimation skipped: {}", reason));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let scan = detect_margin_box(&page, config.mask_mean_value()?);
    warnings.extend(scan.warnings.iter().cloned());
    let margin_box = scan.margin_box;

    let (body, margin) = strip_margins(&page, margin_box)?;
    let connectivity = config.connectivity_value()?;
    let body_components = label_components(&body, connectivity);

    let (final_body, final_margin, actions, pruned, final_components) =
        if body_components.is_empty() {
            warnings.push("empty body: recovery skipped".to_string());
            (
                body.clone(),
                margin,
                Vec::new(),
                Vec::new(),
                body_components,
            )
        } else {
            let metrics = estimate_character_metrics(&body_components)?;
            let outcome = run_recovery(
                &body,
                &margin,
                margin_box,
                &metrics,
                &config.recovery_params()?,
            )?;
            warnings.extend(outcome.warnings.iter().cloned());
            let components = label_components(&outcome.body, connectivity);
            (
                outcome.body,
                outcome.margin,
                outcome.actions,
                outcome.pruned,
                components,
            )
        };

    // removed-annotations image: everything stripped and not brought back,
    // plus anything the prune step erased
    let pruned_pixels: Vec<(usize, usize)> = pruned
        .iter()
        .flat_map(|p| p.pixels.iter().copied())
        .collect();
    let removed = stamp_pixels(&final_margin, &pruned_pixels)?;

    let ink = InkCounts {
        preprocessed: page.ink_count(),
        body: final_body.ink_count(),
        removed: removed.ink_count(),
    };
    debug_assert_eq!(ink.body + ink.removed, ink.preprocessed);

    let report = CleanReport {
        schema: REPORT_SCHEMA,
        input: input.display().to_string(),
        width: page.width(),
        height: page.height(),
        margin_box,
        smoothing_windows: SmoothingWindows {
            column: scan.column_window,
            row: scan.row_window,
        },
        skew,
        actions,
        pruned_components: pruned.len(),
        pruned_pixels: pruned_pixels.len(),
        ink,
        warnings,
        metrics: None,
        wall_time_ms: started.elapsed().as_millis() as u64,
    }
    .rounded();

    Ok(CleanOutcome {
        report,
        preprocessed: page,
        cleaned: final_body,
        removed,
        scan,
        body_components: final_components,
    })
}

/// CSV with one row per profile index: `index,value,smoothed,mean_line`.
pub fn profile_csv(smoothed: &marginalia_core::profile::SmoothedProfile) -> String {
    let mut out = String::from("index,value,smoothed,mean_line\n");
    for (i, (&raw, &s)) in smoothed
        .base()
        .values()
        .iter()
        .zip(smoothed.values())
        .enumerate()
    {
        out.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            i,
            raw,
            s,
            smoothed.mean_line()
        ));
    }
    out
}

/// CSV with one row per component: `label,top,left,bottom,right,pixel_count`.
pub fn components_csv(components: &[Component]) -> String {
    let mut out = String::from("label,top,left,bottom,right,pixel_count\n");
    for c in components {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.label, c.bbox.top, c.bbox.left, c.bbox.bottom, c.bbox.right, c.pixel_count
        ));
    }
    out
}

//! Evaluation arithmetic: annotation-removal accuracy, recovery accuracy,
//! and the per-pixel Pearson correlation between two images.

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, GrayImage};

/// Removal accuracy 1 - |B - A| / A, where A is the amount of ink expected
/// to be removed and B the amount actually removed. Counts are ink pixels.
/// Not clamped: over-removal beyond 2A goes negative and is reported as-is.
pub fn removal_accuracy(expected_removed: usize, actually_removed: usize) -> Result<f64> {
    if expected_removed == 0 {
        return Err(Error::UndefinedMetric(
            "removal accuracy undefined: no annotations expected".into(),
        ));
    }
    let a = expected_removed as f64;
    let b = actually_removed as f64;
    Ok(1.0 - (b - a).abs() / a)
}

/// Recovery accuracy 1 - |B - A| / A over ink counts of the expected clean
/// page (A) and the recovered page (B).
pub fn recovery_accuracy(expected_clean: &BinaryImage, actual_clean: &BinaryImage) -> Result<f64> {
    check_dims(
        (expected_clean.width(), expected_clean.height()),
        (actual_clean.width(), actual_clean.height()),
    )?;
    let a = expected_clean.ink_count();
    if a == 0 {
        return Err(Error::UndefinedMetric(
            "recovery accuracy undefined: expected clean page is blank".into(),
        ));
    }
    let b = actual_clean.ink_count() as f64;
    Ok(1.0 - (b - a as f64).abs() / a as f64)
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::InvalidParameter(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Exact integer accumulators for the correlation sums. Pixel values are
/// small integers, so every sum below stays exact in u64/i128 range.
struct SumStats {
    n: u64,
    sum_x: u64,
    sum_y: u64,
    sum_xx: u64,
    sum_yy: u64,
    sum_xy: u64,
}

impl SumStats {
    fn accumulate(pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut s = SumStats {
            n: 0,
            sum_x: 0,
            sum_y: 0,
            sum_xx: 0,
            sum_yy: 0,
            sum_xy: 0,
        };
        for (x, y) in pairs {
            let (x, y) = (x as u64, y as u64);
            s.n += 1;
            s.sum_x += x;
            s.sum_y += y;
            s.sum_xx += x * x;
            s.sum_yy += y * y;
            s.sum_xy += x * y;
        }
        s
    }

    /// Sample correlation from the accumulated sums:
    /// r = (n sum_xy - sum_x sum_y) / sqrt((n sum_xx - sum_x^2)(n sum_yy - sum_y^2)),
    /// algebraically equal to 1/(n-1) * sum(((x-mx)/sx)((y-my)/sy)) with
    /// sample standard deviations.
    fn correlation(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::UndefinedMetric(
                "correlation needs at least two pixels".into(),
            ));
        }
        let n = self.n as i128;
        let cov = n * self.sum_xy as i128 - self.sum_x as i128 * self.sum_y as i128;
        let var_x = n * self.sum_xx as i128 - (self.sum_x as i128).pow(2);
        let var_y = n * self.sum_yy as i128 - (self.sum_y as i128).pow(2);
        if var_x == 0 || var_y == 0 {
            return Err(Error::UndefinedMetric(
                "correlation undefined: constant image (zero standard deviation)".into(),
            ));
        }
        Ok(cov as f64 / ((var_x as f64).sqrt() * (var_y as f64).sqrt()))
    }
}

/// Pearson correlation of two ink masks, pixels coded 0/1.
pub fn pearson_correlation(a: &BinaryImage, b: &BinaryImage) -> Result<f64> {
    check_dims((a.width(), a.height()), (b.width(), b.height()))?;
    SumStats::accumulate(
        a.raw()
            .iter()
            .zip(b.raw())
            .map(|(&x, &y)| (x as u32, y as u32)),
    )
    .correlation()
}

/// Pearson correlation of two grayscale images over raw luminance values.
pub fn pearson_correlation_gray(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_dims((a.width(), a.height()), (b.width(), b.height()))?;
    SumStats::accumulate(
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(&x, &y)| (x as u32, y as u32)),
    )
    .correlation()
}

/// Ground-truth pair for one document.
pub struct GroundTruthImages<'a> {
    pub clean: &'a BinaryImage,
    pub annotation_mask: &'a BinaryImage,
}

/// Pipeline output pair for one document.
pub struct PipelineImages<'a> {
    pub final_body: &'a BinaryImage,
    pub removed: &'a BinaryImage,
}

/// Per-document metric values; a metric undefined for this document is None
/// with an explanatory warning.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DocumentMetrics {
    pub removal_accuracy: Option<f64>,
    pub recovery_accuracy: Option<f64>,
    pub correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Computes all three metrics for one document: removal accuracy over the
/// annotation mask vs everything the pipeline removed, recovery accuracy and
/// correlation over the expected clean page vs the recovered body.
pub fn evaluate_document(
    truth: GroundTruthImages<'_>,
    result: PipelineImages<'_>,
) -> Result<DocumentMetrics> {
    check_dims(
        (truth.clean.width(), truth.clean.height()),
        (result.final_body.width(), result.final_body.height()),
    )?;
    check_dims(
        (
            truth.annotation_mask.width(),
            truth.annotation_mask.height(),
        ),
        (result.removed.width(), result.removed.height()),
    )?;
    let mut metrics = DocumentMetrics::default();
    match removal_accuracy(
        truth.annotation_mask.ink_count(),
        result.removed.ink_count(),
    ) {
        Ok(v) => metrics.removal_accuracy = Some(v),
        Err(e) => metrics.warnings.push(e.to_string()),
    }
    match recovery_accuracy(truth.clean, result.final_body) {
        Ok(v) => metrics.recovery_accuracy = Some(v),
        Err(e) => metrics.warnings.push(e.to_string()),
    }
    match pearson_correlation(truth.clean, result.final_body) {
        Ok(v) => metrics.correlation = Some(v),
        Err(e) => metrics.warnings.push(e.to_string()),
    }
    Ok(metrics)
}

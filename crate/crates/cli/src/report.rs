//! Machine-readable per-document and corpus reports.

use marginalia_core::metrics::DocumentMetrics;
use marginalia_core::profile::MarginBox;
use marginalia_core::recovery::RecoveryAction;

pub const REPORT_SCHEMA: u32 = 1;

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SkewReport {
    pub estimated_degrees: f64,
    pub confidence: f64,
    pub applied: bool,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SmoothingWindows {
    pub column: usize,
    pub row: usize,
}

/// Ink bookkeeping: `preprocessed` is the page after binarization, border
/// denoise and deskew; `body + removed = preprocessed` always holds.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct InkCounts {
    pub preprocessed: usize,
    pub body: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CleanReport {
    pub schema: u32,
    pub input: String,
    pub width: usize,
    pub height: usize,
    pub margin_box: MarginBox,
    pub smoothing_windows: SmoothingWindows,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skew: Option<SkewReport>,
    pub actions: Vec<RecoveryAction>,
    pub pruned_components: usize,
    pub pruned_pixels: usize,
    pub ink: InkCounts,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<DocumentMetrics>,
    pub wall_time_ms: u64,
}

impl CleanReport {
    /// Rounds every floating field to six decimals so reports are compact
    /// and stable across platforms.
    pub fn rounded(mut self) -> Self {
        if let Some(skew) = self.skew.as_mut() {
            skew.estimated_degrees = round6(skew.estimated_degrees);
            skew.confidence = round6(skew.confidence);
        }
        if let Some(metrics) = self.metrics.as_mut() {
            metrics.removal_accuracy = metrics.removal_accuracy.map(round6);
            metrics.recovery_accuracy = metrics.recovery_accuracy.map(round6);
            metrics.correlation = metrics.correlation.map(round6);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Mean plus the above/below-mean document split for one metric.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub documents: usize,
    pub above_mean: usize,
    pub below_mean: usize,
    pub above_mean_pct: f64,
    pub below_mean_pct: f64,
}

impl MetricSummary {
    /// Summarizes the defined values of one metric across the corpus.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let above = values.iter().filter(|&&v| v >= mean).count();
        let below = n - above;
        Some(MetricSummary {
            mean: round6(mean),
            documents: n,
            above_mean: above,
            below_mean: below,
            above_mean_pct: round6(above as f64 / n as f64 * 100.0),
            below_mean_pct: round6(below as f64 / n as f64 * 100.0),
        })
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FailureEntry {
    pub input: String,
    pub error: String,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AggregateReport {
    pub schema: u32,
    pub documents: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub removal_accuracy: Option<MetricSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery_accuracy: Option<MetricSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<MetricSummary>,
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("aggregate serializes")
    }
}

/// `metrics.csv` rows: document stem plus the three metric values (empty
/// cells when undefined).
pub fn metrics_csv(rows: &[(String, DocumentMetrics)]) -> String {
    let mut out = String::from("doc,removal_accuracy,recovery_accuracy,correlation\n");
    let cell = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_default();
    for (stem, m) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            stem,
            cell(m.removal_accuracy),
            cell(m.recovery_accuracy),
            cell(m.correlation)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_splits_above_and_below_mean() {
        let s = MetricSummary::from_values(&[1.0, 0.5, 0.9, 0.6]).unwrap();
        assert!((s.mean - 0.75).abs() < 1e-9);
        assert_eq!(s.above_mean, 2);
        assert_eq!(s.below_mean, 2);
        assert_eq!(s.above_mean_pct, 50.0);
    }

    #[test]
    fn summary_of_nothing_is_none() {
        assert!(MetricSummary::from_values(&[]).is_none());
    }

    #[test]
    fn csv_has_empty_cells_for_undefined_metrics() {
        let rows = vec![(
            "doc000".to_string(),
            DocumentMetrics {
                removal_accuracy: Some(0.9),
                recovery_accuracy: None,
                correlation: Some(0.981234567),
                warnings: vec![],
            },
        )];
        let csv = metrics_csv(&rows);
        assert!(csv.contains("doc000,0.900000,,0.981235"));
    }
}

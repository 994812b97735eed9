//! Stage one: projection profiles, smoothing-window selection, margin
//! boundary detection, and one-stretch margin stripping.
//!
//! Left/right margins come from the column-axis profile (ink per column);
//! top/bottom margins from the row-axis profile (ink per row). A boundary is
//! an intersection between the smoothed profile and its mean line: the raw
//! profile mean for columns, the mean of smoothed-profile peaks for rows.

use crate::error::{Error, Result};
use crate::raster::{clear_rect, BinaryImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

/// Ink counts per row or per column of a source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionProfile {
    axis: Axis,
    values: Vec<u32>,
    source_width: usize,
    source_height: usize,
}

impl ProjectionProfile {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.source_width, self.source_height)
    }

    /// Test/construction helper for profiles not derived from an image.
    pub fn from_values(axis: Axis, values: Vec<u32>, source_dims: (usize, usize)) -> Self {
        ProjectionProfile {
            axis,
            values,
            source_width: source_dims.0,
            source_height: source_dims.1,
        }
    }
}

pub fn project(image: &BinaryImage, axis: Axis) -> ProjectionProfile {
    let (width, height) = (image.width(), image.height());
    let len = match axis {
        Axis::Row => height,
        Axis::Column => width,
    };
    let mut values = vec![0u32; len];
    for (row, col) in image.ink_pixels() {
        let idx = match axis {
            Axis::Row => row,
            Axis::Column => col,
        };
        values[idx] += 1;
    }
    ProjectionProfile {
        axis,
        values,
        source_width: width,
        source_height: height,
    }
}

/// Which entries participate in the smoothing-window mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMean {
    #[default]
    All,
    NonZero,
}

/// Smoothing window width: round(2D / mean(values)) with D = source height
/// for column profiles and source width for row profiles, coerced up to the
/// nearest odd integer >= 3 and capped (odd) at the profile length.
pub fn smoothing_window(profile: &ProjectionProfile, mean: MaskMean) -> Result<usize> {
    let sum: u64 = profile.values.iter().map(|&v| v as u64).sum();
    if sum == 0 {
        return Err(Error::DegenerateInput(
            "all-zero projection profile (blank page)".into(),
        ));
    }
    let denom = match mean {
        MaskMean::All => profile.values.len() as f64,
        MaskMean::NonZero => profile.values.iter().filter(|&&v| v > 0).count() as f64,
    };
    let mean_value = sum as f64 / denom;
    let span = match profile.axis {
        Axis::Column => 2.0 * profile.source_height as f64,
        Axis::Row => 2.0 * profile.source_width as f64,
    };
    let raw = (span / mean_value).round() as usize;
    let mut window = raw.max(3);
    if window.is_multiple_of(2) {
        window += 1;
    }
    let cap = if profile.values.len().is_multiple_of(2) {
        profile.values.len().saturating_sub(1)
    } else {
        profile.values.len()
    };
    Ok(window.min(cap.max(1)))
}

/// A profile after centered moving-average smoothing, plus the mean line the
/// margin detectors intersect against.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedProfile {
    base: ProjectionProfile,
    window: usize,
    values: Vec<f64>,
    mean_line: f64,
}

impl SmoothedProfile {
    pub fn base(&self) -> &ProjectionProfile {
        &self.base
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean_line(&self) -> f64 {
        self.mean_line
    }
}

/// Centered moving average with replicated (clamped) edges.
///
/// The stored mean line is the raw profile mean for column profiles and the
/// mean of the smoothed profile's peaks for row profiles; a peak is a strict
/// local maximum with plateaus collapsed to a single peak. A row profile with
/// no peak falls back to its maximum value, which yields no crossings and
/// lets the detector report margin-not-found.
pub fn smooth(profile: &ProjectionProfile, window: usize) -> Result<SmoothedProfile> {
    let n = profile.values.len();
    if window == 0 || window.is_multiple_of(2) || window > n {
        return Err(Error::InvalidParameter(format!(
            "smoothing window {} must be odd and in [1, {}]",
            window, n
        )));
    }
    let half = (window / 2) as isize;
    let mut values = Vec::with_capacity(n);
    for i in 0..n as isize {
        let mut acc = 0u64;
        for k in -half..=half {
            let j = (i + k).clamp(0, n as isize - 1) as usize;
            acc += profile.values[j] as u64;
        }
        values.push(acc as f64 / window as f64);
    }
    let mean_line = match profile.axis {
        Axis::Column => {
            // integer sum first: exact, and independent of iteration order
            profile.values.iter().map(|&v| v as u64).sum::<u64>() as f64 / n as f64
        }
        Axis::Row => {
            let peaks = peak_values(&values);
            if peaks.is_empty() {
                values.iter().cloned().fold(f64::MIN, f64::max)
            } else {
                peaks.iter().sum::<f64>() / peaks.len() as f64
            }
        }
    };
    Ok(SmoothedProfile {
        base: profile.clone(),
        window,
        values,
        mean_line,
    })
}

/// Values of strict local maxima, plateaus collapsed: a run of equal values
/// counts once, and only when both neighbors of the run are strictly lower.
fn peak_values(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        let left_lower = i > 0 && values[i - 1] < values[i];
        let right_lower = j + 1 < n && values[j + 1] < values[i];
        if left_lower && right_lower {
            peaks.push(values[i]);
        }
        i = j + 1;
    }
    peaks
}

/// Crossing scan shared by both detectors. A value equal to the mean line
/// counts as above. Returns half-open `(start, end)`:
/// start = first below-to-above transition, end = last above-to-below
/// transition. A side with no transition extends to the page edge; no
/// transition at all (or an inverted pair) is margin-not-found.
fn crossing_band(values: &[f64], mean_line: f64) -> Option<(usize, usize)> {
    let above: Vec<bool> = values.iter().map(|&v| v >= mean_line).collect();
    let mut first_up = None;
    let mut last_down = None;
    for i in 1..above.len() {
        if above[i] && !above[i - 1] && first_up.is_none() {
            first_up = Some(i);
        }
        if !above[i] && above[i - 1] {
            last_down = Some(i);
        }
    }
    let band = match (first_up, last_down) {
        (None, None) => return None,
        (Some(start), None) => (start, values.len()),
        (None, Some(end)) => (0, end),
        (Some(start), Some(end)) => (start, end),
    };
    if band.0 < band.1 {
        Some(band)
    } else {
        None
    }
}

fn full_page_box(dims: (usize, usize)) -> MarginBox {
    MarginBox {
        left: 0,
        right: dims.0,
        top: 0,
        bottom: dims.1,
    }
}

/// Left/right body boundaries from a column-axis smoothed profile.
pub fn detect_vertical_margins(smoothed: &SmoothedProfile) -> Result<(usize, usize)> {
    if smoothed.base.axis != Axis::Column {
        return Err(Error::InvalidParameter(
            "vertical margin detection needs a column-axis profile".into(),
        ));
    }
    crossing_band(&smoothed.values, smoothed.mean_line).ok_or(Error::MarginsNotFound {
        reason: "no crossings between smoothed column profile and its mean".into(),
        fallback: full_page_box(smoothed.base.source_dims()),
    })
}

/// Top/bottom body boundaries from a row-axis smoothed profile; the mean
/// line is the mean of the smoothed profile's peaks.
pub fn detect_horizontal_margins(smoothed: &SmoothedProfile) -> Result<(usize, usize)> {
    if smoothed.base.axis != Axis::Row {
        return Err(Error::InvalidParameter(
            "horizontal margin detection needs a row-axis profile".into(),
        ));
    }
    crossing_band(&smoothed.values, smoothed.mean_line).ok_or(Error::MarginsNotFound {
        reason: "no crossings between smoothed row profile and its peak mean".into(),
        fallback: full_page_box(smoothed.base.source_dims()),
    })
}

/// Detected body rectangle, half-open on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MarginBox {
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
}

impl MarginBox {
    pub fn full(width: usize, height: usize) -> Self {
        full_page_box((width, height))
    }

    pub fn to_rect(self) -> Rect {
        Rect::new(self.left, self.right, self.top, self.bottom)
    }

    pub fn area(&self) -> usize {
        (self.right - self.left) * (self.bottom - self.top)
    }
}

/// Splits a page into (body, margin): the body keeps only pixels inside the
/// box, the margin only pixels outside. Both share the page dimensions.
pub fn strip_margins(image: &BinaryImage, bounds: MarginBox) -> Result<(BinaryImage, BinaryImage)> {
    let rect = bounds.to_rect();
    rect.validate_for(image.width(), image.height())?;
    let margin = clear_rect(image, rect)?;
    let mut body = image.clone();
    for (row, col) in margin.ink_pixels() {
        body.set(row, col, false);
    }
    Ok((body, margin))
}

/// Result of running both axis detections on a page.
#[derive(Debug, Clone)]
pub struct MarginScan {
    pub margin_box: MarginBox,
    pub column_window: usize,
    pub row_window: usize,
    pub column_smoothed: Option<SmoothedProfile>,
    pub row_smoothed: Option<SmoothedProfile>,
    pub warnings: Vec<String>,
}

/// Minimum body area as a fraction of the page; a smaller detection is
/// treated as a failure and degraded to the full page.
const BODY_AREA_FLOOR: f64 = 0.25;

/// Full margin detection with degraded fallbacks: blank pages, missing
/// crossings, and implausibly small bodies all yield a full-page box plus a
/// warning instead of an error.
pub fn detect_margin_box(image: &BinaryImage, mean: MaskMean) -> MarginScan {
    let (width, height) = (image.width(), image.height());
    let mut warnings = Vec::new();
    let mut column_smoothed = None;
    let mut row_smoothed = None;
    let mut column_window = 0;
    let mut row_window = 0;

    let mut vertical = (0, width);
    let mut horizontal = (0, height);

    let column_profile = project(image, Axis::Column);
    match smoothing_window(&column_profile, mean).and_then(|w| {
        column_window = w;
        smooth(&column_profile, w)
    }) {
        Ok(smoothed) => {
            match detect_vertical_margins(&smoothed) {
                Ok(band) => vertical = band,
                Err(Error::MarginsNotFound { reason, .. }) => {
                    warnings.push(format!("no margins detected (vertical): {}", reason));
                }
                Err(e) => warnings.push(e.to_string()),
            }
            column_smoothed = Some(smoothed);
        }
        Err(e) => warnings.push(format!("no margins detected (vertical): {}", e)),
    }

    let row_profile = project(image, Axis::Row);
    match smoothing_window(&row_profile, mean).and_then(|w| {
        row_window = w;
        smooth(&row_profile, w)
    }) {
        Ok(smoothed) => {
            match detect_horizontal_margins(&smoothed) {
                Ok(band) => horizontal = band,
                Err(Error::MarginsNotFound { reason, .. }) => {
                    warnings.push(format!("no margins detected (horizontal): {}", reason));
                }
                Err(e) => warnings.push(e.to_string()),
            }
            row_smoothed = Some(smoothed);
        }
        Err(e) => warnings.push(format!("no margins detected (horizontal): {}", e)),
    }

    let mut margin_box = MarginBox {
        left: vertical.0,
        right: vertical.1,
        top: horizontal.0,
        bottom: horizontal.1,
    };
    let page_area = (width * height) as f64;
    if (margin_box.area() as f64) < BODY_AREA_FLOOR * page_area {
        warnings.push(format!(
            "detected body {:?} covers under {:.0}% of the page; using full page",
            margin_box,
            BODY_AREA_FLOOR * 100.0
        ));
        margin_box = MarginBox::full(width, height);
    }
    MarginScan {
        margin_box,
        column_window,
        row_window,
        column_smoothed,
        row_smoothed,
        warnings,
    }
}

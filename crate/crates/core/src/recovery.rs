//! Stage two: bring printed text that was erroneously stripped into the
//! margin strips back into the body, then prune restored components that
//! have no text around them.
//!
//! Rules run in order: broken lines at the top/bottom boundary, missed lines
//! in the top/bottom strips, vertical fragments beside body text lines, page
//! number, prune. Every restoration moves pixels from the margin image to
//! the body image at unchanged coordinates.

use crate::components::{
    detect_text_lines, label_components, CharacterMetrics, Component, Connectivity, TextLine,
};
use crate::error::Result;
use crate::profile::MarginBox;
use crate::raster::{BinaryImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryRule {
    BrokenLine,
    MissedLine,
    VerticalFragment,
    PageNumber,
}

/// Calibration constants for the recovery rules. Every value here is a
/// config knob; the defaults are the pipeline's reference behavior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryParams {
    /// Connectivity used when labeling the margin and body images.
    pub connectivity: Connectivity,
    /// Minimum members for a missed-line group to be word-like.
    pub min_line_run: usize,
    /// Horizontal gap allowance in multiples of char_space.
    pub gap_factor: f64,
    /// Vertical-center tolerance in multiples of char_size.
    pub center_factor: f64,
    /// Longest run of adjacent components accepted as a page number.
    pub max_page_number_run: usize,
    /// Prune neighborhood: horizontal reach in multiples of char_space.
    pub prune_gap_factor: f64,
    /// Prune neighborhood: vertical reach in multiples of char_size.
    pub prune_size_factor: f64,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        RecoveryParams {
            connectivity: Connectivity::Eight,
            min_line_run: 3,
            gap_factor: 4.0,
            center_factor: 0.5,
            max_page_number_run: 4,
            prune_gap_factor: 4.0,
            prune_size_factor: 1.0,
        }
    }
}

/// Record of one applied recovery rule, as serialized into reports.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RecoveryAction {
    pub rule: RecoveryRule,
    pub component_labels: Vec<u32>,
    pub pixels_restored: usize,
    pub bbox: Rect,
}

/// One restored margin component (its label in the margin labeling used by
/// the rule, plus the exact pixels moved).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestoredComponent {
    pub label: u32,
    pub pixels: Vec<(usize, usize)>,
}

/// A restorable unit produced by one rule: a single component for the
/// broken-line and vertical-fragment rules, a whole group or run otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restoration {
    pub rule: RecoveryRule,
    pub members: Vec<RestoredComponent>,
}

impl Restoration {
    pub fn pixels_restored(&self) -> usize {
        self.members.iter().map(|m| m.pixels.len()).sum()
    }

    pub fn bbox(&self) -> Rect {
        let mut bbox = Rect::new(usize::MAX, 0, usize::MAX, 0);
        for member in &self.members {
            for &(row, col) in &member.pixels {
                bbox.top = bbox.top.min(row);
                bbox.bottom = bbox.bottom.max(row + 1);
                bbox.left = bbox.left.min(col);
                bbox.right = bbox.right.max(col + 1);
            }
        }
        bbox
    }

    pub fn to_action(&self) -> RecoveryAction {
        RecoveryAction {
            rule: self.rule,
            component_labels: self.members.iter().map(|m| m.label).collect(),
            pixels_restored: self.pixels_restored(),
            bbox: self.bbox(),
        }
    }
}

/// A restored component later erased by the prune step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedComponent {
    pub rule: RecoveryRule,
    pub label: u32,
    pub pixels: Vec<(usize, usize)>,
}

fn size_gated(c: &Component, metrics: &CharacterMetrics) -> bool {
    let limit = 2 * metrics.char_size;
    c.height() <= limit && c.width() <= limit
}

/// Moves every restored pixel from the margin image into the body image.
pub fn apply_restorations(
    body: &BinaryImage,
    margin: &BinaryImage,
    restorations: &[Restoration],
) -> (BinaryImage, BinaryImage) {
    let mut body = body.clone();
    let mut margin = margin.clone();
    for restoration in restorations {
        for member in &restoration.members {
            for &(row, col) in &member.pixels {
                body.set(row, col, true);
                margin.set(row, col, false);
            }
        }
    }
    (body, margin)
}

fn paint_labels(components: &[Component], width: usize, height: usize) -> Vec<u32> {
    let mut grid = vec![0u32; width * height];
    for c in components {
        for &(row, col) in &c.pixels {
            grid[row * width + col] = c.label;
        }
    }
    grid
}

/// Broken text lines at the horizontal boundaries: a margin component is
/// brought back when it is 8-adjacent, across the top or bottom boundary
/// row, to a body component, and both components' bounding boxes stay within
/// twice the character size in both dimensions.
pub fn recover_broken_lines(
    body: &BinaryImage,
    margin: &BinaryImage,
    bounds: MarginBox,
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> (BinaryImage, BinaryImage, Vec<Restoration>) {
    let (width, height) = (body.width(), body.height());
    if margin.is_blank() {
        return (body.clone(), margin.clone(), Vec::new());
    }
    let body_components = label_components(body, params.connectivity);
    let body_labels = paint_labels(&body_components, width, height);
    let body_ok: Vec<bool> = {
        let mut ok = vec![false; body_components.len() + 1];
        for c in &body_components {
            ok[c.label as usize] = size_gated(c, metrics);
        }
        ok
    };

    let margin_components = label_components(margin, params.connectivity);
    let mut restorations = Vec::new();
    for mc in &margin_components {
        if !size_gated(mc, metrics) {
            continue;
        }
        let mut touches_ok_body = false;
        'probe: for &(row, col) in &mc.pixels {
            // across the top boundary: margin row box.top-1 vs body row box.top
            if bounds.top > 0 && row + 1 == bounds.top {
                for dc in -1i64..=1 {
                    let c = col as i64 + dc;
                    if c < 0 || c as usize >= width {
                        continue;
                    }
                    let lbl = body_labels[bounds.top * width + c as usize];
                    if lbl != 0 && body_ok[lbl as usize] {
                        touches_ok_body = true;
                        break 'probe;
                    }
                }
            }
            // across the bottom boundary: margin row box.bottom vs body row box.bottom-1
            if bounds.bottom < height && row == bounds.bottom {
                for dc in -1i64..=1 {
                    let c = col as i64 + dc;
                    if c < 0 || c as usize >= width {
                        continue;
                    }
                    let lbl = body_labels[(bounds.bottom - 1) * width + c as usize];
                    if lbl != 0 && body_ok[lbl as usize] {
                        touches_ok_body = true;
                        break 'probe;
                    }
                }
            }
        }
        if touches_ok_body {
            restorations.push(Restoration {
                rule: RecoveryRule::BrokenLine,
                members: vec![RestoredComponent {
                    label: mc.label,
                    pixels: mc.pixels.clone(),
                }],
            });
        }
    }
    let (body, margin) = apply_restorations(body, margin, &restorations);
    (body, margin, restorations)
}

/// Greedy left-to-right grouping of components into pseudo-lines: a
/// component joins the group whose last member's vertical center is nearest,
/// provided the center difference stays within `center_factor * char_size`
/// and the horizontal gap within `gap_factor * char_space`.
fn group_into_runs<'a>(
    mut components: Vec<&'a Component>,
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> Vec<Vec<&'a Component>> {
    components.sort_by_key(|c| (c.bbox.left, c.bbox.top, c.label));
    struct Open<'a> {
        members: Vec<&'a Component>,
        right: usize,
        last_center: f64,
    }
    let mut open: Vec<Open<'a>> = Vec::new();
    let center_tol = params.center_factor * metrics.char_size as f64;
    let gap_limit = params.gap_factor * metrics.char_space as f64;
    for c in components {
        let center = c.row_center();
        let mut best: Option<(usize, f64)> = None;
        for (i, group) in open.iter().enumerate() {
            let center_diff = (center - group.last_center).abs();
            let gap = c.bbox.left as f64 - group.right as f64;
            if center_diff <= center_tol
                && gap <= gap_limit
                && best.is_none_or(|(_, d)| center_diff < d)
            {
                best = Some((i, center_diff));
            }
        }
        match best {
            Some((i, _)) => {
                open[i].right = open[i].right.max(c.bbox.right);
                open[i].last_center = center;
                open[i].members.push(c);
            }
            None => open.push(Open {
                members: vec![c],
                right: c.bbox.right,
                last_center: center,
            }),
        }
    }
    open.into_iter().map(|g| g.members).collect()
}

/// Missed text lines in the top and bottom margin strips: word-like runs of
/// at least `min_line_run` character-sized components become restorable.
/// Shorter runs are left for the page-number rule.
pub fn recover_missed_lines(
    margin: &BinaryImage,
    bounds: MarginBox,
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> Vec<Restoration> {
    if margin.is_blank() {
        return Vec::new();
    }
    let components = label_components(margin, params.connectivity);
    let mut restorations = Vec::new();
    for strip_top in [true, false] {
        let in_strip = |c: &Component| {
            if strip_top {
                c.bbox.bottom <= bounds.top
            } else {
                c.bbox.top >= bounds.bottom
            }
        };
        let candidates: Vec<&Component> = components
            .iter()
            .filter(|c| in_strip(c) && size_gated(c, metrics))
            .collect();
        for run in group_into_runs(candidates, metrics, params) {
            if run.len() >= params.min_line_run {
                restorations.push(Restoration {
                    rule: RecoveryRule::MissedLine,
                    members: run
                        .iter()
                        .map(|c| RestoredComponent {
                            label: c.label,
                            pixels: c.pixels.clone(),
                        })
                        .collect(),
                });
            }
        }
    }
    restorations
}

/// Missed parts of text lines in the left/right margin strips: a margin
/// component returns when its vertical center sits inside a body text line's
/// row band, it passes the size gate, and its horizontal gap to that line's
/// nearest edge stays within `gap_factor * char_space`.
pub fn recover_vertical_fragments(
    body: &BinaryImage,
    margin: &BinaryImage,
    bounds: MarginBox,
    lines: &[TextLine],
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> (BinaryImage, BinaryImage, Vec<Restoration>) {
    if margin.is_blank() || lines.is_empty() {
        return (body.clone(), margin.clone(), Vec::new());
    }
    let gap_limit = params.gap_factor * metrics.char_space as f64;
    let components = label_components(margin, params.connectivity);
    let mut restorations = Vec::new();
    for mc in &components {
        if !size_gated(mc, metrics) {
            continue;
        }
        let on_left = mc.bbox.right <= bounds.left;
        let on_right = mc.bbox.left >= bounds.right;
        if !on_left && !on_right {
            continue;
        }
        let center = mc.row_center();
        let line = lines
            .iter()
            .find(|l| center >= l.row_band.0 as f64 && center < l.row_band.1 as f64);
        let Some(line) = line else { continue };
        let gap = if on_left {
            line.left_edge as f64 - mc.bbox.right as f64
        } else {
            mc.bbox.left as f64 - line.right_edge as f64
        };
        if gap <= gap_limit {
            restorations.push(Restoration {
                rule: RecoveryRule::VerticalFragment,
                members: vec![RestoredComponent {
                    label: mc.label,
                    pixels: mc.pixels.clone(),
                }],
            });
        }
    }
    let (body, margin) = apply_restorations(body, margin, &restorations);
    (body, margin, restorations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneAxis {
    /// Band of row indices (the page's length axis).
    Rows,
    /// Band of column indices (the page's width axis).
    Columns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneLocation {
    Left,
    Middle,
    Right,
    Top,
    Bottom,
}

/// One page-number zone: a half-open index band on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageNumberZone {
    pub axis: ZoneAxis,
    pub band: (usize, usize),
    pub location: ZoneLocation,
}

impl PageNumberZone {
    pub fn contains(&self, index: f64) -> bool {
        index >= self.band.0 as f64 && index < self.band.1 as f64
    }

    pub fn center(&self) -> f64 {
        (self.band.0 + self.band.1) as f64 / 2.0
    }
}

/// The five standard page-number bands: left/middle/right column bands and
/// top/bottom row bands. Empty bands are omitted.
pub fn page_number_zones(
    bounds: MarginBox,
    page: (usize, usize),
    metrics: &CharacterMetrics,
) -> Vec<PageNumberZone> {
    let (width, height) = page;
    let mid = (bounds.left + bounds.right) / 2;
    let char_size = metrics.char_size;
    let raw = [
        (ZoneAxis::Columns, ZoneLocation::Left, 0, bounds.left),
        (
            ZoneAxis::Columns,
            ZoneLocation::Middle,
            mid.saturating_sub(char_size),
            (mid + char_size).min(width),
        ),
        (ZoneAxis::Columns, ZoneLocation::Right, bounds.right, width),
        (ZoneAxis::Rows, ZoneLocation::Top, 0, bounds.top),
        (ZoneAxis::Rows, ZoneLocation::Bottom, bounds.bottom, height),
    ];
    raw.into_iter()
        .filter(|&(_, _, lo, hi)| lo < hi)
        .map(|(axis, location, lo, hi)| PageNumberZone {
            axis,
            band: (lo, hi),
            location,
        })
        .collect()
}

/// Page-number retrieval: among margin components passing the size gate,
/// short horizontally adjacent runs (multi-digit numbers) whose center falls
/// inside one row band and one column band qualify; the single run closest
/// to its zone-band center is restored.
pub fn recover_page_number(
    margin: &BinaryImage,
    zones: &[PageNumberZone],
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> Vec<Restoration> {
    if margin.is_blank() || zones.is_empty() {
        return Vec::new();
    }
    let components = label_components(margin, params.connectivity);
    let candidates: Vec<&Component> = components
        .iter()
        .filter(|c| size_gated(c, metrics))
        .collect();
    if candidates.is_empty() {
        return Vec::new();
    }

    struct Qualified<'a> {
        run: Vec<&'a Component>,
        distance: f64,
        center: (f64, f64),
    }
    let mut best: Option<Qualified<'_>> = None;
    for run in group_into_runs(candidates, metrics, params) {
        if run.len() > params.max_page_number_run {
            continue;
        }
        let mut bbox = Rect::new(usize::MAX, 0, usize::MAX, 0);
        for c in &run {
            bbox.top = bbox.top.min(c.bbox.top);
            bbox.bottom = bbox.bottom.max(c.bbox.bottom);
            bbox.left = bbox.left.min(c.bbox.left);
            bbox.right = bbox.right.max(c.bbox.right);
        }
        let row_center = (bbox.top + bbox.bottom) as f64 / 2.0;
        let col_center = (bbox.left + bbox.right) as f64 / 2.0;
        let row_zone = zones
            .iter()
            .find(|z| z.axis == ZoneAxis::Rows && z.contains(row_center));
        let col_zone = zones
            .iter()
            .find(|z| z.axis == ZoneAxis::Columns && z.contains(col_center));
        let (Some(row_zone), Some(col_zone)) = (row_zone, col_zone) else {
            continue;
        };
        let dr = row_center - row_zone.center();
        let dc = col_center - col_zone.center();
        let distance = (dr * dr + dc * dc).sqrt();
        let better = match &best {
            None => true,
            Some(b) => {
                distance < b.distance - 1e-9
                    || ((distance - b.distance).abs() <= 1e-9
                        && (row_center, col_center) < b.center)
            }
        };
        if better {
            best = Some(Qualified {
                run,
                distance,
                center: (row_center, col_center),
            });
        }
    }
    match best {
        Some(q) => vec![Restoration {
            rule: RecoveryRule::PageNumber,
            members: q
                .run
                .iter()
                .map(|c| RestoredComponent {
                    label: c.label,
                    pixels: c.pixels.clone(),
                })
                .collect(),
        }],
        None => Vec::new(),
    }
}

/// Removes restored components (page-number runs exempt) that have no other
/// ink within `prune_gap_factor * char_space` horizontally and
/// `prune_size_factor * char_size` vertically of their bounding box.
/// Returns the pruned body, the surviving restorations, and what was erased.
pub fn prune_unwanted(
    body: &BinaryImage,
    restorations: &[Restoration],
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> (BinaryImage, Vec<Restoration>, Vec<PrunedComponent>) {
    let (width, height) = (body.width(), body.height());
    let reach_cols = (params.prune_gap_factor * metrics.char_space as f64).round() as usize;
    let reach_rows = (params.prune_size_factor * metrics.char_size as f64).round() as usize;
    let mut out = body.clone();
    let mut kept = Vec::new();
    let mut pruned = Vec::new();
    for restoration in restorations {
        if restoration.rule == RecoveryRule::PageNumber {
            kept.push(restoration.clone());
            continue;
        }
        let mut surviving = Vec::new();
        for member in &restoration.members {
            let mut bbox = Rect::new(usize::MAX, 0, usize::MAX, 0);
            for &(row, col) in &member.pixels {
                bbox.top = bbox.top.min(row);
                bbox.bottom = bbox.bottom.max(row + 1);
                bbox.left = bbox.left.min(col);
                bbox.right = bbox.right.max(col + 1);
            }
            // a pixel at empty-gap distance of exactly the reach still counts
            let top = bbox.top.saturating_sub(reach_rows + 1);
            let bottom = (bbox.bottom + reach_rows + 1).min(height);
            let left = bbox.left.saturating_sub(reach_cols + 1);
            let right = (bbox.right + reach_cols + 1).min(width);
            let own: std::collections::HashSet<(usize, usize)> =
                member.pixels.iter().copied().collect();
            let mut has_neighbor = false;
            'search: for row in top..bottom {
                for col in left..right {
                    if out.get(row, col) && !own.contains(&(row, col)) {
                        has_neighbor = true;
                        break 'search;
                    }
                }
            }
            if has_neighbor {
                surviving.push(member.clone());
            } else {
                for &(row, col) in &member.pixels {
                    out.set(row, col, false);
                }
                pruned.push(PrunedComponent {
                    rule: restoration.rule,
                    label: member.label,
                    pixels: member.pixels.clone(),
                });
            }
        }
        if !surviving.is_empty() {
            kept.push(Restoration {
                rule: restoration.rule,
                members: surviving,
            });
        }
    }
    (out, kept, pruned)
}

/// Everything stage two produced for one page.
#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub body: BinaryImage,
    pub margin: BinaryImage,
    pub actions: Vec<RecoveryAction>,
    pub pruned: Vec<PrunedComponent>,
    pub warnings: Vec<String>,
}

impl RecoveryOutcome {
    pub fn pruned_pixel_count(&self) -> usize {
        self.pruned.iter().map(|p| p.pixels.len()).sum()
    }
}

/// Runs the full stage-two sequence: broken lines, missed lines, vertical
/// fragments, page number, prune. Pure: identical inputs yield bit-identical
/// outcomes.
pub fn run_recovery(
    body: &BinaryImage,
    margin: &BinaryImage,
    bounds: MarginBox,
    metrics: &CharacterMetrics,
    params: &RecoveryParams,
) -> Result<RecoveryOutcome> {
    let (body1, margin1, broken) = recover_broken_lines(body, margin, bounds, metrics, params);

    let missed = recover_missed_lines(&margin1, bounds, metrics, params);
    let (body2, margin2) = apply_restorations(&body1, &margin1, &missed);

    let body_components = label_components(&body2, params.connectivity);
    let lines = detect_text_lines(&body2, &body_components, metrics);
    let (body3, margin3, vertical) =
        recover_vertical_fragments(&body2, &margin2, bounds, &lines, metrics, params);

    let zones = page_number_zones(bounds, (body.width(), body.height()), metrics);
    let page_number = recover_page_number(&margin3, &zones, metrics, params);
    let (body4, margin4) = apply_restorations(&body3, &margin3, &page_number);

    let mut all = broken;
    all.extend(missed);
    all.extend(vertical);
    all.extend(page_number);

    let (body5, kept, pruned) = prune_unwanted(&body4, &all, metrics, params);
    Ok(RecoveryOutcome {
        body: body5,
        margin: margin4,
        actions: kept.iter().map(Restoration::to_action).collect(),
        pruned,
        warnings: Vec::new(),
    })
}

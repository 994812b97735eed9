//! Deterministic generator of (clean page, annotated page, annotation mask,
//! geometry truth) quadruples for testing and evaluation.
//!
//! Pages are pseudo-text: filled character boxes of exact height `char_size`
//! laid out in lines at `line_pitch`, so the geometric ground truth is exact.
//! Annotations are random polylines, ellipse outlines, and underlines of
//! varying thickness, drawn only on background so the clean page and the
//! annotation mask never share a pixel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::profile::MarginBox;
use crate::raster::{BinaryImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationProfile {
    None,
    Light,
    Heavy,
}

/// Where the page number is placed: one column band (left/middle/right)
/// intersected with one row band (top/bottom).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageNumberLocation {
    TopLeft,
    TopMiddle,
    TopRight,
    BottomLeft,
    BottomMiddle,
    BottomRight,
}

impl PageNumberLocation {
    pub fn is_top(self) -> bool {
        matches!(
            self,
            PageNumberLocation::TopLeft
                | PageNumberLocation::TopMiddle
                | PageNumberLocation::TopRight
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct PageFeatures {
    /// Short pseudo-title drawn in the top margin strip.
    pub header: bool,
    /// Page number drawn in the requested zone, when set.
    pub page_number: Option<PageNumberLocation>,
    /// Lets some words run past the right body edge and one first-line
    /// character poke above the top body edge, exercising the vertical
    /// fragment and broken-line recovery cases.
    pub chopped_words: bool,
}

/// Full geometric description of one synthetic page.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PageSpec {
    pub width: usize,
    pub height: usize,
    /// True body rectangle; printed text lines stay inside it.
    pub margins: MarginBox,
    pub char_size: usize,
    pub line_pitch: usize,
    pub seed: u64,
    pub annotation_profile: AnnotationProfile,
    pub features: PageFeatures,
}

impl PageSpec {
    fn validate(&self) -> Result<()> {
        self.margins
            .to_rect()
            .validate_for(self.width, self.height)
            .map_err(|_| {
                Error::InvalidParameter(format!(
                    "margins {:?} invalid for {}x{} page",
                    self.margins, self.width, self.height
                ))
            })?;
        if self.char_size < 3 {
            return Err(Error::InvalidParameter(
                "char_size must be at least 3".into(),
            ));
        }
        if self.char_size >= self.line_pitch {
            return Err(Error::InvalidParameter(
                "char_size must be smaller than line_pitch".into(),
            ));
        }
        let body_h = self.margins.bottom - self.margins.top;
        let body_w = self.margins.right - self.margins.left;
        if body_h < self.char_size || body_w < 2 * self.char_size {
            return Err(Error::InvalidParameter(
                "body rectangle leaves no room for a text line".into(),
            ));
        }
        Ok(())
    }

    /// Character gap the generator lays text out with.
    pub fn char_gap(&self) -> usize {
        (self.char_size / 3).max(1)
    }
}

/// One generated document with its truth masks.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub clean: BinaryImage,
    pub annotated: BinaryImage,
    pub annotation_mask: BinaryImage,
    pub geometry: PageSpec,
}

fn fill_rect(img: &mut BinaryImage, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) {
    for row in rows {
        for col in cols.clone() {
            img.set(row, col, true);
        }
    }
}

/// Generates the quadruple for one page spec. Identical specs (including the
/// seed) produce bit-identical output.
pub fn generate(spec: &PageSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut clean = BinaryImage::blank(spec.width, spec.height)?;
    let m = spec.margins;
    let cs = spec.char_size;
    let gap = spec.char_gap();

    // One character layout shared by every body line: equal per-line ink
    // keeps the row-profile peaks uniform, so the first and last lines
    // reliably cross the peak-mean line during margin detection.
    let layout = line_layout(spec, &mut rng);
    let mut line_tops = Vec::new();
    let mut y = m.top;
    while y + cs <= m.bottom {
        line_tops.push(y);
        y += spec.line_pitch;
    }
    for (index, &top) in line_tops.iter().enumerate() {
        for &(x, w) in &layout {
            fill_rect(&mut clean, top..top + cs, x..x + w);
        }
        if spec.features.chopped_words && index % 4 == 1 {
            draw_chopped_extension(&mut clean, spec, &mut rng, top);
        }
        if spec.features.chopped_words && index == 0 {
            // one ascender poking above the body top
            let x = (m.left + m.right) / 2;
            let w = (cs / 2).max(2);
            let above = (cs / 2).min(m.top.saturating_sub(1));
            if above > 0 {
                fill_rect(&mut clean, m.top - above..top + cs, x..(x + w).min(m.right));
            }
        }
    }

    // header in the top margin strip
    let header_bottom = if spec.features.header && m.top >= cs + 6 {
        let pn_on_top = spec
            .features
            .page_number
            .map(|loc| loc.is_top())
            .unwrap_or(false);
        // leave the lower half of the strip free when a page number shares it
        let y_h = if pn_on_top { 2 } else { (m.top - cs) / 2 };
        let n_chars = rng.random_range(4..=8usize);
        let widths: Vec<usize> = (0..n_chars)
            .map(|_| rng.random_range((cs * 2 / 5).max(2)..=(cs * 9 / 10).max(3)))
            .collect();
        let total: usize = widths.iter().sum::<usize>() + gap * (n_chars - 1);
        let mut x = (spec.width.saturating_sub(total)) / 2;
        for w in widths {
            if x + w >= spec.width {
                break;
            }
            fill_rect(&mut clean, y_h..y_h + cs, x..x + w);
            x += w + gap;
        }
        y_h + cs
    } else {
        0
    };

    // page number: one or two digit boxes, kept under the missed-line run
    // minimum so the page-number rule is the one that restores them
    if let Some(location) = spec.features.page_number {
        draw_page_number(&mut clean, spec, &mut rng, location, header_bottom);
    }

    // annotations
    let mut mask = BinaryImage::blank(spec.width, spec.height)?;
    match spec.annotation_profile {
        AnnotationProfile::None => {}
        AnnotationProfile::Light => {
            let strokes = rng.random_range(10..=16usize);
            for _ in 0..strokes {
                let clip = pick_strip(spec, &mut rng);
                draw_stroke(&mut mask, &clean, spec, &mut rng, clip);
            }
        }
        AnnotationProfile::Heavy => {
            let strokes = rng.random_range(12..=20usize);
            for _ in 0..strokes {
                let mut clip = pick_strip(spec, &mut rng);
                if rng.random_bool(0.3) {
                    // crossing stroke: the clip window reaches into the body
                    let depth = 3 * cs;
                    clip = match clip_side(spec, clip) {
                        Side::Left => {
                            Rect::new(0, (m.left + depth).min(spec.width), 0, spec.height)
                        }
                        Side::Right => {
                            Rect::new(m.right.saturating_sub(depth), spec.width, 0, spec.height)
                        }
                        Side::Top => Rect::new(0, spec.width, 0, (m.top + depth).min(spec.height)),
                        Side::Bottom => {
                            Rect::new(0, spec.width, m.bottom.saturating_sub(depth), spec.height)
                        }
                    };
                }
                draw_stroke(&mut mask, &clean, spec, &mut rng, clip);
            }
        }
    }

    let annotated = BinaryImage::from_pixels(
        spec.width,
        spec.height,
        clean
            .raw()
            .iter()
            .zip(mask.raw())
            .map(|(&a, &b)| a | b)
            .collect(),
    )?;
    Ok(GroundTruth {
        clean,
        annotated,
        annotation_mask: mask,
        geometry: *spec,
    })
}

/// Character boxes `(left, width)` for one text line: words of random-width
/// characters from the left body edge, padded with a final box flush against
/// the right body edge.
fn line_layout(spec: &PageSpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let m = spec.margins;
    let cs = spec.char_size;
    let gap = spec.char_gap();
    let word_gap = gap * 3;
    let mut layout = Vec::new();
    let mut x = m.left;
    'words: loop {
        let word_len = rng.random_range(2..=8usize);
        for _ in 0..word_len {
            let w = rng.random_range((cs * 2 / 5).max(2)..=(cs * 9 / 10).max(3));
            if x + w > m.right {
                break 'words;
            }
            layout.push((x, w));
            x += w + gap;
        }
        // no word gaps near the right edge: a wide zero valley there would
        // drag the detected margin a whole word inward
        if x + (word_gap - gap) + 3 * cs < m.right {
            x += word_gap - gap;
        }
    }
    // flush the line against the right body edge
    let remaining = m.right.saturating_sub(x);
    if remaining >= 2 && remaining <= 2 * cs {
        layout.push((x, remaining));
    } else if let Some(last) = layout.last_mut() {
        last.1 = m.right - last.0;
    }
    layout
}

/// Lets a line run one extra box past the right body edge.
fn draw_chopped_extension(
    clean: &mut BinaryImage,
    spec: &PageSpec,
    rng: &mut ChaCha8Rng,
    top: usize,
) {
    let m = spec.margins;
    let cs = spec.char_size;
    let gap = spec.char_gap();
    let x = m.right + gap;
    let w = rng.random_range((cs * 2 / 5).max(2)..=(cs * 3 / 4).max(3));
    if x + w + 1 < spec.width {
        fill_rect(clean, top..top + cs, x..x + w);
    }
}

fn draw_page_number(
    clean: &mut BinaryImage,
    spec: &PageSpec,
    rng: &mut ChaCha8Rng,
    location: PageNumberLocation,
    header_bottom: usize,
) {
    let m = spec.margins;
    let cs = spec.char_size;
    let gap = spec.char_gap();
    let col_center = match location {
        PageNumberLocation::TopLeft | PageNumberLocation::BottomLeft => m.left / 2,
        PageNumberLocation::TopMiddle | PageNumberLocation::BottomMiddle => (m.left + m.right) / 2,
        PageNumberLocation::TopRight | PageNumberLocation::BottomRight => {
            (m.right + spec.width) / 2
        }
    };
    let row_center = if location.is_top() {
        // below any header, above the body edge
        let lo = header_bottom + 2 + cs / 2;
        let hi = m.top.saturating_sub(2 + cs / 2);
        if lo > hi {
            return; // strip too crowded
        }
        (lo + hi) / 2
    } else {
        (m.bottom + spec.height) / 2
    };
    let digits = rng.random_range(1..=2usize);
    let w = (cs / 2).max(2);
    let total = digits * w + (digits - 1) * gap;
    let x0 = col_center.saturating_sub(total / 2);
    let y0 = row_center.saturating_sub(cs / 2);
    if y0 + cs >= spec.height || x0 + total >= spec.width {
        return;
    }
    // keep the digits inside their margin strip
    if !location.is_top() && y0 < m.bottom {
        return;
    }
    if location.is_top() && y0 + cs > m.top {
        return;
    }
    let mut x = x0;
    for _ in 0..digits {
        fill_rect(clean, y0..y0 + cs, x..x + w);
        x += w + gap;
    }
}

enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

fn pick_strip(spec: &PageSpec, rng: &mut ChaCha8Rng) -> Rect {
    let m = spec.margins;
    let roll: f64 = rng.random();
    if roll < 0.3 {
        Rect::new(0, m.left, 0, spec.height)
    } else if roll < 0.6 {
        Rect::new(m.right, spec.width, 0, spec.height)
    } else if roll < 0.8 {
        Rect::new(0, spec.width, 0, m.top)
    } else {
        Rect::new(0, spec.width, m.bottom, spec.height)
    }
}

fn clip_side(spec: &PageSpec, clip: Rect) -> Side {
    let m = spec.margins;
    if clip.right == m.left {
        Side::Left
    } else if clip.left == m.right {
        Side::Right
    } else if clip.bottom == m.top {
        Side::Top
    } else {
        Side::Bottom
    }
}

/// Stamps a filled disk, skipping pixels outside the clip window and pixels
/// already inked on the clean page (the mask stays disjoint from the text).
fn stamp_disk(
    mask: &mut BinaryImage,
    clean: &BinaryImage,
    clip: Rect,
    row: i64,
    col: i64,
    radius: i64,
) {
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            if dr * dr + dc * dc > radius * radius {
                continue;
            }
            let (r, c) = (row + dr, col + dc);
            if r < 0 || c < 0 {
                continue;
            }
            let (r, c) = (r as usize, c as usize);
            if r >= mask.height() || c >= mask.width() {
                continue;
            }
            if clip.contains(r, c) && !clean.get(r, c) {
                mask.set(r, c, true);
            }
        }
    }
}

fn stamp_segment(
    mask: &mut BinaryImage,
    clean: &BinaryImage,
    clip: Rect,
    from: (i64, i64),
    to: (i64, i64),
    radius: i64,
) {
    let steps = (to.0 - from.0).abs().max((to.1 - from.1).abs()).max(1);
    for i in 0..=steps {
        let r = from.0 + (to.0 - from.0) * i / steps;
        let c = from.1 + (to.1 - from.1) * i / steps;
        stamp_disk(mask, clean, clip, r, c, radius);
    }
}

fn draw_stroke(
    mask: &mut BinaryImage,
    clean: &BinaryImage,
    spec: &PageSpec,
    rng: &mut ChaCha8Rng,
    clip: Rect,
) {
    let cs = spec.char_size as i64;
    let radius = rng.random_range(1..=2i64);
    let rand_in = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> i64 {
        if lo + 1 >= hi {
            lo as i64
        } else {
            rng.random_range(lo..hi) as i64
        }
    };
    let shape: f64 = rng.random();
    if shape < 0.5 {
        // polyline scribble with long segments
        let mut r = rand_in(rng, clip.top, clip.bottom);
        let mut c = rand_in(rng, clip.left, clip.right);
        let segments = rng.random_range(3..=5usize);
        for _ in 0..segments {
            let dr = rng.random_range(-3 * cs..=3 * cs);
            let mut dc = rng.random_range(-3 * cs..=3 * cs);
            if dr.abs() < cs * 3 / 2 && dc.abs() < cs * 3 / 2 {
                dc = if dc >= 0 { 2 * cs } else { -2 * cs };
            }
            let nr = (r + dr).clamp(clip.top as i64, clip.bottom as i64 - 1);
            let nc = (c + dc).clamp(clip.left as i64, clip.right as i64 - 1);
            stamp_segment(mask, clean, clip, (r, c), (nr, nc), radius);
            r = nr;
            c = nc;
        }
    } else if shape < 0.75 {
        // ellipse outline
        let rx = rng.random_range(cs * 3 / 2..=cs * 3);
        let ry = rng.random_range(cs..=cs * 2);
        let r0 = rand_in(rng, clip.top, clip.bottom);
        let c0 = rand_in(rng, clip.left, clip.right);
        let steps = (4 * (rx + ry)).max(16);
        let mut prev: Option<(i64, i64)> = None;
        for i in 0..=steps {
            let t = i as f64 / steps as f64 * std::f64::consts::TAU;
            let r = r0 + (ry as f64 * t.sin()).round() as i64;
            let c = c0 + (rx as f64 * t.cos()).round() as i64;
            if let Some(p) = prev {
                stamp_segment(mask, clean, clip, p, (r, c), radius);
            }
            prev = Some((r, c));
        }
    } else {
        // underline
        let len = rng.random_range(3 * cs..=6 * cs);
        let r = rand_in(rng, clip.top, clip.bottom);
        let c = rand_in(rng, clip.left, clip.right);
        stamp_segment(mask, clean, clip, (r, c), (r, c + len), radius);
    }
}

/// Locations cycled through the corpus; together they cover all five
/// standard bands (left, middle, right, top, bottom).
const CORPUS_LOCATIONS: [PageNumberLocation; 5] = [
    PageNumberLocation::BottomMiddle,
    PageNumberLocation::BottomLeft,
    PageNumberLocation::BottomRight,
    PageNumberLocation::TopMiddle,
    PageNumberLocation::TopLeft,
];

/// Deterministic corpus: document i uses seed `base_seed + i`, cycles the
/// annotation profiles, alternates header/chopped-word features, and cycles
/// the page-number location so every band appears throughout.
pub fn generate_corpus(
    count: usize,
    base_seed: u64,
    profiles: &[AnnotationProfile],
) -> Vec<GroundTruth> {
    (0..count)
        .map(|i| {
            let spec = corpus_page_spec(i, base_seed, profiles);
            generate(&spec).expect("corpus page specs are valid by construction")
        })
        .collect()
}

/// The spec for corpus document `i`; exposed so callers can regenerate a
/// single document without the whole corpus.
/// Keeps the geometry stream distinct from the content stream that
/// `generate` seeds with the bare page seed.
const GEOMETRY_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn corpus_page_spec(i: usize, base_seed: u64, profiles: &[AnnotationProfile]) -> PageSpec {
    let seed = base_seed.wrapping_add(i as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GEOMETRY_SALT);
    let width = rng.random_range(900..=1000usize);
    let height = rng.random_range(1150..=1250usize);
    let left = rng.random_range(width * 8 / 100..=width * 11 / 100);
    let right = width - rng.random_range(width * 8 / 100..=width * 11 / 100);
    let top = rng.random_range(height * 7 / 100..=height * 10 / 100);
    let bottom = height - rng.random_range(height * 7 / 100..=height * 10 / 100);
    let char_size = rng.random_range(12..=16usize);
    let line_pitch = 2 * char_size + rng.random_range(2..=6usize);
    // snap the body bottom to the last text line so the declared margins
    // match what is actually on the page
    let lines = (bottom - top - char_size) / line_pitch + 1;
    let bottom = top + (lines - 1) * line_pitch + char_size;
    let profile = if profiles.is_empty() {
        AnnotationProfile::None
    } else {
        profiles[i % profiles.len()]
    };
    PageSpec {
        width,
        height,
        margins: MarginBox {
            left,
            right,
            top,
            bottom,
        },
        char_size,
        line_pitch,
        seed,
        annotation_profile: profile,
        features: PageFeatures {
            header: i.is_multiple_of(2),
            page_number: Some(CORPUS_LOCATIONS[i % CORPUS_LOCATIONS.len()]),
            chopped_words: i % 2 == 1,
        },
    }
}

//! Connected-component labeling, printed-character metrics, and body
//! text-line detection.

use crate::error::{Error, Result};
use crate::profile::{project, Axis};
use crate::raster::{BinaryImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// One connected ink region. `pixels` is sorted row-major and `bbox` is its
/// tight bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: u32,
    pub bbox: Rect,
    pub pixel_count: usize,
    pub pixels: Vec<(usize, usize)>,
}

impl Component {
    pub fn height(&self) -> usize {
        self.bbox.height()
    }

    pub fn width(&self) -> usize {
        self.bbox.width()
    }

    /// Bounding-box vertical center in row units.
    pub fn row_center(&self) -> f64 {
        (self.bbox.top + self.bbox.bottom) as f64 / 2.0
    }

    pub fn col_center(&self) -> f64 {
        (self.bbox.left + self.bbox.right) as f64 / 2.0
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, keeps labels stable under scan order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels the connected ink regions of an image.
///
/// Output is deterministic: components are ordered by bounding box
/// `(top, left, bottom, right)` (first pixel as a final tiebreak) and labeled
/// densely from 1 in that order.
pub fn label_components(image: &BinaryImage, connectivity: Connectivity) -> Vec<Component> {
    let (width, height) = (image.width(), image.height());
    let mut provisional = vec![0u32; width * height]; // 0 = background
    let mut uf = UnionFind::new(1);
    let mut next = 1u32;

    for row in 0..height {
        for col in 0..width {
            if !image.get(row, col) {
                continue;
            }
            let mut neighbor_label = 0u32;
            let merge = |lbl: u32, uf: &mut UnionFind, current: &mut u32| {
                if *current == 0 {
                    *current = lbl;
                } else if lbl != 0 {
                    uf.union(*current, lbl);
                }
            };
            if col > 0 && image.get(row, col - 1) {
                merge(
                    provisional[row * width + col - 1],
                    &mut uf,
                    &mut neighbor_label,
                );
            }
            if row > 0 {
                if image.get(row - 1, col) {
                    merge(
                        provisional[(row - 1) * width + col],
                        &mut uf,
                        &mut neighbor_label,
                    );
                }
                if connectivity == Connectivity::Eight {
                    if col > 0 && image.get(row - 1, col - 1) {
                        merge(
                            provisional[(row - 1) * width + col - 1],
                            &mut uf,
                            &mut neighbor_label,
                        );
                    }
                    if col + 1 < width && image.get(row - 1, col + 1) {
                        merge(
                            provisional[(row - 1) * width + col + 1],
                            &mut uf,
                            &mut neighbor_label,
                        );
                    }
                }
            }
            if neighbor_label == 0 {
                neighbor_label = next;
                next += 1;
                uf.parent.push(neighbor_label);
            }
            provisional[row * width + col] = neighbor_label;
        }
    }

    // gather pixels per root in raster order
    let mut root_slot = vec![usize::MAX; next as usize];
    let mut gathered: Vec<Vec<(usize, usize)>> = Vec::new();
    for row in 0..height {
        for col in 0..width {
            let lbl = provisional[row * width + col];
            if lbl == 0 {
                continue;
            }
            let root = uf.find(lbl) as usize;
            if root_slot[root] == usize::MAX {
                root_slot[root] = gathered.len();
                gathered.push(Vec::new());
            }
            gathered[root_slot[root]].push((row, col));
        }
    }

    let mut components: Vec<Component> = gathered
        .into_iter()
        .map(|pixels| {
            let mut bbox = Rect::new(usize::MAX, 0, usize::MAX, 0);
            for &(row, col) in &pixels {
                bbox.top = bbox.top.min(row);
                bbox.bottom = bbox.bottom.max(row + 1);
                bbox.left = bbox.left.min(col);
                bbox.right = bbox.right.max(col + 1);
            }
            Component {
                label: 0,
                bbox,
                pixel_count: pixels.len(),
                pixels,
            }
        })
        .collect();
    components.sort_by_key(|c| {
        (
            c.bbox.top,
            c.bbox.left,
            c.bbox.bottom,
            c.bbox.right,
            c.pixels[0],
        )
    });
    for (i, c) in components.iter_mut().enumerate() {
        c.label = i as u32 + 1;
    }
    components
}

/// Robust printed-character size estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterMetrics {
    /// Representative printed-character height in pixels.
    pub char_size: usize,
    /// Representative horizontal gap between adjacent characters in a line.
    pub char_space: usize,
}

fn median(sorted: &[usize]) -> usize {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2
    }
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[usize], p: f64) -> usize {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// char_size: median bbox height over the [25th, 75th]-percentile height
/// band (drops ruling lines and specks). char_space: median horizontal gap
/// between horizontally adjacent components whose row ranges overlap; falls
/// back to char_size/2 when fewer than 3 gaps exist.
pub fn estimate_character_metrics(components: &[Component]) -> Result<CharacterMetrics> {
    if components.is_empty() {
        return Err(Error::DegenerateInput(
            "no components to estimate character metrics from".into(),
        ));
    }
    let mut heights: Vec<usize> = components.iter().map(|c| c.height()).collect();
    heights.sort_unstable();
    let lo = percentile(&heights, 0.25);
    let hi = percentile(&heights, 0.75);
    let banded: Vec<usize> = heights
        .iter()
        .copied()
        .filter(|&h| h >= lo && h <= hi)
        .collect();
    let char_size = median(&banded).max(1);

    let mut gaps: Vec<usize> = Vec::new();
    for c in components {
        // nearest component starting at or right of this one's right edge,
        // with overlapping row ranges
        let mut best: Option<usize> = None;
        for other in components {
            if other.label == c.label || other.bbox.left < c.bbox.right {
                continue;
            }
            let rows_overlap = other.bbox.top < c.bbox.bottom && c.bbox.top < other.bbox.bottom;
            if !rows_overlap {
                continue;
            }
            let gap = other.bbox.left - c.bbox.right;
            if best.is_none_or(|b| gap < b) {
                best = Some(gap);
            }
        }
        if let Some(gap) = best {
            gaps.push(gap);
        }
    }
    let char_space = if gaps.len() < 3 {
        char_size / 2
    } else {
        gaps.sort_unstable();
        median(&gaps)
    };
    Ok(CharacterMetrics {
        char_size,
        char_space,
    })
}

/// One detected body text line: a half-open row band, its member component
/// labels, and the horizontal extent of those members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextLine {
    pub row_band: (usize, usize),
    pub members: Vec<u32>,
    pub left_edge: usize,
    pub right_edge: usize,
}

/// Segments the body row profile at zero-valleys longer than char_size/2;
/// every trimmed segment becomes a line, components join by bbox vertical
/// center. Lines are ordered top to bottom.
pub fn detect_text_lines(
    body: &BinaryImage,
    components: &[Component],
    metrics: &CharacterMetrics,
) -> Vec<TextLine> {
    let profile = project(body, Axis::Row);
    let values = profile.values();
    let min_valley = metrics.char_size / 2;

    // segments of rows not separated by long zero-valleys
    let mut bands: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    let n = values.len();
    while row < n {
        if values[row] == 0 {
            row += 1;
            continue;
        }
        let start = row;
        let mut end = row + 1;
        let mut cursor = end;
        loop {
            // extend over nonzero rows and over zero runs short enough to stay inside
            while cursor < n && values[cursor] != 0 {
                cursor += 1;
            }
            end = cursor;
            let zero_start = cursor;
            while cursor < n && values[cursor] == 0 {
                cursor += 1;
            }
            let zero_len = cursor - zero_start;
            if cursor >= n || zero_len > min_valley {
                break;
            }
        }
        bands.push((start, end));
        row = cursor;
    }

    let mut lines: Vec<TextLine> = Vec::new();
    for (top, bottom) in bands {
        let mut members = Vec::new();
        let mut left_edge = usize::MAX;
        let mut right_edge = 0;
        for c in components {
            let center = c.row_center();
            if center >= top as f64 && center < bottom as f64 {
                members.push(c.label);
                left_edge = left_edge.min(c.bbox.left);
                right_edge = right_edge.max(c.bbox.right);
            }
        }
        if members.is_empty() {
            continue;
        }
        lines.push(TextLine {
            row_band: (top, bottom),
            members,
            left_edge,
            right_edge,
        });
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_image_has_no_components() {
        let img = BinaryImage::blank(8, 8).unwrap();
        assert!(label_components(&img, Connectivity::Eight).is_empty());
    }

    #[test]
    fn single_pixel_component() {
        let mut img = BinaryImage::blank(4, 4).unwrap();
        img.set(2, 1, true);
        let comps = label_components(&img, Connectivity::Four);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].label, 1);
        assert_eq!(comps[0].pixel_count, 1);
        assert_eq!(comps[0].bbox, Rect::new(1, 2, 2, 3));
    }

    #[test]
    fn diagonal_pixels_depend_on_connectivity() {
        let img = BinaryImage::from_rows(&["#.", ".#"]).unwrap();
        assert_eq!(label_components(&img, Connectivity::Eight).len(), 1);
        assert_eq!(label_components(&img, Connectivity::Four).len(), 2);
    }

    #[test]
    fn components_partition_the_ink() {
        let img = BinaryImage::from_rows(&["##..#", "#...#", "..#..", "#...#"]).unwrap();
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let comps = label_components(&img, conn);
            let mut all: Vec<(usize, usize)> = comps
                .iter()
                .flat_map(|c| c.pixels.iter().copied())
                .collect();
            all.sort_unstable();
            let ink: Vec<(usize, usize)> = img.ink_pixels().collect();
            assert_eq!(all, ink);
            for c in &comps {
                assert_eq!(c.pixel_count, c.pixels.len());
            }
        }
    }

    #[test]
    fn char_size_constant_heights() {
        let img = BinaryImage::from_rows(&["##.##.##", "##.##.##", "##.##.##"]).unwrap();
        let comps = label_components(&img, Connectivity::Eight);
        let m = estimate_character_metrics(&comps).unwrap();
        assert_eq!(m.char_size, 3);
        assert_eq!(m.char_space, 1);
    }

    #[test]
    fn char_size_percentile_band_drops_outlier() {
        // heights 8,10,10,10,60 via synthetic components
        let mk = |label: u32, top: usize, h: usize, left: usize| Component {
            label,
            bbox: Rect::new(left, left + 4, top, top + h),
            pixel_count: 4 * h,
            pixels: vec![(top, left)],
        };
        let comps = vec![
            mk(1, 0, 8, 0),
            mk(2, 0, 10, 10),
            mk(3, 0, 10, 20),
            mk(4, 0, 10, 30),
            mk(5, 0, 60, 40),
        ];
        let m = estimate_character_metrics(&comps).unwrap();
        assert_eq!(m.char_size, 10);
    }

    #[test]
    fn single_component_fallback() {
        let img = BinaryImage::from_rows(&["..", "##", "##", ".."]).unwrap();
        let comps = label_components(&img, Connectivity::Eight);
        let m = estimate_character_metrics(&comps).unwrap();
        assert_eq!(m.char_size, 2);
        assert_eq!(m.char_space, 1);
    }

    #[test]
    fn empty_components_error() {
        assert!(matches!(
            estimate_character_metrics(&[]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn text_lines_split_on_long_valleys() {
        // two bands of ink rows 2-4 and 10-12 in a 16-row image, char_size 4
        let mut img = BinaryImage::blank(20, 16).unwrap();
        for row in 2..5 {
            for col in 2..18 {
                img.set(row, col, true);
            }
        }
        for row in 10..13 {
            for col in 4..16 {
                img.set(row, col, true);
            }
        }
        let comps = label_components(&img, Connectivity::Eight);
        let metrics = CharacterMetrics {
            char_size: 4,
            char_space: 2,
        };
        let lines = detect_text_lines(&img, &comps, &metrics);
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].row_band, (2, 5));
        assert_eq!(lines[1].row_band, (10, 13));
        assert_eq!(lines[0].left_edge, 2);
        assert_eq!(lines[0].right_edge, 18);
    }

    #[test]
    fn short_valley_stays_one_line() {
        // gap of 2 rows <= char_size/2 = 3 keeps one band
        let mut img = BinaryImage::blank(10, 12).unwrap();
        for col in 0..10 {
            img.set(2, col, true);
            img.set(5, col, true);
        }
        let comps = label_components(&img, Connectivity::Eight);
        let metrics = CharacterMetrics {
            char_size: 6,
            char_space: 3,
        };
        let lines = detect_text_lines(&img, &comps, &metrics);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].row_band, (2, 6));
        assert_eq!(lines[0].members.len(), 2);
    }

    #[test]
    fn blank_body_has_no_lines() {
        let img = BinaryImage::blank(5, 5).unwrap();
        let metrics = CharacterMetrics {
            char_size: 3,
            char_space: 1,
        };
        assert!(detect_text_lines(&img, &[], &metrics).is_empty());
    }

    #[test]
    fn metrics_invariant_under_duplication() {
        let img = BinaryImage::from_rows(&["##.###.#", "##.###.#"]).unwrap();
        let comps = label_components(&img, Connectivity::Eight);
        let once = estimate_character_metrics(&comps).unwrap();
        let mut doubled = comps.clone();
        doubled.extend(comps.iter().cloned().map(|mut c| {
            c.label += 100;
            c
        }));
        let twice = estimate_character_metrics(&doubled).unwrap();
        assert_eq!(once, twice);
    }
}

//! Binary/grayscale image model, pixel-region algebra, and file I/O.
//!
//! Coordinates are `(row, col)` everywhere, row-major storage. Rows run along
//! the page height ("length"), columns along the page width. Ink is `true`
//! (black foreground); background is `false`.

mod codec;

use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Result<Self> {
        check_dims(width, height)?;
        Ok(GrayImage {
            width,
            height,
            samples: vec![fill; width * height],
        })
    }

    pub fn from_samples(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if samples.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "sample count {} does not match {}x{}",
                samples.len(),
                width,
                height
            )));
        }
        Ok(GrayImage {
            width,
            height,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        debug_assert!(row < self.height && col < self.width);
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        debug_assert!(row < self.height && col < self.width);
        self.samples[row * self.width + col] = value;
    }
}

/// Ink mask: `true` means black/foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    pub fn blank(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(BinaryImage {
            width,
            height,
            pixels: vec![false; width * height],
        })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(BinaryImage {
            width,
            height,
            pixels,
        })
    }

    /// Fixture helper: one string per row, `#` = ink, anything else background.
    /// All rows must share one length.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter("empty row fixture".into()));
        }
        let width = rows[0].len();
        let mut pixels = Vec::with_capacity(width * rows.len());
        for row in rows {
            if row.len() != width {
                return Err(Error::InvalidParameter("ragged row fixture".into()));
            }
            pixels.extend(row.bytes().map(|b| b == b'#'));
        }
        BinaryImage::from_pixels(width, rows.len(), pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ink: bool) {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col] = ink;
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.pixels.iter().any(|&p| p)
    }

    /// Iterator over `(row, col)` of every ink pixel, row-major order.
    pub fn ink_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(move |(i, _)| (i / width, i % width))
    }

    pub(crate) fn raw(&self) -> &[bool] {
        &self.pixels
    }

    /// Grayscale rendering with ink = 0, background = 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            samples: self
                .pixels
                .iter()
                .map(|&p| if p { 0 } else { 255 })
                .collect(),
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "image dimensions must be at least 1x1, got {}x{}",
            width, height
        )));
    }
    Ok(())
}

/// Half-open pixel rectangle: columns `[left, right)`, rows `[top, bottom)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
}

impl Rect {
    pub fn new(left: usize, right: usize, top: usize, bottom: usize) -> Self {
        Rect {
            left,
            right,
            top,
            bottom,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Rect {
            left: 0,
            right: width,
            top: 0,
            bottom: height,
        }
    }

    pub fn width(&self) -> usize {
        self.right - self.left
    }

    pub fn height(&self) -> usize {
        self.bottom - self.top
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.top && row < self.bottom && col >= self.left && col < self.right
    }

    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        if self.left < self.right
            && self.right <= width
            && self.top < self.bottom
            && self.bottom <= height
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "rect {:?} invalid for {}x{} image",
                self, width, height
            )))
        }
    }
}

/// Threshold selection for [`binarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinarizeMethod {
    /// Between-class-variance maximization over the 256-bin histogram.
    Otsu,
    /// Explicit threshold; must lie in `[0, 255]`.
    Fixed(u32),
}

/// A pixel is ink iff its luminance is strictly below the chosen threshold.
pub fn binarize(gray: &GrayImage, method: BinarizeMethod) -> Result<BinaryImage> {
    let threshold = match method {
        BinarizeMethod::Otsu => otsu_threshold(gray),
        BinarizeMethod::Fixed(t) => {
            if t > 255 {
                return Err(Error::InvalidParameter(format!(
                    "fixed threshold {} outside [0, 255]",
                    t
                )));
            }
            t
        }
    };
    let pixels = gray
        .samples
        .iter()
        .map(|&s| (s as u32) < threshold)
        .collect();
    BinaryImage::from_pixels(gray.width, gray.height, pixels)
}

/// Otsu threshold: sweeps every candidate `t`, splitting pixels into
/// `lum < t` and `lum >= t`, and maximizes the between-class variance.
/// Tie plateaus (common on two-level images) resolve to their midpoint.
pub fn otsu_threshold(gray: &GrayImage) -> u32 {
    let mut hist = [0u64; 256];
    for &s in &gray.samples {
        hist[s as usize] += 1;
    }
    let total = gray.samples.len() as f64;
    let total_weighted: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &n)| v as f64 * n as f64)
        .sum();

    let mut best = f64::NEG_INFINITY;
    let mut plateau_lo = 0u32;
    let mut plateau_hi = 0u32;
    let mut cum = 0f64;
    let mut cum_weighted = 0f64;
    for t in 0..=255u32 {
        // classes for threshold t: below = lum < t, above = lum >= t
        if t > 0 {
            let v = (t - 1) as usize;
            cum += hist[v] as f64;
            cum_weighted += v as f64 * hist[v] as f64;
        }
        let w0 = cum / total;
        let w1 = 1.0 - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = cum_weighted / cum;
        let mu1 = (total_weighted - cum_weighted) / (total - cum);
        let variance = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if variance > best + 1e-12 {
            best = variance;
            plateau_lo = t;
            plateau_hi = t;
        } else if (variance - best).abs() <= 1e-12 {
            plateau_hi = t;
        }
    }
    if best == f64::NEG_INFINITY {
        // uniform image: every split is degenerate, nothing is ink
        return 0;
    }
    (plateau_lo + plateau_hi) / 2
}

/// Returns a copy with every pixel inside `r` cleared to background.
pub fn clear_rect(image: &BinaryImage, r: Rect) -> Result<BinaryImage> {
    r.validate_for(image.width, image.height)?;
    let mut out = image.clone();
    for row in r.top..r.bottom {
        let base = row * out.width;
        out.pixels[base + r.left..base + r.right].fill(false);
    }
    Ok(out)
}

/// Returns a copy with the listed `(row, col)` pixels set to ink.
pub fn stamp_pixels(image: &BinaryImage, pixels: &[(usize, usize)]) -> Result<BinaryImage> {
    for &(row, col) in pixels {
        if row >= image.height || col >= image.width {
            return Err(Error::InvalidParameter(format!(
                "pixel ({}, {}) outside {}x{} image",
                row, col, image.width, image.height
            )));
        }
    }
    let mut out = image.clone();
    for &(row, col) in pixels {
        out.pixels[row * out.width + col] = true;
    }
    Ok(out)
}

/// Reads a PNG or PGM (P2/P5) file into a grayscale image. Color inputs are
/// converted with the BT.601 luma weighting.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    codec::read_auto(path.as_ref())
}

/// Writes a grayscale image; format chosen by extension (`.png` or `.pgm`).
pub fn save_image(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    codec::write_auto(image, path.as_ref())
}

/// Writes an ink mask with ink = 0 and background = 255.
pub fn save_binary_image(image: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    codec::write_auto(&image.to_gray(), path.as_ref())
}

/// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
#[inline]
pub(crate) fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().min(255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_all_white_otsu_has_no_ink() {
        let gray = GrayImage::new(8, 6, 255).unwrap();
        let bin = binarize(&gray, BinarizeMethod::Otsu).unwrap();
        assert_eq!(bin.ink_count(), 0);
    }

    #[test]
    fn binarize_all_black_fixed_is_all_ink() {
        let gray = GrayImage::new(5, 4, 0).unwrap();
        let bin = binarize(&gray, BinarizeMethod::Fixed(128)).unwrap();
        assert_eq!(bin.ink_count(), 20);
    }

    #[test]
    fn binarize_rejects_out_of_range_threshold() {
        let gray = GrayImage::new(2, 2, 10).unwrap();
        assert!(matches!(
            binarize(&gray, BinarizeMethod::Fixed(256)),
            Err(Error::InvalidParameter(_))
        ));
    }

    /// Independent oracle: evaluate every threshold's between-class variance
    /// directly from the sample list.
    fn sweep_oracle(samples: &[u8]) -> (u32, f64) {
        let n = samples.len() as f64;
        let mut best_t = 0u32;
        let mut best_v = f64::NEG_INFINITY;
        for t in 0..=255u32 {
            let below: Vec<f64> = samples
                .iter()
                .filter(|&&s| (s as u32) < t)
                .map(|&s| s as f64)
                .collect();
            let above: Vec<f64> = samples
                .iter()
                .filter(|&&s| (s as u32) >= t)
                .map(|&s| s as f64)
                .collect();
            if below.is_empty() || above.is_empty() {
                continue;
            }
            let w0 = below.len() as f64 / n;
            let w1 = above.len() as f64 / n;
            let mu0 = below.iter().sum::<f64>() / below.len() as f64;
            let mu1 = above.iter().sum::<f64>() / above.len() as f64;
            let v = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
            if v > best_v + 1e-12 {
                best_v = v;
                best_t = t;
            }
        }
        (best_t, best_v)
    }

    #[test]
    fn otsu_two_level_image_splits_between_levels() {
        let mut samples = vec![40u8; 30];
        samples.extend(vec![200u8; 34]);
        let gray = GrayImage::from_samples(8, 8, samples.clone()).unwrap();
        let t = otsu_threshold(&gray);
        assert!(
            t > 40 && t < 200,
            "threshold {} not strictly between levels",
            t
        );

        // must attain the oracle's maximum variance
        let (_, oracle_v) = sweep_oracle(&samples);
        let ours = {
            let below: Vec<f64> = samples
                .iter()
                .filter(|&&s| (s as u32) < t)
                .map(|&s| s as f64)
                .collect();
            let above: Vec<f64> = samples
                .iter()
                .filter(|&&s| (s as u32) >= t)
                .map(|&s| s as f64)
                .collect();
            let n = samples.len() as f64;
            let w0 = below.len() as f64 / n;
            let w1 = above.len() as f64 / n;
            let mu0 = below.iter().sum::<f64>() / below.len() as f64;
            let mu1 = above.iter().sum::<f64>() / above.len() as f64;
            w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
        };
        assert!((ours - oracle_v).abs() < 1e-9);

        let bin = binarize(&gray, BinarizeMethod::Otsu).unwrap();
        assert_eq!(bin.ink_count(), 30); // exactly the 40-valued pixels
    }

    #[test]
    fn clear_rect_full_image_clears_everything() {
        let img = BinaryImage::from_pixels(4, 4, vec![true; 16]).unwrap();
        let out = clear_rect(&img, Rect::full(4, 4)).unwrap();
        assert_eq!(out.ink_count(), 0);
    }

    #[test]
    fn clear_rect_left_columns() {
        let img = BinaryImage::from_pixels(4, 4, vec![true; 16]).unwrap();
        let out = clear_rect(&img, Rect::new(0, 2, 0, 4)).unwrap();
        assert_eq!(out.ink_count(), 8);
        for (_, col) in out.ink_pixels() {
            assert!(col >= 2);
        }
    }

    #[test]
    fn clear_rect_blank_is_blank() {
        let img = BinaryImage::blank(5, 5).unwrap();
        let out = clear_rect(&img, Rect::new(1, 3, 1, 3)).unwrap();
        assert!(out.is_blank());
    }

    #[test]
    fn clear_rect_rejects_out_of_bounds() {
        let img = BinaryImage::blank(4, 4).unwrap();
        assert!(clear_rect(&img, Rect::new(0, 5, 0, 4)).is_err());
    }

    #[test]
    fn stamp_pixels_counts_and_idempotence() {
        let img = BinaryImage::blank(4, 4).unwrap();
        let out = stamp_pixels(&img, &[(0, 0), (1, 2), (3, 3)]).unwrap();
        assert_eq!(out.ink_count(), 3);
        let again = stamp_pixels(&out, &[(0, 0)]).unwrap();
        assert_eq!(again, out);
        let empty = stamp_pixels(&out, &[]).unwrap();
        assert_eq!(empty, out);
    }

    #[test]
    fn stamp_pixels_rejects_out_of_bounds() {
        let img = BinaryImage::blank(4, 4).unwrap();
        assert!(stamp_pixels(&img, &[(4, 0)]).is_err());
    }

    #[test]
    fn clear_then_stamp_reconstructs() {
        let img = BinaryImage::from_rows(&["#..#", ".##.", "#..#"]).unwrap();
        let r = Rect::new(1, 3, 0, 2);
        let cleared = clear_rect(&img, r).unwrap();
        let removed: Vec<(usize, usize)> = img
            .ink_pixels()
            .filter(|&(row, col)| r.contains(row, col))
            .collect();
        let restored = stamp_pixels(&cleared, &removed).unwrap();
        assert_eq!(restored, img);
    }

    #[test]
    fn bt601_red_is_76() {
        assert_eq!(luma_bt601(255, 0, 0), 76);
    }

    #[test]
    fn fixed_threshold_is_monotone() {
        let samples: Vec<u8> = (0..=255u16).map(|v| (v % 251) as u8).collect();
        let gray = GrayImage::from_samples(16, 16, samples).unwrap();
        let low = binarize(&gray, BinarizeMethod::Fixed(50)).unwrap();
        let high = binarize(&gray, BinarizeMethod::Fixed(180)).unwrap();
        for (a, b) in low.raw().iter().zip(high.raw()) {
            assert!(!a | b, "ink at low threshold missing at high threshold");
        }
    }
}

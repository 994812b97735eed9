//! Scanner-noise removal at the page borders and global skew correction,
//! applied before margin analysis.

use crate::components::{label_components, Connectivity};
use crate::error::{Error, Result};
use crate::raster::{BinaryImage, Rect};

/// Window side for border-noise classification.
const NOISE_WINDOW: usize = 32;
/// A window is noise when its ink density exceeds this...
const NOISE_INK_DENSITY: f64 = 0.6;
/// ...while its Sobel-edge density stays at or below this. Solid scanner
/// shadows are nearly all ink with edges only on their contour; printed text
/// in the same band is edge-rich and far less dense.
const NOISE_EDGE_DENSITY: f64 = 0.5;

/// Skew search range in degrees (either direction).
const SKEW_RANGE: f64 = 15.0;
/// Coarse scan step in degrees.
const SKEW_STEP: f64 = 0.1;
/// Golden-section refinement stops below this interval width.
const SKEW_REFINE: f64 = 0.02;
/// Ink pixels used by the variance objective; denser pages are strided
/// down deterministically.
const SKEW_SAMPLE_CAP: usize = 60_000;

/// Estimated page skew. Positive angles are recovered by rotating the page
/// content back by the same amount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewEstimate {
    pub angle_degrees: f64,
    /// How peaked the profile-variance objective was over the scan, in [0, 1];
    /// near 0 means the angle is meaningless (e.g. a single ink pixel).
    pub confidence: f64,
}

/// Erases high-density, low-edge ink regions inside the four border bands of
/// width `band_fraction` x the corresponding page dimension. Pixels outside
/// the bands are never touched, and no ink is ever added.
pub fn remove_border_noise(image: &BinaryImage, band_fraction: f64) -> Result<BinaryImage> {
    if !(band_fraction > 0.0 && band_fraction <= 0.25) {
        return Err(Error::InvalidParameter(format!(
            "band fraction {} outside (0, 0.25]",
            band_fraction
        )));
    }
    if image.is_blank() {
        return Ok(image.clone());
    }
    let (width, height) = (image.width(), image.height());
    let band_cols = ((width as f64 * band_fraction).round() as usize).clamp(1, width);
    let band_rows = ((height as f64 * band_fraction).round() as usize).clamp(1, height);

    let bands = [
        Rect::new(0, width, 0, band_rows),               // top
        Rect::new(0, width, height - band_rows, height), // bottom
        Rect::new(0, band_cols, 0, height),              // left
        Rect::new(width - band_cols, width, 0, height),  // right
    ];
    let in_bands = |row: usize, col: usize| bands.iter().any(|b| b.contains(row, col));

    // nothing to do when no ink lies in the bands
    if !image.ink_pixels().any(|(r, c)| in_bands(r, c)) {
        return Ok(image.clone());
    }

    let edges = sobel_edges(image);

    // noise windows, tiled independently over each band (clipped at edges)
    let mut noise = vec![false; width * height];
    let mut any_noise = false;
    for band in &bands {
        let mut top = band.top;
        while top < band.bottom {
            let bottom = (top + NOISE_WINDOW).min(band.bottom);
            let mut left = band.left;
            while left < band.right {
                let right = (left + NOISE_WINDOW).min(band.right);
                let area = ((bottom - top) * (right - left)) as f64;
                let mut ink = 0usize;
                let mut edge = 0usize;
                for row in top..bottom {
                    for col in left..right {
                        if image.get(row, col) {
                            ink += 1;
                        }
                        if edges[row * width + col] {
                            edge += 1;
                        }
                    }
                }
                if ink as f64 / area > NOISE_INK_DENSITY && edge as f64 / area <= NOISE_EDGE_DENSITY
                {
                    any_noise = true;
                    for row in top..bottom {
                        noise[row * width + left..row * width + right].fill(true);
                    }
                }
                left = right;
            }
            top = bottom;
        }
    }
    if !any_noise {
        return Ok(image.clone());
    }

    // erase whole band-restricted ink regions that are mostly noise-classified
    let mut banded = BinaryImage::blank(width, height)?;
    for (row, col) in image.ink_pixels() {
        if in_bands(row, col) {
            banded.set(row, col, true);
        }
    }
    let mut out = image.clone();
    for region in label_components(&banded, Connectivity::Eight) {
        let in_noise = region
            .pixels
            .iter()
            .filter(|&&(r, c)| noise[r * width + c])
            .count();
        if in_noise * 2 >= region.pixel_count {
            for &(r, c) in &region.pixels {
                out.set(r, c, false);
            }
        }
    }
    Ok(out)
}

/// Edge mask from 3x3 Sobel kernels over the mask treated as {0, 255},
/// replicated at the image border. A pixel is an edge when the L1 gradient
/// magnitude is nonzero.
fn sobel_edges(image: &BinaryImage) -> Vec<bool> {
    let (width, height) = (image.width(), image.height());
    let sample = |row: isize, col: isize| -> i32 {
        let r = row.clamp(0, height as isize - 1) as usize;
        let c = col.clamp(0, width as isize - 1) as usize;
        if image.get(r, c) {
            255
        } else {
            0
        }
    };
    let mut edges = vec![false; width * height];
    for row in 0..height as isize {
        for col in 0..width as isize {
            let tl = sample(row - 1, col - 1);
            let tc = sample(row - 1, col);
            let tr = sample(row - 1, col + 1);
            let ml = sample(row, col - 1);
            let mr = sample(row, col + 1);
            let bl = sample(row + 1, col - 1);
            let bc = sample(row + 1, col);
            let br = sample(row + 1, col + 1);
            let gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
            let gy = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
            edges[row as usize * width + col as usize] = gx.abs() + gy.abs() > 0;
        }
    }
    edges
}

/// Rotates page content by `degrees` about the image center with
/// nearest-neighbor resampling. Canvas size is preserved: content leaving the
/// canvas is dropped, revealed areas are background.
pub fn rotate(image: &BinaryImage, degrees: f64) -> BinaryImage {
    let (width, height) = (image.width(), image.height());
    if degrees == 0.0 {
        return image.clone();
    }
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cy = (height as f64 - 1.0) / 2.0;
    let cx = (width as f64 - 1.0) / 2.0;
    let mut out = BinaryImage::blank(width, height).expect("dims already valid");
    for row in 0..height {
        for col in 0..width {
            let dr = row as f64 - cy;
            let dc = col as f64 - cx;
            // inverse mapping: rotate the output coordinate back by -degrees
            let src_r = cy + dr * cos - dc * sin;
            let src_c = cx + dr * sin + dc * cos;
            let r = src_r.round();
            let c = src_c.round();
            if r >= 0.0
                && c >= 0.0
                && (r as usize) < height
                && (c as usize) < width
                && image.get(r as usize, c as usize)
            {
                out.set(row, col, true);
            }
        }
    }
    out
}

/// Variance of the row projection profile after rotating the ink by
/// `-candidate` degrees (i.e. after applying the correction being tested).
fn correction_variance(ink: &[(usize, usize)], dims: (usize, usize), candidate: f64) -> f64 {
    let (width, height) = dims;
    let theta = (-candidate).to_radians();
    let (sin, cos) = theta.sin_cos();
    let cy = (height as f64 - 1.0) / 2.0;
    let cx = (width as f64 - 1.0) / 2.0;
    let mut counts = vec![0u32; height];
    for &(row, col) in ink {
        let dr = row as f64 - cy;
        let dc = col as f64 - cx;
        // forward map of the rotation applied to an input pixel
        let out_r = (cy + dr * cos + dc * sin).round();
        if out_r >= 0.0 && (out_r as usize) < height {
            counts[out_r as usize] += 1;
        }
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&v| v as f64).sum::<f64>() / n;
    counts
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n
}

/// Finds the angle in [-15, +15] degrees whose correction maximizes the row
/// profile variance: a 0.1-degree coarse scan followed by golden-section
/// refinement to 0.02 degrees.
pub fn estimate_skew(image: &BinaryImage) -> Result<SkewEstimate> {
    if image.is_blank() {
        return Err(Error::DegenerateInput(
            "cannot estimate skew of a blank image".into(),
        ));
    }
    let mut ink: Vec<(usize, usize)> = image.ink_pixels().collect();
    if ink.len() > SKEW_SAMPLE_CAP {
        let stride = ink.len().div_ceil(SKEW_SAMPLE_CAP);
        ink = ink.into_iter().step_by(stride).collect();
    }
    let dims = (image.width(), image.height());

    let steps = (2.0 * SKEW_RANGE / SKEW_STEP).round() as usize;
    let mut best_angle = -SKEW_RANGE;
    let mut best_var = f64::NEG_INFINITY;
    let mut sum_var = 0.0;
    for i in 0..=steps {
        let angle = -SKEW_RANGE + i as f64 * SKEW_STEP;
        let var = correction_variance(&ink, dims, angle);
        sum_var += var;
        // ties (flat plateaus around the optimum) resolve toward zero skew
        if var > best_var || (var == best_var && angle.abs() < best_angle.abs()) {
            best_var = var;
            best_angle = angle;
        }
    }
    let mean_var = sum_var / (steps + 1) as f64;
    let confidence = if best_var > 0.0 {
        ((best_var - mean_var) / best_var).clamp(0.0, 1.0)
    } else {
        0.0
    };

    // golden-section refinement around the coarse winner
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best_angle - SKEW_STEP).max(-SKEW_RANGE);
    let mut hi = (best_angle + SKEW_STEP).min(SKEW_RANGE);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = correction_variance(&ink, dims, x1);
    let mut f2 = correction_variance(&ink, dims, x2);
    while hi - lo > SKEW_REFINE {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = correction_variance(&ink, dims, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = correction_variance(&ink, dims, x1);
        }
    }
    Ok(SkewEstimate {
        angle_degrees: (lo + hi) / 2.0,
        confidence,
    })
}

/// Rotates the image by the negated estimate, undoing the measured skew.
pub fn deskew(image: &BinaryImage, estimate: &SkewEstimate) -> BinaryImage {
    rotate(image, -estimate.angle_degrees)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_page() -> BinaryImage {
        // several "text lines" inside a 160x200 page
        let mut img = BinaryImage::blank(160, 200).unwrap();
        for line in 0..8 {
            let top = 30 + line * 18;
            for row in top..top + 6 {
                for col in 20..140 {
                    if (col / 7) % 2 == 0 {
                        img.set(row, col, true);
                    }
                }
            }
        }
        img
    }

    #[test]
    fn denoise_rejects_bad_band_fraction() {
        let img = BinaryImage::blank(10, 10).unwrap();
        assert!(remove_border_noise(&img, 0.0).is_err());
        assert!(remove_border_noise(&img, 0.3).is_err());
    }

    #[test]
    fn denoise_blank_is_blank() {
        let img = BinaryImage::blank(64, 64).unwrap();
        let out = remove_border_noise(&img, 0.08).unwrap();
        assert!(out.is_blank());
    }

    #[test]
    fn denoise_erases_solid_edge_strip_and_keeps_center() {
        // 400x320 page: solid 20px scanner shadow on the left, text block center
        let mut img = BinaryImage::blank(400, 320).unwrap();
        for row in 0..320 {
            for col in 0..20 {
                img.set(row, col, true);
            }
        }
        let mut center_ink = 0;
        for row in 100..220 {
            for col in 120..280 {
                if (col / 5) % 2 == 0 && (row / 8) % 3 != 2 {
                    img.set(row, col, true);
                    center_ink += 1;
                }
            }
        }
        let out = remove_border_noise(&img, 0.08).unwrap();
        // the shadow is gone
        for row in 0..320 {
            for col in 0..20 {
                assert!(
                    !out.get(row, col),
                    "shadow pixel ({},{}) survived",
                    row,
                    col
                );
            }
        }
        // the text block is untouched
        let mut surviving = 0;
        for row in 100..220 {
            for col in 120..280 {
                if out.get(row, col) {
                    surviving += 1;
                }
            }
        }
        assert_eq!(surviving, center_ink);
    }

    #[test]
    fn denoise_never_adds_ink_and_skips_interior() {
        let img = text_page();
        let out = remove_border_noise(&img, 0.08).unwrap();
        assert_eq!(out, img); // all ink is interior
        for (a, b) in out.ink_pixels().zip(img.ink_pixels()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rotate_zero_is_identity() {
        let img = text_page();
        assert_eq!(rotate(&img, 0.0), img);
    }

    #[test]
    fn deskew_zero_estimate_is_identity() {
        let img = text_page();
        let est = SkewEstimate {
            angle_degrees: 0.0,
            confidence: 1.0,
        };
        assert_eq!(deskew(&img, &est), img);
    }

    #[test]
    fn estimate_skew_blank_is_degenerate() {
        let img = BinaryImage::blank(16, 16).unwrap();
        assert!(matches!(
            estimate_skew(&img),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn estimate_skew_single_pixel_has_no_confidence() {
        let mut img = BinaryImage::blank(32, 32).unwrap();
        img.set(16, 16, true);
        let est = estimate_skew(&img).unwrap();
        assert!(est.confidence < 0.05, "confidence {}", est.confidence);
    }

    #[test]
    fn estimate_skew_upright_page_is_near_zero() {
        let est = estimate_skew(&text_page()).unwrap();
        assert!(
            est.angle_degrees.abs() <= 0.1,
            "angle {}",
            est.angle_degrees
        );
    }

    #[test]
    fn estimate_skew_recovers_injected_rotation() {
        let rotated = rotate(&text_page(), 3.0);
        let est = estimate_skew(&rotated).unwrap();
        assert!(
            (2.5..=3.5).contains(&est.angle_degrees),
            "estimate {} out of range",
            est.angle_degrees
        );
    }

    #[test]
    fn deskew_round_trip_restores_uprightness() {
        let rotated = rotate(&text_page(), -3.0);
        let est = estimate_skew(&rotated).unwrap();
        let fixed = deskew(&rotated, &est);
        let re = estimate_skew(&fixed).unwrap();
        assert!(
            re.angle_degrees.abs() <= 0.5,
            "residual {}",
            re.angle_degrees
        );
    }

    #[test]
    fn rotate_all_ink_clears_corners_keeps_center() {
        let img = BinaryImage::from_pixels(40, 40, vec![true; 1600]).unwrap();
        let out = rotate(&img, 10.0);
        assert!(!out.get(0, 0));
        assert!(!out.get(0, 39));
        assert!(out.get(20, 20));
    }
}

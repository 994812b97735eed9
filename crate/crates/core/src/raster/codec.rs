//! PGM (P2/P5) and PNG carriers. PGM is written canonically so a P5
//! write/read/write cycle is byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{luma_bt601, GrayImage};

pub(crate) fn read_auto(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match bytes.first() {
        Some(0x89) if bytes.len() > 8 && &bytes[1..4] == b"PNG" => read_png(path, &bytes),
        Some(b'P') if bytes.len() > 2 && (bytes[1] == b'2' || bytes[1] == b'5') => {
            read_pgm(path, &bytes)
        }
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: not a PNG or PGM (P2/P5) file",
            path.display()
        ))),
    }
}

pub(crate) fn write_auto(image: &GrayImage, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("png") => write_png(image, path),
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => write_pgm(image, path),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: output must end in .png or .pgm",
            path.display()
        ))),
    }
}

// ---- PGM ----

struct PgmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmTokens<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn next(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos >= self.bytes.len() {
                return None;
            }
            if self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            let start = self.pos;
            while self.pos < self.bytes.len()
                && !self.bytes[self.pos].is_ascii_whitespace()
                && self.bytes[self.pos] != b'#'
            {
                self.pos += 1;
            }
            return Some(&self.bytes[start..self.pos]);
        }
    }

    fn next_usize(&mut self) -> Option<usize> {
        std::str::from_utf8(self.next()?).ok()?.parse().ok()
    }
}

fn read_pgm(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let badly = |msg: &str| Error::UnsupportedFormat(format!("{}: {}", path.display(), msg));
    let binary = bytes[1] == b'5';
    let mut tokens = PgmTokens {
        bytes,
        pos: 2, // past magic
    };
    let width = tokens.next_usize().ok_or_else(|| badly("missing width"))?;
    let height = tokens.next_usize().ok_or_else(|| badly("missing height"))?;
    let maxval = tokens.next_usize().ok_or_else(|| badly("missing maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(badly(&format!(
            "maxval {} unsupported (only 8-bit PGM)",
            maxval
        )));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| badly("dimensions overflow"))?;

    let samples = if binary {
        // single whitespace byte separates maxval from raster
        let start = tokens.pos + 1;
        let end = start
            .checked_add(count)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| badly("truncated P5 raster"))?;
        bytes[start..end].to_vec()
    } else {
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let v = tokens
                .next_usize()
                .ok_or_else(|| badly("truncated P2 raster"))?;
            if v > maxval {
                return Err(badly(&format!("sample {} exceeds maxval {}", v, maxval)));
            }
            samples.push(v as u8);
        }
        samples
    };
    GrayImage::from_samples(width, height, samples)
}

fn write_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| {
        write!(w, "P5\n{} {}\n255\n", image.width(), image.height())?;
        w.write_all(image.samples())?;
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

// ---- PNG ----

fn read_png(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let badly = |msg: String| Error::UnsupportedFormat(format!("{}: {}", path.display(), msg));
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    // expand palettes to RGB so indexed files still load
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| badly(format!("PNG decode failed: {}", e)))?;
    let mut buf = vec![
        0u8;
        reader
            .output_buffer_size()
            .ok_or_else(|| badly("output size overflow".into()))?
    ];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| badly(format!("PNG decode failed: {}", e)))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(badly(format!(
            "bit depth {:?} unsupported (only 8-bit grayscale or RGB)",
            info.bit_depth
        )));
    }
    let width = info.width as usize;
    let height = info.height as usize;
    let data = &buf[..info.buffer_size()];
    let samples: Vec<u8> = match info.color_type {
        png::ColorType::Grayscale => data.to_vec(),
        png::ColorType::GrayscaleAlpha => data.chunks_exact(2).map(|px| px[0]).collect(),
        png::ColorType::Rgb => data
            .chunks_exact(3)
            .map(|px| luma_bt601(px[0], px[1], px[2]))
            .collect(),
        png::ColorType::Rgba => data
            .chunks_exact(4)
            .map(|px| luma_bt601(px[0], px[1], px[2]))
            .collect(),
        other => {
            return Err(badly(format!("color type {:?} unsupported", other)));
        }
    };
    GrayImage::from_samples(width, height, samples)
}

fn write_png(image: &GrayImage, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let w = BufWriter::new(file);
    let mut encoder = png::Encoder::new(w, image.width() as u32, image.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::UnsupportedFormat(format!("{}: PNG encode: {}", path.display(), e)))?;
    writer
        .write_image_data(image.samples())
        .map_err(|e| Error::UnsupportedFormat(format!("{}: PNG encode: {}", path.display(), e)))
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use std::fs;

    fn temp_dir(tag: &str) -> std::path::PathBuf {
        let dir =
            std::env::temp_dir().join(format!("marginalia-codec-{}-{}", tag, std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn pgm_p2_single_sample() {
        let dir = temp_dir("p2");
        let path = dir.join("one.pgm");
        fs::write(&path, b"P2\n# tiny\n1 1\n255\n7\n").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.samples(), &[7]);
    }

    #[test]
    fn pgm_p5_round_trip_is_byte_exact() {
        let dir = temp_dir("p5");
        let path = dir.join("a.pgm");
        let img = GrayImage::from_samples(3, 2, vec![0, 255, 7, 130, 9, 64]).unwrap();
        save_image(&img, &path).unwrap();
        let loaded = load_image(&path).unwrap();
        assert_eq!(loaded, img);
        let first = fs::read(&path).unwrap();
        let again = dir.join("b.pgm");
        save_image(&loaded, &again).unwrap();
        assert_eq!(first, fs::read(&again).unwrap());
    }

    #[test]
    fn png_round_trip_checkerboard() {
        let dir = temp_dir("png");
        let path = dir.join("c.png");
        let img = BinaryImage::from_rows(&["#.#", ".#."]).unwrap();
        save_binary_image(&img, &path).unwrap();
        let loaded = load_image(&path).unwrap();
        let rebin = binarize(&loaded, BinarizeMethod::Fixed(128)).unwrap();
        assert_eq!(rebin, img);
    }

    #[test]
    fn png_rgb_converts_via_bt601() {
        let dir = temp_dir("rgb");
        let path = dir.join("rgb.png");
        // 2x1: pure red and pure white
        let file = fs::File::create(&path).unwrap();
        let mut encoder = png::Encoder::new(std::io::BufWriter::new(file), 2, 1);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().unwrap();
        writer
            .write_image_data(&[255, 0, 0, 255, 255, 255])
            .unwrap();
        drop(writer);

        let img = load_image(&path).unwrap();
        assert_eq!(img.samples(), &[76, 255]); // round(0.299 * 255) = 76
    }

    #[test]
    fn write_to_missing_directory_is_io_error() {
        let img = GrayImage::new(2, 2, 0).unwrap();
        let err = save_image(&img, "/nonexistent-dir-zz/x.pgm").unwrap_err();
        assert!(matches!(err, crate::error::Error::Io { .. }));
    }

    #[test]
    fn garbage_file_is_unsupported() {
        let dir = temp_dir("junk");
        let path = dir.join("junk.bin");
        fs::write(&path, b"not an image at all").unwrap();
        assert!(matches!(
            load_image(&path),
            Err(crate::error::Error::UnsupportedFormat(_))
        ));
    }
}

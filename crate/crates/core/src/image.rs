//! Grayscale images and binary PGM (P5) I/O.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grayscale frame with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image, checking the size/length invariant and value range.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "image {}x{} needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(
                "pixel intensity outside [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// All-zero image of the given size.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x] = value;
    }

    /// Writes the image as binary PGM, quantizing intensities to 8 bits.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a binary PGM file written by [`Image::write_pgm`] (or any 8-bit P5).
    pub fn read_pgm(path: &Path) -> Result<Self> {
        let data = fs::read(path)?;
        let bad = |message: &str| Error::MalformedDataset {
            path: path.display().to_string(),
            message: message.to_string(),
        };

        let mut pos = 0usize;
        let mut next_token = |data: &[u8]| -> Result<String> {
            // Skip whitespace and `#` comment lines between header tokens.
            loop {
                while pos < data.len() && data[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < data.len() && data[pos] == b'#' {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
        };

        if next_token(&data)? != "P5" {
            return Err(bad("not a binary PGM (missing P5 magic)"));
        }
        let width: usize = next_token(&data)?
            .parse()
            .map_err(|_| bad("bad width"))?;
        let height: usize = next_token(&data)?
            .parse()
            .map_err(|_| bad("bad height"))?;
        let maxval: usize = next_token(&data)?
            .parse()
            .map_err(|_| bad("bad maxval"))?;
        if maxval != 255 {
            return Err(bad("only 8-bit PGM supported"));
        }
        // Exactly one whitespace byte separates the header from raster data.
        pos += 1;
        let need = width * height;
        if data.len() < pos + need {
            return Err(bad("truncated raster"));
        }
        let pixels = data[pos..pos + need]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        Image::new(width, height, pixels).map_err(|_| bad("invalid dimensions"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_size_mismatch() {
        assert!(Image::new(4, 4, vec![0.0; 15]).is_err());
        assert!(Image::new(0, 4, vec![]).is_err());
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::new(2, 1, vec![0.5, 1.2]).is_err());
        assert!(Image::new(2, 1, vec![-0.1, 0.2]).is_err());
    }

    #[test]
    fn pgm_round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.pgm");
        let pixels: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        let img = Image::new(4, 3, pixels).unwrap();
        img.write_pgm(&path).unwrap();
        let back = Image::read_pgm(&path).unwrap();
        // Quantization already happened on write; a second trip is lossless.
        back.write_pgm(&path).unwrap();
        let again = Image::read_pgm(&path).unwrap();
        assert_eq!(back, again);
        assert_eq!(back.width(), 4);
        assert_eq!(back.height(), 3);
    }

    #[test]
    fn pgm_reader_reports_offending_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.pgm");
        std::fs::write(&path, b"P5\n4 3\n255\nxx").unwrap();
        let err = Image::read_pgm(&path).unwrap_err();
        assert!(err.to_string().contains("broken.pgm"));
    }
}

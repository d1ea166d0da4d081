//! Grayscale intensity images and PGM/PNG input.

use std::path::Path;

use image::{ColorType, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// A row-major grid of non-negative intensities.
///
/// 8-bit inputs are widened to `f64` on load so that binary comparisons and
/// gradient arithmetic operate on the same representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidImage(format!(
                "intensity {bad} is not a finite non-negative value"
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Applies `f` to every intensity. The result must stay finite and non-negative.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.pixels.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn ensure_min_size(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min,
            });
        }
        Ok(())
    }

    /// Rounds and clamps intensities into 8-bit values.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
    }

    /// Writes the image as an 8-bit binary PGM (P5), rounding and clamping intensities.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        image::save_buffer_with_format(
            path,
            &self.to_u8(),
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
            ImageFormat::Pnm,
        )
        .map_err(|e| image_error(path, e))
    }
}

/// Loads an 8-bit grayscale PGM or PNG file.
///
/// Color or 16-bit inputs are rejected rather than converted.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Pnm) | Some(ImageFormat::Png) => {}
        other => {
            return Err(Error::UnsupportedImage {
                path: path.to_path_buf(),
                reason: format!("format {other:?} is not PGM or PNG"),
            })
        }
    }
    let decoded = reader.decode().map_err(|e| image_error(path, e))?;
    if decoded.color() != ColorType::L8 {
        return Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("expected 8-bit grayscale, found {:?}", decoded.color()),
        });
    }
    let gray = decoded.into_luma8();
    let (w, h) = gray.dimensions();
    Image::from_u8(w as usize, h as usize, gray.as_raw())
}

fn image_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

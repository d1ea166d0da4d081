//! Gradient-domain maps: gradient fields, orientation (IGO), magnitude (IGM),
//! four-bin sign codes and orientational gradient magnitude (OIGM) channels.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::image::Image;

/// Horizontal and vertical derivatives, same dimensions as the source image.
///
/// `gx` follows increasing column index and `gy` increasing row index.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl GradientField {
    pub fn from_parts(width: usize, height: usize, gx: Vec<f64>, gy: Vec<f64>) -> Result<Self> {
        for len in [gx.len(), gy.len()] {
            if len != width * height {
                return Err(Error::DimensionMismatch {
                    left: len,
                    right: width * height,
                });
            }
        }
        Ok(Self { width, height, gx, gy })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }
}

/// Per-pixel angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationMap {
    pub width: usize,
    pub height: usize,
    pub theta: Vec<f64>,
}

/// Per-pixel gradient magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeMap {
    pub width: usize,
    pub height: usize,
    pub m: Vec<f64>,
}

/// Central differences in the interior, one-sided differences on the outermost rows and columns.
pub fn compute_gradients(image: &Image) -> Result<GradientField> {
    image.ensure_min_size(3)?;
    let (w, h) = (image.width(), image.height());
    let px = image.pixels();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];

    for row in 0..h {
        let line = &px[row * w..(row + 1) * w];
        let out = &mut gx[row * w..(row + 1) * w];
        out[0] = line[1] - line[0];
        for col in 1..w - 1 {
            out[col] = (line[col + 1] - line[col - 1]) / 2.0;
        }
        out[w - 1] = line[w - 1] - line[w - 2];
    }

    for col in 0..w {
        gy[col] = px[w + col] - px[col];
        gy[(h - 1) * w + col] = px[(h - 1) * w + col] - px[(h - 2) * w + col];
    }
    for row in 1..h - 1 {
        for col in 0..w {
            gy[row * w + col] = (px[(row + 1) * w + col] - px[(row - 1) * w + col]) / 2.0;
        }
    }

    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
    })
}

/// Four-quadrant angle of `(gx, gy)` in `[0, 2π)`; zero vectors map to 0.
#[inline]
pub fn orientation(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let mut theta = gy.atan2(gx) + 0.0;
    if theta < 0.0 {
        theta += TAU;
    }
    if theta >= TAU {
        theta = 0.0;
    }
    theta
}

/// Image gradient orientation.
pub fn igo(field: &GradientField) -> OrientationMap {
    OrientationMap {
        width: field.width,
        height: field.height,
        theta: field
            .gx
            .iter()
            .zip(&field.gy)
            .map(|(&x, &y)| orientation(x, y))
            .collect(),
    }
}

/// Two-bit sign code `(sign(gy) << 1) | sign(gx)`, where a component `>= 0` contributes 1.
#[inline]
pub fn quadrant_code(gx: f64, gy: f64) -> u8 {
    (u8::from(gy >= 0.0) << 1) | u8::from(gx >= 0.0)
}

/// Four-bin IGO quantization as two-bit gradient-sign codes, row-major.
pub fn quantize_igo_four(field: &GradientField) -> Vec<u8> {
    field
        .gx
        .iter()
        .zip(&field.gy)
        .map(|(&x, &y)| quadrant_code(x, y))
        .collect()
}

/// Image gradient magnitude.
pub fn igm(field: &GradientField) -> MagnitudeMap {
    MagnitudeMap {
        width: field.width,
        height: field.height,
        m: field.gx.iter().zip(&field.gy).map(|(&x, &y)| x.hypot(y)).collect(),
    }
}

/// Equal-width bin of `theta` among `s` bins covering `[0, 2π)`.
#[inline]
pub fn dominant_orientation(theta: f64, s: usize) -> usize {
    debug_assert!(s >= 1);
    let bin = (theta * s as f64 / TAU).floor();
    if bin <= 0.0 {
        0
    } else {
        (bin as usize).min(s - 1)
    }
}

/// Orientational gradient magnitude channels.
#[derive(Debug, Clone, PartialEq)]
pub struct OigmStack {
    channels: Vec<Image>,
    window: usize,
}

impl OigmStack {
    pub fn channels(&self) -> &[Image] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Image> {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Pixel count `n = window²` used as the averaging divisor.
    pub fn window_area(&self) -> usize {
        self.window * self.window
    }
}

/// Builds `s` OIGM channels: channel `t` at a pixel is the sum of gradient
/// magnitudes over the `window x window` neighbourhood restricted to pixels
/// whose dominant orientation is `t`, divided by `window²`.
///
/// Windows are clipped at the image border while the divisor stays `window²`.
pub fn build_oigm(image: &Image, s: usize, window: usize) -> Result<OigmStack> {
    if s == 0 {
        return Err(Error::InvalidParameter(
            "OIGM needs at least one orientation channel".into(),
        ));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "OIGM window must be odd and positive, got {window}"
        )));
    }
    let field = compute_gradients(image)?;
    let (w, h) = (field.width, field.height);
    let mags = igm(&field).m;
    let bins: Vec<usize> = igo(&field).theta.iter().map(|&t| dominant_orientation(t, s)).collect();
    let half = window / 2;
    let n = (window * window) as f64;

    let mut channels = Vec::with_capacity(s);
    let mut masked = vec![0.0; w * h];
    let mut horizontal = vec![0.0; w * h];
    for t in 0..s {
        for (dst, (&m, &b)) in masked.iter_mut().zip(mags.iter().zip(&bins)) {
            *dst = if b == t { m } else { 0.0 };
        }
        // Separable clipped box sum: rows first, then columns.
        for row in 0..h {
            let src = &masked[row * w..(row + 1) * w];
            let dst = &mut horizontal[row * w..(row + 1) * w];
            for (col, d) in dst.iter_mut().enumerate() {
                let lo = col.saturating_sub(half);
                let hi = (col + half).min(w - 1);
                *d = src[lo..=hi].iter().sum();
            }
        }
        let mut out = vec![0.0; w * h];
        for row in 0..h {
            let lo = row.saturating_sub(half);
            let hi = (row + half).min(h - 1);
            for col in 0..w {
                let sum: f64 = (lo..=hi).map(|r| horizontal[r * w + col]).sum();
                out[row * w + col] = sum / n;
            }
        }
        channels.push(Image::new(w, h, out)?);
    }
    Ok(OigmStack { channels, window })
}

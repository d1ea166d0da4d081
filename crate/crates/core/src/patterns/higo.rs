//! Histogram-of-IGO baseline: per-pixel orientation bins.

use crate::error::{Error, Result};
use crate::gradient::{compute_gradients, dominant_orientation, igo};
use crate::grid::LabelMap;
use crate::image::Image;

/// Equal-width IGO bin per pixel over the full image.
pub fn higo_map(image: &Image, bins: usize) -> Result<LabelMap> {
    if bins == 0 {
        return Err(Error::InvalidParameter("HIGO needs at least one bin".into()));
    }
    let orientation = igo(&compute_gradients(image)?);
    let labels = orientation
        .theta
        .iter()
        .map(|&t| dominant_orientation(t, bins) as u32)
        .collect();
    LabelMap::new(orientation.width, orientation.height, labels)
}

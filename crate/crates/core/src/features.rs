//! Block histogram features, including the multi-channel SBGPM pipeline.

use crate::error::{Error, Result};
use crate::gradient::build_oigm;
use crate::grid::{make_block_grid, FeatureLayout, FeatureVector, LabelMap, Rect, NON_STRUCTURAL};
use crate::image::Image;
use crate::patterns::{Descriptor, OpCounter};

/// Histogram normalization applied to each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Each block's histogram sums to 1 (empty blocks stay zero).
    #[default]
    PerBlockL1,
    None,
}

/// Orientational gradient magnitude settings for SBGPM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OigmParams {
    pub channels: usize,
    pub window: usize,
}

impl Default for OigmParams {
    fn default() -> Self {
        Self { channels: 3, window: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractorConfig {
    pub descriptor: Descriptor,
    /// `(n_blocks_x, n_blocks_y)`.
    pub blocks: (usize, usize),
    /// Runs the descriptor on OIGM channels instead of intensities (SBGP only).
    pub sbgpm: Option<OigmParams>,
    pub normalization: Normalization,
    pub sqrt_transform: bool,
}

impl ExtractorConfig {
    pub fn new(descriptor: Descriptor, blocks_x: usize, blocks_y: usize) -> Self {
        Self {
            descriptor,
            blocks: (blocks_x, blocks_y),
            sbgpm: None,
            normalization: Normalization::default(),
            sqrt_transform: false,
        }
    }

    pub fn with_sbgpm(mut self, params: OigmParams) -> Self {
        self.sbgpm = Some(params);
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_sqrt(mut self, on: bool) -> Self {
        self.sqrt_transform = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.descriptor.validate()?;
        if self.sbgpm.is_some() && !matches!(self.descriptor, Descriptor::Sbgp(_)) {
            return Err(Error::InvalidParameter(
                "SBGPM channels require the SBGP descriptor".into(),
            ));
        }
        if self.blocks.0 == 0 || self.blocks.1 == 0 {
            return Err(Error::InvalidParameter("block counts must be positive".into()));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.sbgpm.map_or(1, |p| p.channels)
    }

    /// Layout of the vectors this configuration produces; independent of image size.
    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            channels: self.channels(),
            blocks: self.blocks.0 * self.blocks.1,
            bins: self.descriptor.n_bins(),
        }
    }

    pub fn dims(&self) -> usize {
        self.layout().dims()
    }

    /// Short name such as `sbgp` or `sbgpm`.
    pub fn name(&self) -> &'static str {
        if self.sbgpm.is_some() {
            "sbgpm"
        } else {
            self.descriptor.name()
        }
    }
}

/// Counts the labels inside `rect`; [`NON_STRUCTURAL`] pixels are skipped.
pub fn block_histogram(map: &LabelMap, rect: Rect, n_bins: usize) -> Result<Vec<u32>> {
    if rect.x + rect.width > map.width() || rect.y + rect.height > map.height() {
        return Err(Error::RectOutOfBounds {
            rect,
            width: map.width(),
            height: map.height(),
        });
    }
    let mut hist = vec![0u32; n_bins];
    for row in rect.y..rect.y + rect.height {
        let line = &map.labels()[row * map.width() + rect.x..][..rect.width];
        for &label in line {
            if label == NON_STRUCTURAL {
                continue;
            }
            let slot = hist
                .get_mut(label as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("label {label} outside a {n_bins}-bin histogram")))?;
            *slot += 1;
        }
    }
    Ok(hist)
}

fn append_block_histograms(map: &LabelMap, cfg: &ExtractorConfig, out: &mut Vec<f64>) -> Result<()> {
    let grid = make_block_grid(map.width(), map.height(), cfg.blocks.0, cfg.blocks.1)?;
    let n_bins = cfg.descriptor.n_bins();
    for &rect in grid.rects() {
        let hist = block_histogram(map, rect, n_bins)?;
        let total: u32 = hist.iter().sum();
        match cfg.normalization {
            Normalization::PerBlockL1 if total > 0 => {
                let total = f64::from(total);
                out.extend(hist.iter().map(|&c| f64::from(c) / total));
            }
            _ => out.extend(hist.iter().map(|&c| f64::from(c))),
        }
    }
    Ok(())
}

/// Extracts a feature vector in `(channel, block, bin)` order.
pub fn extract_counted<C: OpCounter>(image: &Image, cfg: &ExtractorConfig, counter: &mut C) -> Result<FeatureVector> {
    cfg.validate()?;
    let layout = cfg.layout();
    let mut values = Vec::with_capacity(layout.dims());
    match cfg.sbgpm {
        None => {
            let map = cfg.descriptor.label_map_counted(image, counter)?;
            append_block_histograms(&map, cfg, &mut values)?;
        }
        Some(params) => {
            let stack = build_oigm(image, params.channels, params.window)?;
            for channel in stack.channels() {
                let map = cfg.descriptor.label_map_counted(channel, counter)?;
                append_block_histograms(&map, cfg, &mut values)?;
            }
        }
    }
    let vector = FeatureVector::new(values, layout)?;
    if cfg.sqrt_transform {
        sqrt_transform(&vector)
    } else {
        Ok(vector)
    }
}

pub fn extract(image: &Image, cfg: &ExtractorConfig) -> Result<FeatureVector> {
    extract_counted(image, cfg, &mut ())
}

/// Element-wise square root, layout preserved.
pub fn sqrt_transform(v: &FeatureVector) -> Result<FeatureVector> {
    if let Some(bad) = v.values().iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "square root of negative feature value {bad}"
        )));
    }
    FeatureVector::new(v.values().iter().map(|x| x.sqrt()).collect(), v.layout())
}

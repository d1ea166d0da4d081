//! Value types shared by the operators: resolutions, label maps, block
//! grids and feature vectors.

use crate::error::{Error, Result};

/// Label stored for pixels whose pattern is discarded (never counted in a histogram).
pub const NON_STRUCTURAL: u32 = u32::MAX;

/// Largest supported SBGP radius. `k = 4R` principal bits must fit a 16-bit label.
pub const MAX_RADIUS: usize = 4;

/// Square-perimeter sampling `(P, R)` with the maximal neighbour count `P = 8R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpatialResolution {
    neighbors: usize,
    radius: usize,
}

impl SpatialResolution {
    pub fn new(neighbors: usize, radius: usize) -> Result<Self> {
        let fail = |reason| Error::InvalidResolution {
            neighbors,
            radius,
            reason,
        };
        if radius == 0 {
            return Err(fail("radius must be at least 1"));
        }
        if radius > MAX_RADIUS {
            return Err(fail("radius larger than 4 is not supported"));
        }
        if neighbors != 8 * radius {
            return Err(fail("neighbour count must equal 8 * radius"));
        }
        Ok(Self { neighbors, radius })
    }

    pub fn from_radius(radius: usize) -> Result<Self> {
        Self::new(8 * radius, radius)
    }

    /// `P`, the number of perimeter neighbours.
    #[inline]
    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    /// `R`, the half side of the sampling square.
    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `k = P / 2`, the number of antipodal directions (principal bits).
    #[inline]
    pub fn directions(&self) -> usize {
        self.neighbors / 2
    }
}

/// Per-pixel labels over the interior of a source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: width * height,
            });
        }
        Ok(Self { width, height, labels })
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
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn non_structural_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NON_STRUCTURAL).count()
    }

    pub fn non_structural_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.non_structural_count() as f64 / self.labels.len() as f64
    }
}

/// Pixel rectangle; `x` is the column and `y` the row of its top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.y..self.y + self.height).contains(&row) && (self.x..self.x + self.width).contains(&col)
    }
}

/// Non-overlapping tiling of a label map, rectangles in row-major block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    n_blocks_x: usize,
    n_blocks_y: usize,
    rects: Vec<Rect>,
}

impl BlockGrid {
    pub fn n_blocks_x(&self) -> usize {
        self.n_blocks_x
    }

    pub fn n_blocks_y(&self) -> usize {
        self.n_blocks_y
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }
}

/// Splits `extent` into `parts` spans; the first `extent % parts` spans get one extra pixel.
fn split_extent(extent: usize, parts: usize) -> Vec<(usize, usize)> {
    let base = extent / parts;
    let extra = extent % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let span = (start, len);
            start += len;
            span
        })
        .collect()
}

/// Tiles a `width x height` label map with `n_blocks_x * n_blocks_y` rectangles.
pub fn make_block_grid(width: usize, height: usize, n_blocks_x: usize, n_blocks_y: usize) -> Result<BlockGrid> {
    for (extent, blocks) in [(width, n_blocks_x), (height, n_blocks_y)] {
        if blocks == 0 || blocks > extent {
            return Err(Error::TooManyBlocks { extent, blocks });
        }
    }
    let cols = split_extent(width, n_blocks_x);
    let rows = split_extent(height, n_blocks_y);
    let rects = rows
        .iter()
        .flat_map(|&(y, h)| {
            cols.iter().map(move |&(x, w)| Rect {
                x,
                y,
                width: w,
                height: h,
            })
        })
        .collect();
    Ok(BlockGrid {
        n_blocks_x,
        n_blocks_y,
        rects,
    })
}

/// Ordering descriptor of a feature vector: `(channel, block, bin)`, bins fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub channels: usize,
    pub blocks: usize,
    pub bins: usize,
}

impl FeatureLayout {
    pub fn dims(&self) -> usize {
        self.channels * self.blocks * self.bins
    }

    /// Flat index of `(channel, block, bin)`.
    pub fn index(&self, channel: usize, block: usize, bin: usize) -> usize {
        (channel * self.blocks + block) * self.bins + bin
    }
}

/// Concatenated block histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    layout: FeatureLayout,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, layout: FeatureLayout) -> Result<Self> {
        if values.len() != layout.dims() {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: layout.dims(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "feature value {v} is not finite and non-negative"
            )));
        }
        Ok(Self { values, layout })
    }

    /// A single-channel, single-block vector; convenient for raw histograms.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let layout = FeatureLayout {
            channels: 1,
            blocks: 1,
            bins: values.len(),
        };
        Self::new(values, layout)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    /// Multiplies every value by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect(), self.layout)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

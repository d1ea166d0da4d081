//! Structural binary gradient patterns (SBGP) for grayscale images.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`] and [`image`]: value types shared by every operator (images,
//!   spatial resolutions, label maps, block grids, feature vectors).
//! - [`gradient`]: gradient fields, orientation/magnitude maps and the
//!   orientational gradient magnitude (OIGM) channels.
//! - [`patterns`]: the SBGP operator and the LBP, CS-LBP and HIGO baselines.
//! - [`features`]: block histograms, the SBGPM multi-channel pipeline and
//!   feature post-processing.
//! - [`matching`]: similarity measures, nearest-neighbour identification and
//!   fold-based pair verification.

pub mod error;
pub mod features;
pub mod gradient;
pub mod grid;
pub mod image;
pub mod matching;
pub mod patterns;

pub use crate::error::{Error, Result};
pub use crate::features::{extract, ExtractorConfig, Normalization, OigmParams};
pub use crate::grid::{
    make_block_grid, BlockGrid, FeatureLayout, FeatureVector, LabelMap, Rect, SpatialResolution, NON_STRUCTURAL,
};
pub use crate::image::{load_image, Image};
pub use crate::matching::{nn_classify, similarity, Gallery, Similarity};
pub use crate::patterns::{sbgp_map, structural_labels, Descriptor, StructuralLabelSet};

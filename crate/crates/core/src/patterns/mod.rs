//! Binary pattern operators: SBGP and the LBP, CS-LBP and HIGO baselines.

mod higo;
mod lbp;
mod sbgp;

pub use higo::higo_map;
pub use lbp::{
    cs_lbp_map, cs_lbp_map_counted, lbp_map, lbp_map_counted, map_lbp_code, transitions, CircularNeighborhood,
    LbpVariant, CS_LBP_INTENSITY_SCALE,
};
pub use sbgp::{
    bgp_bits, bgp_label, bgp_map, bgp_map_counted, bits_to_label, direction_offsets, label_to_bits, sbgp_map,
    sbgp_map_counted, sbgp_map_reference, structural_labels, structural_oracle, BgpBits, DirectionPair,
    StructuralLabelSet, MAX_STRUCTURAL_NEIGHBORS,
};

use crate::error::{Error, Result};
use crate::grid::{LabelMap, SpatialResolution};
use crate::image::Image;

/// Receives operation counts from an operator: pairwise intensity
/// comparisons and the binary numbers they produce.
pub trait OpCounter {
    fn add(&mut self, comparisons: u64, bits: u64);
}

/// No-op counter.
impl OpCounter for () {
    #[inline]
    fn add(&mut self, _: u64, _: u64) {}
}

/// Running totals.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub comparisons: u64,
    pub bits: u64,
}

impl OpCounts {
    /// Computational units: comparisons plus produced binary numbers.
    pub fn units(&self) -> u64 {
        self.comparisons + self.bits
    }
}

impl OpCounter for OpCounts {
    #[inline]
    fn add(&mut self, comparisons: u64, bits: u64) {
        self.comparisons += comparisons;
        self.bits += bits;
    }
}

/// A pattern operator together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Descriptor {
    Sbgp(SpatialResolution),
    Lbp {
        neighborhood: CircularNeighborhood,
        variant: LbpVariant,
    },
    CsLbp {
        neighborhood: CircularNeighborhood,
        threshold: f64,
    },
    Higo {
        bins: usize,
    },
}

impl Descriptor {
    /// CS-LBP with 8 neighbours at radius 2 and a 0.01 threshold.
    pub fn cs_lbp_default() -> Self {
        Descriptor::CsLbp {
            neighborhood: CircularNeighborhood::new(8, 2).expect("valid neighbourhood"),
            threshold: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Descriptor::CsLbp { threshold, .. } if !(threshold >= 0.0 && threshold.is_finite()) => Err(
                Error::InvalidParameter(format!("CS-LBP threshold must be finite and >= 0, got {threshold}")),
            ),
            Descriptor::Higo { bins } if bins < 2 => Err(Error::InvalidParameter(format!(
                "HIGO needs at least 2 bins, got {bins}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Descriptor::Sbgp(_) => "sbgp",
            Descriptor::Lbp {
                variant: LbpVariant::U2,
                ..
            } => "lbp-u2",
            Descriptor::Lbp {
                variant: LbpVariant::Riu2,
                ..
            } => "lbp-riu2",
            Descriptor::CsLbp { .. } => "cs-lbp",
            Descriptor::Higo { .. } => "higo",
        }
    }

    /// Histogram length per block.
    pub fn n_bins(&self) -> usize {
        match *self {
            Descriptor::Sbgp(res) => res.neighbors(),
            Descriptor::Lbp { neighborhood, variant } => variant.label_count(neighborhood.points()),
            Descriptor::CsLbp { neighborhood, .. } => 1 << (neighborhood.points() / 2),
            Descriptor::Higo { bins } => bins,
        }
    }

    /// Pairwise intensity comparisons per labelled pixel (0 for HIGO).
    pub fn comparisons_per_pixel(&self) -> usize {
        match *self {
            Descriptor::Sbgp(res) => res.directions(),
            Descriptor::Lbp { neighborhood, .. } => neighborhood.points(),
            Descriptor::CsLbp { neighborhood, .. } => neighborhood.points() / 2,
            Descriptor::Higo { .. } => 0,
        }
    }

    /// Comparisons plus produced binary numbers per labelled pixel; each comparison yields one bit.
    pub fn units_per_pixel(&self) -> usize {
        2 * self.comparisons_per_pixel()
    }

    /// Label map whose values are histogram bins in `[0, n_bins)` or [`crate::NON_STRUCTURAL`].
    pub fn label_map_counted<C: OpCounter>(&self, image: &Image, counter: &mut C) -> Result<LabelMap> {
        self.validate()?;
        match *self {
            Descriptor::Sbgp(res) => sbgp_map_counted(image, res, counter),
            Descriptor::Lbp { neighborhood, variant } => lbp_map_counted(image, neighborhood, variant, counter),
            Descriptor::CsLbp {
                neighborhood,
                threshold,
            } => cs_lbp_map_counted(image, neighborhood, threshold, counter),
            Descriptor::Higo { bins } => higo_map(image, bins),
        }
    }

    pub fn label_map(&self, image: &Image) -> Result<LabelMap> {
        self.label_map_counted(image, &mut ())
    }
}

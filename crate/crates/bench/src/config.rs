//! Descriptor selection shared by every subcommand.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use sbgp::patterns::{CircularNeighborhood, Descriptor, LbpVariant};
use sbgp::{ExtractorConfig, Normalization, OigmParams, SpatialResolution};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DescriptorKind {
    Sbgp,
    Sbgpm,
    LbpU2,
    LbpRiu2,
    CsLbp,
    Higo,
}

impl DescriptorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptorKind::Sbgp => "sbgp",
            DescriptorKind::Sbgpm => "sbgpm",
            DescriptorKind::LbpU2 => "lbp-u2",
            DescriptorKind::LbpRiu2 => "lbp-riu2",
            DescriptorKind::CsLbp => "cs-lbp",
            DescriptorKind::Higo => "higo",
        }
    }

    /// `(P, R)` used when none is given: (8, 2) for CS-LBP, (16, 2) otherwise.
    pub fn default_pr(&self) -> (usize, usize) {
        match self {
            DescriptorKind::CsLbp => (8, 2),
            _ => (16, 2),
        }
    }

    pub fn uses_pr(&self) -> bool {
        !matches!(self, DescriptorKind::Higo)
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        <Self as clap::ValueEnum>::from_str(s, true)
            .map_err(|_| HarnessError::Input(format!("unknown descriptor `{s}`")))
    }
}

pub const DEFAULT_BLOCKS: (usize, usize) = (6, 6);

/// Serializable extractor parameters; echoed verbatim into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractorSpec {
    pub descriptor: DescriptorKind,
    pub neighbors: usize,
    pub radius: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub sqrt: bool,
    pub normalization: &'static str,
    pub sbgpm_channels: usize,
    pub sbgpm_window: usize,
    pub cs_threshold: f64,
    pub higo_bins: usize,
}

impl ExtractorSpec {
    pub fn new(descriptor: DescriptorKind) -> Self {
        let (neighbors, radius) = descriptor.default_pr();
        Self {
            descriptor,
            neighbors,
            radius,
            blocks_x: DEFAULT_BLOCKS.0,
            blocks_y: DEFAULT_BLOCKS.1,
            sqrt: false,
            normalization: "per-block-l1",
            sbgpm_channels: 3,
            sbgpm_window: 7,
            cs_threshold: 0.01,
            higo_bins: 4,
        }
    }

    pub fn with_pr(mut self, neighbors: usize, radius: usize) -> Self {
        self.neighbors = neighbors;
        self.radius = radius;
        self
    }

    pub fn with_blocks(mut self, x: usize, y: usize) -> Self {
        self.blocks_x = x;
        self.blocks_y = y;
        self
    }

    /// Human-readable tag, e.g. `sbgp(16,2)` or `higo(4)`.
    pub fn label(&self) -> String {
        match self.descriptor {
            DescriptorKind::Higo => format!("higo({})", self.higo_bins),
            kind => format!("{kind}({},{})", self.neighbors, self.radius),
        }
    }

    pub fn build(&self) -> Result<ExtractorConfig> {
        let circular = || CircularNeighborhood::new(self.neighbors, self.radius);
        let descriptor = match self.descriptor {
            DescriptorKind::Sbgp | DescriptorKind::Sbgpm => {
                Descriptor::Sbgp(SpatialResolution::new(self.neighbors, self.radius)?)
            }
            DescriptorKind::LbpU2 => Descriptor::Lbp {
                neighborhood: circular()?,
                variant: LbpVariant::U2,
            },
            DescriptorKind::LbpRiu2 => Descriptor::Lbp {
                neighborhood: circular()?,
                variant: LbpVariant::Riu2,
            },
            DescriptorKind::CsLbp => Descriptor::CsLbp {
                neighborhood: circular()?,
                threshold: self.cs_threshold,
            },
            DescriptorKind::Higo => Descriptor::Higo { bins: self.higo_bins },
        };
        let mut cfg = ExtractorConfig::new(descriptor, self.blocks_x, self.blocks_y)
            .with_sqrt(self.sqrt)
            .with_normalization(match self.normalization {
                "none" => Normalization::None,
                _ => Normalization::PerBlockL1,
            });
        if self.descriptor == DescriptorKind::Sbgpm {
            cfg = cfg.with_sbgpm(OigmParams {
                channels: self.sbgpm_channels,
                window: self.sbgpm_window,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `P,R`.
pub fn parse_pr(s: &str) -> Result<(usize, usize)> {
    let bad = || HarnessError::Input(format!("expected P,R (e.g. 16,2), got `{s}`"));
    let (p, r) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        p.trim().parse().map_err(|_| bad())?,
        r.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses `NxM` block counts.
pub fn parse_blocks(s: &str) -> Result<(usize, usize)> {
    let bad = || HarnessError::Input(format!("expected NxM block counts (e.g. 6x6), got `{s}`"));
    let (x, y) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

/// `kind[:P,R]`, or `higo[:bins]`.
impl FromStr for ExtractorSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let kind: DescriptorKind = kind.trim().parse()?;
        let mut spec = ExtractorSpec::new(kind);
        if let Some(rest) = rest {
            if kind == DescriptorKind::Higo {
                spec.higo_bins = rest
                    .trim()
                    .parse()
                    .map_err(|_| HarnessError::Input(format!("bad HIGO bin count in `{s}`")))?;
            } else {
                let (p, r) = parse_pr(rest)?;
                spec = spec.with_pr(p, r);
            }
        }
        Ok(spec)
    }
}

//! Experiment harness around the `sbgp` descriptors: dataset and pair
//! manifests, feature export, identification and verification runs,
//! perturbation studies, complexity benchmarks and synthetic data.

pub mod config;
pub mod error;
pub mod experiments;
pub mod export;
pub mod manifest;
pub mod perturb;
pub mod synth;

pub use crate::config::{DescriptorKind, ExtractorSpec};
pub use crate::error::{HarnessError, Result};

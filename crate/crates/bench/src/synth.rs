//! Seeded synthetic "subjects": per-subject textures built from oriented
//! sinusoids and Gaussian blobs, plus perturbed variants.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbgp::Image;

use crate::error::{HarnessError, Result};
use crate::manifest::{DatasetManifest, ManifestRow, Role};
use crate::perturb::{Perturbation, PerturbationChain};

pub const DEFAULT_SIZE: usize = 64;

/// Deterministic RNG for one `(subject, variant)` cell; distinct cells use distinct streams.
pub fn cell_rng(seed: u64, subject: usize, variant: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((subject as u64) << 32) | variant as u64);
    rng
}

/// Base texture for `subject`, quantized to integers in `[20, 180]`.
pub fn base_texture(seed: u64, subject: usize, size: usize) -> Result<Image> {
    if size < 8 {
        return Err(HarnessError::Input(format!(
            "synthetic images need size >= 8, got {size}"
        )));
    }
    let mut rng = cell_rng(seed, subject, 0);
    let waves: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            let freq = rng.random_range(0.03..0.2) * 2.0 * PI;
            let angle = rng.random_range(0.0..PI);
            let phase = rng.random_range(0.0..2.0 * PI);
            let amp = rng.random_range(0.5..1.0);
            (freq * angle.cos(), freq * angle.sin(), phase, amp)
        })
        .collect();
    let s = size as f64;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let cy = rng.random_range(0.0..s);
            let cx = rng.random_range(0.0..s);
            let sigma = rng.random_range(4.0..(s / 5.0).max(5.0));
            let amp = rng.random_range(-1.5..1.5);
            (cy, cx, 2.0 * sigma * sigma, amp)
        })
        .collect();
    let raw = Image::from_fn(size, size, |r, c| {
        let (y, x) = (r as f64, c as f64);
        let w: f64 = waves
            .iter()
            .map(|&(fx, fy, ph, a)| a * (fx * x + fy * y + ph).sin())
            .sum();
        let b: f64 = blobs
            .iter()
            .map(|&(cy, cx, d, a)| a * (-((y - cy).powi(2) + (x - cx).powi(2)) / d).exp())
            .sum();
        // offset keeps the raw field non-negative; it is rescaled below
        w + b + 100.0
    })?;
    let (lo, hi) = raw
        .pixels()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = (hi - lo).max(1e-12);
    Ok(raw.map(|v| (20.0 + 160.0 * (v - lo) / span).round())?)
}

/// Perturbations cycled through by variants 1, 2, ... for an image of side `size`.
pub fn variant_suite(size: usize) -> Vec<PerturbationChain> {
    let q = size / 4;
    vec![
        PerturbationChain(vec![
            Perturbation::Ramp { strength: 0.3 },
            Perturbation::Noise { sigma: 2.0 },
        ]),
        PerturbationChain(vec![Perturbation::Affine { a: 1.3, b: 20.0 }]),
        PerturbationChain(vec![Perturbation::Gamma { gamma: 0.6 }]),
        PerturbationChain(vec![
            Perturbation::Ramp { strength: 0.6 },
            Perturbation::Noise { sigma: 2.0 },
        ]),
        PerturbationChain(vec![Perturbation::Noise { sigma: 10.0 }]),
        PerturbationChain(vec![Perturbation::Occlusion {
            x: q,
            y: 2 * q,
            width: 2 * q,
            height: q,
        }]),
    ]
}

/// The perturbation applied to `variant` (identity for variant 0).
pub fn variant_perturbation(variant: usize, size: usize) -> PerturbationChain {
    if variant == 0 {
        return PerturbationChain(Vec::new());
    }
    let suite = variant_suite(size);
    suite[(variant - 1) % suite.len()].clone()
}

/// Quantizes to 8-bit levels, as written to disk.
pub fn quantize(image: &Image) -> Result<Image> {
    Ok(Image::from_u8(image.width(), image.height(), &image.to_u8())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthParams {
    pub subjects: usize,
    pub variants: usize,
    pub seed: u64,
    pub size: usize,
}

/// One generated image before it is written.
#[derive(Debug, Clone)]
pub struct SynthImage {
    pub subject: usize,
    pub variant: usize,
    pub group: String,
    pub image: Image,
}

impl SynthImage {
    pub fn subject_id(&self) -> String {
        format!("s{:03}", self.subject)
    }

    pub fn file_name(&self) -> String {
        format!("s{:03}_v{}.pgm", self.subject, self.variant)
    }
}

/// Generates every image in memory, subject-major.
pub fn generate_images(params: &SynthParams) -> Result<Vec<SynthImage>> {
    if params.subjects < 2 {
        return Err(HarnessError::Input(format!(
            "need at least 2 subjects, got {}",
            params.subjects
        )));
    }
    if params.variants < 1 {
        return Err(HarnessError::Input("need at least 1 variant per subject".into()));
    }
    let mut out = Vec::with_capacity(params.subjects * params.variants);
    for subject in 0..params.subjects {
        let base = base_texture(params.seed, subject, params.size)?;
        for variant in 0..params.variants {
            let chain = variant_perturbation(variant, params.size);
            let mut rng = cell_rng(params.seed, subject, variant + 1);
            let image = quantize(&chain.apply(&base, &mut rng)?)?;
            out.push(SynthImage {
                subject,
                variant,
                group: chain.to_string(),
                image,
            });
        }
    }
    Ok(out)
}

/// Writes `images/sNNN_vK.pgm` plus `manifest.csv` under `out_dir`.
/// Variant 0 is the gallery image; the rest are probes.
pub fn generate_synthetic_dataset(params: &SynthParams, out_dir: &Path) -> Result<DatasetManifest> {
    let images = generate_images(params)?;
    let image_dir = out_dir.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| HarnessError::io(&image_dir, e))?;
    let mut rows = Vec::with_capacity(images.len());
    for item in &images {
        let rel = format!("images/{}", item.file_name());
        item.image.save_pgm(out_dir.join(&rel))?;
        rows.push(ManifestRow {
            path: rel,
            subject_id: item.subject_id(),
            group: item.group.clone(),
            role: if item.variant == 0 { Role::Gallery } else { Role::Probe },
        });
    }
    let manifest = DatasetManifest {
        base_dir: out_dir.to_path_buf(),
        rows,
    };
    manifest.write(out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

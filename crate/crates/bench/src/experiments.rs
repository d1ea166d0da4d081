//! Experiment runners and their JSON reports.
//!
//! Every report keeps wall-clock numbers in a separate `timing` object so the
//! rest of the document is byte-stable for a fixed seed and configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use sbgp::matching::{verify_pairs, VerificationResult};
use sbgp::patterns::OpCounts;
use sbgp::{nn_classify, sbgp_map, structural_labels, FeatureVector, Gallery, Image, Similarity, SpatialResolution};

use crate::config::{DescriptorKind, ExtractorSpec};
use crate::error::{HarnessError, Result};
use crate::export::{extract_paths_timed, extract_timed, Extracted};
use crate::manifest::{DatasetManifest, PairManifest, Role};
use crate::perturb::{Perturbation, PerturbationChain};
use crate::synth::cell_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub images: usize,
    pub mean_seconds_per_image: f64,
    pub median_seconds_per_image: f64,
    pub pixels_per_second: f64,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl Timing {
    pub fn from_samples(samples: &[Extracted]) -> Self {
        let total: f64 = samples.iter().map(|e| e.seconds).sum();
        let pixels: usize = samples.iter().map(|e| e.pixels).sum();
        let mut secs: Vec<f64> = samples.iter().map(|e| e.seconds).collect();
        Self {
            images: samples.len(),
            mean_seconds_per_image: if samples.is_empty() {
                0.0
            } else {
                total / samples.len() as f64
            },
            median_seconds_per_image: median(&mut secs),
            pixels_per_second: if total > 0.0 { pixels as f64 / total } else { 0.0 },
        }
    }
}

/// Instrumented operation totals for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperationSummary {
    pub labelled_pixels: u64,
    pub comparisons: u64,
    pub units: u64,
    pub comparisons_per_pixel: f64,
    pub units_per_pixel: f64,
}

impl OperationSummary {
    /// Sums the per-image counters and checks them against the closed form.
    pub fn collect(samples: &[Extracted], spec_name: &str, closed_form: usize) -> Result<Self> {
        let mut ops = OpCounts::default();
        let mut labelled = 0u64;
        for e in samples {
            ops.comparisons += e.ops.comparisons;
            ops.bits += e.ops.bits;
            labelled += e.labelled as u64;
        }
        if ops.comparisons != closed_form as u64 * labelled {
            return Err(HarnessError::Invariant(format!(
                "{spec_name}: counted {} comparisons over {labelled} labelled pixels, expected {closed_form} per pixel",
                ops.comparisons
            )));
        }
        let per = |x: u64| if labelled == 0 { 0.0 } else { x as f64 / labelled as f64 };
        Ok(Self {
            labelled_pixels: labelled,
            comparisons: ops.comparisons,
            units: ops.units(),
            comparisons_per_pixel: per(ops.comparisons),
            units_per_pixel: per(ops.units()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRate {
    pub group: String,
    pub correct: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCount {
    pub truth: String,
    pub predicted: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdMeasure {
    pub similarity: String,
    pub correct: usize,
    pub total: usize,
    pub rate: f64,
    pub groups: Vec<GroupRate>,
    pub confusion: Vec<ConfusionCount>,
}

/// A probe ready for matching.
#[derive(Debug, Clone)]
pub struct Probe {
    pub subject: String,
    pub group: String,
    pub features: FeatureVector,
}

fn checked_rate(correct: usize, total: usize) -> Result<f64> {
    let rate = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    let back = rate * total as f64;
    if !(0.0..=1.0).contains(&rate) || (back - correct as f64).abs() > 1e-9 {
        return Err(HarnessError::Invariant(format!(
            "rate {rate} inconsistent with {correct}/{total}"
        )));
    }
    Ok(rate)
}

/// Nearest-neighbour identification of every probe against `gallery`.
pub fn identify(gallery: &Gallery, probes: &[Probe], s: Similarity) -> Result<IdMeasure> {
    if probes.is_empty() {
        return Err(HarnessError::Input("identification needs at least one probe".into()));
    }
    let predictions: Vec<String> = probes
        .par_iter()
        .map(|p| nn_classify(gallery, &p.features, s).map(|m| m.subject))
        .collect::<sbgp::Result<_>>()?;
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut confusion: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut correct = 0;
    for (probe, predicted) in probes.iter().zip(&predictions) {
        let hit = probe.subject == *predicted;
        correct += usize::from(hit);
        let g = groups.entry(&probe.group).or_insert_with(|| {
            order.push(&probe.group);
            (0, 0)
        });
        g.0 += usize::from(hit);
        g.1 += 1;
        *confusion.entry((&probe.subject, predicted)).or_default() += 1;
    }
    let groups = order
        .iter()
        .map(|g| {
            let (c, t) = groups[g];
            Ok(GroupRate {
                group: g.to_string(),
                correct: c,
                total: t,
                rate: checked_rate(c, t)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(IdMeasure {
        similarity: s.short_name().to_string(),
        correct,
        total: probes.len(),
        rate: checked_rate(correct, probes.len())?,
        groups,
        confusion: confusion
            .into_iter()
            .map(|((truth, predicted), count)| ConfusionCount {
                truth: truth.to_string(),
                predicted: predicted.to_string(),
                count,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdReport {
    pub command: &'static str,
    pub config: ExtractorSpec,
    pub dims: usize,
    pub gallery_size: usize,
    pub probe_count: usize,
    pub operations: OperationSummary,
    pub measures: Vec<IdMeasure>,
    pub timing: Timing,
}

pub fn evaluate_id(manifest: &DatasetManifest, spec: &ExtractorSpec, sims: &[Similarity]) -> Result<IdReport> {
    let cfg = spec.build()?;
    let n_gallery = manifest.rows_with_role(Role::Gallery).count();
    if n_gallery == 0 {
        return Err(HarnessError::Input("manifest has no gallery rows".into()));
    }
    if manifest.rows_with_role(Role::Probe).count() == 0 {
        return Err(HarnessError::Input("manifest has no probe rows".into()));
    }
    let paths: Vec<PathBuf> = manifest.rows.iter().map(|r| manifest.resolve(&r.path)).collect();
    let extracted = extract_paths_timed(&paths, &cfg)?;
    let mut gallery = Gallery::new();
    let mut probes = Vec::new();
    for (row, e) in manifest.rows.iter().zip(&extracted) {
        match row.role {
            Role::Gallery => gallery.push(e.features.clone(), row.subject_id.clone(), row.path.clone())?,
            Role::Probe => {
                if e.features.dims() != cfg.dims() {
                    return Err(sbgp::Error::DimensionMismatch {
                        left: cfg.dims(),
                        right: e.features.dims(),
                    }
                    .into());
                }
                probes.push(Probe {
                    subject: row.subject_id.clone(),
                    group: row.group.clone(),
                    features: e.features.clone(),
                })
            }
        }
    }
    let measures = sims
        .iter()
        .map(|&s| identify(&gallery, &probes, s))
        .collect::<Result<_>>()?;
    Ok(IdReport {
        command: "evaluate-id",
        config: spec.clone(),
        dims: cfg.dims(),
        gallery_size: gallery.len(),
        probe_count: probes.len(),
        operations: OperationSummary::collect(&extracted, &spec.label(), cfg.descriptor.comparisons_per_pixel())?,
        measures,
        timing: Timing::from_samples(&extracted),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocOut {
    pub threshold: Option<f64>,
    pub false_accept: f64,
    pub true_accept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyMeasure {
    pub similarity: String,
    pub fold_accuracies: Vec<f64>,
    pub fold_thresholds: Vec<Option<f64>>,
    pub mean_accuracy: f64,
    pub standard_error: f64,
    pub roc: Vec<RocOut>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl VerifyMeasure {
    pub fn from_result(s: Similarity, r: &VerificationResult) -> Result<Self> {
        let mean: f64 = r.fold_accuracies.iter().sum::<f64>() / r.fold_accuracies.len() as f64;
        if (mean - r.mean_accuracy).abs() > 1e-12 {
            return Err(HarnessError::Invariant(format!(
                "fold accuracies average to {mean}, reported mean is {}",
                r.mean_accuracy
            )));
        }
        Ok(Self {
            similarity: s.short_name().to_string(),
            fold_accuracies: r.fold_accuracies.clone(),
            fold_thresholds: r.fold_thresholds.iter().copied().map(finite).collect(),
            mean_accuracy: r.mean_accuracy,
            standard_error: r.standard_error,
            roc: r
                .roc
                .iter()
                .map(|p| RocOut {
                    threshold: finite(p.threshold),
                    false_accept: p.false_accept,
                    true_accept: p.true_accept,
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub config: ExtractorSpec,
    pub dims: usize,
    pub pairs: usize,
    pub folds: usize,
    pub unique_images: usize,
    pub operations: OperationSummary,
    pub measures: Vec<VerifyMeasure>,
    pub timing: Timing,
}

pub fn evaluate_verify(manifest: &PairManifest, spec: &ExtractorSpec, sims: &[Similarity]) -> Result<VerifyReport> {
    let cfg = spec.build()?;
    if manifest.n_folds() < 2 {
        return Err(HarnessError::Input(format!(
            "verification needs at least 2 folds, got {}",
            manifest.n_folds()
        )));
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut unique: Vec<&str> = Vec::new();
    for row in &manifest.rows {
        for p in [row.path_a.as_str(), row.path_b.as_str()] {
            index.entry(p).or_insert_with(|| {
                unique.push(p);
                unique.len() - 1
            });
        }
    }
    let paths: Vec<PathBuf> = unique.iter().map(|p| manifest.resolve(p)).collect();
    let extracted = extract_paths_timed(&paths, &cfg)?;
    let pairs: Vec<_> = manifest
        .rows
        .iter()
        .map(|r| {
            (
                extracted[index[r.path_a.as_str()]].features.clone(),
                extracted[index[r.path_b.as_str()]].features.clone(),
                r.same,
                r.fold,
            )
        })
        .collect();
    let measures = sims
        .iter()
        .map(|&s| VerifyMeasure::from_result(s, &verify_pairs(&pairs, s)?))
        .collect::<Result<_>>()?;
    Ok(VerifyReport {
        command: "evaluate-verify",
        config: spec.clone(),
        dims: cfg.dims(),
        pairs: pairs.len(),
        folds: manifest.n_folds(),
        unique_images: unique.len(),
        operations: OperationSummary::collect(&extracted, &spec.label(), cfg.descriptor.comparisons_per_pixel())?,
        measures,
        timing: Timing::from_samples(&extracted),
    })
}

/// The nine rows of the classic complexity table: SBGP, LBP u2 and LBP riu2
/// at (8,1), (16,2) and (24,3).
pub fn default_bench_specs() -> Vec<ExtractorSpec> {
    let mut out = Vec::new();
    for kind in [DescriptorKind::Sbgp, DescriptorKind::LbpU2, DescriptorKind::LbpRiu2] {
        for (p, r) in [(8, 1), (16, 2), (24, 3)] {
            out.push(ExtractorSpec::new(kind).with_pr(p, r));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub warmup: usize,
    pub iterations: usize,
    /// Iterations are split into this many batches; the median batch mean is reported.
    pub batches: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            warmup: 3,
            iterations: 20,
            batches: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchEntry {
    pub config: String,
    pub descriptor: DescriptorKind,
    pub neighbors: usize,
    pub radius: usize,
    pub comparisons_per_pixel: f64,
    pub units_per_pixel: f64,
    pub labels: usize,
    pub dims: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTiming {
    pub config: String,
    pub iterations: usize,
    pub mean_seconds_per_image: f64,
    pub median_of_means_seconds_per_image: f64,
    pub pixels_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub command: &'static str,
    pub images: usize,
    pub pixels_per_image: f64,
    pub entries: Vec<BenchEntry>,
    pub timing: Vec<BenchTiming>,
}

/// Single-threaded timing plus instrumented operation counts for each spec.
pub fn bench(images: &[Image], specs: &[ExtractorSpec], opts: BenchOptions) -> Result<BenchReport> {
    if images.is_empty() {
        return Err(HarnessError::Input("bench needs at least one image".into()));
    }
    if opts.iterations < 20 {
        return Err(HarnessError::Input(format!(
            "bench needs at least 20 iterations, got {}",
            opts.iterations
        )));
    }
    let batches = opts.batches.clamp(1, opts.iterations);
    let pixels: usize = images.iter().map(|i| i.width() * i.height()).sum();
    let mut entries = Vec::with_capacity(specs.len());
    let mut timing = Vec::with_capacity(specs.len());
    for spec in specs {
        let cfg = spec.build()?;
        let counted = images
            .iter()
            .map(|img| extract_timed(img, &cfg))
            .collect::<sbgp::Result<Vec<_>>>()?;
        let ops = OperationSummary::collect(&counted, &spec.label(), cfg.descriptor.comparisons_per_pixel())?;
        if ops.labelled_pixels > 0 && ops.units != cfg.descriptor.units_per_pixel() as u64 * ops.labelled_pixels {
            return Err(HarnessError::Invariant(format!(
                "{}: counted {} units, expected {} per pixel",
                spec.label(),
                ops.units,
                cfg.descriptor.units_per_pixel()
            )));
        }
        entries.push(BenchEntry {
            config: spec.label(),
            descriptor: spec.descriptor,
            neighbors: spec.neighbors,
            radius: spec.radius,
            comparisons_per_pixel: ops.comparisons_per_pixel,
            units_per_pixel: ops.units_per_pixel,
            labels: cfg.descriptor.n_bins(),
            dims: cfg.dims(),
        });

        let run_once = || -> Result<f64> {
            let start = Instant::now();
            for img in images {
                std::hint::black_box(sbgp::extract(std::hint::black_box(img), &cfg)?);
            }
            Ok(start.elapsed().as_secs_f64() / images.len() as f64)
        };
        for _ in 0..opts.warmup {
            run_once()?;
        }
        let per_image: Vec<f64> = (0..opts.iterations).map(|_| run_once()).collect::<Result<_>>()?;
        let mean = per_image.iter().sum::<f64>() / per_image.len() as f64;
        let chunk = per_image.len().div_ceil(batches);
        let mut means: Vec<f64> = per_image
            .chunks(chunk)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let mom = median(&mut means);
        timing.push(BenchTiming {
            config: spec.label(),
            iterations: opts.iterations,
            mean_seconds_per_image: mean,
            median_of_means_seconds_per_image: mom,
            pixels_per_second: if mom > 0.0 {
                pixels as f64 / images.len() as f64 / mom
            } else {
                0.0
            },
        });
    }
    Ok(BenchReport {
        command: "bench",
        images: images.len(),
        pixels_per_image: pixels as f64 / images.len() as f64,
        entries,
        timing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub descriptor: String,
    pub correct: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbLevel {
    pub perturbation: String,
    pub monotone: bool,
    pub results: Vec<LevelResult>,
    pub non_structural_mean: f64,
    pub non_structural_increased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbReport {
    pub command: &'static str,
    pub seed: u64,
    pub similarity: String,
    pub gallery_size: usize,
    pub configs: Vec<ExtractorSpec>,
    /// `(P, R)` of the SBGP operator used for the NON_STRUCTURAL statistics.
    pub non_structural_resolution: (usize, usize),
    pub clean_non_structural_mean: f64,
    pub levels: Vec<PerturbLevel>,
    /// Whether every noise level raised the NON_STRUCTURAL fraction; absent without noise levels.
    pub noise_ordering_pass: Option<bool>,
}

impl PerturbReport {
    pub fn rate(&self, level: usize, descriptor: &str) -> Option<f64> {
        self.levels
            .get(level)?
            .results
            .iter()
            .find(|r| r.descriptor == descriptor)
            .map(|r| r.rate)
    }
}

/// The default perturbation levels: exact monotone maps, a ramp sweep and heavy noise.
pub fn default_perturbations() -> Vec<PerturbationChain> {
    let mut out = vec![
        PerturbationChain(vec![Perturbation::Affine { a: 2.0, b: 30.0 }]),
        PerturbationChain(vec![Perturbation::Gamma { gamma: 0.4 }]),
    ];
    for s in [0.2, 0.4, 0.6, 0.8] {
        out.push(PerturbationChain(vec![Perturbation::Ramp { strength: s }]));
    }
    out.push(PerturbationChain(vec![Perturbation::Noise { sigma: 30.0 }]));
    out
}

fn mean_non_structural(images: &[Image], res: SpatialResolution) -> Result<f64> {
    let fractions = images
        .par_iter()
        .map(|img| sbgp_map(img, res).map(|m| m.non_structural_fraction()))
        .collect::<sbgp::Result<Vec<f64>>>()?;
    Ok(fractions.iter().sum::<f64>() / fractions.len().max(1) as f64)
}

/// Identification where each probe is a perturbed copy of a gallery image.
/// `gallery` holds `(subject, image)`; level `l` perturbs image `i` with the
/// RNG stream of cell `(i, l + 1)`.
pub fn perturbation_study(
    gallery: &[(String, Image)],
    levels: &[PerturbationChain],
    specs: &[ExtractorSpec],
    s: Similarity,
    seed: u64,
) -> Result<PerturbReport> {
    if gallery.is_empty() {
        return Err(HarnessError::Input(
            "perturbation study needs at least one gallery image".into(),
        ));
    }
    if specs.is_empty() {
        return Err(HarnessError::Input(
            "perturbation study needs at least one descriptor".into(),
        ));
    }
    let res = specs
        .iter()
        .find(|sp| matches!(sp.descriptor, DescriptorKind::Sbgp | DescriptorKind::Sbgpm))
        .map_or(Ok(SpatialResolution::new(16, 2)?), |sp| {
            SpatialResolution::new(sp.neighbors, sp.radius)
        })?;
    structural_labels(res.neighbors())?;
    let clean: Vec<Image> = gallery.iter().map(|(_, img)| img.clone()).collect();
    let clean_ns = mean_non_structural(&clean, res)?;

    let perturbed: Vec<Vec<Image>> = levels
        .iter()
        .enumerate()
        .map(|(l, chain)| {
            clean
                .par_iter()
                .enumerate()
                .map(|(i, img)| chain.apply(img, &mut cell_rng(seed, i, l + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut results: Vec<Vec<LevelResult>> = vec![Vec::new(); levels.len()];
    for spec in specs {
        let cfg = spec.build()?;
        let feats = clean
            .par_iter()
            .map(|img| sbgp::extract(img, &cfg))
            .collect::<sbgp::Result<Vec<_>>>()?;
        let mut g = Gallery::new();
        for ((subject, _), f) in gallery.iter().zip(feats) {
            g.push(f, subject.clone(), "")?;
        }
        for (l, images) in perturbed.iter().enumerate() {
            let probes = images
                .par_iter()
                .zip(gallery)
                .map(|(img, (subject, _))| {
                    Ok(Probe {
                        subject: subject.clone(),
                        group: levels[l].to_string(),
                        features: sbgp::extract(img, &cfg)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let m = identify(&g, &probes, s)?;
            results[l].push(LevelResult {
                descriptor: spec.label(),
                correct: m.correct,
                total: m.total,
                rate: m.rate,
            });
        }
    }

    let mut out_levels = Vec::with_capacity(levels.len());
    let mut noise_pass: Option<bool> = None;
    for ((chain, images), results) in levels.iter().zip(&perturbed).zip(results) {
        let ns = mean_non_structural(images, res)?;
        let increased = ns > clean_ns;
        if chain
            .0
            .iter()
            .any(|p| matches!(p, Perturbation::Noise { sigma } if *sigma > 0.0))
        {
            noise_pass = Some(noise_pass.unwrap_or(true) && increased);
        }
        out_levels.push(PerturbLevel {
            perturbation: chain.to_string(),
            monotone: chain.is_monotone(),
            results,
            non_structural_mean: ns,
            non_structural_increased: increased,
        });
    }
    Ok(PerturbReport {
        command: "perturb",
        seed,
        similarity: s.short_name().to_string(),
        gallery_size: gallery.len(),
        configs: specs.to_vec(),
        non_structural_resolution: (res.neighbors(), res.radius()),
        clean_non_structural_mean: clean_ns,
        levels: out_levels,
        noise_ordering_pass: noise_pass,
    })
}

/// `n` seeded synthetic base textures, subject ids `s000`, `s001`, ...
pub fn synthetic_gallery(n: usize, size: usize, seed: u64) -> Result<Vec<(String, Image)>> {
    (0..n)
        .map(|i| Ok((format!("s{i:03}"), crate::synth::base_texture(seed, i, size)?)))
        .collect()
}

/// Seeded uniform-noise images in `[0, 255]` for benchmarking.
pub fn random_images(n: usize, width: usize, height: usize, seed: u64) -> Result<Vec<Image>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Ok(Image::from_fn(width, height, |_, _| {
                f64::from(rng.random_range(0u8..=255))
            })?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelsReport {
    pub neighbors: usize,
    pub directions: usize,
    pub labels: Vec<u32>,
}

pub fn labels_report(p: usize) -> Result<LabelsReport> {
    let set = structural_labels(p)?;
    Ok(LabelsReport {
        neighbors: p,
        directions: p / 2,
        labels: set.labels().to_vec(),
    })
}

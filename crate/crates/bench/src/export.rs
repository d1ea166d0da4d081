//! Batch feature extraction and the feature CSV format
//! (`path,subject_id,dims,v0..v{dims-1}`, 9 significant digits).

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use sbgp::features::extract_counted;
use sbgp::patterns::OpCounts;
use sbgp::{load_image, Descriptor, ExtractorConfig, FeatureVector, Image};

use crate::error::{HarnessError, Result};
use crate::manifest::DatasetManifest;

/// Formats `v` with 9 significant digits, fixed notation for exponents in
/// `[-5, 9)` and scientific otherwise, trailing zeros trimmed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..9).contains(&exp) {
        trim(&format!("{:.*}", (8 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// One extracted image with its cost.
#[derive(Debug, Clone)]
pub struct Extracted {
    pub features: FeatureVector,
    pub seconds: f64,
    pub pixels: usize,
    /// Pixels that received a label, summed over channels.
    pub labelled: usize,
    pub ops: OpCounts,
}

/// Number of labelled pixels `cfg` produces on a `width x height` image.
pub fn labelled_pixels(cfg: &ExtractorConfig, width: usize, height: usize) -> usize {
    let margin = match cfg.descriptor {
        Descriptor::Sbgp(res) => res.radius(),
        Descriptor::Lbp { neighborhood, .. } | Descriptor::CsLbp { neighborhood, .. } => neighborhood.radius(),
        Descriptor::Higo { .. } => 0,
    };
    let inner = width.saturating_sub(2 * margin) * height.saturating_sub(2 * margin);
    inner * cfg.channels()
}

/// Extracts one in-memory image, timing only the extraction itself.
pub fn extract_timed(image: &Image, cfg: &ExtractorConfig) -> sbgp::Result<Extracted> {
    let mut ops = OpCounts::default();
    let start = Instant::now();
    let features = extract_counted(image, cfg, &mut ops)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(Extracted {
        features,
        seconds,
        pixels: image.width() * image.height(),
        labelled: labelled_pixels(cfg, image.width(), image.height()),
        ops,
    })
}

/// Loads and extracts every path (in parallel) keeping input order.
/// All load or extraction failures are reported together.
pub fn extract_paths_timed(paths: &[PathBuf], cfg: &ExtractorConfig) -> Result<Vec<Extracted>> {
    let results: Vec<_> = paths
        .par_iter()
        .map(|p| load_image(p).and_then(|img| extract_timed(&img, cfg)))
        .collect();
    let mut failures = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for (path, r) in paths.iter().zip(results) {
        match r {
            Ok(v) => out.push(v),
            Err(e) => failures.push((path.display().to_string(), e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(HarnessError::ImageLoad(failures))
    }
}

pub fn extract_paths(paths: &[PathBuf], cfg: &ExtractorConfig) -> Result<Vec<FeatureVector>> {
    Ok(extract_paths_timed(paths, cfg)?
        .into_iter()
        .map(|e| e.features)
        .collect())
}

/// Extracts one vector per manifest row, in manifest order.
pub fn extract_manifest(manifest: &DatasetManifest, cfg: &ExtractorConfig) -> Result<Vec<FeatureVector>> {
    let paths: Vec<PathBuf> = manifest.rows.iter().map(|r| manifest.resolve(&r.path)).collect();
    extract_paths(&paths, cfg)
}

/// Writes the feature CSV. `rows` are `(path, subject_id, features)`.
pub fn write_feature_csv<W: Write>(out: W, dims: usize, rows: &[(&str, &str, &FeatureVector)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| HarnessError::Input(format!("writing feature CSV: {e}"));
    let mut header = vec!["path".to_string(), "subject_id".to_string(), "dims".to_string()];
    header.extend((0..dims).map(|i| format!("v{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (path, subject, v) in rows {
        if v.dims() != dims {
            return Err(HarnessError::Invariant(format!(
                "{path}: feature vector has {} dims, header declares {dims}",
                v.dims()
            )));
        }
        let mut record = vec![path.to_string(), subject.to_string(), dims.to_string()];
        record.extend(v.values().iter().map(|&x| format_sig9(x)));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io("feature CSV", e))
}

//! Python bindings. Vectors cross the boundary as plain lists of floats.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sbgp::matching::{verify_scores, ScoredPair};
use sbgp::patterns::{self, CircularNeighborhood, LbpVariant};
use sbgp::{Descriptor, ExtractorConfig, FeatureVector, Gallery, OigmParams, Similarity, SpatialResolution};

fn to_py(err: sbgp::Error) -> PyErr {
    match err {
        sbgp::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_similarity(name: &str) -> PyResult<Similarity> {
    name.parse().map_err(to_py)
}

/// Grayscale image with non-negative intensities, row-major.
#[pyclass(name = "Image", module = "sbgp_py", frozen)]
struct PyImage {
    inner: sbgp::Image,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: sbgp::Image::new(width, height, pixels).map_err(to_py)?,
        })
    }

    /// Builds an image from a list of equally long rows.
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(PyValueError::new_err("rows must all have the same length"));
        }
        Self::new(width, height, rows.concat())
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn pixels(&self) -> Vec<f64> {
        self.inner.pixels().to_vec()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.inner.height() || col >= self.inner.width() {
            return Err(PyValueError::new_err(format!("({row}, {col}) is outside the image")));
        }
        Ok(self.inner.get(row, col))
    }

    fn save_pgm(&self, path: &str) -> PyResult<()> {
        self.inner.save_pgm(path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Per-pixel bins over the labelled interior; `NON_STRUCTURAL` marks discarded pixels.
#[pyclass(name = "LabelMap", module = "sbgp_py", frozen)]
struct PyLabelMap {
    inner: sbgp::LabelMap,
}

#[pymethods]
impl PyLabelMap {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.inner.labels().to_vec()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<u32> {
        if row >= self.inner.height() || col >= self.inner.width() {
            return Err(PyValueError::new_err(format!(
                "({row}, {col}) is outside the label map"
            )));
        }
        Ok(self.inner.get(row, col))
    }

    fn non_structural_fraction(&self) -> f64 {
        self.inner.non_structural_fraction()
    }

    fn __repr__(&self) -> String {
        format!("LabelMap({}x{})", self.inner.width(), self.inner.height())
    }
}

fn map(inner: sbgp::Result<sbgp::LabelMap>) -> PyResult<PyLabelMap> {
    Ok(PyLabelMap {
        inner: inner.map_err(to_py)?,
    })
}

#[pyfunction]
fn load_image(path: &str) -> PyResult<PyImage> {
    Ok(PyImage {
        inner: sbgp::load_image(path).map_err(to_py)?,
    })
}

/// Structural labels for `p` neighbours, in generation order.
#[pyfunction]
fn structural_labels(p: usize) -> PyResult<Vec<u32>> {
    Ok(sbgp::structural_labels(p).map_err(to_py)?.labels().to_vec())
}

/// Raw binary gradient pattern label at `(row, col)`.
#[pyfunction]
#[pyo3(signature = (image, row, col, p = 16, r = 2))]
fn bgp_label(image: &PyImage, row: usize, col: usize, p: usize, r: usize) -> PyResult<u32> {
    let res = SpatialResolution::new(p, r).map_err(to_py)?;
    patterns::bgp_label(&image.inner, row, col, res).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (image, p = 16, r = 2))]
fn sbgp_map(image: &PyImage, p: usize, r: usize) -> PyResult<PyLabelMap> {
    let res = SpatialResolution::new(p, r).map_err(to_py)?;
    map(sbgp::sbgp_map(&image.inner, res))
}

fn lbp_variant(name: &str) -> PyResult<LbpVariant> {
    match name {
        "u2" => Ok(LbpVariant::U2),
        "riu2" => Ok(LbpVariant::Riu2),
        other => Err(PyValueError::new_err(format!(
            "unknown LBP variant `{other}` (u2 or riu2)"
        ))),
    }
}

#[pyfunction]
#[pyo3(signature = (image, p = 16, r = 2, variant = "u2"))]
fn lbp_map(image: &PyImage, p: usize, r: usize, variant: &str) -> PyResult<PyLabelMap> {
    let hood = CircularNeighborhood::new(p, r).map_err(to_py)?;
    map(patterns::lbp_map(&image.inner, hood, lbp_variant(variant)?))
}

#[pyfunction]
#[pyo3(signature = (image, p = 8, r = 2, threshold = 0.01))]
fn cs_lbp_map(image: &PyImage, p: usize, r: usize, threshold: f64) -> PyResult<PyLabelMap> {
    let hood = CircularNeighborhood::new(p, r).map_err(to_py)?;
    map(patterns::cs_lbp_map(&image.inner, hood, threshold))
}

#[pyfunction]
#[pyo3(signature = (image, bins = 4))]
fn higo_map(image: &PyImage, bins: usize) -> PyResult<PyLabelMap> {
    map(patterns::higo_map(&image.inner, bins))
}

/// Block-histogram feature extractor.
///
/// `descriptor` is one of `sbgp`, `sbgpm`, `lbp-u2`, `lbp-riu2`, `cs-lbp`, `higo`.
#[pyclass(name = "Extractor", module = "sbgp_py", frozen)]
struct PyExtractor {
    cfg: ExtractorConfig,
}

#[pymethods]
impl PyExtractor {
    #[new]
    #[pyo3(signature = (descriptor = "sbgp", p = None, r = None, blocks = (6, 6), sqrt = false,
                        normalize = true, sbgpm_s = 3, sbgpm_window = 7, cs_threshold = 0.01, higo_bins = 4))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        descriptor: &str,
        p: Option<usize>,
        r: Option<usize>,
        blocks: (usize, usize),
        sqrt: bool,
        normalize: bool,
        sbgpm_s: usize,
        sbgpm_window: usize,
        cs_threshold: f64,
        higo_bins: usize,
    ) -> PyResult<Self> {
        let default_p = if descriptor == "cs-lbp" { 8 } else { 16 };
        let (p, r) = (p.unwrap_or(default_p), r.unwrap_or(2));
        let hood = || CircularNeighborhood::new(p, r).map_err(to_py);
        let d = match descriptor {
            "sbgp" | "sbgpm" => Descriptor::Sbgp(SpatialResolution::new(p, r).map_err(to_py)?),
            "lbp-u2" => Descriptor::Lbp {
                neighborhood: hood()?,
                variant: LbpVariant::U2,
            },
            "lbp-riu2" => Descriptor::Lbp {
                neighborhood: hood()?,
                variant: LbpVariant::Riu2,
            },
            "cs-lbp" => Descriptor::CsLbp {
                neighborhood: hood()?,
                threshold: cs_threshold,
            },
            "higo" => Descriptor::Higo { bins: higo_bins },
            other => return Err(PyValueError::new_err(format!("unknown descriptor `{other}`"))),
        };
        let mut cfg = ExtractorConfig::new(d, blocks.0, blocks.1).with_sqrt(sqrt);
        if !normalize {
            cfg = cfg.with_normalization(sbgp::Normalization::None);
        }
        if descriptor == "sbgpm" {
            cfg = cfg.with_sbgpm(OigmParams {
                channels: sbgpm_s,
                window: sbgpm_window,
            });
        }
        cfg.validate().map_err(to_py)?;
        Ok(Self { cfg })
    }

    #[getter]
    fn dims(&self) -> usize {
        self.cfg.dims()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.cfg.name()
    }

    fn extract(&self, py: Python<'_>, image: &PyImage) -> PyResult<Vec<f64>> {
        let img = image.inner.clone();
        let out = py.detach(|| sbgp::extract(&img, &self.cfg)).map_err(to_py)?;
        Ok(out.into_values())
    }
}

fn vector(values: Vec<f64>) -> PyResult<FeatureVector> {
    FeatureVector::from_values(values).map_err(to_py)
}

/// Similarity (`hi`, `chi2`, `l2`, `cos`) between two feature lists.
#[pyfunction]
#[pyo3(signature = (a, b, measure = "hi"))]
fn similarity(a: Vec<f64>, b: Vec<f64>, measure: &str) -> PyResult<f64> {
    sbgp::similarity(&vector(a)?, &vector(b)?, parse_similarity(measure)?).map_err(to_py)
}

/// Nearest gallery entry: returns `(index, subject, score)`.
#[pyfunction]
#[pyo3(signature = (gallery, subjects, probe, measure = "hi"))]
fn nn_classify(
    gallery: Vec<Vec<f64>>,
    subjects: Vec<String>,
    probe: Vec<f64>,
    measure: &str,
) -> PyResult<(usize, String, f64)> {
    if gallery.len() != subjects.len() {
        return Err(PyValueError::new_err("gallery and subjects must have the same length"));
    }
    let mut g = Gallery::new();
    for (features, subject) in gallery.into_iter().zip(subjects) {
        g.push(vector(features)?, subject, "").map_err(to_py)?;
    }
    let m = sbgp::nn_classify(&g, &vector(probe)?, parse_similarity(measure)?).map_err(to_py)?;
    Ok((m.index, m.subject, m.score))
}

/// Verification result as returned by [`verify`].
#[pyclass(name = "Verification", module = "sbgp_py", frozen, get_all)]
struct PyVerification {
    fold_accuracies: Vec<f64>,
    fold_thresholds: Vec<f64>,
    mean_accuracy: f64,
    standard_error: f64,
    /// `(threshold, false_accept, true_accept)`, strictest first.
    roc: Vec<(f64, f64, f64)>,
}

/// Leave-one-fold-out threshold verification over scored pairs.
#[pyfunction]
#[pyo3(signature = (scores, same, folds, higher_is_better = true))]
fn verify(scores: Vec<f64>, same: Vec<bool>, folds: Vec<usize>, higher_is_better: bool) -> PyResult<PyVerification> {
    if scores.len() != same.len() || scores.len() != folds.len() {
        return Err(PyValueError::new_err(
            "scores, same and folds must have the same length",
        ));
    }
    let pairs: Vec<ScoredPair> = scores
        .iter()
        .zip(&same)
        .zip(&folds)
        .map(|((&score, &same), &fold)| ScoredPair { score, same, fold })
        .collect();
    let r = verify_scores(&pairs, higher_is_better).map_err(to_py)?;
    Ok(PyVerification {
        fold_accuracies: r.fold_accuracies,
        fold_thresholds: r.fold_thresholds,
        mean_accuracy: r.mean_accuracy,
        standard_error: r.standard_error,
        roc: r
            .roc
            .iter()
            .map(|p| (p.threshold, p.false_accept, p.true_accept))
            .collect(),
    })
}

#[pymodule]
fn sbgp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NON_STRUCTURAL", sbgp::NON_STRUCTURAL)?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyLabelMap>()?;
    m.add_class::<PyExtractor>()?;
    m.add_class::<PyVerification>()?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(structural_labels, m)?)?;
    m.add_function(wrap_pyfunction!(bgp_label, m)?)?;
    m.add_function(wrap_pyfunction!(sbgp_map, m)?)?;
    m.add_function(wrap_pyfunction!(lbp_map, m)?)?;
    m.add_function(wrap_pyfunction!(cs_lbp_map, m)?)?;
    m.add_function(wrap_pyfunction!(higo_map, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(nn_classify, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

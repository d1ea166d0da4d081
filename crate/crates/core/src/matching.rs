//! Similarity measures, nearest-neighbour identification and pair verification.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Similarity {
    /// `Σ min(a_i, b_i)`.
    HistogramIntersection,
    /// `Σ (a_i - b_i)² / (a_i + b_i)`, with `0/0` terms taken as 0.
    ChiSquare,
    Euclidean,
    /// `a·b / (|a| |b|)`; two zero vectors score 1, one zero vector scores 0.
    Cosine,
}

impl Similarity {
    pub const ALL: [Similarity; 4] = [
        Similarity::HistogramIntersection,
        Similarity::ChiSquare,
        Similarity::Euclidean,
        Similarity::Cosine,
    ];

    /// True for similarities, false for distances.
    pub fn higher_is_better(&self) -> bool {
        matches!(self, Similarity::HistogramIntersection | Similarity::Cosine)
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Similarity::HistogramIntersection => "hi",
            Similarity::ChiSquare => "chi2",
            Similarity::Euclidean => "l2",
            Similarity::Cosine => "cos",
        }
    }

    /// Score with larger meaning more alike, whatever the polarity.
    pub fn oriented(&self, score: f64) -> f64 {
        if self.higher_is_better() {
            score
        } else {
            -score
        }
    }

    pub fn score(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let pairs = a.iter().zip(b);
        Ok(match self {
            Similarity::HistogramIntersection => pairs.map(|(x, y)| x.min(*y)).sum(),
            Similarity::ChiSquare => pairs
                .map(|(x, y)| {
                    let s = x + y;
                    if s == 0.0 {
                        0.0
                    } else {
                        (x - y) * (x - y) / s
                    }
                })
                .sum(),
            Similarity::Euclidean => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Similarity::Cosine => {
                let dot: f64 = pairs.map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                match (na == 0.0, nb == 0.0) {
                    (true, true) => 1.0,
                    (true, false) | (false, true) => 0.0,
                    _ => dot / (na * nb),
                }
            }
        })
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hi" | "intersection" => Ok(Similarity::HistogramIntersection),
            "chi2" => Ok(Similarity::ChiSquare),
            "l2" | "euclidean" => Ok(Similarity::Euclidean),
            "cos" | "cosine" => Ok(Similarity::Cosine),
            other => Err(Error::InvalidParameter(format!("unknown similarity `{other}`"))),
        }
    }
}

pub fn similarity(a: &FeatureVector, b: &FeatureVector, s: Similarity) -> Result<f64> {
    s.score(a.values(), b.values())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub features: FeatureVector,
    pub subject: String,
    pub path: String,
}

/// Enrolled reference vectors sharing one dimensionality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gallery {
    entries: Vec<GalleryEntry>,
}

impl Gallery {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, features: FeatureVector, subject: impl Into<String>, path: impl Into<String>) -> Result<()> {
        if let Some(dims) = self.dims() {
            if dims != features.dims() {
                return Err(Error::DimensionMismatch {
                    left: dims,
                    right: features.dims(),
                });
            }
        }
        self.entries.push(GalleryEntry {
            features,
            subject: subject.into(),
            path: path.into(),
        });
        Ok(())
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dims(&self) -> Option<usize> {
        self.entries.first().map(|e| e.features.dims())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub index: usize,
    pub subject: String,
    pub score: f64,
}

/// Closest gallery entry to `probe`; ties go to the lowest gallery index.
pub fn nn_classify(gallery: &Gallery, probe: &FeatureVector, s: Similarity) -> Result<Match> {
    if gallery.is_empty() {
        return Err(Error::EmptyGallery);
    }
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, entry) in gallery.entries.iter().enumerate() {
        let raw = similarity(&entry.features, probe, s)?;
        let oriented = s.oriented(raw);
        if best.is_none_or(|(_, b, _)| oriented > b) {
            best = Some((i, oriented, raw));
        }
    }
    let (index, _, score) = best.expect("non-empty gallery");
    Ok(Match {
        index,
        subject: gallery.entries[index].subject.clone(),
        score,
    })
}

/// One scored verification pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub score: f64,
    pub same: bool,
    pub fold: usize,
}

/// Operating point: the fraction of different-identity pairs accepted and
/// of same-identity pairs accepted at `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_accept: f64,
    pub true_accept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationResult {
    pub fold_accuracies: Vec<f64>,
    /// Threshold chosen for each fold, in the measure's own units; infinite when every pair is accepted or rejected.
    pub fold_thresholds: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation of fold accuracies over `sqrt(folds)`.
    pub standard_error: f64,
    /// Pooled ROC, ordered from the strictest to the loosest threshold.
    pub roc: Vec<RocPoint>,
}

/// Picks the oriented threshold maximising accuracy on `train` (pairs with
/// oriented score `>= threshold` are accepted as same). Candidates are
/// `-inf` (accept all), the midpoints between consecutive distinct scores
/// and `+inf` (reject all). Ties go to the smallest candidate.
fn best_threshold(train: &[(f64, bool)]) -> f64 {
    let mut sorted = train.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_same = sorted.iter().filter(|p| p.1).count();
    // candidate below sorted[i]: everything from i on is accepted
    let mut same_below = 0usize;
    let mut diff_below = 0usize;
    let mut best = (f64::NEG_INFINITY, total_same);
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        if i > 0 {
            let correct = (total_same - same_below) + diff_below;
            if correct > best.1 {
                let prev = sorted[i - 1].0;
                best = (prev + (v - prev) / 2.0, correct);
            }
        }
        while i < sorted.len() && sorted[i].0 == v {
            if sorted[i].1 {
                same_below += 1;
            } else {
                diff_below += 1;
            }
            i += 1;
        }
    }
    if diff_below > best.1 {
        best = (f64::INFINITY, diff_below);
    }
    best.0
}

/// Leave-one-fold-out threshold selection and evaluation.
pub fn verify_scores(pairs: &[ScoredPair], higher_is_better: bool) -> Result<VerificationResult> {
    let n_folds = pairs.iter().map(|p| p.fold + 1).max().unwrap_or(0);
    if n_folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "verification needs at least 2 folds, got {n_folds}"
        )));
    }
    let mut fold_sizes = vec![0usize; n_folds];
    for p in pairs {
        fold_sizes[p.fold] += 1;
        if !p.score.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite pair score {}", p.score)));
        }
    }
    if let Some(empty) = fold_sizes.iter().position(|&n| n == 0) {
        return Err(Error::InvalidParameter(format!("fold {empty} has no pairs")));
    }
    let orient = |s: f64| if higher_is_better { s } else { -s };
    let unorient = |t: f64| if higher_is_better { t } else { -t };

    let mut fold_accuracies = Vec::with_capacity(n_folds);
    let mut fold_thresholds = Vec::with_capacity(n_folds);
    for (fold, &size) in fold_sizes.iter().enumerate() {
        let train: Vec<(f64, bool)> = pairs
            .iter()
            .filter(|p| p.fold != fold)
            .map(|p| (orient(p.score), p.same))
            .collect();
        let threshold = best_threshold(&train);
        let test = pairs.iter().filter(|p| p.fold == fold);
        let correct = test.filter(|p| (orient(p.score) >= threshold) == p.same).count();
        fold_accuracies.push(correct as f64 / size as f64);
        fold_thresholds.push(unorient(threshold));
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / n_folds as f64;
    let var = fold_accuracies.iter().map(|a| (a - mean_accuracy).powi(2)).sum::<f64>() / (n_folds - 1) as f64;
    let standard_error = (var / n_folds as f64).sqrt();

    Ok(VerificationResult {
        fold_accuracies,
        fold_thresholds,
        mean_accuracy,
        standard_error,
        roc: roc_curve(pairs, higher_is_better),
    })
}

/// ROC points at every distinct score, strictest first.
pub fn roc_curve(pairs: &[ScoredPair], higher_is_better: bool) -> Vec<RocPoint> {
    let orient = |s: f64| if higher_is_better { s } else { -s };
    let mut sorted: Vec<(f64, bool)> = pairs.iter().map(|p| (orient(p.score), p.same)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n_same = sorted.iter().filter(|p| p.1).count();
    let n_diff = sorted.len() - n_same;
    let ratio = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };

    let (mut same_acc, mut diff_acc) = (0, 0);
    let mut roc = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == v {
            if sorted[i].1 {
                same_acc += 1;
            } else {
                diff_acc += 1;
            }
            i += 1;
        }
        roc.push(RocPoint {
            threshold: orient(v),
            false_accept: ratio(diff_acc, n_diff),
            true_accept: ratio(same_acc, n_same),
        });
    }
    roc
}

/// Scores each `(a, b, same, fold)` pair with `s` and runs [`verify_scores`].
pub fn verify_pairs(
    pairs: &[(FeatureVector, FeatureVector, bool, usize)],
    s: Similarity,
) -> Result<VerificationResult> {
    let scored = pairs
        .iter()
        .map(|(a, b, same, fold)| {
            Ok(ScoredPair {
                score: similarity(a, b, s)?,
                same: *same,
                fold: *fold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    verify_scores(&scored, s.higher_is_better())
}

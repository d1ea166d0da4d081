//! Circular-neighbourhood baselines: LBP (uniform and rotation-invariant
//! uniform mappings) and center-symmetric LBP.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::LabelMap;
use crate::image::Image;

use super::OpCounter;

/// `P` points sampled on a circle of radius `R` with bilinear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircularNeighborhood {
    points: usize,
    radius: usize,
}

impl CircularNeighborhood {
    pub fn new(points: usize, radius: usize) -> Result<Self> {
        if !(4..=32).contains(&points) || !points.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "circular neighbourhood needs an even point count in [4, 32], got {points}"
            )));
        }
        if radius == 0 {
            return Err(Error::InvalidParameter(
                "circular neighbourhood radius must be at least 1".into(),
            ));
        }
        Ok(Self { points, radius })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn samplers(&self, width: usize) -> Vec<Sampler> {
        let snap = |v: f64| (v * 1e9).round() / 1e9;
        (0..self.points)
            .map(|p| {
                let angle = TAU * p as f64 / self.points as f64;
                let dy = snap(-(self.radius as f64) * angle.sin());
                let dx = snap(self.radius as f64 * angle.cos());
                let (fy, fx) = (dy.floor(), dx.floor());
                Sampler {
                    offset: fy as isize * width as isize + fx as isize,
                    width,
                    ty: dy - fy,
                    tx: dx - fx,
                }
            })
            .collect()
    }
}

struct Sampler {
    offset: isize,
    width: usize,
    ty: f64,
    tx: f64,
}

impl Sampler {
    #[inline]
    fn sample(&self, px: &[f64], center: usize) -> f64 {
        let i = (center as isize + self.offset) as usize;
        // lerp form keeps constant regions exact
        let along_row = |k: usize| {
            if self.tx == 0.0 {
                px[k]
            } else {
                px[k] + self.tx * (px[k + 1] - px[k])
            }
        };
        let top = along_row(i);
        if self.ty == 0.0 {
            return top;
        }
        let bottom = along_row(i + self.width);
        top + self.ty * (bottom - top)
    }
}

/// LBP code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LbpVariant {
    /// Uniform patterns get their own label, the rest share one: `P(P-1) + 3` labels.
    U2,
    /// Uniform patterns labelled by their number of ones, the rest share `P + 1`: `P + 2` labels.
    Riu2,
}

impl LbpVariant {
    pub fn label_count(&self, points: usize) -> usize {
        match self {
            LbpVariant::U2 => points * (points - 1) + 3,
            LbpVariant::Riu2 => points + 2,
        }
    }
}

/// Number of circular 0/1 transitions in the low `points` bits.
#[inline]
pub fn transitions(pattern: u64, points: usize) -> u32 {
    let mask = if points == 64 { u64::MAX } else { (1u64 << points) - 1 };
    let rotated = ((pattern >> 1) | (pattern << (points - 1))) & mask;
    ((pattern ^ rotated) & mask).count_ones()
}

/// Maps a raw `points`-bit LBP code to its u2 or riu2 label.
///
/// u2 labels: 0 for all zeros, `1 + (ones - 1) * P + start` for a single
/// circular run of ones beginning at bit `start`, `P(P-1) + 1` for all ones
/// and `P(P-1) + 2` for non-uniform codes.
pub fn map_lbp_code(pattern: u64, points: usize, variant: LbpVariant) -> u32 {
    let ones = pattern.count_ones() as usize;
    let uniform = transitions(pattern, points) <= 2;
    match variant {
        LbpVariant::Riu2 => {
            if uniform {
                ones as u32
            } else {
                points as u32 + 1
            }
        }
        LbpVariant::U2 => {
            let p = points;
            if !uniform {
                (p * (p - 1) + 2) as u32
            } else if ones == 0 {
                0
            } else if ones == p {
                (p * (p - 1) + 1) as u32
            } else {
                let start = (0..p)
                    .find(|&i| pattern >> i & 1 == 1 && pattern >> ((i + p - 1) % p) & 1 == 0)
                    .expect("uniform non-constant code has a run start");
                (1 + (ones - 1) * p + start) as u32
            }
        }
    }
}

fn interior(image: &Image, radius: usize) -> Result<(usize, usize)> {
    image.ensure_min_size(2 * radius + 1)?;
    Ok((image.width() - 2 * radius, image.height() - 2 * radius))
}

/// LBP labels over the interior (border of `R` pixels excluded).
///
/// Bit `p` is set when the sample at angle `2πp/P` is `>=` the centre.
pub fn lbp_map_counted<C: OpCounter>(
    image: &Image,
    neighborhood: CircularNeighborhood,
    variant: LbpVariant,
    counter: &mut C,
) -> Result<LabelMap> {
    let r = neighborhood.radius;
    let (iw, ih) = interior(image, r)?;
    let w = image.width();
    let px = image.pixels();
    let samplers = neighborhood.samplers(w);
    let mut labels = Vec::with_capacity(iw * ih);
    for row in r..r + ih {
        for col in r..r + iw {
            let center_idx = row * w + col;
            let center = px[center_idx];
            let mut code = 0u64;
            for (p, s) in samplers.iter().enumerate() {
                code |= u64::from(s.sample(px, center_idx) >= center) << p;
            }
            labels.push(map_lbp_code(code, neighborhood.points, variant));
        }
        let n = (neighborhood.points * iw) as u64;
        counter.add(n, n);
    }
    LabelMap::new(iw, ih, labels)
}

pub fn lbp_map(image: &Image, neighborhood: CircularNeighborhood, variant: LbpVariant) -> Result<LabelMap> {
    lbp_map_counted(image, neighborhood, variant, &mut ())
}

/// Scale applied to intensities before the CS-LBP threshold (8-bit range to `[0, 1]`).
pub const CS_LBP_INTENSITY_SCALE: f64 = 1.0 / 255.0;

/// Center-symmetric LBP: bit `i` of `P/2` is set when the normalised
/// difference between sample `i` and its opposite sample `i + P/2` exceeds
/// `threshold` (strictly). All `2^(P/2)` labels are kept.
pub fn cs_lbp_map_counted<C: OpCounter>(
    image: &Image,
    neighborhood: CircularNeighborhood,
    threshold: f64,
    counter: &mut C,
) -> Result<LabelMap> {
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "CS-LBP threshold must be finite and >= 0, got {threshold}"
        )));
    }
    let r = neighborhood.radius;
    let (iw, ih) = interior(image, r)?;
    let w = image.width();
    let px = image.pixels();
    let samplers = neighborhood.samplers(w);
    let half = neighborhood.points / 2;
    let mut labels = Vec::with_capacity(iw * ih);
    for row in r..r + ih {
        for col in r..r + iw {
            let c = row * w + col;
            let mut code = 0u32;
            for i in 0..half {
                let diff = (samplers[i].sample(px, c) - samplers[i + half].sample(px, c)) * CS_LBP_INTENSITY_SCALE;
                code |= u32::from(diff > threshold) << i;
            }
            labels.push(code);
        }
        let n = (half * iw) as u64;
        counter.add(n, n);
    }
    LabelMap::new(iw, ih, labels)
}

pub fn cs_lbp_map(image: &Image, neighborhood: CircularNeighborhood, threshold: f64) -> Result<LabelMap> {
    cs_lbp_map_counted(image, neighborhood, threshold, &mut ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::OpCounts;
    use std::collections::BTreeSet;

    fn hood(p: usize, r: usize) -> CircularNeighborhood {
        CircularNeighborhood::new(p, r).unwrap()
    }

    /// Enumerates every code and collects the distinct mapped labels.
    fn distinct_labels(points: usize, variant: LbpVariant) -> BTreeSet<u32> {
        (0..1u64 << points).map(|c| map_lbp_code(c, points, variant)).collect()
    }

    #[test]
    fn label_counts_by_enumeration() {
        let u2 = distinct_labels(8, LbpVariant::U2);
        assert_eq!(u2.len(), 59);
        assert_eq!(*u2.iter().max().unwrap(), 58);
        assert_eq!(distinct_labels(8, LbpVariant::Riu2).len(), 10);
        assert_eq!(distinct_labels(16, LbpVariant::U2).len(), 243);
        assert_eq!(distinct_labels(16, LbpVariant::Riu2).len(), 18);
        assert_eq!(LbpVariant::U2.label_count(24), 555);
        assert_eq!(LbpVariant::Riu2.label_count(24), 26);
    }

    #[test]
    fn u2_labels_are_dense_for_p24() {
        // Every uniform code of 24 bits, built as a rotated run of ones.
        let p = 24;
        let mut seen = BTreeSet::new();
        seen.insert(map_lbp_code(0, p, LbpVariant::U2));
        seen.insert(map_lbp_code((1 << p) - 1, p, LbpVariant::U2));
        for len in 1..p {
            for start in 0..p {
                let run = (1u64 << len) - 1;
                let code = ((run << start) | (run >> (p - start))) & ((1 << p) - 1);
                assert!(transitions(code, p) == 2);
                seen.insert(map_lbp_code(code, p, LbpVariant::U2));
            }
        }
        seen.insert(map_lbp_code(0b0101, p, LbpVariant::U2));
        assert_eq!(seen.len(), 555);
        assert_eq!(*seen.iter().max().unwrap(), 554);
    }

    #[test]
    fn constant_image_is_all_ones() {
        let img = Image::filled(9, 9, 120.0).unwrap();
        for (p, r) in [(8, 1), (16, 2), (24, 3)] {
            let riu2 = lbp_map(&img, hood(p, r), LbpVariant::Riu2).unwrap();
            assert!(riu2.labels().iter().all(|&l| l == p as u32));
            let u2 = lbp_map(&img, hood(p, r), LbpVariant::U2).unwrap();
            assert!(u2.labels().iter().all(|&l| l == (p * (p - 1) + 1) as u32));
        }
    }

    #[test]
    fn center_peak_and_pit() {
        let mut px = vec![10.0; 25];
        px[12] = 200.0;
        let peak = Image::new(5, 5, px).unwrap();
        assert_eq!(lbp_map(&peak, hood(8, 1), LbpVariant::Riu2).unwrap().get(1, 1), 0);
        let mut px = vec![200.0; 25];
        px[12] = 10.0;
        let pit = Image::new(5, 5, px).unwrap();
        assert_eq!(lbp_map(&pit, hood(8, 1), LbpVariant::Riu2).unwrap().get(1, 1), 8);
    }

    #[test]
    fn comparisons_per_pixel() {
        let img = Image::from_fn(20, 20, |r, c| ((r * c) % 11) as f64).unwrap();
        for (p, r) in [(8, 1), (16, 2), (24, 3)] {
            let mut n = OpCounts::default();
            let map = lbp_map_counted(&img, hood(p, r), LbpVariant::U2, &mut n).unwrap();
            assert_eq!(n.comparisons, (p * map.labels().len()) as u64);
            assert_eq!(n.units(), (2 * p * map.labels().len()) as u64);
            let mut n = OpCounts::default();
            cs_lbp_map_counted(&img, hood(p, r), 0.01, &mut n).unwrap();
            assert_eq!(n.comparisons, (p / 2 * map.labels().len()) as u64);
        }
    }

    #[test]
    fn cs_lbp_constant_and_label_range() {
        let img = Image::filled(9, 9, 50.0).unwrap();
        assert!(cs_lbp_map(&img, hood(8, 2), 0.01)
            .unwrap()
            .labels()
            .iter()
            .all(|&l| l == 0));
        let noisy = Image::from_fn(30, 30, |r, c| ((r * 31 + c * 17) % 256) as f64).unwrap();
        let map = cs_lbp_map(&noisy, hood(8, 2), 0.01).unwrap();
        assert!(map.labels().iter().all(|&l| l < 16));
        assert!(cs_lbp_map(&noisy, hood(8, 2), -0.1).is_err());
    }

    #[test]
    fn cs_lbp_threshold_is_strict() {
        // On-grid samples at (0,±1) and (±1,0) for P=4, R=1: bit 0 compares right vs left.
        let threshold = 51.0 * CS_LBP_INTENSITY_SCALE;
        #[rustfmt::skip]
        let at = Image::new(3, 3, vec![
            0.0, 0.0, 0.0,
            0.0, 0.0, 51.0,
            0.0, 0.0, 0.0,
        ]).unwrap();
        assert_eq!(cs_lbp_map(&at, hood(4, 1), threshold).unwrap().labels(), [0]);
        let above = at.map(|v| v * 52.0 / 51.0).unwrap();
        assert_eq!(cs_lbp_map(&above, hood(4, 1), threshold).unwrap().labels(), [1]);
    }

    #[test]
    fn rejects_bad_neighbourhoods() {
        assert!(CircularNeighborhood::new(7, 1).is_err());
        assert!(CircularNeighborhood::new(8, 0).is_err());
        assert!(CircularNeighborhood::new(34, 3).is_err());
        let img = Image::filled(4, 4, 0.0).unwrap();
        assert!(matches!(
            lbp_map(&img, hood(16, 2), LbpVariant::U2),
            Err(Error::ImageTooSmall { .. })
        ));
    }
}

//! Binary gradient patterns on the square perimeter and their structural subset.
//!
//! Each of the `k = P/2` directions pairs a perimeter pixel `G+` with its
//! antipode `G-` and emits one principal bit `B+ = [G+ - G- >= 0]`; the
//! associated bit `B- = 1 - B+` is implied. The label is `Σ 2^(t-1) B+_t`.
//!
//! Directions are enumerated in a fixed perimeter walk around `(row, col)`:
//! first the right column from top to bottom (`2R + 1` directions, paired
//! with the left column), then the bottom row from right to left excluding
//! the corners (`2R - 1` directions, paired with the top row). Walking the
//! `G+` pixels and then the `G-` pixels traces the whole perimeter once, so a
//! label is *structural* when its principal bits followed by their
//! complements hold all ones in a single circular run, i.e. the pattern is a
//! single oriented edge through the neighbourhood.

use crate::error::{Error, Result};
use crate::grid::{LabelMap, SpatialResolution, NON_STRUCTURAL};
use crate::image::Image;

use super::OpCounter;

/// Largest neighbour count accepted by [`structural_labels`].
pub const MAX_STRUCTURAL_NEIGHBORS: usize = 32;

/// `(row, col)` offsets of the `G+` and `G-` pixels of one direction.
pub type DirectionPair = ((isize, isize), (isize, isize));

/// Offsets of every direction in principal-bit order (bit `t` is direction `t`).
pub fn direction_offsets(res: SpatialResolution) -> Vec<DirectionPair> {
    let r = res.radius() as isize;
    let first = (-r..=r).map(|n1| ((n1, r), (-n1, -r)));
    let second = (-(r - 1)..=(r - 1)).map(|n2| ((r, -n2), (-r, n2)));
    first.chain(second).collect()
}

/// Principal and associated bits of one pixel, both materialised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpBits {
    pub principal: Vec<bool>,
    pub associated: Vec<bool>,
}

impl BgpBits {
    pub fn label(&self) -> u32 {
        bits_to_label(&self.principal)
    }
}

/// `L = Σ 2^t b_t` over 0-based `t`.
pub fn bits_to_label(bits: &[bool]) -> u32 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (t, &b)| acc | (u32::from(b) << t))
}

/// The `k` principal bits of `label`, least significant first.
pub fn label_to_bits(label: u32, k: usize) -> Vec<bool> {
    (0..k).map(|t| label >> t & 1 == 1).collect()
}

fn check_interior(image: &Image, row: usize, col: usize, radius: usize) -> Result<()> {
    if row < radius || col < radius || row + radius >= image.height() || col + radius >= image.width() {
        return Err(Error::NearBorder { row, col, radius });
    }
    Ok(())
}

/// Evaluates both bit families at `(row, col)` by walking the two direction loops directly.
pub fn bgp_bits(image: &Image, row: usize, col: usize, res: SpatialResolution) -> Result<BgpBits> {
    let r = res.radius() as isize;
    check_interior(image, row, col, res.radius())?;
    let (i, j) = (row as isize, col as isize);
    let at = |y: isize, x: isize| image.get(y as usize, x as usize);

    let mut principal = Vec::with_capacity(res.directions());
    for n1 in -r..=r {
        principal.push(at(i + n1, j + r) - at(i - n1, j - r) >= 0.0);
    }
    for n2 in -(r - 1)..=(r - 1) {
        principal.push(at(i + r, j - n2) - at(i - r, j + n2) >= 0.0);
    }
    let associated = principal.iter().map(|&b| !b).collect();
    Ok(BgpBits { principal, associated })
}

/// Binary gradient pattern label of the pixel at `(row, col)`, in `[0, 2^k)`.
pub fn bgp_label(image: &Image, row: usize, col: usize, res: SpatialResolution) -> Result<u32> {
    bgp_bits(image, row, col, res).map(|bits| bits.label())
}

/// Structural labels for `P` neighbours, in generation order, with their
/// inverse lookup (`label -> bin`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralLabelSet {
    neighbors: usize,
    labels: Vec<u32>,
    bin_of: Vec<u32>,
}

impl StructuralLabelSet {
    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    pub fn directions(&self) -> usize {
        self.neighbors / 2
    }

    /// Labels in generation order; position is the histogram bin.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: u32) -> Option<usize> {
        match self.bin_of.get(label as usize) {
            Some(&bin) if bin != NON_STRUCTURAL => Some(bin as usize),
            _ => None,
        }
    }

    pub fn contains(&self, label: u32) -> bool {
        self.index_of(label).is_some()
    }

    /// Dense `label -> bin` table of length `2^k`; non-structural entries hold [`NON_STRUCTURAL`].
    pub fn lookup_table(&self) -> &[u32] {
        &self.bin_of
    }
}

/// Generates the `P` structural labels.
///
/// For `t = 1..=k` the label is `2^(t-1) - 1` (the lowest `t - 1` principal
/// bits set); for `t = k+1..=P` it is the k-bit complement of label
/// `2k - t + 1`.
pub fn structural_labels(neighbors: usize) -> Result<StructuralLabelSet> {
    if !neighbors.is_multiple_of(2) || !(4..=MAX_STRUCTURAL_NEIGHBORS).contains(&neighbors) {
        return Err(Error::InvalidParameter(format!(
            "structural labels need an even neighbour count in [4, {MAX_STRUCTURAL_NEIGHBORS}], got {neighbors}"
        )));
    }
    let k = neighbors / 2;
    let full = 1u32 << k;
    let mut labels = Vec::with_capacity(neighbors);
    for t in 1..=neighbors {
        let label = if t <= k {
            (1u32 << (t - 1)) - 1
        } else {
            full - labels[2 * k - t] - 1
        };
        labels.push(label);
    }
    let mut bin_of = vec![NON_STRUCTURAL; 1usize << k];
    for (bin, &label) in labels.iter().enumerate() {
        bin_of[label as usize] = bin as u32;
    }
    Ok(StructuralLabelSet {
        neighbors,
        labels,
        bin_of,
    })
}

/// True when the circular string `b_1..b_k, !b_1..!b_k` has all of its ones
/// in one contiguous run.
pub fn structural_oracle(principal_bits: &[bool]) -> bool {
    let ring: Vec<bool> = principal_bits
        .iter()
        .copied()
        .chain(principal_bits.iter().map(|&b| !b))
        .collect();
    let n = ring.len();
    if n == 0 {
        return false;
    }
    let run_starts = (0..n).filter(|&i| ring[i] && !ring[(i + n - 1) % n]).count();
    run_starts == 1
}

fn interior_dims(image: &Image, radius: usize) -> Result<(usize, usize)> {
    image.ensure_min_size(2 * radius + 1)?;
    Ok((image.width() - 2 * radius, image.height() - 2 * radius))
}

/// Raw BGP labels (all `2^k` values kept) over the interior, row by row.
pub fn bgp_map_counted<C: OpCounter>(image: &Image, res: SpatialResolution, counter: &mut C) -> Result<LabelMap> {
    let r = res.radius();
    let (iw, ih) = interior_dims(image, r)?;
    let w = image.width();
    let px = image.pixels();
    let offsets = direction_offsets(res);
    let start = |row: usize, (dr, dc): (isize, isize)| -> usize {
        (row as isize + dr) as usize * w + (r as isize + dc) as usize
    };

    let mut codes = vec![0u32; iw * ih];
    for (row, out) in (r..r + ih).zip(codes.chunks_exact_mut(iw)) {
        for (t, &(plus, minus)) in offsets.iter().enumerate() {
            let a = &px[start(row, plus)..][..iw];
            let b = &px[start(row, minus)..][..iw];
            for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                *o |= u32::from(x - y >= 0.0) << t;
            }
        }
        let n = (offsets.len() * iw) as u64;
        counter.add(n, n);
    }
    LabelMap::new(iw, ih, codes)
}

pub fn bgp_map(image: &Image, res: SpatialResolution) -> Result<LabelMap> {
    bgp_map_counted(image, res, &mut ())
}

/// SBGP bin indices (`[0, P)`) per interior pixel, [`NON_STRUCTURAL`] elsewhere.
pub fn sbgp_map_counted<C: OpCounter>(image: &Image, res: SpatialResolution, counter: &mut C) -> Result<LabelMap> {
    let set = structural_labels(res.neighbors())?;
    let table = set.lookup_table();
    let raw = bgp_map_counted(image, res, counter)?;
    let (w, h) = (raw.width(), raw.height());
    let labels = raw.labels().iter().map(|&code| table[code as usize]).collect();
    LabelMap::new(w, h, labels)
}

pub fn sbgp_map(image: &Image, res: SpatialResolution) -> Result<LabelMap> {
    sbgp_map_counted(image, res, &mut ())
}

/// Pixel-by-pixel reference for [`sbgp_map`], built on [`bgp_label`] and a linear label search.
pub fn sbgp_map_reference(image: &Image, res: SpatialResolution) -> Result<LabelMap> {
    let r = res.radius();
    let (iw, ih) = interior_dims(image, r)?;
    let set = structural_labels(res.neighbors())?;
    let mut labels = Vec::with_capacity(iw * ih);
    for row in r..r + ih {
        for col in r..r + iw {
            let label = bgp_label(image, row, col, res)?;
            let bin = set.labels().iter().position(|&l| l == label);
            labels.push(bin.map_or(NON_STRUCTURAL, |b| b as u32));
        }
    }
    LabelMap::new(iw, ih, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::OpCounts;
    use proptest::prelude::*;

    fn res(r: usize) -> SpatialResolution {
        SpatialResolution::from_radius(r).unwrap()
    }

    fn patch3() -> Image {
        Image::new(3, 3, (1..=9).map(f64::from).collect()).unwrap()
    }

    #[test]
    fn hand_evaluated_patch() {
        let bits = bgp_bits(&patch3(), 1, 1, res(1)).unwrap();
        assert_eq!(bits.principal, [false, true, true, true]);
        assert_eq!(bgp_label(&patch3(), 1, 1, res(1)).unwrap(), 14);
    }

    #[test]
    fn constant_patch_sets_every_bit() {
        for r in 1..=3 {
            let img = Image::filled(2 * r + 1, 2 * r + 1, 77.0).unwrap();
            let k = 4 * r;
            assert_eq!(bgp_label(&img, r, r, res(r)).unwrap(), (1 << k) - 1);
        }
    }

    #[test]
    fn order_preserving_transform_keeps_label() {
        let img = patch3();
        let t = img.map(|v| 2.0 * v + 100.0).unwrap();
        assert_eq!(
            bgp_label(&img, 1, 1, res(1)).unwrap(),
            bgp_label(&t, 1, 1, res(1)).unwrap()
        );
    }

    #[test]
    fn border_pixels_are_rejected() {
        let img = Image::filled(5, 5, 0.0).unwrap();
        assert!(matches!(bgp_label(&img, 1, 2, res(2)), Err(Error::NearBorder { .. })));
        assert!(matches!(bgp_label(&img, 2, 4, res(1)), Err(Error::NearBorder { .. })));
        assert!(bgp_label(&img, 2, 2, res(2)).is_ok());
    }

    #[test]
    fn direction_offsets_walk_the_perimeter() {
        for r in 1..=4 {
            let offs = direction_offsets(res(r));
            assert_eq!(offs.len(), 4 * r);
            let walk: Vec<_> = offs.iter().map(|p| p.0).chain(offs.iter().map(|p| p.1)).collect();
            for (i, a) in walk.iter().enumerate() {
                let b = walk[(i + 1) % walk.len()];
                assert!(a.0.abs().max(a.1.abs()) == r as isize);
                assert_eq!((a.0 - b.0).abs().max((a.1 - b.1).abs()), 1, "step {i} of R={r}");
            }
        }
    }

    #[test]
    fn structural_label_values() {
        assert_eq!(structural_labels(8).unwrap().labels(), [0, 1, 3, 7, 8, 12, 14, 15]);
        assert_eq!(structural_labels(4).unwrap().labels(), [0, 1, 2, 3]);
        let mut p16 = structural_labels(16).unwrap().labels().to_vec();
        p16.sort_unstable();
        let mut expected = vec![0, 1, 3, 7, 15, 31, 63, 127, 255, 254, 252, 248, 240, 224, 192, 128];
        expected.sort_unstable();
        assert_eq!(p16, expected);
        assert!(structural_labels(7).is_err());
        assert!(structural_labels(2).is_err());
        assert!(structural_labels(34).is_err());
    }

    #[test]
    fn label_set_properties() {
        for p in (4..=MAX_STRUCTURAL_NEIGHBORS).step_by(2) {
            let set = structural_labels(p).unwrap();
            let k = p / 2;
            let mask = ((1u64 << k) - 1) as u32;
            assert_eq!(set.len(), p);
            let mut sorted = set.labels().to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), p, "labels distinct for P={p}");
            for &l in set.labels() {
                assert!(u64::from(l) < 1 << k);
                assert!(set.contains(mask - l), "complement closure for P={p}");
            }
            for (bin, &l) in set.labels().iter().enumerate() {
                assert_eq!(set.index_of(l), Some(bin));
            }
        }
    }

    #[test]
    fn oracle_examples() {
        assert!(structural_oracle(&[false, true, true, true]));
        assert!(!structural_oracle(&[true, false, true, false]));
        for k in [2, 4, 8, 12] {
            assert!(structural_oracle(&vec![false; k]));
        }
    }

    #[test]
    fn oracle_matches_generated_labels() {
        for p in [4, 8, 16, 24] {
            let k = p / 2;
            let set = structural_labels(p).unwrap();
            let from_oracle: Vec<u32> = (0..1u32 << k)
                .filter(|&l| structural_oracle(&label_to_bits(l, k)))
                .collect();
            let mut generated = set.labels().to_vec();
            generated.sort_unstable();
            assert_eq!(from_oracle, generated, "P={p}");
        }
    }

    #[test]
    fn ramp_is_one_structural_bin() {
        for r in 1..=3 {
            let img = Image::from_fn(20, 15, |_, c| c as f64).unwrap();
            let map = sbgp_map(&img, res(r)).unwrap();
            assert_eq!(map.non_structural_count(), 0);
            let first = map.labels()[0];
            assert!(map.labels().iter().all(|&l| l == first));
        }
    }

    #[test]
    fn constant_image_falls_in_all_ones_bin() {
        let img = Image::filled(9, 9, 3.0).unwrap();
        let map = sbgp_map(&img, res(1)).unwrap();
        let set = structural_labels(8).unwrap();
        let bin = set.index_of(15).unwrap() as u32;
        assert!(map.labels().iter().all(|&l| l == bin));
    }

    #[test]
    fn alternating_bits_are_non_structural() {
        assert!(!structural_labels(8).unwrap().contains(5));
        // G1+ >= G1-, G2+ < G2-, G3+ >= G3-, G4+ < G4- gives principal bits (1,0,1,0)
        #[rustfmt::skip]
        let img = Image::new(3, 3, vec![
            0.0, 9.0, 5.0,
            5.0, 0.0, 0.0,
            5.0, 0.0, 5.0,
        ]).unwrap();
        assert_eq!(
            bgp_bits(&img, 1, 1, res(1)).unwrap().principal,
            [true, false, true, false]
        );
        assert_eq!(sbgp_map(&img, res(1)).unwrap().labels(), [NON_STRUCTURAL]);
    }

    #[test]
    fn too_small_image() {
        let img = Image::filled(4, 9, 0.0).unwrap();
        assert!(matches!(sbgp_map(&img, res(2)), Err(Error::ImageTooSmall { .. })));
        assert_eq!(sbgp_map(&img, res(1)).unwrap().width(), 2);
    }

    #[test]
    fn counts_half_the_neighbours_per_pixel() {
        let img = Image::from_fn(30, 25, |r, c| ((r * 7 + c * 13) % 17) as f64).unwrap();
        for r in 1..=3 {
            let mut count = OpCounts::default();
            let map = sbgp_map_counted(&img, res(r), &mut count).unwrap();
            assert_eq!(count.comparisons, (4 * r * map.labels().len()) as u64);
            assert_eq!(count.units(), (8 * r * map.labels().len()) as u64);
        }
    }

    proptest! {
        #[test]
        fn fast_path_matches_reference(
            px in prop::collection::vec(0u8..=255, 11 * 13),
            r in 1usize..=3,
        ) {
            let img = Image::from_u8(11, 13, &px).unwrap();
            prop_assert_eq!(sbgp_map(&img, res(r)).unwrap(), sbgp_map_reference(&img, res(r)).unwrap());
        }

        #[test]
        fn associated_bits_complement_principal(px in prop::collection::vec(0u8..4, 49)) {
            let img = Image::from_u8(7, 7, &px).unwrap();
            for r in 1..=3 {
                let bits = bgp_bits(&img, 3, 3, res(r)).unwrap();
                for (p, a) in bits.principal.iter().zip(&bits.associated) {
                    prop_assert_eq!(u8::from(*p) + u8::from(*a), 1);
                }
            }
        }

        #[test]
        fn monotone_transforms_preserve_labels(
            px in prop::collection::vec(0u8..=255, 12 * 12),
            a in 0.01f64..4.0,
            b in 0.0f64..100.0,
            gamma in 0.2f64..3.0,
        ) {
            let img = Image::from_u8(12, 12, &px).unwrap();
            let affine = img.map(|v| a * v + b).unwrap();
            let gam = img.map(|v| 255.0 * (v / 255.0).powf(gamma)).unwrap();
            for r in 1..=3 {
                let base = sbgp_map(&img, res(r)).unwrap();
                prop_assert_eq!(&base, &sbgp_map(&affine, res(r)).unwrap());
                prop_assert_eq!(&base, &sbgp_map(&gam, res(r)).unwrap());
            }
        }
    }
}

//! Synthetic image perturbations.
//!
//! Textual form: `affine:A:B`, `gamma:G`, `ramp:S`, `noise:SIGMA`,
//! `occlusion:X:Y:W:H`, chained left to right with `+`
//! (e.g. `ramp:0.4+noise:5`).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use sbgp::Image;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// `a * I + b`, `a > 0`, `b >= 0`.
    Affine { a: f64, b: f64 },
    /// `255 * (I / 255)^gamma`.
    Gamma { gamma: f64 },
    /// Horizontal multiplicative ramp: gain `1 - s` at the left edge rising to 1 at the right edge.
    Ramp { strength: f64 },
    /// Additive Gaussian noise, result clamped to `[0, 255]`.
    Noise { sigma: f64 },
    /// Zero-filled rectangle (`x` column, `y` row).
    Occlusion {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Input(m));
        match *self {
            Perturbation::Affine { a, b } if !(a > 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) => {
                bad(format!("affine needs a > 0 and b >= 0, got a={a}, b={b}"))
            }
            Perturbation::Gamma { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("gamma must be > 0, got {gamma}"))
            }
            Perturbation::Ramp { strength } if !(0.0..1.0).contains(&strength) => {
                bad(format!("ramp strength must lie in [0, 1), got {strength}"))
            }
            Perturbation::Noise { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad(format!("noise sigma must be >= 0, got {sigma}"))
            }
            Perturbation::Occlusion { width, height, .. } if width == 0 || height == 0 => {
                bad("occlusion patch must be non-empty".into())
            }
            _ => Ok(()),
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, image: &Image, rng: &mut R) -> Result<Image> {
        self.validate()?;
        let (w, h) = (image.width(), image.height());
        let out = match *self {
            Perturbation::Affine { a, b } => image.map(|v| a * v + b)?,
            Perturbation::Gamma { gamma } => image.map(|v| 255.0 * (v / 255.0).powf(gamma))?,
            Perturbation::Ramp { strength } => {
                let denom = (w.max(2) - 1) as f64;
                Image::from_fn(w, h, |r, c| {
                    image.get(r, c) * (1.0 - strength + strength * c as f64 / denom)
                })?
            }
            Perturbation::Noise { sigma } => {
                let normal = Normal::new(0.0, sigma).map_err(|e| HarnessError::Input(e.to_string()))?;
                let px = image
                    .pixels()
                    .iter()
                    .map(|&v| (v + normal.sample(rng)).clamp(0.0, 255.0))
                    .collect();
                Image::new(w, h, px)?
            }
            Perturbation::Occlusion { x, y, width, height } => {
                if x + width > w || y + height > h {
                    return Err(HarnessError::Input(format!(
                        "occlusion patch {width}x{height} at ({x},{y}) exceeds a {w}x{h} image"
                    )));
                }
                Image::from_fn(w, h, |r, c| {
                    if (y..y + height).contains(&r) && (x..x + width).contains(&c) {
                        0.0
                    } else {
                        image.get(r, c)
                    }
                })?
            }
        };
        Ok(out)
    }

    /// True for strictly increasing intensity maps.
    pub fn is_monotone(&self) -> bool {
        matches!(self, Perturbation::Affine { .. } | Perturbation::Gamma { .. })
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Affine { a, b } => write!(f, "affine:{a}:{b}"),
            Perturbation::Gamma { gamma } => write!(f, "gamma:{gamma}"),
            Perturbation::Ramp { strength } => write!(f, "ramp:{strength}"),
            Perturbation::Noise { sigma } => write!(f, "noise:{sigma}"),
            Perturbation::Occlusion { x, y, width, height } => write!(f, "occlusion:{x}:{y}:{width}:{height}"),
        }
    }
}

impl FromStr for Perturbation {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let bad = || HarnessError::Input(format!("malformed perturbation `{s}`"));
        let num = |i: usize| -> Result<f64> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let int = |i: usize| -> Result<usize> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let expect = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
        let p = match kind {
            "affine" => {
                expect(2)?;
                Perturbation::Affine { a: num(0)?, b: num(1)? }
            }
            "gamma" => {
                expect(1)?;
                Perturbation::Gamma { gamma: num(0)? }
            }
            "ramp" => {
                expect(1)?;
                Perturbation::Ramp { strength: num(0)? }
            }
            "noise" => {
                expect(1)?;
                Perturbation::Noise { sigma: num(0)? }
            }
            "occlusion" => {
                expect(4)?;
                Perturbation::Occlusion {
                    x: int(0)?,
                    y: int(1)?,
                    width: int(2)?,
                    height: int(3)?,
                }
            }
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Perturbations applied in sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationChain(pub Vec<Perturbation>);

impl PerturbationChain {
    pub fn apply<R: Rng + ?Sized>(&self, image: &Image, rng: &mut R) -> Result<Image> {
        let mut current = image.clone();
        for p in &self.0 {
            current = p.apply(&current, rng)?;
        }
        Ok(current)
    }

    pub fn is_monotone(&self) -> bool {
        self.0.iter().all(Perturbation::is_monotone)
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PerturbationChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("clean");
        }
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for PerturbationChain {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "clean" {
            return Ok(Self(Vec::new()));
        }
        s.split('+').map(str::parse).collect::<Result<Vec<_>>>().map(Self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn img() -> Image {
        Image::from_fn(10, 8, |r, c| (r * 20 + c * 3) as f64).unwrap()
    }

    #[test]
    fn parses_and_prints() {
        for s in [
            "affine:2:30",
            "gamma:0.4",
            "ramp:0.5",
            "noise:30",
            "occlusion:1:2:3:4",
            "ramp:0.4+noise:5",
            "clean",
        ] {
            let chain: PerturbationChain = s.parse().unwrap();
            assert_eq!(chain.to_string(), s);
        }
        for bad in [
            "affine:0:1",
            "affine:2",
            "gamma:-1",
            "ramp:1.5",
            "noise:x",
            "blur:3",
            "occlusion:0:0:0:3",
        ] {
            assert!(bad.parse::<PerturbationChain>().is_err(), "{bad}");
        }
    }

    #[test]
    fn transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let base = img();
        let aff = "affine:2:30"
            .parse::<Perturbation>()
            .unwrap()
            .apply(&base, &mut rng)
            .unwrap();
        assert_eq!(aff.get(1, 1), 2.0 * 23.0 + 30.0);
        let ramp = Perturbation::Ramp { strength: 0.5 }.apply(&base, &mut rng).unwrap();
        assert_eq!(ramp.get(3, 0), base.get(3, 0) * 0.5);
        assert_eq!(ramp.get(3, 9), base.get(3, 9));
        let occ = Perturbation::Occlusion {
            x: 2,
            y: 1,
            width: 3,
            height: 2,
        }
        .apply(&base, &mut rng)
        .unwrap();
        assert_eq!(occ.get(2, 4), 0.0);
        assert_eq!(occ.get(3, 4), base.get(3, 4));
        assert!(Perturbation::Occlusion {
            x: 8,
            y: 0,
            width: 3,
            height: 1
        }
        .apply(&base, &mut rng)
        .is_err());
        let noisy = Perturbation::Noise { sigma: 30.0 }.apply(&base, &mut rng).unwrap();
        assert!(noisy.pixels().iter().all(|v| (0.0..=255.0).contains(v)));
        assert_ne!(noisy, base);
    }

    #[test]
    fn noise_is_seeded() {
        let p = Perturbation::Noise { sigma: 10.0 };
        let a = p.apply(&img(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = p.apply(&img(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}

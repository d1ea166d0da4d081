//! Acceptance suite. Runs as a plain binary (no libtest harness) and prints
//! one `PASS`/`FAIL` line per criterion; exits non-zero if any fail.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbgp::gradient::build_oigm;
use sbgp::matching::{verify_scores, ScoredPair};
use sbgp::patterns::{sbgp_map_reference, OpCounts};
use sbgp::{extract, sbgp_map, structural_labels, Image, Similarity, SpatialResolution, NON_STRUCTURAL};
use sbgp_bench::config::{DescriptorKind, ExtractorSpec};
use sbgp_bench::experiments::{perturbation_study, synthetic_gallery};
use sbgp_bench::perturb::{Perturbation, PerturbationChain};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| f64::from(rng.random_range(0u8..=255))).unwrap()
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sbgp-bench"))
        .args(args)
        .output()
        .expect("run sbgp-bench")
}

fn criterion_1() -> Outcome {
    let out = cli(&["labels", "--P", "8"]);
    ensure(out.status.success(), || format!("labels exited with {}", out.status))?;
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let labels: Vec<u64> = json["labels"]
        .as_array()
        .ok_or("no labels array")?
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let set: BTreeSet<u64> = labels.iter().copied().collect();
    let expected: BTreeSet<u64> = [0, 1, 3, 7, 8, 12, 14, 15].into();
    ensure(set == expected && labels.len() == 8, || format!("got {labels:?}"))?;
    Ok(format!("labels {labels:?}"))
}

/// Consecutive-run oracle: the circular string `b_1..b_k, !b_1..!b_k` holds a single run of ones.
fn oracle_structural(p: usize) -> BTreeSet<u32> {
    let k = p / 2;
    let mut out = BTreeSet::new();
    for code in 0u32..(1 << k) {
        let seq: Vec<bool> = (0..k)
            .map(|t| code >> t & 1 == 1)
            .chain((0..k).map(|t| code >> t & 1 == 0))
            .collect();
        let rises = (0..p).filter(|&i| !seq[i] && seq[(i + 1) % p]).count();
        if rises == 1 {
            out.insert(code);
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let mut sizes = Vec::new();
    for p in [8, 16, 24] {
        let set = structural_labels(p).map_err(|e| e.to_string())?;
        let got: BTreeSet<u32> = set.labels().iter().copied().collect();
        ensure(set.labels().len() == p, || {
            format!("P={p}: {} labels", set.labels().len())
        })?;
        ensure(got == oracle_structural(p), || {
            format!("P={p}: label set differs from oracle")
        })?;
        sizes.push(set.labels().len());
    }
    Ok(format!("|labels| = {sizes:?}, oracle sets equal"))
}

/// Uniform-pattern label counts by enumeration of all `2^P` codes.
fn oracle_lbp_counts(p: usize) -> (usize, usize) {
    let mut u2 = 0usize;
    let mut ones = BTreeSet::new();
    let mask = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
    for code in 0u64..(1 << p) {
        let rotated = ((code >> 1) | ((code & 1) << (p - 1))) & mask;
        if (code ^ rotated).count_ones() <= 2 {
            u2 += 1;
            ones.insert(code.count_ones());
        }
    }
    (u2 + 1, ones.len() + 1)
}

fn criterion_3() -> Outcome {
    let mut dims = Vec::new();
    for (p, r) in [(8, 1), (16, 2), (24, 3)] {
        let cfg = ExtractorSpec::new(DescriptorKind::Sbgp)
            .with_pr(p, r)
            .build()
            .map_err(|e| e.to_string())?;
        dims.push(cfg.dims());
    }
    ensure(dims == [288, 576, 864], || format!("SBGP dims {dims:?}"))?;
    let mut counts = Vec::new();
    for (p, r) in [(8, 1), (16, 2), (24, 3)] {
        let u2 = ExtractorSpec::new(DescriptorKind::LbpU2)
            .with_pr(p, r)
            .build()
            .map_err(|e| e.to_string())?;
        let riu2 = ExtractorSpec::new(DescriptorKind::LbpRiu2)
            .with_pr(p, r)
            .build()
            .map_err(|e| e.to_string())?;
        let got = (u2.descriptor.n_bins(), riu2.descriptor.n_bins());
        let oracle = oracle_lbp_counts(p);
        ensure(got == oracle, || format!("P={p}: bins {got:?}, enumeration {oracle:?}"))?;
        counts.push(got);
    }
    ensure(counts == [(59, 10), (243, 18), (555, 26)], || {
        format!("LBP counts {counts:?}")
    })?;
    Ok(format!("SBGP dims {dims:?}; LBP (u2, riu2) {counts:?}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = random_image(&mut rng, 40, 40);
    let mut rows = Vec::new();
    for (p, r) in [(8, 1), (16, 2), (24, 3)] {
        let interior = ((40 - 2 * r) * (40 - 2 * r)) as u64;
        let mut per = [0u64; 2];
        for (i, kind) in [DescriptorKind::Sbgp, DescriptorKind::LbpRiu2].into_iter().enumerate() {
            let cfg = ExtractorSpec::new(kind)
                .with_pr(p, r)
                .build()
                .map_err(|e| e.to_string())?;
            let mut ops = OpCounts::default();
            sbgp::features::extract_counted(&img, &cfg, &mut ops).map_err(|e| e.to_string())?;
            ensure(ops.units() % interior == 0, || {
                format!("{kind} ({p},{r}): {} units not a multiple of {interior}", ops.units())
            })?;
            per[i] = ops.units() / interior;
        }
        ensure(per == [p as u64, 2 * p as u64], || {
            format!("({p},{r}): SBGP {} LBP {}", per[0], per[1])
        })?;
        rows.push(format!("({p},{r}) {}/{}", per[0], per[1]));
    }
    Ok(format!("units per pixel SBGP/LBP: {}", rows.join(", ")))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let res = SpatialResolution::new(16, 2).map_err(|e| e.to_string())?;
    let cfg = ExtractorSpec::new(DescriptorKind::Sbgp)
        .build()
        .map_err(|e| e.to_string())?;
    let transforms: Vec<Perturbation> = (0..20)
        .map(|i| {
            if i % 2 == 0 {
                let a = 4.0 - rng.random_range(0.0..4.0);
                Perturbation::Affine {
                    a,
                    b: rng.random_range(0.0..50.0),
                }
            } else {
                Perturbation::Gamma {
                    gamma: rng.random_range(0.2..=3.0),
                }
            }
        })
        .collect();
    let start = Instant::now();
    for n in 0..100 {
        let img = random_image(&mut rng, 32, 32);
        let map = sbgp_map(&img, res).map_err(|e| e.to_string())?;
        let feats = extract(&img, &cfg).map_err(|e| e.to_string())?;
        for t in &transforms {
            let out = t.apply(&img, &mut rng).map_err(|e| e.to_string())?;
            ensure(sbgp_map(&out, res).map_err(|e| e.to_string())? == map, || {
                format!("image {n}, {t}: label map differs")
            })?;
            let f2 = extract(&out, &cfg).map_err(|e| e.to_string())?;
            ensure(
                f2.values()
                    .iter()
                    .map(|v| v.to_bits())
                    .eq(feats.values().iter().map(|v| v.to_bits())),
                || format!("image {n}, {t}: feature vector differs"),
            )?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("2000 transformed images bit-identical in {elapsed:.2?}"))
}

/// Central differences inside, one-sided at the borders.
fn oracle_magnitude(img: &Image) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let d = |lo: f64, hi: f64, span: usize| (hi - lo) / span as f64;
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (c0, c1) = (c.saturating_sub(1), (c + 1).min(w - 1));
            let (r0, r1) = (r.saturating_sub(1), (r + 1).min(h - 1));
            let gx = d(img.get(r, c0), img.get(r, c1), c1 - c0);
            let gy = d(img.get(r0, c), img.get(r1, c), r1 - r0);
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (s, window) = (3, 7);
    let half = window as isize / 2;
    let mut worst = 0.0f64;
    for n in 0..20 {
        let (w, h) = (rng.random_range(12..40), rng.random_range(12..40));
        let img = random_image(&mut rng, w, h);
        let stack = build_oigm(&img, s, window).map_err(|e| e.to_string())?;
        let mag = oracle_magnitude(&img);
        for r in 0..h as isize {
            for c in 0..w as isize {
                let mut sum = 0.0;
                for rr in (r - half).max(0)..=(r + half).min(h as isize - 1) {
                    for cc in (c - half).max(0)..=(c + half).min(w as isize - 1) {
                        sum += mag[rr as usize * w + cc as usize];
                    }
                }
                let expected = sum / (window * window) as f64;
                let got: f64 = stack.channels().iter().map(|ch| ch.get(r as usize, c as usize)).sum();
                let err = if expected > 0.0 {
                    (got - expected).abs() / expected
                } else {
                    got.abs()
                };
                worst = worst.max(err);
                ensure(err <= 1e-9, || format!("image {n} ({r},{c}): {got} vs {expected}"))?;
            }
        }
    }
    Ok(format!("20 images, worst relative error {worst:.2e}"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let resolutions = [(8, 1), (16, 2), (24, 3)];
    let mut structural = 0usize;
    let mut total = 0usize;
    for n in 0..50 {
        let (p, r) = resolutions[n % 3];
        let res = SpatialResolution::new(p, r).map_err(|e| e.to_string())?;
        let (w, h) = (rng.random_range(10..48), rng.random_range(10..48));
        let img = random_image(&mut rng, w, h);
        let fast = sbgp_map(&img, res).map_err(|e| e.to_string())?;
        let slow = sbgp_map_reference(&img, res).map_err(|e| e.to_string())?;
        ensure(fast == slow, || format!("image {n} at ({p},{r}) differs"))?;
        structural += fast.labels().iter().filter(|&&l| l != NON_STRUCTURAL).count();
        total += fast.labels().len();
    }
    Ok(format!(
        "50 images pixel-exact ({structural}/{total} structural pixels)"
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let gallery = synthetic_gallery(25, 64, 8).map_err(|e| e.to_string())?;
    let ramps = [0.2, 0.4, 0.6, 0.8];
    let mut levels: Vec<PerturbationChain> = ramps
        .iter()
        .map(|&s| {
            PerturbationChain(vec![
                Perturbation::Ramp { strength: s },
                Perturbation::Noise { sigma: 5.0 },
            ])
        })
        .collect();
    let monotone = ["affine:1.3:20", "affine:2:30", "gamma:0.4", "gamma:2.5"];
    levels.extend(monotone.iter().map(|s| s.parse::<PerturbationChain>().unwrap()));
    let specs = [
        ExtractorSpec::new(DescriptorKind::Sbgp),
        ExtractorSpec::new(DescriptorKind::LbpRiu2),
    ];
    let run = || {
        perturbation_study(&gallery, &levels, &specs, Similarity::HistogramIntersection, 8).map_err(|e| e.to_string())
    };
    let report = run()?;
    ensure(report == run()?, || "report differs between identical runs".into())?;
    let mut summary = Vec::new();
    for (i, s) in ramps.iter().enumerate() {
        let sb = report.rate(i, "sbgp(16,2)").ok_or("missing sbgp rate")?;
        let lb = report.rate(i, "lbp-riu2(16,2)").ok_or("missing lbp rate")?;
        summary.push(format!("ramp {s}: {sb:.2}/{lb:.2}"));
        ensure(sb >= lb, || format!("ramp {s}: SBGP {sb} < LBP riu2 {lb}"))?;
    }
    for (j, m) in monotone.iter().enumerate() {
        let sb = report.rate(ramps.len() + j, "sbgp(16,2)").ok_or("missing sbgp rate")?;
        ensure(sb == 1.0, || format!("{m}: SBGP rate {sb}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "SBGP/LBP-riu2 {}; monotone SBGP 1.00; {elapsed:.2?}",
        summary.join(", ")
    ))
}

fn criterion_9() -> Outcome {
    let res = SpatialResolution::new(16, 2).map_err(|e| e.to_string())?;
    let ramp = Image::from_fn(64, 64, |_, c| 2.0 * c as f64 + 10.0).unwrap();
    let ramp_frac = sbgp_map(&ramp, res)
        .map_err(|e| e.to_string())?
        .non_structural_fraction();
    ensure(ramp_frac == 0.0, || format!("ramp NON_STRUCTURAL fraction {ramp_frac}"))?;
    let mut min_noise = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = Image::filled(64, 64, 128.0).unwrap();
        let noisy = Perturbation::Noise { sigma: 30.0 }
            .apply(&flat, &mut rng)
            .map_err(|e| e.to_string())?;
        let frac = sbgp_map(&noisy, res)
            .map_err(|e| e.to_string())?
            .non_structural_fraction();
        ensure(frac > ramp_frac, || format!("seed {seed}: noise fraction {frac}"))?;
        min_noise = min_noise.min(frac);
    }
    Ok(format!("ramp 0, noise >= {min_noise:.3} over 20 seeds"))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let img = random_image(&mut rng, 100, 100);
    let cfg = ExtractorSpec::new(DescriptorKind::Sbgp)
        .build()
        .map_err(|e| e.to_string())?;
    extract(&img, &cfg).map_err(|e| e.to_string())?;
    let mut times: Vec<Duration> = (0..21)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(extract(&img, &cfg).unwrap());
            t.elapsed()
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2];
    ensure(median < Duration::from_millis(10), || format!("median {median:?}"))?;

    let out = cli(&[
        "--threads",
        "1",
        "bench",
        "--config",
        "sbgp:16,2",
        "--images",
        "1",
        "--size",
        "100",
        "--iterations",
        "20",
    ]);
    ensure(out.status.success(), || format!("bench exited with {}", out.status))?;
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let entry = &json["entries"][0];
    let reported = json["timing"][0]["median_of_means_seconds_per_image"]
        .as_f64()
        .ok_or("no timing")?;
    ensure(
        entry["config"] == "sbgp(16,2)" && entry["units_per_pixel"] == 16.0,
        || format!("bench entry {entry}"),
    )?;
    ensure(reported < 0.010, || format!("bench reports {reported} s"))?;
    Ok(format!(
        "median {median:.2?} in-process, bench reports {:.3} ms",
        reported * 1e3
    ))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let folds = 10;
    let per_fold = 600;
    let mut separable = Vec::new();
    let mut shuffled = Vec::new();
    for fold in 0..folds {
        for i in 0..per_fold {
            let same = i % 2 == 0;
            let score = if same {
                rng.random_range(0.6..1.0)
            } else {
                rng.random_range(0.0..0.4)
            };
            separable.push(ScoredPair { score, same, fold });
            shuffled.push(ScoredPair {
                score,
                same: rng.random_bool(0.5),
                fold,
            });
        }
    }
    let sep = verify_scores(&separable, true).map_err(|e| e.to_string())?;
    ensure(sep.mean_accuracy == 1.0, || {
        format!("separable mean {}", sep.mean_accuracy)
    })?;
    let shuf = verify_scores(&shuffled, true).map_err(|e| e.to_string())?;
    ensure((0.45..=0.55).contains(&shuf.mean_accuracy), || {
        format!("shuffled mean {}", shuf.mean_accuracy)
    })?;
    Ok(format!("separable 1.0, shuffled {:.4}", shuf.mean_accuracy))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("structural label set P=8", criterion_1),
        ("structural cardinality and oracle", criterion_2),
        ("dimension and label-count law", criterion_3),
        ("computational units SBGP = half LBP", criterion_4),
        ("monotone illumination invariance", criterion_5),
        ("OIGM channel conservation", criterion_6),
        ("fast path equals reference", criterion_7),
        ("synthetic recognition ordering", criterion_8),
        ("noise vs ramp NON_STRUCTURAL", criterion_9),
        ("throughput 100x100 < 10 ms", criterion_10),
        ("verification harness", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

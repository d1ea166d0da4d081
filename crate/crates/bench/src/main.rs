use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sbgp::{load_image, Similarity};
use sbgp_bench::config::{parse_blocks, parse_pr, DescriptorKind, ExtractorSpec};
use sbgp_bench::error::{HarnessError, Result};
use sbgp_bench::experiments::{self, BenchOptions};
use sbgp_bench::export::{extract_manifest, write_feature_csv};
use sbgp_bench::manifest::{DatasetManifest, PairManifest, Role};
use sbgp_bench::perturb::PerturbationChain;
use sbgp_bench::synth::{self, SynthParams};

#[derive(Parser)]
#[command(
    name = "sbgp-bench",
    version,
    about = "Structural binary gradient pattern experiments"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one feature row per manifest row as CSV.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        extractor: ExtractorArgs,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nearest-neighbour identification of probe rows against gallery rows.
    EvaluateId {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        extractor: ExtractorArgs,
        /// Similarity measure (all four if omitted).
        #[arg(long)]
        similarity: Option<Similarity>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold verification over pair folds (`path_a,path_b,same,fold`).
    EvaluateVerify {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        extractor: ExtractorArgs,
        #[arg(long)]
        similarity: Option<Similarity>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operation counts, label counts, dims and extraction time per configuration.
    Bench {
        /// Images to time (gallery and probe rows alike); seeded noise images if omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Configuration `kind[:P,R]`, repeatable. Defaults to SBGP, LBP u2 and LBP riu2 at (8,1), (16,2), (24,3).
        #[arg(long = "config")]
        configs: Vec<ExtractorSpec>,
        #[arg(long, default_value = "6x6", value_parser = parse_blocks_arg)]
        blocks: (usize, usize),
        /// Number of synthetic images when no manifest is given.
        #[arg(long, default_value_t = 5)]
        images: usize,
        /// Side of the synthetic images.
        #[arg(long, default_value_t = 100)]
        size: usize,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identification with perturbed copies of gallery images as probes.
    Perturb {
        /// Gallery images come from the manifest's gallery rows; synthetic textures if omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Perturbation level such as `ramp:0.4+noise:5`, repeatable.
        #[arg(long = "perturbation")]
        perturbations: Vec<PerturbationChain>,
        /// Descriptors to compare (comma separated).
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sbgp,lbp-riu2")]
        descriptor: Vec<DescriptorKind>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "hi")]
        similarity: Similarity,
        #[arg(long, default_value_t = 25)]
        subjects: usize,
        #[arg(long, default_value_t = synth::DEFAULT_SIZE)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural label set for `P` neighbours.
    Labels {
        #[arg(long = "P", short = 'P')]
        p: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded synthetic dataset (PGM images plus manifest.csv).
    Synth {
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        variants: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = synth::DEFAULT_SIZE)]
        size: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExtractorArgs {
    #[arg(long, value_enum, default_value = "sbgp")]
    descriptor: DescriptorKind,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct ParamArgs {
    /// `P,R`; defaults to 16,2 (8,2 for cs-lbp).
    #[arg(long, value_parser = parse_pr_arg)]
    pr: Option<(usize, usize)>,
    #[arg(long, default_value = "6x6", value_parser = parse_blocks_arg)]
    blocks: (usize, usize),
    /// Element-wise square root of the feature vector.
    #[arg(long)]
    sqrt: bool,
    /// Disable per-block L1 normalization.
    #[arg(long)]
    raw_counts: bool,
    /// Orientation channels of the SBGPM magnitude stack.
    #[arg(long = "sbgpm-s", default_value_t = 3)]
    sbgpm_s: usize,
    #[arg(long, default_value_t = 7)]
    sbgpm_window: usize,
    #[arg(long, default_value_t = 0.01)]
    cs_threshold: f64,
    #[arg(long, default_value_t = 4)]
    higo_bins: usize,
}

fn parse_pr_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_pr(s).map_err(|e| e.to_string())
}

fn parse_blocks_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_blocks(s).map_err(|e| e.to_string())
}

impl ParamArgs {
    fn spec(&self, kind: DescriptorKind) -> Result<ExtractorSpec> {
        let mut spec = ExtractorSpec::new(kind).with_blocks(self.blocks.0, self.blocks.1);
        if let Some((p, r)) = self.pr {
            spec = spec.with_pr(p, r);
        }
        spec.sqrt = self.sqrt;
        if self.raw_counts {
            spec.normalization = "none";
        }
        spec.sbgpm_channels = self.sbgpm_s;
        spec.sbgpm_window = self.sbgpm_window;
        spec.cs_threshold = self.cs_threshold;
        spec.higo_bins = self.higo_bins;
        spec.build()?;
        Ok(spec)
    }
}

impl ExtractorArgs {
    fn spec(&self) -> Result<ExtractorSpec> {
        self.params.spec(self.descriptor)
    }
}

fn sims(s: Option<Similarity>) -> Vec<Similarity> {
    s.map_or_else(|| Similarity::ALL.to_vec(), |s| vec![s])
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| HarnessError::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = open_out(out)?;
    let name = out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::io(&name, e.into()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(&name, e))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Input(e.to_string()))?;
    }
    match cli.command {
        Command::Extract {
            manifest,
            extractor,
            out,
        } => {
            let spec = extractor.spec()?;
            let cfg = spec.build()?;
            let m = DatasetManifest::load(&manifest)?;
            let feats = extract_manifest(&m, &cfg)?;
            let rows: Vec<_> = m
                .rows
                .iter()
                .zip(&feats)
                .map(|(r, f)| (r.path.as_str(), r.subject_id.as_str(), f))
                .collect();
            write_feature_csv(open_out(out.as_deref())?, cfg.dims(), &rows)
        }
        Command::EvaluateId {
            manifest,
            extractor,
            similarity,
            out,
        } => {
            let m = DatasetManifest::load(&manifest)?;
            let report = experiments::evaluate_id(&m, &extractor.spec()?, &sims(similarity))?;
            write_json(&report, out.as_deref())
        }
        Command::EvaluateVerify {
            manifest,
            extractor,
            similarity,
            out,
        } => {
            let m = PairManifest::load(&manifest)?;
            let report = experiments::evaluate_verify(&m, &extractor.spec()?, &sims(similarity))?;
            write_json(&report, out.as_deref())
        }
        Command::Bench {
            manifest,
            configs,
            blocks,
            images,
            size,
            iterations,
            warmup,
            seed,
            out,
        } => {
            let imgs = match manifest {
                Some(path) => {
                    let m = DatasetManifest::load(&path)?;
                    m.rows
                        .iter()
                        .map(|r| load_image(m.resolve(&r.path)).map_err(HarnessError::from))
                        .collect::<Result<Vec<_>>>()?
                }
                None => experiments::random_images(images, size, size, seed)?,
            };
            let configs = if configs.is_empty() {
                experiments::default_bench_specs()
            } else {
                configs
            };
            let configs: Vec<_> = configs.into_iter().map(|c| c.with_blocks(blocks.0, blocks.1)).collect();
            let opts = BenchOptions {
                warmup,
                iterations,
                ..BenchOptions::default()
            };
            write_json(&experiments::bench(&imgs, &configs, opts)?, out.as_deref())
        }
        Command::Perturb {
            manifest,
            perturbations,
            descriptor,
            params,
            similarity,
            subjects,
            size,
            seed,
            out,
        } => {
            let gallery = match manifest {
                Some(path) => {
                    let m = DatasetManifest::load(&path)?;
                    m.rows_with_role(Role::Gallery)
                        .map(|r| Ok((r.subject_id.clone(), load_image(m.resolve(&r.path))?)))
                        .collect::<Result<Vec<_>>>()?
                }
                None => experiments::synthetic_gallery(subjects, size, seed)?,
            };
            let levels = if perturbations.is_empty() {
                experiments::default_perturbations()
            } else {
                perturbations
            };
            let specs = descriptor.iter().map(|&k| params.spec(k)).collect::<Result<Vec<_>>>()?;
            let report = experiments::perturbation_study(&gallery, &levels, &specs, similarity, seed)?;
            write_json(&report, out.as_deref())
        }
        Command::Labels { p, out } => write_json(&experiments::labels_report(p)?, out.as_deref()),
        Command::Synth {
            subjects,
            variants,
            seed,
            size,
            out,
        } => {
            let params = SynthParams {
                subjects,
                variants,
                seed,
                size,
            };
            let m = synth::generate_synthetic_dataset(&params, &out)?;
            eprintln!(
                "wrote {} images and {}",
                m.rows.len(),
                out.join("manifest.csv").display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

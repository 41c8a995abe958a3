use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use binsep::harness::{
    evaluate, output_file, run_experiment, separate, simulate, to_json_line, EvaluateRequest, ExperimentSpec,
    DescriptorPreset,
};
use binsep::metrics::DEFAULT_SEGMENTS;
use binsep::net::{gen_weights_to, ArchitectureDescriptor};
use binsep::pipeline::PipelineConfig;
use binsep::spatial::{pure_delay_brirs, synthetic_brirs, AzimuthGrid, SyntheticBrirParams};
use binsep::tracker::ProfileMode;
use binsep::{Error, Result};

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  2   usage error
  3   config error (parse, unknown key, version)
  4   i/o error
  5   malformed or unsupported WAV
  6   weight container error
  7   shape mismatch
  8   invalid argument or signal
  9   evaluation error (misaligned files)
  10  missing asset (BRIR set, corpus entry, oracle)

Environment:
  BINSEP_BRIR_ROOT  directory holding BRIR sets referenced by id";

#[derive(Parser)]
#[command(name = "binsep", version, about = "Streaming binaural moving-speaker separation", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the scenarios of an experiment config to WAVs and truth manifests.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Separate a stereo mixture into one WAV and one DOA track per speaker.
    Separate {
        #[arg(long)]
        mixture: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Oracle embedding container (oracle profile mode).
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Score separated outputs against a truth manifest; prints one JSON record.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding speaker1.wav, speaker2.wav.
        #[arg(long, conflicts_with = "output")]
        outputs: Option<PathBuf>,
        /// Output WAVs in speaker order.
        #[arg(long)]
        output: Vec<PathBuf>,
        /// Reference WAVs; default from the manifest.
        #[arg(long)]
        reference: Vec<PathBuf>,
        #[arg(long = "n-seg", default_value_t = DEFAULT_SEGMENTS)]
        n_seg: usize,
        /// Label recorded with the scores.
        #[arg(long)]
        profile_mode: Option<ProfileMode>,
        /// Also write the record here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate, separate and evaluate a whole experiment, then summarize.
    RunExperiment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Write a seeded weight container.
    GenWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, conflicts_with = "descriptor")]
        preset: Option<Preset>,
        /// Architecture descriptor TOML.
        #[arg(long)]
        descriptor: Option<PathBuf>,
    },
    /// Write a BRIR set directory on the frontal grid.
    GenBrirs {
        #[arg(long)]
        out: PathBuf,
        /// Single-tap filters with this many samples of ITD per grid step.
        #[arg(long)]
        pure_delay: Option<usize>,
        #[arg(long, default_value_t = SyntheticBrirParams::default().rt60_s)]
        rt60: f64,
        #[arg(long, default_value_t = SyntheticBrirParams::default().filter_len)]
        filter_len: usize,
        #[arg(long, default_value_t = SyntheticBrirParams::default().seed)]
        seed: u64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Preset {
    Default,
    Tiny,
}

#[derive(Args)]
struct PipelineFlags {
    /// Frames handed to the separator per push.
    #[arg(long)]
    chunk_frames: Option<usize>,
    #[arg(long)]
    profile_mode: Option<ProfileMode>,
    /// Segments for swap counting.
    #[arg(long = "n-seg")]
    n_seg: Option<usize>,
    /// Frames per DOA vote.
    #[arg(long)]
    q: Option<usize>,
}

impl PipelineFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        if let Some(v) = self.chunk_frames {
            c.stream_chunk_frames = v;
        }
        if let Some(v) = self.profile_mode {
            c.profile_mode = v;
        }
        if let Some(v) = self.n_seg {
            c.swap_segments = v;
        }
        if let Some(v) = self.q {
            c.doa_chunk_frames = v;
        }
    }
}

fn load_spec(path: &Path, out: Option<PathBuf>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(o) = out {
        spec.output_dir = o;
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let spec = load_spec(&config, out)?;
            for m in simulate(&spec)? {
                println!("{}", m.display());
            }
        }
        Command::Separate {
            mixture,
            weights,
            out,
            oracle,
            pipeline,
        } => {
            let mut config = PipelineConfig::default();
            pipeline.apply(&mut config);
            let res = separate(&mixture, &weights, &out, &config, oracle.as_deref())?;
            for i in 0..res.speakers.len() {
                println!("{}", out.join(output_file(i)).display());
            }
            eprintln!("real-time factor {:.3}", res.timing.real_time_factor);
        }
        Command::Evaluate {
            manifest,
            outputs,
            output,
            reference,
            n_seg,
            profile_mode,
            report,
        } => {
            let outputs = match outputs {
                Some(dir) => (0..2).map(|i| dir.join(output_file(i))).collect(),
                None if !output.is_empty() => output,
                None => return Err(Error::invalid("give --outputs DIR or --output FILE per speaker")),
            };
            let req = EvaluateRequest {
                outputs,
                references: (!reference.is_empty()).then_some(reference),
                manifest,
                segments: n_seg,
                profile_mode,
            };
            let line = to_json_line(&evaluate(&req)?);
            if let Some(p) = report {
                std::fs::write(&p, format!("{line}\n")).map_err(|e| Error::io(&p, e))?;
            }
            println!("{line}");
        }
        Command::RunExperiment {
            spec,
            out,
            jobs,
            pipeline,
        } => {
            let mut spec = load_spec(&spec, out)?;
            if let Some(j) = jobs {
                if j == 0 {
                    return Err(Error::invalid("--jobs must be at least 1"));
                }
                spec.jobs = j;
            }
            pipeline.apply(&mut spec.pipeline);
            let outcome = run_experiment(&spec)?;
            print!("{}", outcome.summary.table());
            println!(
                "real-time factor {:.3} ({:.2} s processing for {:.2} s audio)",
                outcome.timing.real_time_factor, outcome.timing.processing_s, outcome.timing.audio_s
            );
            println!("reports in {}", spec.output_dir.display());
        }
        Command::GenWeights {
            out,
            seed,
            preset,
            descriptor,
        } => {
            let d = match (descriptor, preset) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    ArchitectureDescriptor::from_text(&text).map_err(|e| Error::Config {
                        path: p.clone(),
                        message: e.to_string(),
                    })?
                }
                (None, Some(Preset::Tiny)) => DescriptorPreset::Tiny.descriptor(),
                (None, _) => DescriptorPreset::Default.descriptor(),
            };
            gen_weights_to(&d, seed, &out)?;
            println!("{}", out.display());
        }
        Command::GenBrirs {
            out,
            pure_delay,
            rt60,
            filter_len,
            seed,
        } => {
            let set = match pure_delay {
                Some(sps) => pure_delay_brirs(AzimuthGrid::frontal(), sps)?,
                None => synthetic_brirs(
                    AzimuthGrid::frontal(),
                    SyntheticBrirParams {
                        rt60_s: rt60,
                        filter_len,
                        seed,
                        ..SyntheticBrirParams::default()
                    },
                )?,
            };
            set.save_dir(&out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("binsep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

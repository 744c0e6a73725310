use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drumaug::annotations::{format_detections, write_annotation};
use drumaug::audio::{load_audio, write_wav};
use drumaug::checkpoint::load_checkpoint;
use drumaug::pipeline::{transcribe, worker_count, StageSummary};
use drumaug::report::format_report_tsv;
use drumaug::{DatasetConfig, Error, Result, Run, RunConfig};
use drumaug_core::eval::DEFAULT_MIN_GAP;
use drumaug_core::features::McmsConfig;
use drumaug_core::synth::{synth_dataset, SynthConfig, SUBSETS};

/// Data augmentation campaigns for CNN drum transcription.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Strategies to run instead of the configured ones (repeatable).
    #[arg(short, long = "strategy")]
    strategies: Vec<String>,
    /// Parent directory of `runs/`, overriding the config.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads [default: $DRUMAUG_WORKERS or the CPU count].
    #[arg(short, long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write augmented audio, warped annotations and item manifests.
    Augment(RunArgs),
    /// Compute feature caches for originals and augmentations.
    Features(RunArgs),
    /// Train one detector per fold, seed and instrument.
    Train(RunArgs),
    /// Score checkpoints on held-out subsets and write the report.
    Evaluate(RunArgs),
    /// Run augment, features, train and evaluate in sequence.
    Crossval(RunArgs),
    /// Detect onsets in one audio file.
    Transcribe {
        /// Checkpoint per instrument (repeatable).
        #[arg(short = 'k', long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        /// Run configuration providing the feature settings.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MIN_GAP)]
        min_gap: f64,
        /// Output file [default: stdout].
        #[arg(short, long)]
        output: Option<PathBuf>,
        audio: PathBuf,
    },
    /// Generate a synthetic annotated drum dataset and a config for it.
    Synth {
        /// Destination directory.
        out: PathBuf,
        #[arg(long, default_value_t = 15)]
        per_subset: usize,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn open_run(args: &RunArgs) -> Result<Run> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if !args.strategies.is_empty() {
        cfg.strategies = args.strategies.clone();
    }
    if let Some(o) = &args.output {
        cfg.output_root = o.clone();
    }
    let run = Run::new(cfg, worker_count(args.workers))?;
    eprintln!("run directory {}", run.root().display());
    Ok(run)
}

fn report_stage(s: &StageSummary) -> i32 {
    eprintln!("{}: {} outputs ({} up to date), {} failures", s.stage, s.outputs.len(), s.reused, s.failures.len());
    for f in &s.failures {
        eprintln!("  {}: {}", f.item, f.error);
    }
    s.exit_code()
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Augment(a) => Ok(report_stage(&open_run(&a)?.augment()?)),
        Command::Features(a) => Ok(report_stage(&open_run(&a)?.features()?)),
        Command::Train(a) => Ok(report_stage(&open_run(&a)?.train()?)),
        Command::Evaluate(a) => {
            let (report, s) = open_run(&a)?.evaluate()?;
            print!("{}", format_report_tsv(&report));
            Ok(report_stage(&s))
        }
        Command::Crossval(a) => {
            let (report, stages) = open_run(&a)?.crossval()?;
            print!("{}", format_report_tsv(&report));
            Ok(stages.iter().map(report_stage).max().unwrap_or(0))
        }
        Command::Transcribe { checkpoints, config, min_gap, output, audio } => {
            let features = match config {
                Some(p) => RunConfig::from_file(&p)?.features,
                None => McmsConfig::default(),
            };
            let cks = checkpoints.iter().map(|p| load_checkpoint(p)).collect::<Result<Vec<_>>>()?;
            let det = transcribe(&cks, &load_audio(&audio)?, &features, min_gap)?;
            let text = format_detections(&det);
            match output {
                Some(p) => std::fs::write(&p, text).map_err(|source| Error::Io { path: p, source })?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Synth { out, per_subset, duration, seed } => {
            let cfg = SynthConfig { duration, seed, ..SynthConfig::default() };
            for t in synth_dataset(&cfg, &SUBSETS, per_subset)? {
                write_wav(&out.join("audio").join(&t.subset).join(format!("{}.wav", t.clip.id())), &t.clip)?;
                write_annotation(
                    &out.join("annotations").join(&t.subset).join(format!("{}.txt", t.clip.id())),
                    &t.annotation,
                )?;
            }
            let mut run = RunConfig::new(DatasetConfig {
                audio_dir: "audio".into(),
                annotation_dir: "annotations".into(),
                subsets: SUBSETS.iter().map(|s| s.to_string()).collect(),
            });
            run.output_root = ".".into();
            let path = out.join("config.toml");
            std::fs::write(&path, run.to_toml()).map_err(|source| Error::Io { path: path.clone(), source })?;
            eprintln!("wrote {} tracks and {}", SUBSETS.len() * per_subset, path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

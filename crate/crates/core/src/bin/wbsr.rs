use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wbsr::detect::DetectorConfig;
use wbsr::harness::{self, GenerateOptions, SweepSpec};
use wbsr::metrics;
use wbsr::profile::{builtin_profiles, resolve_profile};

#[derive(Parser)]
#[command(name = "wbsr", version, about = "Synthetic wideband signal-recognition benchmark")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "WBSR_WORKERS")]
    workers: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate SigMF records from band layout profiles.
    Generate {
        /// Built-in profile name or profile file; repeat to cycle through
        /// several. Defaults to every built-in profile.
        #[arg(short, long)]
        profile: Vec<String>,
        #[arg(short = 'n', long, default_value_t = 1)]
        count: usize,
        #[arg(short, long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = harness::DEFAULT_RECORD_LENGTH)]
        record_length: usize,
        #[arg(long, default_value_t = wbsr::dsp::DEFAULT_SAMPLE_RATE)]
        sample_rate: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the radiometer on a record, or cluster an external mask.
    Detect {
        #[arg(short, long)]
        record: PathBuf,
        /// Detector configuration (JSON); defaults otherwise.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Mask interchange file to cluster instead of thresholding.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Score detections against a record's annotations.
    Score {
        #[arg(short, long)]
        detections: PathBuf,
        #[arg(short, long)]
        record: PathBuf,
        /// IoU thresholds (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        iou: Vec<f64>,
        /// Use the ten thresholds 0.50..0.95 instead of --iou.
        #[arg(long)]
        coco: bool,
        #[arg(long)]
        class_aware: bool,
        /// Output prefix; writes `<out>.json` and `<out>.csv`.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Precision/recall against in-band SNR on noisy single-modulation scenes.
    Sweep {
        /// Sweep specification (JSON); defaults otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        record_length: Option<usize>,
        /// CSV output; the full result is written beside it as JSON.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Inspect the built-in band layout profiles.
    Profiles {
        #[command(subcommand)]
        action: ProfilesAction,
    },
}

#[derive(Subcommand)]
enum ProfilesAction {
    List,
    /// Print a profile as JSON.
    Show { name: String },
}

fn run(cli: Cli) -> wbsr::Result<()> {
    match cli.command {
        Command::Generate {
            profile,
            count,
            seed,
            record_length,
            sample_rate,
            out,
        } => {
            let profiles = if profile.is_empty() {
                builtin_profiles()
            } else {
                profile.iter().map(|p| resolve_profile(p)).collect::<wbsr::Result<_>>()?
            };
            let opts = GenerateOptions {
                count,
                seed,
                record_length,
                sample_rate,
            };
            let m = harness::cmd_generate(&profiles, &opts, &out)?;
            println!("wrote {} records to {}", m.records.len(), out.display());
        }
        Command::Detect {
            record,
            config,
            mask,
            out,
        } => {
            let cfg = match config {
                Some(p) => DetectorConfig::load(&p)?,
                None => DetectorConfig::default(),
            };
            let dets = harness::cmd_detect(&record, &cfg, mask.as_deref(), &out)?;
            println!("{} detections -> {}", dets.len(), out.display());
        }
        Command::Score {
            detections,
            record,
            iou,
            coco,
            class_aware,
            out,
        } => {
            let thresholds = if coco { metrics::coco_thresholds() } else { iou };
            let report = harness::cmd_score(&detections, &record, &thresholds, class_aware, &out)?;
            print!("{}", report.to_csv());
        }
        Command::Sweep {
            spec,
            repeats,
            seed,
            record_length,
            out,
        } => {
            let mut s = match spec {
                Some(p) => SweepSpec::load(&p)?,
                None => SweepSpec::default(),
            };
            s.repeats = repeats.unwrap_or(s.repeats);
            s.seed = seed.unwrap_or(s.seed);
            s.record_length = record_length.unwrap_or(s.record_length);
            let result = harness::cmd_sweep(&s, &out)?;
            for (snr, sigma) in &result.sigmas {
                println!("snr {snr:>6} dB  sigma {sigma:.6e}");
            }
            print!("{}", result.report.to_csv());
        }
        Command::Profiles { action } => match action {
            ProfilesAction::List => {
                for p in builtin_profiles() {
                    println!("{:<26} {}", p.name, p.description);
                }
            }
            ProfilesAction::Show { name } => {
                let p = resolve_profile(&name)?;
                println!("{}", serde_json::to_string_pretty(&p)?);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use marginalia_cli::commands::{
    parse_profiles, run_batch, run_clean, run_evaluate, run_synth, EmitOptions,
};
use marginalia_cli::config::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "marginalia",
    about = "Removes handwritten marginal annotations from scanned printed documents",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PipelineFlags {
    /// Flat key=value config file; command-line flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,

    /// Fixed binarization threshold in [0,255] instead of Otsu
    #[arg(long)]
    threshold: Option<u32>,

    /// Component connectivity
    #[arg(long, value_parser = ["4", "8"])]
    connectivity: Option<String>,

    /// Skip border-noise removal
    #[arg(long)]
    no_denoise: bool,

    /// Border band width as a fraction of each dimension
    #[arg(long)]
    band_fraction: Option<f64>,

    /// Skip skew estimation and correction
    #[arg(long)]
    no_deskew: bool,

    /// Entries used for the smoothing-window mean
    #[arg(long, value_parser = ["all", "nonzero"])]
    mask_mean: Option<String>,

    /// Minimum components for a missed-line run
    #[arg(long)]
    min_line_run: Option<usize>,

    /// Worker threads (0 = machine default)
    #[arg(long)]
    jobs: Option<usize>,

    /// Write raw/smoothed projection profiles as CSV into this directory
    #[arg(long)]
    emit_profiles: Option<PathBuf>,

    /// Write cleaned-body component tables as CSV into this directory
    #[arg(long)]
    emit_components: Option<PathBuf>,
}

impl PipelineFlags {
    fn build_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(t) = self.threshold {
            config.binarize = "fixed".into();
            config.threshold = t;
        }
        if let Some(c) = &self.connectivity {
            config.connectivity = c.parse()?;
        }
        if self.no_denoise {
            config.denoise = false;
        }
        if let Some(f) = self.band_fraction {
            config.band_fraction = f;
        }
        if self.no_deskew {
            config.deskew = false;
        }
        if let Some(m) = &self.mask_mean {
            config.mask_mean = m.clone();
        }
        if let Some(n) = self.min_line_run {
            config.min_line_run = n;
        }
        if let Some(j) = self.jobs {
            config.jobs = j;
        }
        config.validate()?;
        Ok(config)
    }

    fn emit_options(&self) -> EmitOptions {
        EmitOptions {
            profiles: self.emit_profiles.clone(),
            components: self.emit_components.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clean one scanned document
    Clean {
        /// Input image (PNG or PGM)
        input: PathBuf,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Score the pipeline against a ground-truth corpus directory
    Evaluate {
        /// Directory containing <stem>_{annotated,clean,mask}.png and
        /// <stem>_truth.json files
        corpus: PathBuf,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Clean many documents; per-file failures are isolated
    Batch {
        /// Input files; `*`/`?` patterns in file names are expanded
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Generate a synthetic ground-truth corpus
    Synth {
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
        /// Number of documents
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Base seed; document i uses seed + i
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated annotation profile cycle (none, light, heavy)
        #[arg(long, default_value = "light,heavy")]
        profiles: String,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Clean { input, flags } => {
            let config = flags.build_config()?;
            let outcome = run_clean(&input, &flags.out_dir, &config, &flags.emit_options())?;
            for warning in &outcome.report.warnings {
                eprintln!("warning: {}", warning);
            }
            println!(
                "{}: body {:?}, {} actions, {} px removed",
                input.display(),
                outcome.report.margin_box,
                outcome.report.actions.len(),
                outcome.report.ink.removed
            );
        }
        Command::Evaluate { corpus, flags } => {
            let config = flags.build_config()?;
            let aggregate = run_evaluate(&corpus, &flags.out_dir, &config, &flags.emit_options())?;
            let show = |name: &str, s: &Option<marginalia_cli::report::MetricSummary>| {
                if let Some(s) = s {
                    println!(
                        "{}: mean {:.4} ({} docs, {:.0}% above mean)",
                        name, s.mean, s.documents, s.above_mean_pct
                    );
                }
            };
            show("removal accuracy", &aggregate.removal_accuracy);
            show("recovery accuracy", &aggregate.recovery_accuracy);
            show("correlation", &aggregate.correlation);
            for failure in &aggregate.failures {
                eprintln!("failed {}: {}", failure.input, failure.error);
            }
        }
        Command::Batch { inputs, flags } => {
            let config = flags.build_config()?;
            let aggregate = run_batch(&inputs, &flags.out_dir, &config, &flags.emit_options())?;
            println!(
                "processed {} documents, {} failures",
                aggregate.documents,
                aggregate.failures.len()
            );
            for failure in &aggregate.failures {
                eprintln!("failed {}: {}", failure.input, failure.error);
            }
        }
        Command::Synth {
            out_dir,
            count,
            seed,
            profiles,
        } => {
            run_synth(&out_dir, count, seed, &parse_profiles(&profiles)?)?;
            println!("wrote {} documents to {}", count, out_dir.display());
        }
    }
    Ok(())
}

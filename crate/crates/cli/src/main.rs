mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tfadapt::experiments::{DEFAULT_N, DEFAULT_N_PART, DEFAULT_R_PART};
use tfadapt::window::WindowFamily;

use commands::{AnalyzeArgs, ExperimentArgs, Model};
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "tfadapt",
    version,
    about = "Adaptive nonstationary Gabor analysis and multi-band resynthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rényi entropy order.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Band split frequency in Hz.
    #[arg(long, global = true)]
    cut: Option<f64>,
    /// Candidate window lengths, comma separated.
    #[arg(long, global = true)]
    scales: Option<String>,
    /// Adaptation masks per band (low300, high300, none) or `custom`.
    #[arg(long, global = true)]
    mask: Option<String>,
    /// Band weights: binary or raised-cosine.
    #[arg(long, global = true)]
    weights: Option<String>,
    /// Raised-cosine transition width in Hz.
    #[arg(long, global = true)]
    transition: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let overrides = Overrides {
            alpha: self.alpha,
            cut: self.cut,
            scales: self.scales.clone(),
            mask: self.mask.clone(),
            weights: self.weights.clone(),
            transition: self.transition,
            seed: self.seed,
            out: self.out.clone(),
        };
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// 4096-sample Hamming window, 3072 samples overlap.
    PaperFig,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Dm,
    Dl,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-window analysis: coefficient file and dB spectrogram.
    Analyze {
        input: PathBuf,
        #[arg(long, default_value_t = 4096)]
        scale: usize,
        /// Hop in samples; half the window by default.
        #[arg(long)]
        hop: Option<usize>,
        #[arg(long, default_value = "hamming")]
        family: WindowFamily,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Also write a greyscale PGM image.
        #[arg(long)]
        pgm: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Entropy-driven window selection per segment and band.
    Adapt {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Adapt, analyze per band, weight and reconstruct.
    Reconstruct {
        input: PathBuf,
        /// Use one uniform plan of this window length for every band.
        #[arg(long)]
        shared_scale: Option<usize>,
        /// Also write the error signal.
        #[arg(long)]
        error_wav: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Entropy-vs-order surfaces of the synthetic density models.
    Experiment {
        #[arg(value_enum)]
        model: ModelArg,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_N_PART)]
        n_part: usize,
        #[arg(long, default_value_t = DEFAULT_R_PART)]
        r_part: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Analysis followed by dual synthesis; reports the reconstruction error.
    Roundtrip {
        input: PathBuf,
        /// Fixed window length; the adapted band plans are used otherwise.
        #[arg(long)]
        scale: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Analyze {
            input,
            scale,
            hop,
            family,
            preset,
            pgm,
            common,
        } => {
            let cfg = common.resolve()?;
            let args = match preset {
                Some(Preset::PaperFig) => AnalyzeArgs {
                    input,
                    scale: 4096,
                    hop: 1024,
                    family: WindowFamily::Hamming,
                    pgm,
                },
                None => AnalyzeArgs {
                    input,
                    scale,
                    hop: hop.unwrap_or(scale / 2),
                    family,
                    pgm,
                },
            };
            commands::analyze_cmd(&args, &cfg)
        }
        Command::Adapt { input, common } => commands::adapt_cmd(&input, &common.resolve()?),
        Command::Reconstruct {
            input,
            shared_scale,
            error_wav,
            common,
        } => commands::reconstruct_cmd(&input, shared_scale, error_wav, &common.resolve()?),
        Command::Experiment {
            model,
            n,
            n_part,
            r_part,
            common,
        } => {
            let model = match model {
                ModelArg::Dm => Model::Dm,
                ModelArg::Dl => Model::Dl,
            };
            commands::experiment_cmd(
                &ExperimentArgs {
                    model,
                    n,
                    n_part,
                    r_part,
                },
                &common.resolve()?,
            )
        }
        Command::Roundtrip {
            input,
            scale,
            common,
        } => commands::roundtrip_cmd(&input, scale, &common.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::checkpoint::load_model;
use crate::config::{RunConfig, SpecConfig};
use crate::error::{IoError, Result};
use crate::run;

#[derive(Debug, Parser)]
#[command(name = "octdenoise", version, about = "OCT speckle simulation, despeckling and domain adaptation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Source acquisition preset.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Target acquisition preset.
    #[arg(long, global = true, value_name = "NAME")]
    pub target: Option<String>,
    #[arg(long, global = true, value_parser = ["rnn_oct", "drnn", "rnn_avg", "rnn_gan"])]
    pub variant: Option<String>,
    #[arg(long, global = true, value_parser = ["none", "target_to_source", "source_to_target"])]
    pub remedy: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a matched speckled / speckle-free pair.
    Simulate {
        /// Also write 16-bit gray previews.
        #[arg(long)]
        gray: bool,
    },
    /// Train a despeckler on a pair (simulated from the config if omitted).
    Train {
        #[arg(long, requires = "truth")]
        speckled: Option<PathBuf>,
        #[arg(long, requires = "speckled")]
        truth: Option<PathBuf>,
    },
    /// Apply a trained model to an image.
    Denoise {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Speckle-free reference; enables the metric report.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Homogeneous region for speckle contrast: row0,col0,rows,cols.
        #[arg(long)]
        region: Option<String>,
    },
    /// Resample images between the source and target systems.
    Adapt {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Score images against a reference.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        region: Option<String>,
    },
    /// Canned experiments.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
    /// List the acquisition presets.
    Presets,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Experiment {
    /// Cross-domain transfer with and without the resampling remedy.
    Theorem3,
    /// Lateral Gaussian composition of edge responses.
    Composition,
}

impl Global {
    pub fn apply(&self, mut cfg: RunConfig) -> RunConfig {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(p) = &self.preset {
            cfg.source = SpecConfig::preset(p);
        }
        if let Some(t) = &self.target {
            cfg.target = Some(SpecConfig::preset(t));
        }
        if let Some(v) = &self.variant {
            cfg.variant = v.clone();
        }
        if let Some(r) = &self.remedy {
            cfg.remedy = r.clone();
        }
        cfg
    }

    pub fn config(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(self.apply(base))
    }
}

fn set_threads(n: Option<usize>) -> Result<()> {
    let Some(n) = n else { return Ok(()) };
    if n == 0 {
        return Err(IoError::Config("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| IoError::Config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the `parallel` feature; --threads {n} has no effect");
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    set_threads(cli.global.threads)?;
    if let Command::Presets = cli.command {
        print!("{}", run::preset_table());
        return Ok(());
    }
    let cfg = run::prepare(&cli.global.config()?)?;
    match cli.command {
        Command::Simulate { gray } => {
            run::simulate(&cfg, gray)?;
        }
        Command::Train { speckled, truth } => {
            let pair = speckled.as_deref().zip(truth.as_deref());
            run::train(&cfg, pair)?;
        }
        Command::Denoise {
            model,
            input,
            reference,
            region,
        } => {
            let region = region.as_deref().map(run::parse_region).transpose()?;
            let m = load_model(&model)?;
            run::denoise_file(&cfg, &m, &input, reference.as_deref(), region)?;
        }
        Command::Adapt { inputs } => {
            run::adapt(&cfg, &inputs)?;
        }
        Command::Evaluate {
            reference,
            images,
            region,
        } => {
            let region = region.as_deref().map(run::parse_region).transpose()?;
            run::evaluate(&cfg, &reference, &images, region)?;
        }
        Command::Experiment { which } => {
            match which {
                Experiment::Theorem3 => run::theorem3(&cfg)?,
                Experiment::Composition => run::composition(&cfg)?,
            };
        }
        Command::Presets => unreachable!(),
    }
    Ok(())
}
